#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "docee/common.hpp"

namespace docee {

using Mat = Eigen::MatrixXd;

// Flat registry of named trainable arrays. The model layer assigns structure
// (which id is which weight); graph and optimizer code only see ids.
class ParamStore {
 public:
  int add(std::string name, Mat value);
  int size() const { return static_cast<int>(values_.size()); }
  const std::string& name(int pid) const { return names_.at(pid); }
  const Mat& value(int pid) const { return values_.at(pid); }
  Mat& value(int pid) { return values_.at(pid); }
  int find(const std::string& name) const;  // -1 if absent

 private:
  std::vector<std::string> names_;
  std::vector<Mat> values_;
};

// Per-parameter gradient accumulator aligned with a ParamStore.
class GradientStore {
 public:
  explicit GradientStore(const ParamStore& store);

  void accumulate(int pid, const Mat& g);
  void accumulate_rows(int pid, const std::vector<int>& rows, const Mat& g);
  bool touched(int pid) const { return touched_[pid] != 0; }
  const Mat& grad(int pid) const;  // zero-shaped matrix if untouched
  void add(const GradientStore& other);
  void scale(double s);
  bool all_finite(std::string* first_bad = nullptr) const;
  const ParamStore& store() const { return *store_; }

 private:
  Mat& ensure(int pid);
  const ParamStore* store_;
  std::vector<Mat> grads_;
  std::vector<char> touched_;
};

// Handle into a Graph's node list.
struct Var {
  int i = -1;
  bool valid() const { return i >= 0; }
};

// Dynamic reverse-mode tape over Eigen matrices. One Graph per document pass;
// build the forward computation with the ops below, then call backward() on a
// 1x1 loss node to accumulate parameter gradients.
class Graph {
 public:
  explicit Graph(const ParamStore* params = nullptr);

  // Leaves.
  Var constant(Mat v);
  Var zeros(int rows, int cols);
  Var param(int pid);
  Var param_rows(int pid, std::vector<int> rows);

  // Linear algebra.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var cmul(Var a, Var b);       // elementwise product
  Var matmul(Var a, Var b);     // A * B
  Var matmul_nt(Var a, Var b);  // A * B^T
  Var scale(Var a, double s);
  Var add_rowwise(Var x, Var row);
  Var repeat_rows(Var row, int n);
  Var concat_rows(const std::vector<Var>& parts);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_cols(Var a, int start, int n);
  Var pick_rows(Var a, std::vector<int> rows);
  Var row(Var a, int r);

  // Nonlinearities.
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var softmax_rows(Var a);
  Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

  // Pooling. valid_rows < 0 means all rows.
  Var max_over_rows(Var a, int valid_rows = -1);
  Var sum_over_rows(Var a);

  // Loss primitives (1x1 outputs). Probabilities below `clamp` contribute a
  // constant -ln(clamp) with zero gradient.
  Var nll_from_probs(Var probs_row, int target, double clamp = 1e-7);
  Var bce_from_prob(Var p, int label, double clamp = 1e-7);
  Var add_scalars(const std::vector<Var>& xs);  // empty list -> constant 0

  const Mat& value(Var v) const { return nodes_.at(v.i).val; }
  double scalar(Var v) const;
  int rows(Var v) const { return static_cast<int>(value(v).rows()); }
  int cols(Var v) const { return static_cast<int>(value(v).cols()); }

  void backward(Var loss, GradientStore& out);
  size_t n_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Mat val;
    Mat grad;  // empty until first accumulation
    std::function<void(Graph&, Node&)> back;
  };

  Var emit(Mat val, std::function<void(Graph&, Node&)> back);
  Mat& grad_of(int i);
  bool has_grad(int i) const { return nodes_[i].grad.size() > 0; }

  std::vector<Node> nodes_;
  const ParamStore* params_;
  GradientStore* gs_ = nullptr;
};

// First maximal index when scanning left to right (lowest-index tie-break).
int argmax_lowest(const Mat& row_vector);

// Sinusoidal position table, one row per position.
Mat positional_encoding(int length, int dim);

}  // namespace docee
