#include "docee/graph.hpp"

#include <cmath>

namespace docee {

namespace {

[[noreturn]] void shape_error(const std::string& op, const Mat& a) {
  throw std::invalid_argument("graph op " + op + ": unexpected shape " +
                              std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument("graph: " + msg);
}

}  // namespace

int ParamStore::add(std::string name, Mat value) {
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return static_cast<int>(values_.size()) - 1;
}

int ParamStore::find(const std::string& name) const {
  for (size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

GradientStore::GradientStore(const ParamStore& store)
    : store_(&store), grads_(store.size()), touched_(store.size(), 0) {}

Mat& GradientStore::ensure(int pid) {
  if (!touched_[pid]) {
    grads_[pid] = Mat::Zero(store_->value(pid).rows(), store_->value(pid).cols());
    touched_[pid] = 1;
  }
  return grads_[pid];
}

void GradientStore::accumulate(int pid, const Mat& g) { ensure(pid) += g; }

void GradientStore::accumulate_rows(int pid, const std::vector<int>& rows, const Mat& g) {
  Mat& dst = ensure(pid);
  for (size_t k = 0; k < rows.size(); ++k) {
    dst.row(rows[k]) += g.row(static_cast<int>(k));
  }
}

const Mat& GradientStore::grad(int pid) const {
  static const Mat empty;
  return touched_[pid] ? grads_[pid] : empty;
}

void GradientStore::add(const GradientStore& other) {
  for (int pid = 0; pid < static_cast<int>(grads_.size()); ++pid) {
    if (other.touched_[pid]) ensure(pid) += other.grads_[pid];
  }
}

void GradientStore::scale(double s) {
  for (int pid = 0; pid < static_cast<int>(grads_.size()); ++pid) {
    if (touched_[pid]) grads_[pid] *= s;
  }
}

bool GradientStore::all_finite(std::string* first_bad) const {
  for (int pid = 0; pid < static_cast<int>(grads_.size()); ++pid) {
    if (touched_[pid] && !grads_[pid].allFinite()) {
      if (first_bad) *first_bad = store_->name(pid);
      return false;
    }
  }
  return true;
}

Graph::Graph(const ParamStore* params) : params_(params) { nodes_.reserve(1024); }

Var Graph::emit(Mat val, std::function<void(Graph&, Node&)> back) {
  nodes_.push_back(Node{std::move(val), Mat(), std::move(back)});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Mat& Graph::grad_of(int i) {
  Node& n = nodes_[i];
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.val.rows(), n.val.cols());
  return n.grad;
}

Var Graph::constant(Mat v) { return emit(std::move(v), nullptr); }

Var Graph::zeros(int rows, int cols) { return constant(Mat::Zero(rows, cols)); }

Var Graph::param(int pid) {
  require(params_ != nullptr, "graph has no parameter store");
  return emit(params_->value(pid), [pid](Graph& g, Node& n) {
    if (g.gs_) g.gs_->accumulate(pid, n.grad);
  });
}

Var Graph::param_rows(int pid, std::vector<int> rows) {
  require(params_ != nullptr, "graph has no parameter store");
  const Mat& full = params_->value(pid);
  Mat val(rows.size(), full.cols());
  for (size_t k = 0; k < rows.size(); ++k) {
    require(rows[k] >= 0 && rows[k] < full.rows(), "param_rows: row out of range");
    val.row(static_cast<int>(k)) = full.row(rows[k]);
  }
  return emit(std::move(val), [pid, rows = std::move(rows)](Graph& g, Node& n) {
    if (g.gs_) g.gs_->accumulate_rows(pid, rows, n.grad);
  });
}

Var Graph::add(Var a, Var b) {
  const Mat& va = value(a);
  const Mat& vb = value(b);
  require(va.rows() == vb.rows() && va.cols() == vb.cols(), "add: shape mismatch");
  return emit(va + vb, [a, b](Graph& g, Node& n) {
    g.grad_of(a.i) += n.grad;
    g.grad_of(b.i) += n.grad;
  });
}

Var Graph::sub(Var a, Var b) {
  const Mat& va = value(a);
  const Mat& vb = value(b);
  require(va.rows() == vb.rows() && va.cols() == vb.cols(), "sub: shape mismatch");
  return emit(va - vb, [a, b](Graph& g, Node& n) {
    g.grad_of(a.i) += n.grad;
    g.grad_of(b.i) -= n.grad;
  });
}

Var Graph::cmul(Var a, Var b) {
  const Mat& va = value(a);
  const Mat& vb = value(b);
  require(va.rows() == vb.rows() && va.cols() == vb.cols(), "cmul: shape mismatch");
  return emit(va.cwiseProduct(vb), [a, b](Graph& g, Node& n) {
    g.grad_of(a.i) += n.grad.cwiseProduct(g.value(b));
    g.grad_of(b.i) += n.grad.cwiseProduct(g.value(a));
  });
}

Var Graph::matmul(Var a, Var b) {
  const Mat& va = value(a);
  const Mat& vb = value(b);
  require(va.cols() == vb.rows(), "matmul: inner dimensions disagree");
  return emit(va * vb, [a, b](Graph& g, Node& n) {
    g.grad_of(a.i) += n.grad * g.value(b).transpose();
    g.grad_of(b.i) += g.value(a).transpose() * n.grad;
  });
}

Var Graph::matmul_nt(Var a, Var b) {
  const Mat& va = value(a);
  const Mat& vb = value(b);
  require(va.cols() == vb.cols(), "matmul_nt: inner dimensions disagree");
  return emit(va * vb.transpose(), [a, b](Graph& g, Node& n) {
    g.grad_of(a.i) += n.grad * g.value(b);
    g.grad_of(b.i) += n.grad.transpose() * g.value(a);
  });
}

Var Graph::scale(Var a, double s) {
  return emit(value(a) * s, [a, s](Graph& g, Node& n) { g.grad_of(a.i) += s * n.grad; });
}

Var Graph::add_rowwise(Var x, Var row) {
  const Mat& vx = value(x);
  const Mat& vr = value(row);
  require(vr.rows() == 1 && vr.cols() == vx.cols(), "add_rowwise: row must be 1xD");
  Mat out = vx;
  out.rowwise() += vr.row(0);
  return emit(std::move(out), [x, row](Graph& g, Node& n) {
    g.grad_of(x.i) += n.grad;
    g.grad_of(row.i) += n.grad.colwise().sum();
  });
}

Var Graph::repeat_rows(Var row, int n) {
  const Mat& vr = value(row);
  require(vr.rows() == 1, "repeat_rows: input must be 1xD");
  Mat out = vr.replicate(n, 1);
  return emit(std::move(out), [row](Graph& g, Node& n) {
    g.grad_of(row.i) += n.grad.colwise().sum();
  });
}

Var Graph::concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows: empty list");
  int total = 0;
  const int cols = this->cols(parts[0]);
  for (Var p : parts) {
    require(this->cols(p) == cols, "concat_rows: column mismatch");
    total += this->rows(p);
  }
  Mat out(total, cols);
  int at = 0;
  for (Var p : parts) {
    out.middleRows(at, this->rows(p)) = value(p);
    at += this->rows(p);
  }
  return emit(std::move(out), [parts](Graph& g, Node& n) {
    int at = 0;
    for (Var p : parts) {
      const int r = g.rows(p);
      g.grad_of(p.i) += n.grad.middleRows(at, r);
      at += r;
    }
  });
}

Var Graph::concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols: empty list");
  int total = 0;
  const int rws = this->rows(parts[0]);
  for (Var p : parts) {
    require(this->rows(p) == rws, "concat_cols: row mismatch");
    total += this->cols(p);
  }
  Mat out(rws, total);
  int at = 0;
  for (Var p : parts) {
    out.middleCols(at, this->cols(p)) = value(p);
    at += this->cols(p);
  }
  return emit(std::move(out), [parts](Graph& g, Node& n) {
    int at = 0;
    for (Var p : parts) {
      const int c = g.cols(p);
      g.grad_of(p.i) += n.grad.middleCols(at, c);
      at += c;
    }
  });
}

Var Graph::slice_cols(Var a, int start, int n) {
  const Mat& va = value(a);
  require(start >= 0 && start + n <= va.cols(), "slice_cols: out of range");
  return emit(va.middleCols(start, n), [a, start, n](Graph& g, Node& nd) {
    g.grad_of(a.i).middleCols(start, n) += nd.grad;
  });
}

Var Graph::pick_rows(Var a, std::vector<int> rows) {
  const Mat& va = value(a);
  Mat out(rows.size(), va.cols());
  for (size_t k = 0; k < rows.size(); ++k) {
    require(rows[k] >= 0 && rows[k] < va.rows(), "pick_rows: row out of range");
    out.row(static_cast<int>(k)) = va.row(rows[k]);
  }
  return emit(std::move(out), [a, rows = std::move(rows)](Graph& g, Node& n) {
    Mat& da = g.grad_of(a.i);
    for (size_t k = 0; k < rows.size(); ++k) {
      da.row(rows[k]) += n.grad.row(static_cast<int>(k));
    }
  });
}

Var Graph::row(Var a, int r) { return pick_rows(a, {r}); }

Var Graph::sigmoid(Var a) {
  Mat out = value(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return emit(std::move(out), [a](Graph& g, Node& n) {
    g.grad_of(a.i) +=
        n.grad.cwiseProduct(n.val.cwiseProduct(Mat::Ones(n.val.rows(), n.val.cols()) - n.val));
  });
}

Var Graph::tanh(Var a) {
  Mat out = value(a).unaryExpr([](double x) { return std::tanh(x); });
  return emit(std::move(out), [a](Graph& g, Node& n) {
    g.grad_of(a.i) += n.grad.cwiseProduct(
        (Mat::Ones(n.val.rows(), n.val.cols()) - n.val.cwiseProduct(n.val)));
  });
}

Var Graph::relu(Var a) {
  Mat out = value(a).cwiseMax(0.0);
  return emit(std::move(out), [a](Graph& g, Node& n) {
    Mat mask = (n.val.array() > 0.0).cast<double>();
    g.grad_of(a.i) += n.grad.cwiseProduct(mask);
  });
}

Var Graph::softmax_rows(Var a) {
  const Mat& va = value(a);
  Mat out(va.rows(), va.cols());
  for (int r = 0; r < va.rows(); ++r) {
    const double m = va.row(r).maxCoeff();
    Eigen::RowVectorXd e = (va.row(r).array() - m).exp();
    out.row(r) = e / e.sum();
  }
  return emit(std::move(out), [a](Graph& g, Node& n) {
    Mat& da = g.grad_of(a.i);
    for (int r = 0; r < n.val.rows(); ++r) {
      const double dot = n.grad.row(r).dot(n.val.row(r));
      da.row(r) += (n.grad.row(r).array() - dot).matrix().cwiseProduct(n.val.row(r));
    }
  });
}

Var Graph::layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Mat& vx = value(x);
  const Mat& vg = value(gamma);
  const Mat& vb = value(beta);
  require(vg.rows() == 1 && vg.cols() == vx.cols(), "layer_norm: gamma must be 1xD");
  require(vb.rows() == 1 && vb.cols() == vx.cols(), "layer_norm: beta must be 1xD");
  const int d = static_cast<int>(vx.cols());
  Mat xhat(vx.rows(), d);
  Eigen::VectorXd inv_sd(vx.rows());
  for (int r = 0; r < vx.rows(); ++r) {
    const double mu = vx.row(r).mean();
    const double var = (vx.row(r).array() - mu).square().sum() / d;
    inv_sd(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (vx.row(r).array() - mu) * inv_sd(r);
  }
  Mat out = xhat;
  out.array().rowwise() *= vg.row(0).array();
  out.rowwise() += vb.row(0);
  return emit(std::move(out),
              [x, gamma, beta, xhat = std::move(xhat), inv_sd = std::move(inv_sd)](
                  Graph& g, Node& n) {
                const Mat& vg = g.value(gamma);
                Mat& dx = g.grad_of(x.i);
                Mat& dgm = g.grad_of(gamma.i);
                Mat& dbt = g.grad_of(beta.i);
                for (int r = 0; r < xhat.rows(); ++r) {
                  Eigen::RowVectorXd h = n.grad.row(r).cwiseProduct(vg.row(0));
                  const double mean_h = h.mean();
                  const double mean_hx = h.cwiseProduct(xhat.row(r)).mean();
                  dx.row(r) += ((h.array() - mean_h - xhat.row(r).array() * mean_hx) * inv_sd(r))
                                   .matrix();
                  dgm.row(0) += n.grad.row(r).cwiseProduct(xhat.row(r));
                  dbt.row(0) += n.grad.row(r);
                }
              });
}

Var Graph::max_over_rows(Var a, int valid_rows) {
  const Mat& va = value(a);
  const int n = valid_rows < 0 ? static_cast<int>(va.rows()) : valid_rows;
  require(n >= 1 && n <= va.rows(), "max_over_rows: bad valid row count");
  Mat out(1, va.cols());
  std::vector<int> arg(va.cols());
  for (int c = 0; c < va.cols(); ++c) {
    int best = 0;
    for (int r = 1; r < n; ++r) {
      if (va(r, c) > va(best, c)) best = r;
    }
    arg[c] = best;
    out(0, c) = va(best, c);
  }
  return emit(std::move(out), [a, arg = std::move(arg)](Graph& g, Node& nd) {
    Mat& da = g.grad_of(a.i);
    for (int c = 0; c < nd.val.cols(); ++c) {
      da(arg[c], c) += nd.grad(0, c);
    }
  });
}

Var Graph::sum_over_rows(Var a) {
  const Mat& va = value(a);
  Mat out = va.colwise().sum();
  return emit(std::move(out), [a](Graph& g, Node& n) {
    g.grad_of(a.i).rowwise() += n.grad.row(0);
  });
}

Var Graph::nll_from_probs(Var probs_row, int target, double clamp) {
  const Mat& p = value(probs_row);
  require(p.rows() == 1, "nll_from_probs: expected a 1xK row");
  require(target >= 0 && target < p.cols(), "nll_from_probs: target out of range");
  const double q = p(0, target);
  Mat out(1, 1);
  out(0, 0) = -std::log(std::max(q, clamp));
  return emit(std::move(out), [probs_row, target, q, clamp](Graph& g, Node& n) {
    if (q > clamp) {
      g.grad_of(probs_row.i)(0, target) += n.grad(0, 0) * (-1.0 / q);
    }
  });
}

Var Graph::bce_from_prob(Var p, int label, double clamp) {
  const Mat& vp = value(p);
  require(vp.rows() == 1 && vp.cols() == 1, "bce_from_prob: expected 1x1 probability");
  require(label == 0 || label == 1, "bce_from_prob: label must be 0 or 1");
  const double q = label == 1 ? vp(0, 0) : 1.0 - vp(0, 0);
  Mat out(1, 1);
  out(0, 0) = -std::log(std::max(q, clamp));
  return emit(std::move(out), [p, label, q, clamp](Graph& g, Node& n) {
    if (q > clamp) {
      const double sign = label == 1 ? -1.0 : 1.0;
      g.grad_of(p.i)(0, 0) += n.grad(0, 0) * sign / q;
    }
  });
}

Var Graph::add_scalars(const std::vector<Var>& xs) {
  if (xs.empty()) return zeros(1, 1);
  double total = 0;
  for (Var x : xs) total += scalar(x);
  Mat out(1, 1);
  out(0, 0) = total;
  return emit(std::move(out), [xs](Graph& g, Node& n) {
    for (Var x : xs) g.grad_of(x.i) += n.grad;
  });
}

double Graph::scalar(Var v) const {
  const Mat& m = value(v);
  if (m.rows() != 1 || m.cols() != 1) shape_error("scalar", m);
  return m(0, 0);
}

void Graph::backward(Var loss, GradientStore& out) {
  const Mat& lv = value(loss);
  require(lv.rows() == 1 && lv.cols() == 1, "backward: loss must be 1x1");
  gs_ = &out;
  grad_of(loss.i)(0, 0) += 1.0;
  for (int i = loss.i; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.size() > 0 && n.back) n.back(*this, n);
  }
  gs_ = nullptr;
}

int argmax_lowest(const Mat& row_vector) {
  int best = 0;
  for (int c = 1; c < row_vector.cols(); ++c) {
    if (row_vector(0, c) > row_vector(0, best)) best = c;
  }
  return best;
}

Mat positional_encoding(int length, int dim) {
  Mat pe = Mat::Zero(length, dim);
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < dim; i += 2) {
      const double div = std::pow(10000.0, static_cast<double>(i) / dim);
      pe(pos, i) = std::sin(pos / div);
      if (i + 1 < dim) pe(pos, i + 1) = std::cos(pos / div);
    }
  }
  return pe;
}

}  // namespace docee
