#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "docee/gradcheck.hpp"
#include "docee/graph.hpp"
#include "support.hpp"

using namespace docee;
using namespace testsup;

namespace {

// Deterministic weights for collapsing a matrix output into one scalar so a
// single backward pass exercises every output coordinate.
Mat probe_weights(int rows, int cols, uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_mat(rows, cols, rng, 1.0);
}

// loss = sum(output .* W), as a scalar.
Var collapse(Graph& g, Var out, const Mat& w) {
  Var weighted = g.cmul(out, g.constant(w));
  Var col_sums = g.sum_over_rows(weighted);  // 1 x C
  Mat ones = Mat::Ones(w.cols(), 1);
  return g.matmul(col_sums, g.constant(ones));  // 1 x 1
}

// Finite-difference check of `build` (which must recompute the loss from the
// current store contents on a fresh graph each call).
GradCheckResult fd_check(ParamStore& store, const std::function<Var(Graph&)>& build,
                         double eps = 1e-6, int samples = 200) {
  GradientStore analytic(store);
  Graph g(&store);
  g.backward(build(g), analytic);
  auto loss_fn = [&store, &build]() {
    Graph fresh(&store);
    return fresh.scalar(build(fresh));
  };
  return check_gradients(loss_fn, store, analytic, eps, samples, /*seed=*/99);
}

constexpr double kTol = 1e-6;  // FD agreement threshold for smooth ops

}  // namespace

// ---------------------------------------------------------------------------
// The finite-difference checker itself is validated first, against functions
// whose gradients are known in closed form. Everything after leans on it.

TEST_CASE("gradient checker agrees with a hand-derived gradient") {
  ParamStore store;
  std::mt19937_64 rng(1);
  const Mat a0 = random_mat(3, 4, rng);
  const int A = store.add("A", a0);

  // f = sum(A .* A), df/dA = 2A — filled in by hand, no Graph involved.
  GradientStore analytic(store);
  analytic.accumulate(A, 2.0 * store.value(A));
  auto loss_fn = [&]() { return store.value(A).array().square().sum(); };

  GradCheckResult res = check_gradients(loss_fn, store, analytic, 1e-6, 50, 7);
  CHECK(res.all_finite);
  CHECK(res.n_checked > 0);
  CHECK(res.max_rel_err < 1e-8);
  // The probe must not corrupt the parameters it perturbs.
  CHECK(store.value(A) == a0);
}

TEST_CASE("gradient checker flags a wrong gradient and names the parameter") {
  ParamStore store;
  std::mt19937_64 rng(2);
  const int A = store.add("weights", random_mat(2, 2, rng));

  GradientStore wrong(store);
  wrong.accumulate(A, 2.0 * store.value(A) + Mat::Ones(2, 2));  // off by +1
  auto loss_fn = [&]() { return store.value(A).array().square().sum(); };

  GradCheckResult res = check_gradients(loss_fn, store, wrong, 1e-6, 10, 7);
  CHECK(res.max_rel_err > 0.05);
  CHECK(res.worst_param == "weights");
  CHECK(res.worst_row >= 0);
}

TEST_CASE("gradient checker reports non-finite gradients") {
  ParamStore store;
  const int A = store.add("bad", Mat::Ones(1, 2));
  GradientStore analytic(store);
  Mat g(1, 2);
  g << 1.0, std::numeric_limits<double>::quiet_NaN();
  analytic.accumulate(A, g);
  auto loss_fn = [&]() { return store.value(A).sum(); };

  GradCheckResult res = check_gradients(loss_fn, store, analytic, 1e-6, 10, 7);
  CHECK(!res.all_finite);
  CHECK(res.non_finite_param == "bad");
}

TEST_CASE("constant loss has zero gradient everywhere") {
  ParamStore store;
  store.add("unused", Mat::Ones(2, 2));
  GradientStore analytic(store);  // untouched = zero
  auto loss_fn = [&]() { return 42.0; };
  GradCheckResult res = check_gradients(loss_fn, store, analytic, 1e-6, 10, 7);
  CHECK(res.all_finite);
  CHECK(res.max_rel_err < 1e-9);
}

// ---------------------------------------------------------------------------
// Leaf nodes and basic bookkeeping.

TEST_CASE("leaves: constant, zeros, param") {
  ParamStore store;
  std::mt19937_64 rng(3);
  const Mat a0 = random_mat(2, 3, rng);
  const int A = store.add("A", a0);

  Graph g(&store);
  CHECK(g.value(g.constant(a0)) == a0);
  CHECK(g.value(g.zeros(2, 5)) == Mat::Zero(2, 5));
  CHECK(g.value(g.param(A)) == a0);
  CHECK(g.rows(g.param(A)) == 2);
  CHECK(g.cols(g.param(A)) == 3);
}

TEST_CASE("backward touches only parameters the loss depends on") {
  ParamStore store;
  std::mt19937_64 rng(4);
  const int A = store.add("A", random_mat(2, 2, rng));
  const int B = store.add("B", random_mat(2, 2, rng));

  Graph g(&store);
  Var loss = collapse(g, g.param(A), probe_weights(2, 2, 5));
  GradientStore gs(store);
  g.backward(loss, gs);
  CHECK(gs.touched(A));
  CHECK(!gs.touched(B));
  CHECK(gs.grad(A) == probe_weights(2, 2, 5));  // d(sum A.*W)/dA = W exactly
}

TEST_CASE("gradient store accumulates across backward passes") {
  ParamStore store;
  const int A = store.add("A", Mat::Ones(1, 2));
  GradientStore gs(store);
  Mat g1(1, 2);
  g1 << 1, 2;
  gs.accumulate(A, g1);
  gs.accumulate(A, g1);
  CHECK(gs.grad(A) == Mat(2 * g1));
  gs.scale(0.5);
  CHECK(gs.grad(A) == g1);

  GradientStore other(store);
  other.accumulate(A, g1);
  gs.add(other);
  CHECK(gs.grad(A) == Mat(2 * g1));
  CHECK(gs.all_finite());

  Mat bad(1, 2);
  bad << 1, std::numeric_limits<double>::infinity();
  gs.accumulate(A, bad);
  std::string name;
  CHECK(!gs.all_finite(&name));
  CHECK(name == "A");
}

// ---------------------------------------------------------------------------
// One value oracle plus one finite-difference gradient check per operation.

TEST_CASE("add/sub/cmul values and gradients") {
  ParamStore store;
  std::mt19937_64 rng(10);
  const int A = store.add("A", random_mat(3, 2, rng));
  const int B = store.add("B", random_mat(3, 2, rng));
  const Mat w = probe_weights(3, 2, 11);

  {
    Graph g(&store);
    CHECK(g.value(g.add(g.param(A), g.param(B))) == Mat(store.value(A) + store.value(B)));
    CHECK(g.value(g.sub(g.param(A), g.param(B))) == Mat(store.value(A) - store.value(B)));
    Mat expected = store.value(A).cwiseProduct(store.value(B));
    CHECK(g.value(g.cmul(g.param(A), g.param(B))) == expected);
  }
  auto build = [&](Graph& g) {
    Var x = g.add(g.param(A), g.param(B));
    Var y = g.sub(x, g.cmul(g.param(A), g.param(B)));
    return collapse(g, y, w);
  };
  GradCheckResult res = fd_check(store, build);
  CHECK(res.all_finite);
  CHECK(res.max_rel_err < kTol);
}

TEST_CASE("matmul value oracle and gradient") {
  ParamStore store;
  Mat a(2, 2), b(2, 1);
  a << 1, 2, 3, 4;
  b << 5, 6;
  const int A = store.add("A", a);
  const int B = store.add("B", b);
  {
    Graph g(&store);
    Mat expected(2, 1);
    expected << 17, 39;  // worked by hand
    CHECK(g.value(g.matmul(g.param(A), g.param(B))) == expected);
  }
  const Mat w = probe_weights(2, 1, 12);
  auto build = [&](Graph& g) {
    return collapse(g, g.matmul(g.param(A), g.param(B)), w);
  };
  GradCheckResult res = fd_check(store, build);
  CHECK(res.max_rel_err < kTol);
}

TEST_CASE("matmul_nt equals A * B^T and back-propagates") {
  ParamStore store;
  std::mt19937_64 rng(13);
  const int A = store.add("A", random_mat(3, 4, rng));
  const int B = store.add("B", random_mat(2, 4, rng));
  {
    Graph g(&store);
    Mat expected = store.value(A) * store.value(B).transpose();
    CHECK(g.value(g.matmul_nt(g.param(A), g.param(B))).isApprox(expected, 1e-15));
  }
  const Mat w = probe_weights(3, 2, 14);
  auto build = [&](Graph& g) {
    return collapse(g, g.matmul_nt(g.param(A), g.param(B)), w);
  };
  CHECK(fd_check(store, build).max_rel_err < kTol);
}

TEST_CASE("scale, add_rowwise, repeat_rows") {
  ParamStore store;
  std::mt19937_64 rng(15);
  const int A = store.add("A", random_mat(3, 2, rng));
  const int R = store.add("row", random_mat(1, 2, rng));
  {
    Graph g(&store);
    CHECK(g.value(g.scale(g.param(A), -2.5)) == Mat(-2.5 * store.value(A)));
    Mat expected = store.value(A);
    expected.rowwise() += store.value(R).row(0);
    CHECK(g.value(g.add_rowwise(g.param(A), g.param(R))) == expected);
    Mat rep = g.value(g.repeat_rows(g.param(R), 3));
    REQUIRE(rep.rows() == 3);
    for (int i = 0; i < 3; ++i) CHECK(rep.row(i) == store.value(R).row(0));
  }
  const Mat w = probe_weights(3, 2, 16);
  auto build = [&](Graph& g) {
    Var x = g.add_rowwise(g.scale(g.param(A), 0.5), g.param(R));
    Var y = g.add(x, g.repeat_rows(g.param(R), 3));
    return collapse(g, y, w);
  };
  CHECK(fd_check(store, build).max_rel_err < kTol);
}

TEST_CASE("concat and slicing round trips") {
  ParamStore store;
  std::mt19937_64 rng(17);
  const int A = store.add("A", random_mat(2, 3, rng));
  const int B = store.add("B", random_mat(1, 3, rng));
  const int C = store.add("C", random_mat(2, 2, rng));
  {
    Graph g(&store);
    Var rows = g.concat_rows({g.param(A), g.param(B)});
    REQUIRE(g.rows(rows) == 3);
    CHECK(g.value(rows).topRows(2) == store.value(A));
    CHECK(g.value(rows).bottomRows(1) == store.value(B));

    Var cols = g.concat_cols({g.param(A), g.param(C)});
    REQUIRE(g.cols(cols) == 5);
    CHECK(g.value(cols).leftCols(3) == store.value(A));
    CHECK(g.value(g.slice_cols(cols, 3, 2)) == store.value(C));

    Var picked = g.pick_rows(rows, {2, 0});
    CHECK(g.value(picked).row(0) == store.value(B).row(0));
    CHECK(g.value(picked).row(1) == store.value(A).row(0));
    CHECK(g.value(g.row(rows, 1)) == store.value(A).row(1));
  }
  const Mat w = probe_weights(2, 7, 18);
  auto build = [&](Graph& g) {
    Var rows = g.concat_rows({g.param(A), g.param(B)});
    Var picked = g.pick_rows(rows, {0, 2});          // 2 x 3
    Var cols = g.concat_cols({picked, g.param(C)});  // 2 x 5
    Var sliced = g.slice_cols(cols, 1, 5 - 1);       // 2 x 4
    Var middle = g.repeat_rows(g.row(rows, 1), 2);   // 2 x 3
    Var padded = g.concat_cols({sliced, middle});    // 2 x 7
    return collapse(g, padded, w);
  };
  CHECK(fd_check(store, build).max_rel_err < kTol);
}

TEST_CASE("pick_rows with a duplicated row accumulates both contributions") {
  ParamStore store;
  const int A = store.add("A", Mat::Ones(2, 2));
  Graph g(&store);
  Var picked = g.pick_rows(g.param(A), {0, 0});  // row 0 twice
  Mat w = Mat::Ones(2, 2);
  Var loss = collapse(g, picked, w);
  GradientStore gs(store);
  g.backward(loss, gs);
  Mat expected(2, 2);
  expected << 2, 2, 0, 0;  // each appearance contributes once
  CHECK(gs.grad(A) == expected);
}

TEST_CASE("elementwise nonlinearities: values and gradients") {
  ParamStore store;
  std::mt19937_64 rng(19);
  const int A = store.add("A", random_mat(2, 3, rng, 2.0));
  {
    Graph g(&store);
    const Mat& a = store.value(A);
    Mat sig = g.value(g.sigmoid(g.param(A)));
    Mat th = g.value(g.tanh(g.param(A)));
    Mat re = g.value(g.relu(g.param(A)));
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 3; ++c) {
        CHECK(sig(r, c) == doctest::Approx(1.0 / (1.0 + std::exp(-a(r, c)))).epsilon(1e-12));
        CHECK(th(r, c) == doctest::Approx(std::tanh(a(r, c))).epsilon(1e-12));
        CHECK(re(r, c) == std::max(0.0, a(r, c)));
      }
  }
  const Mat w = probe_weights(2, 3, 20);
  auto build = [&](Graph& g) {
    Var x = g.sigmoid(g.param(A));
    Var y = g.tanh(x);
    Var z = g.add(y, g.relu(g.param(A)));
    return collapse(g, z, w);
  };
  CHECK(fd_check(store, build).max_rel_err < kTol);
}

TEST_CASE("softmax rows: normalization, known values, gradient") {
  ParamStore store;
  Mat a(2, 3);
  a << 0.0, std::log(2.0), 0.0,  // -> (1/4, 2/4, 1/4)
      100.0, 100.0, 100.0;       // shift-invariance guard -> uniform
  const int A = store.add("A", a);
  {
    Graph g(&store);
    Mat y = g.value(g.softmax_rows(g.param(A)));
    CHECK(y(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(y(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(y(1, 0) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    for (int r = 0; r < 2; ++r) CHECK(y.row(r).sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK((y.array() > 0).all());
  }
  std::mt19937_64 rng(21);
  store.value(A) = random_mat(2, 3, rng, 3.0);
  const Mat w = probe_weights(2, 3, 22);
  auto build = [&](Graph& g) {
    return collapse(g, g.softmax_rows(g.param(A)), w);
  };
  CHECK(fd_check(store, build).max_rel_err < kTol);
}

TEST_CASE("softmax rows survive extreme magnitudes") {
  ParamStore store;
  Mat a(1, 3);
  a << 1e30, -1e30, 0.0;
  const int A = store.add("A", a);
  Graph g(&store);
  Mat y = g.value(g.softmax_rows(g.param(A)));
  CHECK(y(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(y(0, 1) == 0.0);
  CHECK(std::isfinite(y.sum()));
  CHECK(y.row(0).sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("layer_norm value oracle and gradient") {
  ParamStore store;
  Mat x(1, 2), gamma(1, 2), beta(1, 2);
  x << 1.0, 3.0;
  gamma << 1.0, 1.0;
  beta << 0.0, 0.0;
  const int X = store.add("x", x);
  const int G = store.add("gamma", gamma);
  const int B = store.add("beta", beta);
  {
    Graph g(&store);
    Mat y = g.value(g.layer_norm(g.param(X), g.param(G), g.param(B)));
    // Hand computation: mean 2, variance 1, eps 1e-5.
    const double expect = 1.0 / std::sqrt(1.0 + 1e-5);
    CHECK(y(0, 0) == doctest::Approx(-expect).epsilon(1e-12));
    CHECK(y(0, 1) == doctest::Approx(expect).epsilon(1e-12));
  }
  std::mt19937_64 rng(23);
  store.value(X) = random_mat(3, 4, rng, 2.0);
  store.value(G) = random_mat(1, 4, rng);
  store.value(B) = random_mat(1, 4, rng);
  const Mat w = probe_weights(3, 4, 24);
  auto build = [&](Graph& g) {
    Var y = g.layer_norm(g.param(X), g.param(G), g.param(B));
    return collapse(g, y, w);
  };
  CHECK(fd_check(store, build, 1e-6, 300).max_rel_err < kTol);
}

TEST_CASE("max_over_rows: column maxima, valid-row masking, gradient routing") {
  ParamStore store;
  Mat a(3, 2);
  a << 1, 5, 4, 2, 9, 9;
  const int A = store.add("A", a);
  {
    Graph g(&store);
    Mat full = g.value(g.max_over_rows(g.param(A)));
    CHECK(full(0, 0) == 9);
    CHECK(full(0, 1) == 9);
    Mat masked = g.value(g.max_over_rows(g.param(A), 2));  // last row is padding
    CHECK(masked(0, 0) == 4);
    CHECK(masked(0, 1) == 5);
  }
  {
    // Ties route the gradient to the first maximal row only.
    Mat t(2, 1);
    t << 7, 7;
    ParamStore s2;
    const int T = s2.add("T", t);
    Graph g(&s2);
    Var loss = g.max_over_rows(g.param(T));
    GradientStore gs(s2);
    g.backward(loss, gs);
    Mat expected(2, 1);
    expected << 1, 0;
    CHECK(gs.grad(T) == expected);
  }
  std::mt19937_64 rng(25);
  store.value(A) = random_mat(3, 2, rng, 2.0);  // random values: ties improbable
  const Mat w = probe_weights(1, 2, 26);
  auto build = [&](Graph& g) {
    return collapse(g, g.max_over_rows(g.param(A), 2), w);
  };
  CHECK(fd_check(store, build, 1e-7).max_rel_err < kTol);
}

TEST_CASE("sum_over_rows value and gradient") {
  ParamStore store;
  std::mt19937_64 rng(27);
  const int A = store.add("A", random_mat(4, 3, rng));
  {
    Graph g(&store);
    Mat expected = store.value(A).colwise().sum();
    CHECK(g.value(g.sum_over_rows(g.param(A))) == expected);
  }
  const Mat w = probe_weights(1, 3, 28);
  auto build = [&](Graph& g) {
    return collapse(g, g.sum_over_rows(g.param(A)), w);
  };
  CHECK(fd_check(store, build).max_rel_err < kTol);
}

TEST_CASE("nll_from_probs: value, clamping, gradient") {
  ParamStore store;
  Mat p(1, 3);
  p << 0.2, 0.5, 0.3;
  const int P = store.add("p", p);
  {
    Graph g(&store);
    CHECK(g.scalar(g.nll_from_probs(g.param(P), 1)) ==
          doctest::Approx(-std::log(0.5)).epsilon(1e-12));
    // Probability zero is clamped instead of producing infinity.
    Mat z(1, 2);
    z << 0.0, 1.0;
    Var clamped = g.nll_from_probs(g.constant(z), 0);
    CHECK(g.scalar(clamped) == doctest::Approx(-std::log(1e-7)).epsilon(1e-9));
  }
  {
    // Below the clamp the gradient is zero (the loss is locally constant).
    ParamStore s2;
    Mat z(1, 2);
    z << 0.0, 1.0;
    const int Z = s2.add("z", z);
    Graph g(&s2);
    Var loss = g.nll_from_probs(g.param(Z), 0);
    GradientStore gs(s2);
    g.backward(loss, gs);
    // Either no gradient reaches the parameter or an exactly-zero one does.
    if (gs.touched(Z)) CHECK(gs.grad(Z).cwiseAbs().maxCoeff() == 0.0);
  }
  auto build = [&](Graph& g) { return g.nll_from_probs(g.param(P), 1); };
  CHECK(fd_check(store, build).max_rel_err < kTol);
}

TEST_CASE("bce_from_prob: value at 0.5 is ln 2, gradients for both labels") {
  ParamStore store;
  Mat p(1, 1);
  p << 0.5;
  const int P = store.add("p", p);
  {
    Graph g(&store);
    CHECK(g.scalar(g.bce_from_prob(g.param(P), 1)) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(g.scalar(g.bce_from_prob(g.param(P), 0)) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  {
    // Perfect confidence costs (numerically) nothing after clamping.
    Graph g(&store);
    Mat one(1, 1);
    one << 1.0;
    CHECK(g.scalar(g.bce_from_prob(g.constant(one), 1)) ==
          doctest::Approx(0.0).epsilon(1e-6));
  }
  store.value(P)(0, 0) = 0.37;
  auto build1 = [&](Graph& g) { return g.bce_from_prob(g.param(P), 1); };
  CHECK(fd_check(store, build1).max_rel_err < kTol);
  auto build0 = [&](Graph& g) { return g.bce_from_prob(g.param(P), 0); };
  CHECK(fd_check(store, build0).max_rel_err < kTol);
}

TEST_CASE("add_scalars sums 1x1 nodes; empty list is zero") {
  ParamStore store;
  Mat a(1, 1), b(1, 1);
  a << 2.5;
  b << -1.0;
  const int A = store.add("a", a);
  const int B = store.add("b", b);
  Graph g(&store);
  CHECK(g.scalar(g.add_scalars({g.param(A), g.param(B), g.param(A)})) ==
        doctest::Approx(4.0).epsilon(1e-12));
  CHECK(g.scalar(g.add_scalars({})) == 0.0);

  auto build = [&](Graph& gg) {
    return gg.add_scalars({gg.param(A), gg.param(B), gg.param(A)});
  };
  CHECK(fd_check(store, build).max_rel_err < kTol);
}

TEST_CASE("param_rows gathers and scatter-adds, duplicates included") {
  ParamStore store;
  Mat table(4, 2);
  table << 1, 2, 3, 4, 5, 6, 7, 8;
  const int T = store.add("table", table);
  {
    Graph g(&store);
    Mat got = g.value(g.param_rows(T, {2, 0, 2}));
    Mat expected(3, 2);
    expected << 5, 6, 1, 2, 5, 6;
    CHECK(got == expected);
  }
  {
    Graph g(&store);
    Var x = g.param_rows(T, {2, 0, 2});
    Mat w = Mat::Ones(3, 2);
    Var loss = collapse(g, x, w);
    GradientStore gs(store);
    g.backward(loss, gs);
    Mat expected = Mat::Zero(4, 2);
    expected.row(0) << 1, 1;
    expected.row(2) << 2, 2;  // fetched twice
    CHECK(gs.grad(T) == expected);
  }
  std::mt19937_64 rng(29);
  store.value(T) = random_mat(4, 2, rng);
  const Mat w = probe_weights(3, 2, 30);
  auto build = [&](Graph& g) {
    return collapse(g, g.tanh(g.param_rows(T, {1, 3, 1})), w);
  };
  CHECK(fd_check(store, build).max_rel_err < kTol);
}

TEST_CASE("argmax_lowest breaks ties toward the lowest index") {
  Mat v(1, 4);
  v << 1.0, 3.0, 3.0, 2.0;
  CHECK(argmax_lowest(v) == 1);
  Mat u(1, 3);
  u << 5.0, 5.0, 5.0;
  CHECK(argmax_lowest(u) == 0);
  Mat single(1, 1);
  single << -2.0;
  CHECK(argmax_lowest(single) == 0);
}

TEST_CASE("positional encoding: deterministic sinusoid table") {
  Mat pe = positional_encoding(6, 8);
  REQUIRE(pe.rows() == 6);
  REQUIRE(pe.cols() == 8);
  // Position 0 is (sin 0, cos 0, ...) = (0, 1, 0, 1, ...).
  for (int c = 0; c < 8; c += 2) {
    CHECK(pe(0, c) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(pe(0, c + 1) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(pe.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  CHECK(pe.row(1) != pe.row(2));  // positions distinguishable
  CHECK(positional_encoding(6, 8) == pe);
}

TEST_CASE("a composite expression passes the finite-difference check") {
  // A miniature end-to-end expression exercising most ops in one tape.
  ParamStore store;
  std::mt19937_64 rng(31);
  const int A = store.add("A", random_mat(3, 4, rng));
  const int B = store.add("B", random_mat(4, 4, rng));
  const int G = store.add("G", Mat::Ones(1, 4));
  const int Bt = store.add("Bt", Mat::Zero(1, 4));

  auto build = [&](Graph& g) {
    Var h = g.matmul(g.param(A), g.param(B));         // 3 x 4
    h = g.layer_norm(h, g.param(G), g.param(Bt));     // 3 x 4
    Var attn = g.softmax_rows(g.matmul_nt(h, h));     // 3 x 3
    Var mixed = g.matmul(attn, h);                    // 3 x 4
    Var pooled = g.max_over_rows(g.tanh(mixed), 2);   // 1 x 4
    Var probs = g.softmax_rows(pooled);
    Var l1 = g.nll_from_probs(probs, 2);
    Var l2 = g.bce_from_prob(g.sigmoid(g.row(g.slice_cols(mixed, 0, 1), 1)), 1);
    return g.add_scalars({l1, l2});
  };
  GradCheckResult res = fd_check(store, build, 1e-6, 300);
  CHECK(res.all_finite);
  CHECK(res.max_rel_err < 1e-5);
}
