#include "docee/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace docee {

GradCheckResult check_gradients(const std::function<double()>& loss_fn,
                                ParamStore& store, const GradientStore& analytic,
                                double epsilon, int samples_per_param,
                                uint64_t seed) {
  GradCheckResult res;
  std::mt19937_64 rng(seed);

  for (int pid = 0; pid < store.size(); ++pid) {
    if (!analytic.touched(pid)) continue;
    const Mat& ga = analytic.grad(pid);
    if (!ga.allFinite()) {
      res.all_finite = false;
      res.non_finite_param = store.name(pid);
      continue;
    }
    Mat& value = store.value(pid);
    const int total = static_cast<int>(value.size());
    const int n_samples = std::min(samples_per_param, total);

    std::vector<int> coords(total);
    for (int i = 0; i < total; ++i) coords[i] = i;
    std::shuffle(coords.begin(), coords.end(), rng);

    for (int s = 0; s < n_samples; ++s) {
      const int flat = coords[s];
      const int r = flat % static_cast<int>(value.rows());
      const int c = flat / static_cast<int>(value.rows());
      const double saved = value(r, c);

      value(r, c) = saved + epsilon;
      const double up = loss_fn();
      value(r, c) = saved - epsilon;
      const double down = loss_fn();
      value(r, c) = saved;

      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = ga(r, c);
      const double err = std::abs(a - numeric) /
                         std::max(std::abs(a) + std::abs(numeric), 0.01);
      ++res.n_checked;
      if (!std::isfinite(err) || err > res.max_rel_err) {
        res.max_rel_err = err;
        res.worst_param = store.name(pid);
        res.worst_row = r;
        res.worst_col = c;
        res.worst_analytic = a;
        res.worst_numeric = numeric;
      }
    }
  }
  return res;
}

}  // namespace docee
