#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "docee/graph.hpp"

namespace docee {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_row = -1;
  int worst_col = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  int n_checked = 0;
  bool all_finite = true;
  std::string non_finite_param;  // set when all_finite is false
};

// Central-difference comparison of analytic gradients against a loss closure.
// The closure must recompute the loss from the CURRENT values in `store`
// (check_gradients perturbs one coordinate at a time and restores it).
// Checks up to samples_per_param random coordinates of every touched
// parameter; rel. error uses |a - n| / max(|a| + |n|, 0.01) so that tiny
// gradients are compared on an absolute scale.
GradCheckResult check_gradients(const std::function<double()>& loss_fn,
                                ParamStore& store, const GradientStore& analytic,
                                double epsilon, int samples_per_param,
                                uint64_t seed);

}  // namespace docee
