#pragma once

#include <cstdint>
#include <vector>

#include "corridorflow/params.hpp"

namespace corridorflow::diff {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adaptive-moment optimizer state; moments are shaped like the parameters.
struct OptimizerState {
  AdamConfig hyper;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::uint64_t step = 0;

  static OptimizerState for_params(const ParamStore& params, AdamConfig hyper = {});
};

/// One bias-corrected Adam update, then zeroes all gradients. A non-finite
/// gradient aborts the step before any parameter changes and reports the
/// offending parameter via NumericalError::component().
void opt_step(OptimizerState& state, ParamStore& params);

}  // namespace corridorflow::diff
