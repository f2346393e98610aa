#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "corridorflow/params.hpp"

namespace corridorflow::diff {

/// One loss evaluation as seen by the checker. `kinks` is the tape's
/// kink_signature() so stencils straddling a hinge or zero-norm can be
/// recognized and skipped.
struct LossEval {
  double value = 0.0;
  std::vector<std::uint8_t> kinks;
};

/// Evaluates the loss at the current parameters; when `with_grad` is set it
/// must also run backward so the store's gradients hold dL/dtheta.
using LossFn = std::function<LossEval(ParamStore&, bool with_grad)>;

struct GradCheckOptions {
  double h = 1e-5;
  double tol = 1e-4;
  std::size_t min_coords = 200;  // all coordinates when the model is smaller
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t checked = 0;
  std::size_t excluded_kinks = 0;
  bool passed = false;
};

/// |a - n| / (|a| + |n| + 1e-12), central differences.
double relative_error(double analytic, double numeric);

/// Compares analytic gradients with central differences on a seeded subset
/// of coordinates. Parameters are restored exactly afterwards; gradients
/// are left zeroed.
GradCheckReport grad_check(ParamStore& params, const LossFn& loss, const GradCheckOptions& opt);

}  // namespace corridorflow::diff
