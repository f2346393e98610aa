#include "corridorflow/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "corridorflow/errors.hpp"
#include "corridorflow/rng.hpp"

namespace corridorflow::diff {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / (std::abs(analytic) + std::abs(numeric) + 1e-12);
}

GradCheckReport grad_check(ParamStore& params, const LossFn& loss, const GradCheckOptions& opt) {
  if (!(opt.h > 0.0)) throw InvalidArgument("grad_check: h must be positive");

  params.zero_grad();
  const LossEval base = loss(params, true);
  const std::size_t n = params.numel();
  std::vector<double> analytic(n);
  for (std::size_t i = 0; i < n; ++i) analytic[i] = params.grad_coord(i);
  params.zero_grad();

  std::vector<std::size_t> coords(n);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (n > opt.min_coords) {
    Rng rng(opt.seed);
    for (std::size_t i = 0; i < opt.min_coords; ++i)
      std::swap(coords[i], coords[i + rng.index(n - i)]);
    coords.resize(opt.min_coords);
    std::sort(coords.begin(), coords.end());
  }

  GradCheckReport report;
  for (std::size_t c : coords) {
    double& theta = params.coord(c);
    const double saved = theta;
    theta = saved + opt.h;
    const LossEval plus = loss(params, false);
    theta = saved - opt.h;
    const LossEval minus = loss(params, false);
    theta = saved;
    if (plus.kinks != base.kinks || minus.kinks != base.kinks) {
      ++report.excluded_kinks;
      continue;
    }
    const double numeric = (plus.value - minus.value) / (2.0 * opt.h);
    const double err = relative_error(analytic[c], numeric);
    ++report.checked;
    if (report.worst_param.empty() || err > report.max_rel_err) {
      report.max_rel_err = err;
      report.worst_param = params.coord_name(c);
    }
  }
  report.passed = report.max_rel_err < opt.tol;
  return report;
}

}  // namespace corridorflow::diff
