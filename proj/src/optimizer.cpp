#include "corridorflow/optimizer.hpp"

#include <cmath>

#include "corridorflow/errors.hpp"

namespace corridorflow::diff {

OptimizerState OptimizerState::for_params(const ParamStore& params, AdamConfig hyper) {
  OptimizerState s;
  s.hyper = hyper;
  for (const auto& p : params) {
    s.first_moment.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    s.second_moment.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
  return s;
}

void opt_step(OptimizerState& state, ParamStore& params) {
  if (state.first_moment.size() != params.size())
    throw StateError("optimizer state does not match parameter store");
  for (const auto& p : params)
    if (!p.grad.allFinite())
      throw NumericalError(p.name, "non-finite gradient in parameter '" + p.name + "'");

  const AdamConfig& h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(h.beta1, t);
  const double bc2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    m = h.beta1 * m + (1.0 - h.beta1) * p.grad;
    v = h.beta2 * v + (1.0 - h.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= h.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + h.eps);
  }
  params.zero_grad();
}

}  // namespace corridorflow::diff
