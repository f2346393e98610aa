#include "corridorflow/mlp.hpp"

#include <cmath>

#include "corridorflow/errors.hpp"

namespace corridorflow::diff {

namespace {

std::string weight_name(const MlpSpec& spec, std::size_t l) {
  return spec.prefix + ".w" + std::to_string(l);
}
std::string bias_name(const MlpSpec& spec, std::size_t l) {
  return spec.prefix + ".b" + std::to_string(l);
}

void validate(const MlpSpec& spec) {
  if (spec.widths.size() < 2) throw InvalidArgument("mlp '" + spec.prefix + "' needs >= 1 layer");
  for (auto w : spec.widths)
    if (w <= 0) throw InvalidArgument("mlp '" + spec.prefix + "' has a non-positive width");
}

}  // namespace

void register_mlp(ParamStore& params, const MlpSpec& spec) {
  validate(spec);
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    params.add(weight_name(spec, l), spec.widths[l + 1], spec.widths[l]);
    params.add(bias_name(spec, l), 1, spec.widths[l + 1]);
  }
}

void init_mlp(ParamStore& params, const MlpSpec& spec, Rng& rng) {
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    Matrix& w = params[params.index_of(weight_name(spec, l))].value;
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = (2.0 * rng.uniform() - 1.0) * limit;
    params[params.index_of(bias_name(spec, l))].value.setZero();
  }
}

Var forward_mlp(Tape& tape, ParamStore& params, const MlpSpec& spec, Var input) {
  if (tape.value(input).cols() != spec.input_dim())
    throw InvalidArgument("mlp '" + spec.prefix + "': input has " +
                          std::to_string(tape.value(input).cols()) + " features, expected " +
                          std::to_string(spec.input_dim()));
  Var h = input;
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    Var w = tape.param(params, params.index_of(weight_name(spec, l)));
    Var b = tape.param(params, params.index_of(bias_name(spec, l)));
    h = tape.affine(h, w, b);
    if (l + 1 < spec.layers()) h = tape.tanh(h);
  }
  return h;
}

}  // namespace corridorflow::diff
