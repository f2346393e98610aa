#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "corridorflow/params.hpp"
#include "corridorflow/rng.hpp"
#include "corridorflow/tape.hpp"

namespace corridorflow::diff {

/// Fully connected stack: tanh between layers, linear output.
/// widths = {in, hidden..., out}; parameters are "<prefix>.w<i>" (out x in)
/// and "<prefix>.b<i>" (1 x out).
struct MlpSpec {
  std::string prefix;
  std::vector<Eigen::Index> widths;

  Eigen::Index input_dim() const { return widths.front(); }
  Eigen::Index output_dim() const { return widths.back(); }
  std::size_t layers() const { return widths.size() - 1; }
};

/// Registers the layer parameters (all zero).
void register_mlp(ParamStore& params, const MlpSpec& spec);

/// Glorot-uniform weights, zero biases.
void init_mlp(ParamStore& params, const MlpSpec& spec, Rng& rng);

Var forward_mlp(Tape& tape, ParamStore& params, const MlpSpec& spec, Var input);

}  // namespace corridorflow::diff
