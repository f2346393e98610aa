#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "corridorflow/model.hpp"
#include "corridorflow/optimizer.hpp"
#include "corridorflow/rng.hpp"

namespace corridorflow::checkpoint {

inline constexpr const char* kFormatTag = "corridorflow-ckpt-1";

struct Checkpoint {
  model::VelocityFieldModel model;
  diff::OptimizerState optimizer;
  std::uint64_t step = 0;
  std::string rng_state;
};

/// JSON container: format tag, arch, named flat parameter arrays,
/// normalization statistics, optimizer moments and step, rng state.
/// Doubles are written in shortest round-trip form, so load(save(x))
/// reproduces every parameter bit-for-bit.
nlohmann::json to_json(const model::VelocityFieldModel& m, const diff::OptimizerState& opt,
                       std::uint64_t step, const Rng& rng);
Checkpoint from_json(const nlohmann::json& j);

void save(const std::filesystem::path& path, const model::VelocityFieldModel& m,
          const diff::OptimizerState& opt, std::uint64_t step, const Rng& rng);
Checkpoint load(const std::filesystem::path& path);

}  // namespace corridorflow::checkpoint
