#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "corridorflow/corridor.hpp"
#include "corridorflow/dataset.hpp"
#include "corridorflow/optimizer.hpp"

namespace corridorflow::config {

struct ModelConfig {
  std::size_t cond_dim = 64;
  std::size_t hidden = 128;
  std::size_t layers = 3;
  std::size_t anchor_hidden = 64;
};

struct TrainConfig {
  std::optional<std::uint64_t> seed;  // mandatory for train; never defaulted
  std::size_t batch_size = 32;
  std::size_t steps = 2000;
  diff::AdamConfig optimizer;
  std::size_t eval_every = 500;
  std::string checkpoint;  // empty: <out-dir>/checkpoint.json
};

struct EvalConfig {
  std::size_t sampler_steps = 10;
  std::uint64_t seed = 0;
  std::size_t max_records = 0;  // 0: every held-out record
};

/// Sections {data, model, corridor, train, eval}. Unknown keys are rejected;
/// every omitted field takes the default shown in the structs above.
struct RunConfig {
  data::DataConfig data;
  ModelConfig model;
  corridor::CorridorConfig corridor;
  TrainConfig train;
  EvalConfig eval;

  void validate() const;
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

/// Fully resolved config with all defaults written out.
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace corridorflow::config
