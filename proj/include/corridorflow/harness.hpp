#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "corridorflow/config.hpp"
#include "corridorflow/corridor.hpp"
#include "corridorflow/dataset.hpp"
#include "corridorflow/gradcheck.hpp"
#include "corridorflow/model.hpp"
#include "corridorflow/objective.hpp"
#include "corridorflow/optimizer.hpp"

namespace corridorflow::harness {

/// Records plus everything derived from them for one run configuration:
/// model-space vectors, context matrix, anchor specs and the episode split.
struct PreparedData {
  std::vector<data::Record> records;
  Matrix x_raw;     // N x (T * D), D = 7 with displacement fields, else 4
  Matrix contexts;  // N x C
  std::vector<corridor::AnchorSpec> specs;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> eval_rows;
  Eigen::Index chunk_length = 0;
  Eigen::Index action_dim = 0;
};

/// Anchor specs are rebuilt from each chunk's displacement columns under
/// `cfg.corridor`, so one dataset serves every ablation variant.
PreparedData prepare_data(std::vector<data::Record> records, const config::RunConfig& cfg);

model::ModelArch arch_for(const config::RunConfig& cfg, const PreparedData& data);

struct FamilyReport {
  std::size_t count = 0;
  double endpoint_error = 0.0;
  double corridor_violation_rate = 0.0;
  double anchor_mae = 0.0;
};

struct EvalReport {
  std::size_t records = 0;
  double endpoint_error = 0.0;
  double corridor_violation_rate = 0.0;
  double anchor_mae = 0.0;
  double fm_val_loss = 0.0;
  std::map<std::string, FamilyReport> per_family;
};

nlohmann::json to_json(const EvalReport& r);

/// Metrics from externally supplied chunks (T x D raw) and anchor-head
/// predictions (one K x 3 matrix per row), one per entry of `rows`.
EvalReport evaluate_samples(const std::vector<Matrix>& generated,
                            const std::vector<Matrix>& predicted_anchors, const PreparedData& data,
                            const std::vector<std::size_t>& rows,
                            const corridor::CorridorConfig& cfg);

/// Samples one chunk per held-out record with the Euler sampler and scores it.
EvalReport evaluate(model::VelocityFieldModel& m, const PreparedData& data,
                    const config::EvalConfig& eval, const corridor::CorridorConfig& cfg);

/// True when the corridor config reduces to plain flow matching.
bool plain_flow_matching(const corridor::CorridorConfig& cfg);

struct TrainResult {
  model::VelocityFieldModel model;
  diff::OptimizerState optimizer;
  std::vector<nlohmann::json> log;  // one entry per metrics line
  EvalReport final_report;
  std::vector<double> loss_curve;  // total loss per step
};

struct TrainOptions {
  std::optional<std::filesystem::path> out_dir;  // metrics.jsonl + checkpoint.json
};

/// Deterministic given (cfg, data). Logs at step 0, every eval_every steps
/// and at the final step. A NumericalError propagates after the most
/// recent checkpoint has been written.
TrainResult train(const config::RunConfig& cfg, const PreparedData& data,
                  const TrainOptions& opts = {});

/// Gradient check of the full training objective on one seeded batch of
/// `batch_size` training rows for a freshly initialized model.
diff::GradCheckReport grad_check_total_loss(const config::RunConfig& cfg, const PreparedData& data,
                                            std::uint64_t seed, std::size_t batch_size,
                                            const diff::GradCheckOptions& opt);

struct AblationRow {
  std::string variant;
  config::RunConfig config;
  bool ok = false;
  std::string error;
  EvalReport report;
  std::vector<nlohmann::json> log;
};

/// The nine named variants derived from `base`, in table order.
std::vector<std::pair<std::string, config::RunConfig>> ablation_variants(const config::RunConfig& base);

std::vector<AblationRow> run_ablation_suite(const config::RunConfig& base,
                                            const std::vector<data::Record>& records,
                                            const std::optional<std::filesystem::path>& out_dir = {});

inline constexpr const char* kAblationCsvHeader =
    "variant,endpoint_error,violation_rate,anchor_mae,fm_val_loss";

std::string ablation_csv(const std::vector<AblationRow>& rows);
nlohmann::json ablation_json(const std::vector<AblationRow>& rows);

}  // namespace corridorflow::harness
