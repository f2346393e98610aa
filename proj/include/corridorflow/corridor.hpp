#pragma once

// Corridor quantities on plain matrices: anchor extraction g, corridor
// width, buffer / consistency / anchor-prediction losses, and the
// noise-weighted corridor term. The taped versions used for training live
// in objective.hpp and are checked against these.

#include <cstddef>
#include <string_view>
#include <vector>

#include "corridorflow/geometry.hpp"
#include "corridorflow/tensor.hpp"

namespace corridorflow::corridor {

/// Which ground truth the anchors regress: inter-anchor displacements
/// ("delta") or positions relative to the chunk start ("pos").
enum class TargetMode { delta, pos };

/// How inter-anchor targets are formed. `inter_anchor` differences the
/// subsampled positions; `step_delta` uses the single-step displacement at
/// each anchor (same granularity as g, so the clean-data width is zero).
enum class AnchorTarget { inter_anchor, step_delta };

enum class PenaltyKind { l1, huber };

std::string_view to_string(TargetMode m);
std::string_view to_string(AnchorTarget m);
std::string_view to_string(PenaltyKind m);
TargetMode target_mode_from_string(std::string_view s);
AnchorTarget anchor_target_from_string(std::string_view s);
PenaltyKind penalty_from_string(std::string_view s);

struct CorridorConfig {
  std::size_t anchors = 3;  // K
  double alpha = 2.0;
  double lambda_dp = 1.0;
  double lambda_corr = 0.5;
  PenaltyKind penalty = PenaltyKind::huber;
  double huber_beta = 0.1;  // meters
  bool enable_buf = true;
  bool enable_cons = true;
  bool enable_extra_a = true;
  TargetMode target_mode = TargetMode::delta;
  geometry::AnchorMethod anchor_method = geometry::AnchorMethod::rdp_dp;
  AnchorTarget anchor_target = AnchorTarget::inter_anchor;

  /// Throws InvalidArgument on alpha <= 0, negative weights, K == 0 or a
  /// non-positive Huber threshold.
  void validate() const;
};

/// Per-chunk anchor ground truth.
struct AnchorSpec {
  geometry::AnchorIndexSet indices;
  Matrix delta_targets;  // K x 3, inter-anchor displacements (m)
  Matrix pos_targets;    // K x 3, positions relative to chunk start (m)
  double width = 0.0;    // corridor half-width delta (m)
  std::vector<double> weights;

  std::size_t k() const noexcept { return indices.size(); }
  const Matrix& targets(TargetMode m) const {
    return m == TargetMode::delta ? delta_targets : pos_targets;
  }
};

/// Per-anchor residual norms and the quantities derived from them.
struct CorridorEval {
  std::vector<double> residuals;
  double buffer = 0.0;
  double consistency = 0.0;
  double noise_weight = 1.0;
  std::vector<bool> outside;  // residual > width
};

/// w_tau = 2 tau / (K (K + 1)), tau = 1..K.
std::vector<double> consistency_weights(std::size_t k);

/// Rows t_k of `chunk`, columns [offset, offset + 3). `chunk` is T x D.
Matrix extract_anchors_g(const Matrix& chunk, const geometry::AnchorIndexSet& indices,
                         Eigen::Index delta_offset);

/// alpha * max_k ||g_k - target_k||.
double corridor_width(const Matrix& g_star, const Matrix& targets, double alpha);

std::vector<double> residual_norms(const Matrix& g, const Matrix& targets);

/// (1/K) sum_k [ ||g_k - target_k|| - width ]_+
double buffer_loss(const Matrix& g_hat, const Matrix& targets, double width);

/// sum_tau w_tau || C(g_hat)_tau - C(targets)_tau ||^2, C = running sum over anchors.
double consistency_loss(const Matrix& g_hat, const Matrix& targets,
                        const std::vector<double>& weights);

/// Robust penalty applied to a residual norm.
double penalty(double r, PenaltyKind kind, double huber_beta);

/// (1/K) sum_k rho(||pred_k - target_k||)
double anchor_pred_loss(const Matrix& predicted, const Matrix& targets, PenaltyKind kind,
                        double huber_beta);

/// (1 - t) (buf + cons) with disabled terms dropped.
double corridor_term(double buffer, double consistency, double t, const CorridorConfig& cfg);

CorridorEval evaluate_corridor(const Matrix& g_hat, const AnchorSpec& spec, TargetMode mode,
                               double t);

}  // namespace corridorflow::corridor
