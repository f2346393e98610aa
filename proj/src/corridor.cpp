#include "corridorflow/corridor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "corridorflow/errors.hpp"

namespace corridorflow::corridor {

std::string_view to_string(TargetMode m) { return m == TargetMode::delta ? "delta" : "pos"; }
std::string_view to_string(AnchorTarget m) {
  return m == AnchorTarget::inter_anchor ? "inter_anchor" : "step_delta";
}
std::string_view to_string(PenaltyKind m) { return m == PenaltyKind::l1 ? "l1" : "huber"; }

TargetMode target_mode_from_string(std::string_view s) {
  if (s == "delta") return TargetMode::delta;
  if (s == "pos") return TargetMode::pos;
  throw InvalidArgument("unknown target mode '" + std::string(s) + "'");
}

AnchorTarget anchor_target_from_string(std::string_view s) {
  if (s == "inter_anchor") return AnchorTarget::inter_anchor;
  if (s == "step_delta") return AnchorTarget::step_delta;
  throw InvalidArgument("unknown anchor target '" + std::string(s) + "'");
}

PenaltyKind penalty_from_string(std::string_view s) {
  if (s == "l1") return PenaltyKind::l1;
  if (s == "huber") return PenaltyKind::huber;
  throw InvalidArgument("unknown penalty '" + std::string(s) + "'");
}

void CorridorConfig::validate() const {
  if (anchors == 0) throw InvalidArgument("corridor: K must be >= 1");
  if (!(alpha > 0.0)) throw InvalidArgument("corridor: alpha must be > 0");
  if (!(lambda_dp >= 0.0) || !(lambda_corr >= 0.0))
    throw InvalidArgument("corridor: loss weights must be >= 0");
  if (!(huber_beta > 0.0)) throw InvalidArgument("corridor: huber threshold must be > 0");
}

std::vector<double> consistency_weights(std::size_t k) {
  if (k == 0) throw InvalidArgument("consistency_weights: K must be >= 1");
  std::vector<double> w(k);
  const double denom = static_cast<double>(k) * static_cast<double>(k + 1);
  for (std::size_t tau = 1; tau <= k; ++tau) w[tau - 1] = 2.0 * static_cast<double>(tau) / denom;
  return w;
}

Matrix extract_anchors_g(const Matrix& chunk, const geometry::AnchorIndexSet& indices,
                         Eigen::Index delta_offset) {
  if (delta_offset < 0 || delta_offset + 3 > chunk.cols())
    throw InvalidArgument("extract_anchors_g: delta columns outside chunk");
  Matrix g(static_cast<Eigen::Index>(indices.size()), 3);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto t = static_cast<Eigen::Index>(indices.indices[k]);
    if (t < 0 || t >= chunk.rows())
      throw InvalidArgument("extract_anchors_g: anchor index " + std::to_string(t) +
                            " outside chunk of length " + std::to_string(chunk.rows()));
    g.row(static_cast<Eigen::Index>(k)) = chunk.row(t).segment(delta_offset, 3);
  }
  return g;
}

namespace {

void require_anchor_shapes(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != 3 || b.cols() != 3)
    throw InvalidArgument(std::string(op) + ": expected matching K x 3 matrices");
  if (a.rows() == 0) throw InvalidArgument(std::string(op) + ": K must be >= 1");
}

}  // namespace

std::vector<double> residual_norms(const Matrix& g, const Matrix& targets) {
  require_anchor_shapes(g, targets, "residual_norms");
  std::vector<double> r(static_cast<std::size_t>(g.rows()));
  for (Eigen::Index k = 0; k < g.rows(); ++k)
    r[static_cast<std::size_t>(k)] = (g.row(k) - targets.row(k)).norm();
  return r;
}

double corridor_width(const Matrix& g_star, const Matrix& targets, double alpha) {
  const auto r = residual_norms(g_star, targets);
  return alpha * *std::max_element(r.begin(), r.end());
}

double buffer_loss(const Matrix& g_hat, const Matrix& targets, double width) {
  const auto r = residual_norms(g_hat, targets);
  double sum = 0.0;
  for (double rk : r) sum += std::max(rk - width, 0.0);
  return sum / static_cast<double>(r.size());
}

double consistency_loss(const Matrix& g_hat, const Matrix& targets,
                        const std::vector<double>& weights) {
  require_anchor_shapes(g_hat, targets, "consistency_loss");
  if (weights.size() != static_cast<std::size_t>(g_hat.rows()))
    throw InvalidArgument("consistency_loss: one weight per anchor");
  RowVector cum_hat = RowVector::Zero(3);
  RowVector cum_star = RowVector::Zero(3);
  double loss = 0.0;
  for (Eigen::Index k = 0; k < g_hat.rows(); ++k) {
    cum_hat += g_hat.row(k);
    cum_star += targets.row(k);
    loss += weights[static_cast<std::size_t>(k)] * (cum_hat - cum_star).squaredNorm();
  }
  return loss;
}

double penalty(double r, PenaltyKind kind, double huber_beta) {
  if (kind == PenaltyKind::l1) return r;
  return r <= huber_beta ? 0.5 * r * r / huber_beta : r - 0.5 * huber_beta;
}

double anchor_pred_loss(const Matrix& predicted, const Matrix& targets, PenaltyKind kind,
                        double huber_beta) {
  const auto r = residual_norms(predicted, targets);
  double sum = 0.0;
  for (double rk : r) sum += penalty(rk, kind, huber_beta);
  return sum / static_cast<double>(r.size());
}

double corridor_term(double buffer, double consistency, double t, const CorridorConfig& cfg) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("corridor_term: t must lie in [0, 1]");
  const double inner = (cfg.enable_buf ? buffer : 0.0) + (cfg.enable_cons ? consistency : 0.0);
  return (1.0 - t) * inner;
}

CorridorEval evaluate_corridor(const Matrix& g_hat, const AnchorSpec& spec, TargetMode mode,
                               double t) {
  const Matrix& targets = spec.targets(mode);
  CorridorEval e;
  e.residuals = residual_norms(g_hat, targets);
  for (double r : e.residuals) e.outside.push_back(r > spec.width);
  e.buffer = buffer_loss(g_hat, targets, spec.width);
  e.consistency = consistency_loss(g_hat, targets, spec.weights);
  e.noise_weight = 1.0 - t;
  return e;
}

}  // namespace corridorflow::corridor
