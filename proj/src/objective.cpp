#include "corridorflow/objective.hpp"

#include <cmath>
#include <string>

#include "corridorflow/errors.hpp"
#include "corridorflow/synthdata.hpp"

namespace corridorflow::objective {

using diff::Var;

Eigen::Index displacement_column(Eigen::Index step, Eigen::Index c, Eigen::Index action_dim,
                                 bool extra_a) {
  return step * action_dim + (extra_a ? synth::kDeltaOffset : 0) + c;
}

namespace {

void require_finite(const Matrix& m, const char* component) {
  if (!m.allFinite())
    throw NumericalError(component, std::string("non-finite value in loss term '") + component + "'");
}

}  // namespace

TotalLossNodes total_loss(model::VelocityFieldModel& m, const flow::FlowBatch& batch,
                          const std::vector<const corridor::AnchorSpec*>& specs,
                          const corridor::CorridorConfig& cfg, diff::Tape& tape) {
  cfg.validate();
  const Eigen::Index b = batch.x.rows();
  if (b == 0) throw InvalidArgument("total_loss: empty batch");
  if (static_cast<Eigen::Index>(specs.size()) != b)
    throw InvalidArgument("total_loss: one anchor spec per batch row");
  const Eigen::Index k = m.arch().anchors;
  if (static_cast<std::size_t>(k) != cfg.anchors)
    throw InvalidArgument("total_loss: model and corridor disagree on K");
  for (const auto* s : specs)
    if (static_cast<Eigen::Index>(s->k()) != k)
      throw InvalidArgument("total_loss: anchor spec with wrong K");

  Var h;
  const flow::FmNodes fm = flow::fm_loss(m, batch, tape, &h);
  require_finite(tape.value(fm.per_row), "fm");

  // Targets per row, flattened K x 3 -> 3K.
  Matrix targets(b, 3 * k);
  for (Eigen::Index i = 0; i < b; ++i) {
    const Matrix& t = specs[static_cast<std::size_t>(i)]->targets(cfg.target_mode);
    targets.row(i) = Eigen::Map<const RowVector>(t.data(), 3 * k);
  }
  const double inv_k = 1.0 / static_cast<double>(k);

  // Anchor prediction, robust penalty on per-anchor residual norms.
  const Var pred = m.anchor_head(tape, h);
  const Var pred_norms = tape.block_norm(tape.sub(pred, tape.constant(targets)), 3);
  const Var rho = cfg.penalty == corridor::PenaltyKind::huber ? tape.huber(pred_norms, cfg.huber_beta)
                                                              : pred_norms;
  const Var dp_rows = tape.scale(tape.row_sum(rho), inv_k);
  require_finite(tape.value(dp_rows), "delta_p");

  Var total_rows = tape.add(fm.per_row, tape.scale(dp_rows, cfg.lambda_dp));

  Var buf_rows{}, cons_rows{}, corr_rows{};
  const bool corridor_on = cfg.enable_buf || cfg.enable_cons;
  if (corridor_on) {
    const Matrix z = flow::interpolate(batch.x, batch.xi, batch.t);
    const Var x_hat = tape.sub(tape.constant(z), tape.scale_rows(fm.velocity, batch.t));
    const Var raw = tape.affine_cols(x_hat, m.normalizer().std, m.normalizer().mean);

    std::vector<std::vector<Eigen::Index>> cols(static_cast<std::size_t>(b));
    Vector widths(b);
    for (Eigen::Index i = 0; i < b; ++i) {
      const auto* s = specs[static_cast<std::size_t>(i)];
      widths(i) = s->width;
      auto& row = cols[static_cast<std::size_t>(i)];
      for (std::size_t a = 0; a < s->k(); ++a)
        for (Eigen::Index c = 0; c < 3; ++c)
          row.push_back(displacement_column(static_cast<Eigen::Index>(s->indices.indices[a]), c,
                                            m.arch().action_dim, cfg.enable_extra_a));
    }
    const Var g = tape.gather_cols(raw, std::move(cols));

    Var inner{};
    bool have_inner = false;
    if (cfg.enable_buf) {
      const Var norms = tape.block_norm(tape.sub(g, tape.constant(targets)), 3);
      buf_rows = tape.scale(tape.row_sum(tape.hinge(norms, widths)), inv_k);
      require_finite(tape.value(buf_rows), "buffer");
      inner = buf_rows;
      have_inner = true;
    }
    if (cfg.enable_cons) {
      Matrix cum_targets = targets;
      for (Eigen::Index c = 3; c < cum_targets.cols(); ++c) cum_targets.col(c) += cum_targets.col(c - 3);
      const Var diff = tape.sub(tape.block_cumsum(g, 3), tape.constant(cum_targets));
      RowVector w(3 * k);
      const auto& weights = specs.front()->weights;
      for (Eigen::Index a = 0; a < k; ++a) w.segment(3 * a, 3).setConstant(weights[static_cast<std::size_t>(a)]);
      cons_rows = tape.weighted_row_sum(tape.square(diff), w);
      require_finite(tape.value(cons_rows), "consistency");
      inner = have_inner ? tape.add(inner, cons_rows) : cons_rows;
    }
    corr_rows = tape.scale_rows(inner, (1.0 - batch.t.array()).matrix());
    total_rows = tape.add(total_rows, tape.scale(corr_rows, cfg.lambda_corr));
  }

  TotalLossNodes out;
  out.total = tape.mean(total_rows);
  out.values.total = tape.scalar(out.total);
  out.values.fm = tape.scalar(fm.loss);
  out.values.delta_p = tape.value(dp_rows).mean();
  if (cfg.enable_buf) out.values.buffer = tape.value(buf_rows).mean();
  if (cfg.enable_cons) out.values.consistency = tape.value(cons_rows).mean();
  if (corridor_on) out.values.corridor = tape.value(corr_rows).mean();
  require_finite(tape.value(out.total), "total");
  return out;
}

}  // namespace corridorflow::objective
