#pragma once

#include <vector>

#include "corridorflow/corridor.hpp"
#include "corridorflow/flowmatch.hpp"
#include "corridorflow/model.hpp"
#include "corridorflow/tape.hpp"

namespace corridorflow::objective {

/// Batch means of each term as they entered the total.
struct LossBreakdown {
  double total = 0.0;
  double fm = 0.0;
  double delta_p = 0.0;
  double buffer = 0.0;
  double consistency = 0.0;
  double corridor = 0.0;  // mean of (1 - t)(buf + cons) over enabled terms
};

struct TotalLossNodes {
  diff::Var total;
  LossBreakdown values;
};

/// Records the combined objective
///   mean_b [ FM_b + lambda_dp L_dp,b + lambda_corr (1 - t_b)(L_buf,b + L_cons,b) ]
/// on `tape`. The corridor terms read the decoded estimate z - t v in raw
/// units, so their gradients reach the velocity net (and the conditioning
/// it consumes) but never the anchor head; the anchor head only sees
/// L_dp. Throws NumericalError naming the first non-finite term.
TotalLossNodes total_loss(model::VelocityFieldModel& m, const flow::FlowBatch& batch,
                          const std::vector<const corridor::AnchorSpec*>& specs,
                          const corridor::CorridorConfig& cfg, diff::Tape& tape);

/// Column of the vectorized chunk holding displacement component `c` of step `t`.
Eigen::Index displacement_column(Eigen::Index step, Eigen::Index c, Eigen::Index action_dim,
                                 bool extra_a);

}  // namespace corridorflow::objective
