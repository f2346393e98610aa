#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "corridorflow/model.hpp"
#include "corridorflow/rng.hpp"
#include "corridorflow/tape.hpp"
#include "corridorflow/tensor.hpp"

namespace corridorflow::flow {

/// (1 - t) x + t xi.
Matrix interpolate(const Matrix& x, const Matrix& xi, double t);
/// Row-wise version: row i uses t[i].
Matrix interpolate(const Matrix& x, const Matrix& xi, const Vector& t);

/// x_hat = z - t v, reshaped row-major to T x D.
Matrix decode_estimate(const RowVector& z, double t, const RowVector& v, Eigen::Index chunk_length);

/// One training draw: which records, their clean vectors (normalized), the
/// noise, and the interpolation times. Drawn in that order from one rng so
/// every objective built on it consumes the same stream.
struct FlowBatch {
  std::vector<std::size_t> rows;
  Matrix x;
  Matrix xi;
  Vector t;
  Matrix contexts;
};

FlowBatch draw_flow_batch(Rng& rng, const Matrix& x_norm, const Matrix& contexts,
                          const std::vector<std::size_t>& pool, std::size_t batch_size);

/// Fixed-record variant: uses `rows` as given and draws only t and xi.
FlowBatch draw_flow_noise(Rng& rng, const Matrix& x_norm, const Matrix& contexts,
                          std::vector<std::size_t> rows);

/// Mean over rows of ||v - (xi - x)||^2 for a precomputed velocity.
double fm_loss_value(const Matrix& v, const FlowBatch& batch);

/// Per-row squared error node (B x 1) and the mean (1 x 1).
struct FmNodes {
  diff::Var velocity;
  diff::Var per_row;
  diff::Var loss;
};

/// Records the flow-matching loss for `batch` on `tape`. The conditioning
/// node is created here; pass it out through `condition` when other heads
/// need it.
FmNodes fm_loss(model::VelocityFieldModel& m, const FlowBatch& batch, diff::Tape& tape,
                diff::Var* condition = nullptr);

/// Velocity field seen by the sampler: (z, t) -> v, batched.
using VelocityFn = std::function<Matrix(const Matrix& z, double t)>;

/// Explicit Euler from t = 1 to 0 in `steps` equal steps starting at xi.
/// Throws NumericalError naming the step when the state turns non-finite.
Matrix euler_integrate(const Matrix& xi, std::size_t steps, const VelocityFn& v);

/// Samples one chunk per context row; returns raw (denormalized) T x D chunks.
std::vector<Matrix> euler_sample(model::VelocityFieldModel& m, const Matrix& contexts,
                                 std::size_t steps, Rng& rng);

}  // namespace corridorflow::flow
