#include "corridorflow/flowmatch.hpp"

#include <cmath>
#include <string>

#include "corridorflow/errors.hpp"

namespace corridorflow::flow {

Matrix interpolate(const Matrix& x, const Matrix& xi, double t) {
  if (x.rows() != xi.rows() || x.cols() != xi.cols())
    throw InvalidArgument("interpolate: x and xi differ in shape");
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("interpolate: t must lie in [0, 1]");
  return (1.0 - t) * x + t * xi;
}

Matrix interpolate(const Matrix& x, const Matrix& xi, const Vector& t) {
  if (x.rows() != xi.rows() || x.cols() != xi.cols() || t.size() != x.rows())
    throw InvalidArgument("interpolate: shape mismatch");
  Matrix z(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (!(t(i) >= 0.0 && t(i) <= 1.0)) throw InvalidArgument("interpolate: t must lie in [0, 1]");
    z.row(i) = (1.0 - t(i)) * x.row(i) + t(i) * xi.row(i);
  }
  return z;
}

Matrix decode_estimate(const RowVector& z, double t, const RowVector& v, Eigen::Index chunk_length) {
  if (z.size() != v.size()) throw InvalidArgument("decode_estimate: z and v differ in length");
  if (chunk_length <= 0 || z.size() % chunk_length != 0)
    throw InvalidArgument("decode_estimate: length is not a multiple of T");
  const RowVector x_hat = z - t * v;
  return Eigen::Map<const Matrix>(x_hat.data(), chunk_length, z.size() / chunk_length);
}

namespace {

void draw_noise(Rng& rng, FlowBatch& b, const Matrix& x_norm, const Matrix& contexts) {
  const auto n = static_cast<Eigen::Index>(b.rows.size());
  b.x.resize(n, x_norm.cols());
  b.contexts.resize(n, contexts.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    b.x.row(i) = x_norm.row(static_cast<Eigen::Index>(b.rows[static_cast<std::size_t>(i)]));
    b.contexts.row(i) = contexts.row(static_cast<Eigen::Index>(b.rows[static_cast<std::size_t>(i)]));
  }
  b.t.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) b.t(i) = rng.uniform();
  b.xi.resize(n, x_norm.cols());
  for (Eigen::Index i = 0; i < b.xi.size(); ++i) b.xi.data()[i] = rng.normal();
}

}  // namespace

FlowBatch draw_flow_batch(Rng& rng, const Matrix& x_norm, const Matrix& contexts,
                          const std::vector<std::size_t>& pool, std::size_t batch_size) {
  if (pool.empty() || batch_size == 0) throw InvalidArgument("draw_flow_batch: empty batch");
  FlowBatch b;
  for (std::size_t i = 0; i < batch_size; ++i) b.rows.push_back(pool[rng.index(pool.size())]);
  draw_noise(rng, b, x_norm, contexts);
  return b;
}

FlowBatch draw_flow_noise(Rng& rng, const Matrix& x_norm, const Matrix& contexts,
                          std::vector<std::size_t> rows) {
  if (rows.empty()) throw InvalidArgument("draw_flow_noise: empty batch");
  FlowBatch b;
  b.rows = std::move(rows);
  draw_noise(rng, b, x_norm, contexts);
  return b;
}

double fm_loss_value(const Matrix& v, const FlowBatch& batch) {
  if (v.rows() != batch.x.rows() || v.cols() != batch.x.cols())
    throw InvalidArgument("fm_loss_value: velocity shape mismatch");
  if (batch.x.rows() == 0) throw InvalidArgument("fm_loss_value: empty batch");
  return (v - (batch.xi - batch.x)).rowwise().squaredNorm().mean();
}

FmNodes fm_loss(model::VelocityFieldModel& m, const FlowBatch& batch, diff::Tape& tape,
                diff::Var* condition) {
  if (batch.x.rows() == 0) throw InvalidArgument("fm_loss: empty batch");
  const Matrix z = interpolate(batch.x, batch.xi, batch.t);
  const diff::Var h = m.encode(tape, batch.contexts);
  if (condition) *condition = h;
  FmNodes out;
  out.velocity = m.velocity(tape, tape.constant(z), batch.t, h);
  const diff::Var err = tape.sub(out.velocity, tape.constant(batch.xi - batch.x));
  out.per_row = tape.row_sum(tape.square(err));
  out.loss = tape.mean(out.per_row);
  return out;
}

Matrix euler_integrate(const Matrix& xi, std::size_t steps, const VelocityFn& v) {
  if (steps == 0) throw InvalidArgument("euler: steps must be >= 1");
  const double dt = 1.0 / static_cast<double>(steps);
  Matrix z = xi;
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = 1.0 - static_cast<double>(s) * dt;
    z -= dt * v(z, t);
    if (!z.allFinite())
      throw NumericalError("sampler", "non-finite state at Euler step " + std::to_string(s));
  }
  return z;
}

std::vector<Matrix> euler_sample(model::VelocityFieldModel& m, const Matrix& contexts,
                                 std::size_t steps, Rng& rng) {
  const Eigen::Index d = m.arch().flat_dim();
  Matrix xi(contexts.rows(), d);
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi.data()[i] = rng.normal();
  const Matrix h = m.encode_eval(contexts);
  const Matrix z0 = euler_integrate(xi, steps, [&](const Matrix& z, double t) {
    return m.velocity_eval(z, Vector::Constant(z.rows(), t), h);
  });
  const Matrix raw = m.normalizer().denormalize(z0);
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(raw.rows()));
  for (Eigen::Index i = 0; i < raw.rows(); ++i)
    out.emplace_back(Eigen::Map<const Matrix>(raw.row(i).data(), m.arch().chunk_length,
                                              m.arch().action_dim));
  return out;
}

}  // namespace corridorflow::flow
