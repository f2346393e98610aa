#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "corridorflow/errors.hpp"
#include "corridorflow/flowmatch.hpp"
#include "corridorflow/model.hpp"

using namespace corridorflow;
using namespace corridorflow::flow;

namespace {

Matrix randn(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(gen);
  return m;
}

model::ModelArch tiny_arch() {
  model::ModelArch a;
  a.chunk_length = 4;
  a.action_dim = 7;
  a.cond_dim = 8;
  a.hidden = 16;
  a.layers = 3;
  a.anchor_hidden = 8;
  a.anchors = 2;
  return a;
}

}  // namespace

TEST_CASE("interpolate") {
  std::mt19937_64 gen(1);
  const Matrix x = randn(gen, 2, 5), xi = randn(gen, 2, 5);
  CHECK(interpolate(x, xi, 0.0) == x);
  CHECK(interpolate(x, xi, 1.0) == xi);
  const Matrix mid = interpolate(Matrix::Zero(1, 4), Matrix::Constant(1, 4, 2.0), 0.5);
  CHECK(mid == Matrix::Ones(1, 4));
  Vector t(2);
  t << 0.25, 0.75;
  const Matrix z = interpolate(x, xi, t);
  CHECK((z.row(1) - (0.25 * x.row(1) + 0.75 * xi.row(1))).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(interpolate(x, randn(gen, 2, 4), 0.5), InvalidArgument);
  CHECK_THROWS_AS(interpolate(x, xi, 1.5), InvalidArgument);
}

TEST_CASE("decode_estimate") {
  std::mt19937_64 gen(2);
  for (double t : {0.0, 0.25, 0.5, 0.9, 1.0}) {
    const RowVector x = randn(gen, 1, 12), xi = randn(gen, 1, 12);
    const RowVector z = interpolate(x, xi, t);
    const Matrix xhat = decode_estimate(z, t, xi - x, 3);
    REQUIRE(xhat.rows() == 3);
    REQUIRE(xhat.cols() == 4);
    const RowVector flat = Eigen::Map<const RowVector>(xhat.data(), 12);
    CHECK((flat - x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(xhat(1, 2) == doctest::Approx(x(6)).epsilon(1e-12));
  }
  const RowVector x = randn(gen, 1, 6), xi = randn(gen, 1, 6);
  const Matrix at0 = decode_estimate(x, 0.0, randn(gen, 1, 6), 2);
  CHECK(Eigen::Map<const RowVector>(at0.data(), 6) == x);
  const Matrix at1 = decode_estimate(xi, 1.0, RowVector::Zero(6), 2);
  CHECK(Eigen::Map<const RowVector>(at1.data(), 6) == xi);
  CHECK_THROWS_AS(decode_estimate(x, 0.5, RowVector::Zero(5), 2), InvalidArgument);
  CHECK_THROWS_AS(decode_estimate(x, 0.5, RowVector::Zero(6), 4), InvalidArgument);
}

TEST_CASE("fm loss values") {
  std::mt19937_64 gen(3);
  const Matrix x_norm = randn(gen, 10, 6), ctx = randn(gen, 10, 13);
  Rng rng(4);
  const FlowBatch b = draw_flow_batch(rng, x_norm, ctx, {0, 2, 4, 6, 8}, 6);
  REQUIRE(b.rows.size() == 6);
  for (std::size_t r : b.rows) CHECK(r % 2 == 0);
  for (Eigen::Index i = 0; i < b.t.size(); ++i) {
    CHECK(b.t(i) >= 0.0);
    CHECK(b.t(i) <= 1.0);
    CHECK(b.x.row(i) == x_norm.row(static_cast<Eigen::Index>(b.rows[static_cast<std::size_t>(i)])));
  }
  CHECK(fm_loss_value(b.xi - b.x, b) == 0.0);
  double direct = 0.0;
  for (Eigen::Index i = 0; i < 6; ++i) direct += (b.xi.row(i) - b.x.row(i)).squaredNorm();
  CHECK(fm_loss_value(Matrix::Zero(6, 6), b) == doctest::Approx(direct / 6.0).epsilon(1e-14));

  FlowBatch one = b;
  one.x = b.x.topRows(1);
  one.xi = b.xi.topRows(1);
  one.t = b.t.head(1);
  FlowBatch two = one;
  two.x = Matrix(2, 6);
  two.x << one.x, one.x;
  two.xi = Matrix(2, 6);
  two.xi << one.xi, one.xi;
  two.t = Vector::Constant(2, one.t(0));
  const Matrix v1 = Matrix::Constant(1, 6, 0.3);
  const Matrix v2 = Matrix::Constant(2, 6, 0.3);
  CHECK(fm_loss_value(v1, one) == fm_loss_value(v2, two));
}

TEST_CASE("taped fm loss agrees with untaped evaluation and is permutation invariant") {
  model::VelocityFieldModel m(tiny_arch());
  Rng init(5);
  m.init(init);
  std::mt19937_64 gen(6);
  const Matrix x_norm = randn(gen, 8, 28), ctx = randn(gen, 8, 13);
  Rng rng(7);
  const FlowBatch b = draw_flow_batch(rng, x_norm, ctx, {0, 1, 2, 3, 4, 5, 6, 7}, 5);
  diff::Tape tape;
  const FmNodes fm = fm_loss(m, b, tape);
  const Matrix z = interpolate(b.x, b.xi, b.t);
  const Matrix v = m.velocity_eval(z, b.t, m.encode_eval(b.contexts));
  CHECK(tape.scalar(fm.loss) == doctest::Approx(fm_loss_value(v, b)).epsilon(1e-13));

  FlowBatch p = b;
  const int perm[] = {3, 0, 4, 2, 1};
  for (int i = 0; i < 5; ++i) {
    p.x.row(i) = b.x.row(perm[i]);
    p.xi.row(i) = b.xi.row(perm[i]);
    p.t(i) = b.t(perm[i]);
    p.contexts.row(i) = b.contexts.row(perm[i]);
  }
  diff::Tape tp;
  CHECK(tp.scalar(fm_loss(m, p, tp).loss) == doctest::Approx(tape.scalar(fm.loss)).epsilon(1e-13));
}

TEST_CASE("euler integration") {
  std::mt19937_64 gen(8);
  const Matrix xi = randn(gen, 3, 5);
  const Matrix c = randn(gen, 1, 5);
  for (std::size_t steps : {1u, 3u, 10u, 37u}) {
    const Matrix z0 = euler_integrate(xi, steps, [&](const Matrix& z, double) {
      return Matrix(c.replicate(z.rows(), 1));
    });
    CHECK((z0 - (xi - c.replicate(3, 1))).cwiseAbs().maxCoeff() < 1e-12);
  }
  std::vector<double> seen;
  const Matrix one = euler_integrate(xi, 1, [&](const Matrix& z, double t) {
    seen.push_back(t);
    return Matrix(2.0 * z);
  });
  CHECK(seen == std::vector<double>{1.0});
  const RowVector dec = Eigen::Map<const RowVector>(
      decode_estimate(xi.row(0), 1.0, 2.0 * xi.row(0), 1).data(), 5);
  CHECK((one.row(0) - dec).cwiseAbs().maxCoeff() < 1e-15);

  try {
    euler_integrate(xi, 4, [&](const Matrix& z, double t) {
      return t < 0.6 ? Matrix(Matrix::Constant(z.rows(), z.cols(), std::numeric_limits<double>::quiet_NaN()))
                     : Matrix(Matrix::Zero(z.rows(), z.cols()));
    });
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.component() == "sampler");
    CHECK(std::string(e.what()).find("step 2") != std::string::npos);
  }
  CHECK_THROWS_AS(euler_integrate(xi, 0, [](const Matrix& z, double) { return z; }), InvalidArgument);
}

TEST_CASE("euler_sample is deterministic and denormalized") {
  model::VelocityFieldModel m(tiny_arch());
  Rng init(1);
  m.init(init);
  std::mt19937_64 gen(2);
  m.normalizer() = model::Normalizer::fit(randn(gen, 30, 28) * 3.0);
  const Matrix ctx = randn(gen, 4, 13);
  Rng r1(9), r2(9);
  const auto a = euler_sample(m, ctx, 10, r1);
  const auto b = euler_sample(m, ctx, 10, r2);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a[i] == b[i]);
    CHECK(a[i].rows() == 4);
    CHECK(a[i].cols() == 7);
    CHECK(a[i].allFinite());
  }
}

TEST_CASE("normalizer") {
  std::mt19937_64 gen(3);
  Matrix x = randn(gen, 50, 6) * 4.0;
  x.col(2).setConstant(1.5);
  const auto n = model::Normalizer::fit(x);
  CHECK(n.std(2) == 1.0);
  CHECK(n.mean(2) == 1.5);
  const Matrix z = n.normalize(x);
  CHECK(z.col(0).mean() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK((n.denormalize(z) - x).cwiseAbs().maxCoeff() < 1e-10);
  const auto id = model::Normalizer::identity(6);
  CHECK(id.normalize(x) == x);
}

TEST_CASE("model shapes and time features") {
  model::VelocityFieldModel m(tiny_arch());
  Rng init(3);
  m.init(init);
  std::mt19937_64 gen(4);
  const Matrix ctx = randn(gen, 3, 13);
  const Matrix h = m.encode_eval(ctx);
  CHECK(h.cols() == 8);
  Vector t(3);
  t << 0.0, 0.25, 1.0;
  CHECK(m.velocity_eval(randn(gen, 3, 28), t, h).cols() == 28);
  CHECK(m.anchors_eval(ctx).cols() == 6);
  const Matrix tf = model::time_features(t);
  CHECK(tf(1, 0) == 0.25);
  CHECK(tf(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(tf(1, 2) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(tf(0, 2) == 1.0);
  model::ModelArch bad = tiny_arch();
  bad.anchors = 0;
  CHECK_THROWS(model::VelocityFieldModel{bad});
}
