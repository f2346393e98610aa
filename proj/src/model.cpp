#include "corridorflow/model.hpp"

#include <cmath>
#include <numbers>

#include "corridorflow/errors.hpp"

namespace corridorflow::model {

void ModelArch::validate() const {
  if (chunk_length < 2 || action_dim < 1 || context_dim < 1 || cond_dim < 1 || hidden < 1 ||
      anchor_hidden < 1 || anchors < 1 || layers < 1)
    throw InvalidArgument("model: all dimensions must be positive (T >= 2)");
}

Normalizer Normalizer::fit(const Matrix& x) {
  if (x.rows() == 0) throw InvalidArgument("normalizer: empty training set");
  Normalizer n;
  n.mean = x.colwise().mean();
  const Matrix centered = x.rowwise() - n.mean;
  n.std = (centered.array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt().matrix();
  for (Eigen::Index j = 0; j < n.std.size(); ++j)
    if (!(n.std(j) > 1e-8)) n.std(j) = 1.0;
  return n;
}

Normalizer Normalizer::identity(Eigen::Index d) {
  return Normalizer{RowVector::Zero(d), RowVector::Ones(d)};
}

Matrix Normalizer::normalize(const Matrix& x) const {
  return ((x.rowwise() - mean).array().rowwise() / std.array()).matrix();
}

Matrix Normalizer::denormalize(const Matrix& x) const {
  Matrix y = (x.array().rowwise() * std.array()).matrix();
  y.rowwise() += mean;
  return y;
}

VelocityFieldModel::VelocityFieldModel(ModelArch arch) : arch_(arch) {
  arch_.validate();
  encoder_ = {"encoder", {arch_.context_dim, arch_.cond_dim, arch_.cond_dim}};
  velocity_.prefix = "velocity";
  velocity_.widths.push_back(arch_.flat_dim() + kTimeFeatures + arch_.cond_dim);
  for (std::size_t l = 1; l < arch_.layers; ++l) velocity_.widths.push_back(arch_.hidden);
  velocity_.widths.push_back(arch_.flat_dim());
  anchor_head_ = {"anchor_head", {arch_.cond_dim, arch_.anchor_hidden, 3 * arch_.anchors}};
  diff::register_mlp(params_, encoder_);
  diff::register_mlp(params_, velocity_);
  diff::register_mlp(params_, anchor_head_);
  norm_ = Normalizer::identity(arch_.flat_dim());
}

void VelocityFieldModel::init(Rng& rng) {
  diff::init_mlp(params_, encoder_, rng);
  diff::init_mlp(params_, velocity_, rng);
  diff::init_mlp(params_, anchor_head_, rng);
}

Matrix time_features(const Vector& t) {
  Matrix f(t.size(), kTimeFeatures);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    f(i, 0) = t(i);
    f(i, 1) = std::sin(2.0 * std::numbers::pi * t(i));
    f(i, 2) = std::cos(2.0 * std::numbers::pi * t(i));
  }
  return f;
}

diff::Var VelocityFieldModel::encode(diff::Tape& tape, const Matrix& contexts) {
  if (contexts.cols() != arch_.context_dim)
    throw InvalidArgument("model: context has " + std::to_string(contexts.cols()) +
                          " features, expected " + std::to_string(arch_.context_dim));
  return diff::forward_mlp(tape, params_, encoder_, tape.constant(contexts));
}

diff::Var VelocityFieldModel::velocity(diff::Tape& tape, diff::Var z, const Vector& t, diff::Var h) {
  if (tape.value(z).cols() != arch_.flat_dim())
    throw InvalidArgument("model: z has " + std::to_string(tape.value(z).cols()) +
                          " entries, expected " + std::to_string(arch_.flat_dim()));
  const diff::Var parts[] = {z, tape.constant(time_features(t)), h};
  return diff::forward_mlp(tape, params_, velocity_, tape.concat_cols(parts));
}

diff::Var VelocityFieldModel::anchor_head(diff::Tape& tape, diff::Var h) {
  return diff::forward_mlp(tape, params_, anchor_head_, h);
}

Matrix VelocityFieldModel::encode_eval(const Matrix& contexts) {
  diff::Tape tape;
  return tape.value(encode(tape, contexts));
}

Matrix VelocityFieldModel::velocity_eval(const Matrix& z, const Vector& t, const Matrix& condition) {
  diff::Tape tape;
  return tape.value(velocity(tape, tape.constant(z), t, tape.constant(condition)));
}

Matrix VelocityFieldModel::anchors_eval(const Matrix& contexts) {
  diff::Tape tape;
  return tape.value(anchor_head(tape, encode(tape, contexts)));
}

}  // namespace corridorflow::model
