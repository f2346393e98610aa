#pragma once

#include <cstddef>

#include "corridorflow/mlp.hpp"
#include "corridorflow/params.hpp"
#include "corridorflow/rng.hpp"
#include "corridorflow/tape.hpp"
#include "corridorflow/tensor.hpp"

namespace corridorflow::model {

struct ModelArch {
  Eigen::Index chunk_length = 16;  // T
  Eigen::Index action_dim = 7;     // D: 7 with displacement fields, 4 without
  Eigen::Index context_dim = 13;   // C
  Eigen::Index cond_dim = 64;      // width of the conditioning vector H
  Eigen::Index hidden = 128;
  std::size_t layers = 3;          // affine layers in the velocity net
  Eigen::Index anchor_hidden = 64;
  Eigen::Index anchors = 3;        // K

  Eigen::Index flat_dim() const { return chunk_length * action_dim; }
  void validate() const;
  friend bool operator==(const ModelArch&, const ModelArch&) = default;
};

inline constexpr Eigen::Index kTimeFeatures = 3;  // t, sin 2 pi t, cos 2 pi t

/// Per-dimension z-score statistics of the vectorized clean chunk, frozen
/// after the training-set scan. Near-constant dimensions keep unit scale.
struct Normalizer {
  RowVector mean;
  RowVector std;

  static Normalizer fit(const Matrix& x);
  static Normalizer identity(Eigen::Index d);
  Matrix normalize(const Matrix& x) const;
  Matrix denormalize(const Matrix& x) const;
};

/// Context encoder -> H; velocity net v(z, t, H); anchor head H -> K x 3.
class VelocityFieldModel {
 public:
  explicit VelocityFieldModel(ModelArch arch);

  void init(Rng& rng);

  const ModelArch& arch() const noexcept { return arch_; }
  diff::ParamStore& params() noexcept { return params_; }
  const diff::ParamStore& params() const noexcept { return params_; }
  Normalizer& normalizer() noexcept { return norm_; }
  const Normalizer& normalizer() const noexcept { return norm_; }

  const diff::MlpSpec& encoder_spec() const noexcept { return encoder_; }
  const diff::MlpSpec& velocity_spec() const noexcept { return velocity_; }
  const diff::MlpSpec& anchor_spec() const noexcept { return anchor_head_; }

  diff::Var encode(diff::Tape& tape, const Matrix& contexts);
  /// z is B x d in normalized units, t has one entry per row.
  diff::Var velocity(diff::Tape& tape, diff::Var z, const Vector& t, diff::Var h);
  /// B x 3K, row-major over anchors.
  diff::Var anchor_head(diff::Tape& tape, diff::Var h);

  /// Untaped evaluation helpers.
  Matrix encode_eval(const Matrix& contexts);
  Matrix velocity_eval(const Matrix& z, const Vector& t, const Matrix& condition);
  Matrix anchors_eval(const Matrix& contexts);

 private:
  ModelArch arch_;
  diff::ParamStore params_;
  diff::MlpSpec encoder_;
  diff::MlpSpec velocity_;
  diff::MlpSpec anchor_head_;
  Normalizer norm_;
};

Matrix time_features(const Vector& t);

}  // namespace corridorflow::model
