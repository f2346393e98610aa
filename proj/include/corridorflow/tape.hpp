#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "corridorflow/params.hpp"
#include "corridorflow/tensor.hpp"

namespace corridorflow::diff {

/// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Reverse-mode tape over batched row-major matrices (one sample per row).
///
/// Every primitive appends a node holding its forward value and a closure
/// that pushes the node's gradient to its inputs. backward() walks the
/// nodes in exact reverse recording order, once; a consumed tape throws
/// StateError on reuse. Parameter leaves accumulate into their ParamStore.
///
/// Non-smooth points use the zero subgradient: hinge at margin 0, norm of
/// the zero vector, and |x| at 0 inside huber.
class Tape {
 public:
  Var constant(Matrix value);
  Var param(ParamStore& store, std::size_t index);

  /// x W^T + b with x: B x in, W: out x in, b: 1 x out.
  Var affine(Var x, Var w, Var b);
  Var tanh(Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var a, double c);
  /// Row i multiplied by s[i].
  Var scale_rows(Var a, Vector s);
  /// a * scale + shift, both broadcast over rows.
  Var affine_cols(Var a, RowVector scale, RowVector shift);
  Var concat_cols(std::span<const Var> parts);
  /// Output row i = a(i, cols[i][0..J)); every row selects the same count J.
  Var gather_cols(Var a, std::vector<std::vector<Eigen::Index>> cols);
  /// Running sum over consecutive blocks of `width` columns.
  Var block_cumsum(Var a, Eigen::Index width);
  /// Euclidean norm of each block of `width` columns: B x (K*width) -> B x K.
  Var block_norm(Var a, Eigen::Index width);
  /// max(a(i,j) - offset[i], 0).
  Var hinge(Var a, Vector offset);
  /// Smooth-l1: 0.5 a^2 / beta for |a| <= beta, |a| - beta/2 otherwise.
  Var huber(Var a, double beta);
  Var square(Var a);
  /// B x 1 column of row sums weighted by w (1 x cols).
  Var weighted_row_sum(Var a, RowVector w);
  Var row_sum(Var a);
  /// Mean over all entries -> 1 x 1.
  Var mean(Var a);

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  double scalar(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }

  /// Seeds d(out) = 1 for a 1 x 1 output.
  void backward(Var out);
  /// Seeds d(out) = seed (same shape as out).
  void backward(Var out, const Matrix& seed);

  /// Per hinge entry: 1 when the margin is positive, else 0; per norm entry:
  /// 1 when the norm is zero. Differences between two evaluations flag
  /// coordinates whose finite-difference stencil crosses a kink.
  std::vector<std::uint8_t> kink_signature() const;

 private:
  struct Node {
    Matrix value;
    Matrix grad;  // empty until some consumer contributes
    std::function<void(Tape&, const Matrix&)> push;
  };

  Var record(Matrix value, std::function<void(Tape&, const Matrix&)> push = {});
  void accumulate(Var v, const Matrix& g);
  Node& node(Var v) { return nodes_.at(v.id); }

  std::vector<Node> nodes_;
  std::vector<std::uint8_t> kinks_;
  bool consumed_ = false;
};

}  // namespace corridorflow::diff
