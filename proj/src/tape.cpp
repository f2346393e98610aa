#include "corridorflow/tape.hpp"

#include <cmath>
#include <string>

#include "corridorflow/errors.hpp"

namespace corridorflow::diff {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) +
                          "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                          "x" + std::to_string(b.cols()) + ")");
}

}  // namespace

Var Tape::record(Matrix value, std::function<void(Tape&, const Matrix&)> push) {
  if (consumed_) throw StateError("tape already consumed by backward()");
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(push)});
  return Var{nodes_.size() - 1};
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = node(v);
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

double Tape::scalar(Var v) const {
  const Matrix& m = value(v);
  if (m.rows() != 1 || m.cols() != 1) throw InvalidArgument("scalar(): node is not 1x1");
  return m(0, 0);
}

Var Tape::constant(Matrix value) { return record(std::move(value)); }

Var Tape::param(ParamStore& store, std::size_t index) {
  ParamStore* s = &store;
  return record(store[index].value, [s, index](Tape&, const Matrix& g) { (*s)[index].grad += g; });
}

Var Tape::affine(Var x, Var w, Var b) {
  const Matrix& xv = value(x);
  const Matrix& wv = value(w);
  const Matrix& bv = value(b);
  if (xv.cols() != wv.cols() || bv.rows() != 1 || bv.cols() != wv.rows())
    throw InvalidArgument("affine: input width " + std::to_string(xv.cols()) +
                          " does not match layer " + std::to_string(wv.cols()) + "->" +
                          std::to_string(wv.rows()));
  Matrix y = xv * wv.transpose();
  y.rowwise() += bv.row(0);
  return record(std::move(y), [x, w, b](Tape& t, const Matrix& g) {
    t.accumulate(x, g * t.value(w));
    t.accumulate(w, g.transpose() * t.value(x));
    t.accumulate(b, g.colwise().sum());
  });
}

Var Tape::tanh(Var x) {
  Matrix y = value(x).array().tanh().matrix();
  const std::size_t self = nodes_.size();
  return record(std::move(y), [x, self](Tape& t, const Matrix& g) {
    const Matrix& yv = t.nodes_[self].value;
    t.accumulate(x, (g.array() * (1.0 - yv.array().square())).matrix());
  });
}

Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  return record(value(a) + value(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  return record(value(a) - value(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var Tape::scale(Var a, double c) {
  return record(value(a) * c, [a, c](Tape& t, const Matrix& g) { t.accumulate(a, g * c); });
}

Var Tape::scale_rows(Var a, Vector s) {
  if (s.size() != value(a).rows()) throw InvalidArgument("scale_rows: one factor per row");
  Matrix y = s.asDiagonal() * value(a);
  return record(std::move(y), [a, s = std::move(s)](Tape& t, const Matrix& g) {
    t.accumulate(a, s.asDiagonal() * g);
  });
}

Var Tape::affine_cols(Var a, RowVector scale, RowVector shift) {
  const Matrix& av = value(a);
  if (scale.size() != av.cols() || shift.size() != av.cols())
    throw InvalidArgument("affine_cols: one scale/shift per column");
  Matrix y = (av.array().rowwise() * scale.array()).matrix();
  y.rowwise() += shift;
  return record(std::move(y), [a, scale = std::move(scale)](Tape& t, const Matrix& g) {
    t.accumulate(a, (g.array().rowwise() * scale.array()).matrix());
  });
}

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidArgument("concat_cols: no inputs");
  const Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw InvalidArgument("concat_cols: row count mismatch");
    cols += value(p).cols();
  }
  Matrix y(rows, cols);
  std::vector<std::pair<Var, Eigen::Index>> layout;
  Eigen::Index at = 0;
  for (Var p : parts) {
    const Matrix& pv = value(p);
    y.middleCols(at, pv.cols()) = pv;
    layout.emplace_back(p, at);
    at += pv.cols();
  }
  return record(std::move(y), [layout = std::move(layout)](Tape& t, const Matrix& g) {
    for (const auto& [p, off] : layout) t.accumulate(p, g.middleCols(off, t.value(p).cols()));
  });
}

Var Tape::gather_cols(Var a, std::vector<std::vector<Eigen::Index>> cols) {
  const Matrix& av = value(a);
  if (static_cast<Eigen::Index>(cols.size()) != av.rows())
    throw InvalidArgument("gather_cols: one index list per row");
  const auto width = static_cast<Eigen::Index>(cols.empty() ? 0 : cols[0].size());
  Matrix y(av.rows(), width);
  for (Eigen::Index i = 0; i < av.rows(); ++i) {
    const auto& row = cols[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != width)
      throw InvalidArgument("gather_cols: ragged index lists");
    for (Eigen::Index j = 0; j < width; ++j) {
      const Eigen::Index c = row[static_cast<std::size_t>(j)];
      if (c < 0 || c >= av.cols()) throw InvalidArgument("gather_cols: column out of range");
      y(i, j) = av(i, c);
    }
  }
  const Eigen::Index src_cols = av.cols();
  return record(std::move(y), [a, cols = std::move(cols), src_cols](Tape& t, const Matrix& g) {
    Matrix da = Matrix::Zero(g.rows(), src_cols);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      for (Eigen::Index j = 0; j < g.cols(); ++j)
        da(i, cols[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) += g(i, j);
    t.accumulate(a, da);
  });
}

Var Tape::block_cumsum(Var a, Eigen::Index width) {
  const Matrix& av = value(a);
  if (width <= 0 || av.cols() % width != 0)
    throw InvalidArgument("block_cumsum: width must divide column count");
  Matrix y = av;
  for (Eigen::Index c = width; c < y.cols(); ++c) y.col(c) += y.col(c - width);
  return record(std::move(y), [a, width](Tape& t, const Matrix& g) {
    Matrix da = g;
    for (Eigen::Index c = da.cols() - width - 1; c >= 0; --c) da.col(c) += da.col(c + width);
    t.accumulate(a, da);
  });
}

Var Tape::block_norm(Var a, Eigen::Index width) {
  const Matrix& av = value(a);
  if (width <= 0 || av.cols() % width != 0)
    throw InvalidArgument("block_norm: width must divide column count");
  const Eigen::Index blocks = av.cols() / width;
  Matrix y(av.rows(), blocks);
  for (Eigen::Index i = 0; i < av.rows(); ++i)
    for (Eigen::Index k = 0; k < blocks; ++k) {
      y(i, k) = av.row(i).segment(k * width, width).norm();
      kinks_.push_back(y(i, k) == 0.0 ? 1 : 0);
    }
  const std::size_t self = nodes_.size();
  return record(std::move(y), [a, width, blocks, self](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(a);
    const Matrix& yv = t.nodes_[self].value;
    Matrix da = Matrix::Zero(av.rows(), av.cols());
    for (Eigen::Index i = 0; i < av.rows(); ++i)
      for (Eigen::Index k = 0; k < blocks; ++k)
        if (yv(i, k) > 0.0)
          da.row(i).segment(k * width, width) =
              av.row(i).segment(k * width, width) * (g(i, k) / yv(i, k));
    t.accumulate(a, da);
  });
}

Var Tape::hinge(Var a, Vector offset) {
  const Matrix& av = value(a);
  if (offset.size() != av.rows()) throw InvalidArgument("hinge: one offset per row");
  Matrix y(av.rows(), av.cols());
  for (Eigen::Index i = 0; i < av.rows(); ++i)
    for (Eigen::Index j = 0; j < av.cols(); ++j) {
      const double margin = av(i, j) - offset(i);
      y(i, j) = margin > 0.0 ? margin : 0.0;
      kinks_.push_back(margin > 0.0 ? 1 : 0);
    }
  const std::size_t self = nodes_.size();
  return record(std::move(y), [a, self](Tape& t, const Matrix& g) {
    const Matrix& yv = t.nodes_[self].value;
    t.accumulate(a, (g.array() * (yv.array() > 0.0).cast<double>()).matrix());
  });
}

Var Tape::huber(Var a, double beta) {
  if (!(beta > 0.0)) throw InvalidArgument("huber: beta must be positive");
  const Matrix& av = value(a);
  Matrix y = av.unaryExpr([beta](double x) {
    const double r = std::abs(x);
    return r <= beta ? 0.5 * x * x / beta : r - 0.5 * beta;
  });
  return record(std::move(y), [a, beta](Tape& t, const Matrix& g) {
    Matrix d = t.value(a).unaryExpr([beta](double x) {
      if (std::abs(x) <= beta) return x / beta;
      return x > 0.0 ? 1.0 : -1.0;
    });
    t.accumulate(a, (g.array() * d.array()).matrix());
  });
}

Var Tape::square(Var a) {
  Matrix y = value(a).array().square().matrix();
  return record(std::move(y), [a](Tape& t, const Matrix& g) {
    t.accumulate(a, (2.0 * g.array() * t.value(a).array()).matrix());
  });
}

Var Tape::weighted_row_sum(Var a, RowVector w) {
  const Matrix& av = value(a);
  if (w.size() != av.cols()) throw InvalidArgument("weighted_row_sum: one weight per column");
  Matrix y = av * w.transpose();
  return record(std::move(y), [a, w = std::move(w)](Tape& t, const Matrix& g) {
    t.accumulate(a, g.col(0) * w);
  });
}

Var Tape::row_sum(Var a) {
  return weighted_row_sum(a, RowVector::Ones(value(a).cols()));
}

Var Tape::mean(Var a) {
  const Matrix& av = value(a);
  const double n = static_cast<double>(av.size());
  Matrix y(1, 1);
  y(0, 0) = av.sum() / n;
  const Eigen::Index rows = av.rows();
  const Eigen::Index cols = av.cols();
  return record(std::move(y), [a, n, rows, cols](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(rows, cols, g(0, 0) / n));
  });
}

void Tape::backward(Var out) {
  backward(out, Matrix::Ones(1, 1));
}

void Tape::backward(Var out, const Matrix& seed) {
  if (consumed_) throw StateError("tape already consumed by backward()");
  require_same_shape(value(out), seed, "backward seed");
  consumed_ = true;
  accumulate(out, seed);
  for (std::size_t i = out.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0 || !n.push) continue;
    n.push(*this, n.grad);
  }
}

std::vector<std::uint8_t> Tape::kink_signature() const { return kinks_; }

}  // namespace corridorflow::diff
