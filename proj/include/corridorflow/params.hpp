#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "corridorflow/tensor.hpp"

namespace corridorflow::diff {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;  // same shape as value
};

/// Named parameter tensors, each with exactly one gradient buffer. The set
/// of parameters is fixed once a model finishes construction.
class ParamStore {
 public:
  /// Registers a zero-initialized rows x cols parameter; returns its slot.
  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols);

  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  std::size_t index_of(const std::string& name) const;

  std::vector<Parameter>::iterator begin() { return params_.begin(); }
  std::vector<Parameter>::iterator end() { return params_.end(); }
  std::vector<Parameter>::const_iterator begin() const { return params_.begin(); }
  std::vector<Parameter>::const_iterator end() const { return params_.end(); }

  /// Total scalar count across parameters.
  std::size_t numel() const;

  /// Flat coordinate addressing used by the gradient checker.
  double& coord(std::size_t flat);
  double grad_coord(std::size_t flat) const;
  std::string coord_name(std::size_t flat) const;

  void zero_grad();

 private:
  std::vector<Parameter> params_;
};

}  // namespace corridorflow::diff
