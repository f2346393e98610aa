#pragma once

#include <Eigen/Dense>

namespace corridorflow {

// Row-major so a batch row is contiguous and vec() of a T x D chunk is a
// plain reinterpretation.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Vector = Eigen::VectorXd;

}  // namespace corridorflow
