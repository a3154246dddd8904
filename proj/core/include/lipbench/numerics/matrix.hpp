#pragma once

#include <Eigen/Dense>

namespace lipbench {

/// Dense row-major matrix of 64-bit floats. Rows are samples wherever a
/// matrix carries a dataset or a batch.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

}  // namespace lipbench
