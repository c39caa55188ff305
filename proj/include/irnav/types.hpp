#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <limits>
#include <stdexcept>
#include <string>

namespace irnav {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Row-major sparse storage; dose matrices are sliced by voxel rows.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
/// Column-major symmetric sparse storage (both triangles populated).
using SymSparse = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Malformed input files or text formats.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated model invariants; the message names the offending field.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Backend failures that cannot be expressed as a solve status.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace irnav
