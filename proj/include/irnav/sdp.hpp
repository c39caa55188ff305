#pragma once

#include <string>
#include <vector>

#include "irnav/lp.hpp"
#include "irnav/types.hpp"

namespace irnav {

enum class Sense { le, eq, ge };

std::string to_string(Sense sense);

/// <a, Z> (sense) rhs, with `a` symmetric.
struct MatrixConstraint {
  SymSparse a;
  Sense sense = Sense::le;
  double rhs = 0.0;
};

/// min <objective, Z>  s.t. constraints,  Z PSD.
struct ScalarSdp {
  int dim = 0;
  SymSparse objective;
  std::vector<MatrixConstraint> constraints;

  /// Throws ValidationError on shape mismatch or asymmetric data.
  void validate() const;
};

struct SdpOptions {
  double tol = 1e-8;
  int max_iterations = 200;
};

struct SdpSolveReport {
  SolveStatus status = SolveStatus::numerical_failure;
  Matrix Z;
  Vector y;
  double primal_objective = 0.0;
  double dual_objective = -kInf;
  double primal_infeasibility = kInf;
  double dual_infeasibility = kInf;
  double relative_gap = kInf;
  /// Max violation of the linear constraints at Z (absolute).
  double max_residual = kInf;
  double min_eigenvalue = 0.0;
  int iterations = 0;
  double wall_time = 0.0;
};

/// Infeasible-start primal-dual interior point method with Nesterov-Todd scaling
/// and Mehrotra predictor-corrector. Dense linear algebra; intended for dim <= ~300.
SdpSolveReport solve_sdp(const ScalarSdp& problem, const SdpOptions& options = {});

/// Number of eigenvalues above rel_tol * lambda_max (0 for the zero matrix).
int rank_of(const Matrix& Z, double rel_tol = 1e-6);

/// Max violation of the linear constraints of `problem` at Z.
double sdp_residual(const ScalarSdp& problem, const Matrix& Z);

/// Frobenius inner product <a, Z>.
double inner(const SymSparse& a, const Matrix& Z);

/// Symmetric matrix with entries (i,j) and (j,i) set to `value` (once on the diagonal).
SymSparse sym_entry(int dim, int i, int j, double value);

}  // namespace irnav
