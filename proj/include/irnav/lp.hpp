#pragma once

#include <string>

#include "irnav/types.hpp"

namespace irnav {

enum class SolveStatus { optimal, near_optimal, infeasible, unbounded, numerical_failure };

std::string to_string(SolveStatus status);
SolveStatus solve_status_from_string(const std::string& s);

/// min c^T x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lower <= x <= upper (bounds may be infinite).
struct LpInstance {
  Vector cost;
  Matrix A_ub;
  Vector b_ub;
  Matrix A_eq;
  Vector b_eq;
  Vector lower;
  Vector upper;

  int num_vars() const { return static_cast<int>(cost.size()); }
  /// Resizes the empty parts consistently; throws ValidationError on mismatches or non-finite data.
  void normalize();
};

struct SolveReport {
  SolveStatus status = SolveStatus::numerical_failure;
  Vector primal;
  double objective = 0.0;
  /// Dual objective of the returned certificate (a lower bound at optimal status).
  double dual_bound = -kInf;
  double duality_gap = kInf;
  /// Multipliers of the A_ub rows (<= 0 in the minimization convention) and A_eq rows.
  Vector dual_ub;
  Vector dual_eq;
  double max_residual = kInf;
  int iterations = 0;
  double wall_time = 0.0;
};

struct LpOptions {
  double tol = 1e-8;
  int max_pivots = 10000;
};

/// Dense bounded two-phase primal simplex with a dual certificate.
SolveReport solve_lp(const LpInstance& lp, const LpOptions& options = {});

/// Max violation of rows and bounds at `x` (0 when feasible).
double lp_residual(const LpInstance& lp, const Vector& x);

}  // namespace irnav
