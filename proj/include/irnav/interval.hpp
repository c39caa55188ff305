#pragma once

#include <string>
#include <vector>

#include "irnav/lp.hpp"
#include "irnav/problem.hpp"
#include "irnav/types.hpp"

namespace irnav {

/// The box of matrices [center - offset, center + offset].
struct IntervalMatrix {
  SparseMatrix center;
  SparseMatrix offset;

  void validate() const;
  Matrix lower() const { return Matrix(center) - Matrix(offset); }
  Matrix upper() const { return Matrix(center) + Matrix(offset); }
};

struct IntervalVector {
  Vector center;
  Vector offset;

  void validate() const;
};

enum class Utility { linear_r };

/// Uncertainty set W(r) = [A_c - r A_d, A_c + r A_d] x [b_c - r b_d, b_c + r b_d].
struct RobustnessSpec {
  IntervalMatrix matrix;
  IntervalVector rhs;
  Utility utility = Utility::linear_r;

  void validate() const;
  int rows() const { return static_cast<int>(matrix.center.rows()); }
  int cols() const { return static_cast<int>(matrix.center.cols()); }
};

/// offset = relative_scale * |center|.
IntervalMatrix make_interval(const SparseMatrix& center, double relative_scale);

/// Componentwise A_c x - b_c + r A_d |x| + r b_d, the slack-free form of the strong-solution test.
Vector strong_solution_residual(const RobustnessSpec& spec, const Vector& x, double r);

/// True iff A x <= b holds for every (A, b) in W(r), up to `tol`.
bool strong_solution_check(const RobustnessSpec& spec, const Vector& x, double r, double tol = 1e-8);

/// a_plus x+ + a_minus x- <= rhs together with x+, x- >= 0 and lower <= x+ - x- <= upper.
struct LpConstraintSet {
  SparseMatrix a_plus;
  SparseMatrix a_minus;
  Vector rhs;
  Vector lower;
  Vector upper;

  bool holds(const Vector& x_plus, const Vector& x_minus, double tol = 1e-8) const;
};

/// (A_c + r A_d) x+ - (A_c - r A_d) x- <= b_c - r b_d.
LpConstraintSet rohn_split(const RobustnessSpec& spec, double r, const Vector& lower = {}, const Vector& upper = {});

/// The inverse-robust QCQP over (x+, x-, r) with objectives (G (x+ - x-), -r).
struct QcqpInstance {
  RobustnessSpec spec;
  Matrix objectives;
  std::vector<std::string> objective_names;
  Vector lower;
  Vector upper;
  bool split_negative = true;
  std::vector<RowProvenance> row_provenance;

  void validate() const;
  int num_vars() const { return spec.cols(); }
  int num_rows() const { return spec.rows(); }
  /// Dose objectives only; the robustness objective -r comes on top.
  int num_objectives() const { return static_cast<int>(objectives.rows()); }
};

struct QcqpPoint {
  Vector x_plus;
  Vector x_minus;
  double r = 0.0;
  Vector objective_values;

  Vector x() const { return x_minus.size() ? Vector(x_plus - x_minus) : x_plus; }
};

/// Fills objective_values = (G x, -r).
void evaluate_objectives(const QcqpInstance& q, QcqpPoint& p);
QcqpPoint make_point(const QcqpInstance& q, const Vector& x, double r);

/// The level-r LP; variables are (x+, x-) or just x+ when x- is eliminated.
struct MultiLp {
  LpInstance lp;
  Matrix objectives;
  bool has_minus = true;
  int n = 0;

  Vector to_x(const Vector& vars) const;
  Vector from_x(const Vector& x) const;
};

MultiLp lp_at_level(const QcqpInstance& q, double r);

QcqpInstance assemble_qcqp(const NominalLp& model, double scale, bool split_negative);

struct FeasibilityReport {
  bool feasible = false;
  double max_residual = 0.0;
  /// Constraint row attaining max_residual, or -1 when a bound or the r-box is the worst.
  int worst_row = -1;
  RowProvenance provenance;
  std::string detail;
};

FeasibilityReport qcqp_feasible(const QcqpInstance& q, const QcqpPoint& p, double tol = 1e-8);

}  // namespace irnav
