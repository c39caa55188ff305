#include "irnav/interval.hpp"

#include <algorithm>
#include <cmath>

namespace irnav {

void IntervalMatrix::validate() const {
  if (center.rows() != offset.rows() || center.cols() != offset.cols()) {
    throw ValidationError("IntervalMatrix.offset: shape differs from center");
  }
  for (int k = 0; k < offset.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(offset, k); it; ++it) {
      if (!(it.value() >= 0.0)) throw ValidationError("IntervalMatrix.offset: negative or non-finite entry");
    }
  }
}

void IntervalVector::validate() const {
  if (center.size() != offset.size()) throw ValidationError("IntervalVector.offset: length differs from center");
  if ((offset.array() < 0.0).any() || !offset.allFinite()) {
    throw ValidationError("IntervalVector.offset: negative or non-finite entry");
  }
}

void RobustnessSpec::validate() const {
  matrix.validate();
  rhs.validate();
  if (rhs.center.size() != matrix.center.rows()) throw ValidationError("RobustnessSpec.rhs: length differs from matrix rows");
}

IntervalMatrix make_interval(const SparseMatrix& center, double relative_scale) {
  if (!(relative_scale >= 0.0)) throw ValidationError("relative_scale: must be non-negative");
  IntervalMatrix out;
  out.center = center;
  out.offset = center.cwiseAbs() * relative_scale;
  out.offset.prune(0.0);
  out.center.makeCompressed();
  out.offset.makeCompressed();
  return out;
}

Vector strong_solution_residual(const RobustnessSpec& spec, const Vector& x, double r) {
  if (x.size() != spec.cols()) throw ValidationError("x: length differs from matrix columns");
  return spec.matrix.center * x - spec.rhs.center + r * (spec.matrix.offset * x.cwiseAbs()) + r * spec.rhs.offset;
}

bool strong_solution_check(const RobustnessSpec& spec, const Vector& x, double r, double tol) {
  const Vector res = strong_solution_residual(spec, x, r);
  return res.size() == 0 || res.maxCoeff() <= tol;
}

bool LpConstraintSet::holds(const Vector& x_plus, const Vector& x_minus, double tol) const {
  if ((x_plus.array() < -tol).any() || (x_minus.array() < -tol).any()) return false;
  const Vector lhs = a_plus * x_plus + a_minus * x_minus - rhs;
  if (lhs.size() && lhs.maxCoeff() > tol) return false;
  const Vector x = x_plus - x_minus;
  for (int j = 0; j < x.size(); ++j) {
    if (lower.size() && x[j] < lower[j] - tol) return false;
    if (upper.size() && x[j] > upper[j] + tol) return false;
  }
  return true;
}

LpConstraintSet rohn_split(const RobustnessSpec& spec, double r, const Vector& lower, const Vector& upper) {
  LpConstraintSet set;
  set.a_plus = spec.matrix.center + r * spec.matrix.offset;
  set.a_minus = -(spec.matrix.center - r * spec.matrix.offset);
  set.rhs = spec.rhs.center - r * spec.rhs.offset;
  const int n = spec.cols();
  set.lower = lower.size() ? lower : Vector::Constant(n, -kInf);
  set.upper = upper.size() ? upper : Vector::Constant(n, kInf);
  return set;
}

void QcqpInstance::validate() const {
  spec.validate();
  const int n = num_vars();
  if (objectives.cols() != n) throw ValidationError("QcqpInstance.objectives: column count differs from variables");
  if (lower.size() != n || upper.size() != n) throw ValidationError("QcqpInstance.lower/upper: wrong length");
  if ((lower.array() > upper.array()).any()) throw ValidationError("QcqpInstance.lower: exceeds upper");
  if (!split_negative && (lower.array() < 0.0).any()) {
    throw ValidationError("QcqpInstance.split_negative: x- elimination requires lower >= 0");
  }
}

void evaluate_objectives(const QcqpInstance& q, QcqpPoint& p) {
  const Vector x = p.x();
  p.objective_values.resize(q.num_objectives() + 1);
  p.objective_values.head(q.num_objectives()) = q.objectives * x;
  p.objective_values[q.num_objectives()] = -p.r;
}

QcqpPoint make_point(const QcqpInstance& q, const Vector& x, double r) {
  QcqpPoint p;
  p.x_plus = x.cwiseMax(0.0);
  p.x_minus = q.split_negative ? Vector((-x).cwiseMax(0.0)) : Vector();
  p.r = r;
  evaluate_objectives(q, p);
  return p;
}

Vector MultiLp::to_x(const Vector& vars) const {
  return has_minus ? Vector(vars.head(n) - vars.tail(n)) : vars.head(n);
}

Vector MultiLp::from_x(const Vector& x) const {
  if (!has_minus) return x;
  Vector v(2 * n);
  v.head(n) = x.cwiseMax(0.0);
  v.tail(n) = (-x).cwiseMax(0.0);
  return v;
}

MultiLp lp_at_level(const QcqpInstance& q, double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("r: must lie in [0, 1]");
  const LpConstraintSet set = rohn_split(q.spec, r, q.lower, q.upper);
  const int n = q.num_vars();
  MultiLp out;
  out.n = n;
  out.has_minus = q.split_negative;
  const int nv = out.has_minus ? 2 * n : n;
  LpInstance& lp = out.lp;
  lp.cost = Vector::Zero(nv);
  if (out.has_minus) {
    std::vector<int> finite;
    for (int j = 0; j < n; ++j) {
      if (std::isfinite(q.lower[j])) finite.push_back(j);
      if (std::isfinite(q.upper[j])) finite.push_back(-j - 1);
    }
    const int m = q.num_rows();
    lp.A_ub = Matrix::Zero(m + static_cast<int>(finite.size()), nv);
    lp.b_ub = Vector(lp.A_ub.rows());
    lp.A_ub.topLeftCorner(m, n) = Matrix(set.a_plus);
    lp.A_ub.topRightCorner(m, n) = Matrix(set.a_minus);
    lp.b_ub.head(m) = set.rhs;
    int row = m;
    for (int code : finite) {
      if (code >= 0) {
        lp.A_ub(row, code) = -1.0;
        lp.A_ub(row, n + code) = 1.0;
        lp.b_ub[row] = -q.lower[code];
      } else {
        const int j = -code - 1;
        lp.A_ub(row, j) = 1.0;
        lp.A_ub(row, n + j) = -1.0;
        lp.b_ub[row] = q.upper[j];
      }
      ++row;
    }
    lp.lower = Vector::Zero(nv);
    lp.upper = Vector::Constant(nv, kInf);
    out.objectives.resize(q.num_objectives(), nv);
    out.objectives.leftCols(n) = q.objectives;
    out.objectives.rightCols(n) = -q.objectives;
  } else {
    lp.A_ub = Matrix(set.a_plus);
    lp.b_ub = set.rhs;
    lp.lower = q.lower;
    lp.upper = q.upper;
    out.objectives = q.objectives;
  }
  lp.normalize();
  return out;
}

QcqpInstance assemble_qcqp(const NominalLp& model, double scale, bool split_negative) {
  if (!split_negative && (model.lower.array() < 0.0).any()) {
    throw ValidationError("split_negative: x- elimination requires lower >= 0");
  }
  QcqpInstance q;
  q.spec.matrix = make_interval(model.constraint_matrix, scale);
  q.spec.rhs.center = model.rhs;
  q.spec.rhs.offset = Vector::Zero(model.rhs.size());
  q.objectives = model.objectives;
  q.objective_names = model.objective_names;
  q.lower = model.lower;
  q.upper = model.upper;
  q.split_negative = split_negative;
  q.row_provenance = model.row_provenance;
  q.validate();
  return q;
}

FeasibilityReport qcqp_feasible(const QcqpInstance& q, const QcqpPoint& p, double tol) {
  FeasibilityReport rep;
  const int n = q.num_vars();
  if (p.x_plus.size() != n || (p.x_minus.size() != 0 && p.x_minus.size() != n)) {
    rep.detail = "dimension mismatch";
    rep.max_residual = kInf;
    return rep;
  }
  const Vector xm = p.x_minus.size() ? p.x_minus : Vector::Zero(n);
  double worst = 0.0;
  std::string what;
  auto note = [&](double v, const std::string& label) {
    if (v > worst) {
      worst = v;
      what = label;
      rep.worst_row = -1;
    }
  };
  note(-p.r, "r below 0");
  note(p.r - 1.0, "r above 1");
  if (p.x_plus.size()) note(-p.x_plus.minCoeff(), "x_plus negative");
  if (xm.size()) note(-xm.minCoeff(), "x_minus negative");
  const Vector x = p.x_plus - xm;
  for (int j = 0; j < n; ++j) {
    note(q.lower[j] - x[j], "lower bound of x[" + std::to_string(j) + "]");
    note(x[j] - q.upper[j], "upper bound of x[" + std::to_string(j) + "]");
  }
  const Vector res = q.spec.matrix.center * x + p.r * (q.spec.matrix.offset * (p.x_plus + xm)) +
                     p.r * q.spec.rhs.offset - q.spec.rhs.center;
  for (int i = 0; i < res.size(); ++i) {
    if (res[i] > worst) {
      worst = res[i];
      what = "constraint row " + std::to_string(i);
      rep.worst_row = i;
    }
  }
  rep.max_residual = worst;
  rep.feasible = std::isfinite(worst) && worst <= tol;
  if (rep.worst_row >= 0 && rep.worst_row < static_cast<int>(q.row_provenance.size())) {
    rep.provenance = q.row_provenance[rep.worst_row];
  }
  rep.detail = what.empty() ? "all residuals non-positive" : what;
  return rep;
}

}  // namespace irnav
