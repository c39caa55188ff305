#include "irnav/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace irnav {

namespace {

bool usable(SolveStatus s) { return s == SolveStatus::optimal || s == SolveStatus::near_optimal; }

// Appends rows  objectives * vars <= bounds  to the level LP.
LpInstance with_objective_caps(const MultiLp& m, const Vector& caps, int skip = -1) {
  LpInstance lp = m.lp;
  const int k = static_cast<int>(m.objectives.rows());
  const int m0 = static_cast<int>(lp.A_ub.rows());
  const int extra = k - (skip >= 0 ? 1 : 0);
  lp.A_ub.conservativeResize(m0 + extra, Eigen::NoChange);
  lp.b_ub.conservativeResize(m0 + extra);
  int row = m0;
  for (int i = 0; i < k; ++i) {
    if (i == skip) continue;
    lp.A_ub.row(row) = m.objectives.row(i);
    lp.b_ub[row] = caps[i];
    ++row;
  }
  return lp;
}

Vector loosen(const Vector& f) {
  return f + (1e-12 * (1.0 + f.array().abs())).matrix();
}

QcqpPoint point_from_vars(const QcqpInstance& q, const MultiLp& m, const Vector& vars, double r) {
  QcqpPoint p;
  p.x_plus = vars.head(m.n);
  p.x_minus = m.has_minus ? Vector(vars.tail(m.n)) : Vector();
  p.r = r;
  evaluate_objectives(q, p);
  return p;
}

// Nearest point of {A_c x <= b_c, l <= x <= u} to x in the max norm.
std::optional<Vector> restore_nominal(const QcqpInstance& q, const Vector& x) {
  const int n = static_cast<int>(x.size());
  const Matrix Ac(q.spec.matrix.center);
  const int m = static_cast<int>(Ac.rows());
  LpInstance lp;
  lp.cost = Vector::Zero(n + 1);
  lp.cost[n] = 1.0;
  lp.A_ub = Matrix::Zero(m + 2 * n, n + 1);
  lp.b_ub = Vector::Zero(m + 2 * n);
  lp.A_ub.topLeftCorner(m, n) = Ac;
  lp.b_ub.head(m) = q.spec.rhs.center;
  for (int j = 0; j < n; ++j) {
    lp.A_ub(m + 2 * j, j) = 1.0;
    lp.A_ub(m + 2 * j, n) = -1.0;
    lp.b_ub[m + 2 * j] = x[j];
    lp.A_ub(m + 2 * j + 1, j) = -1.0;
    lp.A_ub(m + 2 * j + 1, n) = -1.0;
    lp.b_ub[m + 2 * j + 1] = -x[j];
  }
  lp.lower = Vector::Zero(n + 1);
  lp.upper = Vector::Constant(n + 1, kInf);
  lp.lower.head(n) = q.lower;
  lp.upper.head(n) = q.upper;
  const SolveReport rep = solve_lp(lp, LpOptions{1e-12, 10000});
  if (rep.status != SolveStatus::optimal) return std::nullopt;
  return Vector(rep.primal.head(n).cwiseMax(q.lower).cwiseMin(q.upper));
}

}  // namespace

ProjectionResult project_to_qcqp(const Vector& x_plus, const Vector& x_minus, double r_sdp, const QcqpInstance& q,
                                  const ProjectionOptions& options) {
  const int n = q.num_vars();
  if (x_plus.size() != n || (q.split_negative && x_minus.size() != n)) {
    throw ValidationError("border: length differs from variable count");
  }
  ProjectionResult res;
  res.x_plus_sdp = x_plus;
  res.x_minus_sdp = q.split_negative ? x_minus : Vector();
  res.r_sdp = r_sdp;
  std::ostringstream msg;

  Vector xp = x_plus;
  Vector xm = q.split_negative ? x_minus : Vector::Zero(n);
  double worst_clip = 0.0;
  for (int j = 0; j < n; ++j) {
    worst_clip = std::max({worst_clip, -xp[j], -xm[j]});
    xp[j] = std::max(xp[j], 0.0);
    xm[j] = std::max(xm[j], 0.0);
    const double x = xp[j] - xm[j];
    if (x > q.upper[j]) {
      worst_clip = std::max(worst_clip, x - q.upper[j]);
      const double over = x - q.upper[j];
      const double from_plus = std::min(over, xp[j]);
      xp[j] -= from_plus;
      xm[j] += over - from_plus;
    } else if (x < q.lower[j]) {
      worst_clip = std::max(worst_clip, q.lower[j] - x);
      const double under = q.lower[j] - x;
      const double from_minus = std::min(under, xm[j]);
      xm[j] -= from_minus;
      xp[j] += under - from_minus;
    }
  }
  if (worst_clip > options.clip_tol) {
    res.warning = true;
    msg << "border clipped into its sign and bound constraints by " << worst_clip << "; ";
  }

  Vector slack = q.spec.rhs.center - q.spec.matrix.center * (xp - xm);
  bool noise_only = true;
  for (int i = 0; i < slack.size(); ++i) {
    if (-slack[i] > options.restore_tol * (1.0 + std::abs(q.spec.rhs.center[i]))) noise_only = false;
  }
  if (slack.size() && slack.minCoeff() < -options.nominal_tol && noise_only) {
    if (auto moved = restore_nominal(q, xp - xm)) {
      res.restored = true;
      res.displacement = (*moved - (xp - xm)).lpNorm<Eigen::Infinity>();
      xp = moved->cwiseMax(0.0);
      xm = (-*moved).cwiseMax(0.0);
      slack = q.spec.rhs.center - q.spec.matrix.center * (xp - xm);
      msg << "border moved by " << res.displacement << " to restore nominal feasibility; ";
    }
  }
  const Vector c = q.spec.matrix.offset * (xp + xm) + q.spec.rhs.offset;
  double r = 1.0;
  const double min_slack = slack.size() ? slack.minCoeff() : 0.0;
  if (min_slack < -options.nominal_tol) {
    res.warning = true;
    r = 0.0;
    msg << "border violates the nominal constraints by " << -min_slack << "; r set to 0";
    for (int i = 0; i < slack.size(); ++i) {
      if (slack[i] == min_slack) res.binding_row = i;
    }
  } else {
    for (int i = 0; i < slack.size(); ++i) {
      if (c[i] <= 0.0) continue;
      const double ratio = std::max(slack[i], 0.0) / c[i];
      if (ratio < r) {
        r = ratio;
        res.binding_row = i;
      }
    }
  }
  res.output.x_plus = xp;
  res.output.x_minus = q.split_negative ? xm : Vector();
  res.output.r = r;
  evaluate_objectives(q, res.output);
  res.r_loss = r_sdp - r;
  res.max_residual = qcqp_feasible(q, res.output).max_residual;
  res.message = msg.str();
  return res;
}

ProjectionResult project_to_qcqp(const Decision& border, const QcqpInstance& q, const ProjectionOptions& options) {
  return project_to_qcqp(border.x_plus, border.x_minus, border.r, q, options);
}

double project_r_via_lp(const Vector& x_plus, const Vector& x_minus, const QcqpInstance& q,
                        const ConicBackend& backend, double nominal_tol) {
  const int n = q.num_vars();
  const Vector xm = x_minus.size() ? x_minus : Vector::Zero(n);
  const Vector x = x_plus - xm;
  LpInstance lp;
  lp.cost = Vector::Constant(1, -1.0);
  lp.A_ub = q.spec.matrix.offset * (x_plus + xm) + q.spec.rhs.offset;
  lp.b_ub = q.spec.rhs.center - q.spec.matrix.center * x;
  for (int i = 0; i < lp.b_ub.size(); ++i) {
    if (lp.b_ub[i] < 0.0 && lp.b_ub[i] >= -nominal_tol) lp.b_ub[i] = 0.0;
  }
  lp.lower = Vector::Zero(1);
  lp.upper = Vector::Ones(1);
  const SolveReport rep = backend.solve_lp(lp, LpOptions{1e-12, 10000});
  return usable(rep.status) ? rep.primal[0] : std::nan("");
}

std::string to_string(EfficiencyLevel level) {
  switch (level) {
    case EfficiencyLevel::efficient: return "efficient";
    case EfficiencyLevel::weakly_eps_efficient: return "weakly_eps_efficient";
    case EfficiencyLevel::unverified: return "unverified";
  }
  return "unverified";
}

namespace {

// max t s.t. x' feasible at level r and objectives x' + t * scale <= G x.
double weak_probe(const Vector& x, const QcqpInstance& q, double r, const Vector& scale, const ConicBackend& backend,
                  Vector* argmax = nullptr, const MultiLp* prebuilt = nullptr) {
  const MultiLp m = prebuilt ? *prebuilt : lp_at_level(q, r);
  const Vector f = loosen(q.objectives * x);
  LpInstance lp = with_objective_caps(m, f);
  const int nv = lp.num_vars();
  const int k = static_cast<int>(m.objectives.rows());
  const int m0 = static_cast<int>(lp.A_ub.rows()) - k;
  lp.A_ub.conservativeResize(Eigen::NoChange, nv + 1);
  lp.A_ub.col(nv).setZero();
  for (int i = 0; i < k; ++i) lp.A_ub(m0 + i, nv) = scale.size() ? scale[i] : 1.0;
  lp.cost = Vector::Zero(nv + 1);
  lp.cost[nv] = -1.0;
  lp.lower.conservativeResize(nv + 1);
  lp.upper.conservativeResize(nv + 1);
  lp.lower[nv] = -kInf;
  lp.upper[nv] = kInf;
  if (lp.A_eq.rows() > 0) {
    lp.A_eq.conservativeResize(Eigen::NoChange, nv + 1);
    lp.A_eq.col(nv).setZero();
  } else {
    lp.A_eq.resize(0, nv + 1);
  }
  const SolveReport rep = backend.solve_lp(lp);
  if (rep.status == SolveStatus::unbounded) return kInf;
  if (!usable(rep.status)) return std::nan("");
  if (argmax) *argmax = rep.primal.head(nv);
  return rep.primal[nv];
}

}  // namespace

double weak_improvement(const Vector& x, const QcqpInstance& q, double r, const ConicBackend& backend) {
  return weak_probe(x, q, r, {}, backend);
}

EfficiencyVerdict verify_efficiency(const QcqpPoint& p, const QcqpInstance& q, double eps_tol,
                                    const ConicBackend& backend) {
  EfficiencyVerdict v;
  const double r = std::clamp(p.r, 0.0, 1.0);
  const Vector x = p.x();
  std::ostringstream ev;

  const MultiLp m = lp_at_level(q, r);
  const Vector f = q.objectives * x;
  const Vector caps = loosen(f);
  const int k = static_cast<int>(f.size());
  for (int i = 0; i < k; ++i) {
    LpInstance lp = with_objective_caps(m, caps, i);
    lp.cost = m.objectives.row(i).transpose();
    const SolveReport rep = backend.solve_lp(lp);
    ++v.lp_solves;
    if (!usable(rep.status)) {
      v.evidence = "epsilon-constraint LP for objective " + std::to_string(i) + " returned " + to_string(rep.status);
      return v;
    }
    if (rep.objective < f[i] - eps_tol) {
      v.witness = point_from_vars(q, m, rep.primal, r);
      v.evidence = "objective " + std::to_string(i) + " improves from " + std::to_string(f[i]) + " to " +
                   std::to_string(rep.objective) + " without worsening the others";
      return v;
    }
    ev << "f" << i << " not improvable (" << rep.objective << " vs " << f[i] << "); ";
  }

  // A larger r for the same x dominates p outright.
  const ProjectionResult best_r = project_to_qcqp(p.x_plus, p.x_minus, r, q);
  if (!best_r.warning && best_r.output.r > r + eps_tol) {
    v.witness = best_r.output;
    v.evidence = ev.str() + "robustness can be raised to r = " + std::to_string(best_r.output.r) + " at the same x";
    return v;
  }

  // Uniqueness of x within {x' : G x' <= G x}.
  LpInstance box = with_objective_caps(m, caps);
  bool unique = true;
  for (int j = 0; j < m.n && unique; ++j) {
    Vector dir = Vector::Zero(box.num_vars());
    dir[j] = 1.0;
    if (m.has_minus) dir[m.n + j] = -1.0;
    double lo = 0.0, hi = 0.0;
    for (int sgn : {1, -1}) {
      box.cost = sgn * dir;
      const SolveReport rep = backend.solve_lp(box);
      ++v.lp_solves;
      if (!usable(rep.status)) {
        unique = false;
        break;
      }
      (sgn > 0 ? lo : hi) = sgn * rep.objective;
    }
    if (unique && hi - lo > 1e-7 * (1.0 + std::abs(x[j]))) unique = false;
  }
  if (unique) {
    v.level = EfficiencyLevel::efficient;
    v.eps = 0.0;
    v.evidence = ev.str() + "x is the unique point of its level LP with these objective values";
    return v;
  }

  Vector arg;
  const double t = weak_probe(x, q, r, {}, backend, &arg, &m);
  ++v.lp_solves;
  if (std::isnan(t)) {
    v.evidence = ev.str() + "weak-dominance probe failed";
    return v;
  }
  if (t <= eps_tol) {
    v.level = EfficiencyLevel::weakly_eps_efficient;
    v.eps = std::max(0.0, t);
    v.evidence = ev.str() + "alternative optima exist; no simultaneous improvement beyond " + std::to_string(v.eps);
    return v;
  }
  v.witness = point_from_vars(q, m, arg, r);
  v.evidence = ev.str() + "all objectives improve simultaneously by " + std::to_string(t);
  return v;
}

QcqpPoint reoptimize_at_r(const QcqpPoint& p, const QcqpInstance& q, const Vector& weights,
                          const ConicBackend& backend) {
  const double r = std::clamp(p.r, 0.0, 1.0);
  const MultiLp m = lp_at_level(q, r);
  const Vector f = q.objectives * p.x();
  LpInstance lp = with_objective_caps(m, loosen(f));
  const Vector w = weights.size() ? weights : Vector::Ones(f.size());
  lp.cost = m.objectives.transpose() * w;
  const SolveReport rep = backend.solve_lp(lp);
  if (!usable(rep.status)) return p;
  QcqpPoint out = point_from_vars(q, m, rep.primal, r);
  // Never hand back something worse than the input because of solver noise.
  if (w.dot(out.objective_values.head(f.size())) > w.dot(f)) return p;
  return out;
}

int TheoremReport::failures() const {
  int n = 0;
  for (const auto& c : checks) n += c.passed ? 0 : 1;
  return n;
}

TheoremReport theorem_suite(const QcqpInstance& q, const SdpInstance& sdp, const ParetoDb& sdp_front,
                            const std::vector<QcqpPoint>& worst_case_points, const TheoremSuiteOptions& options,
                            const ConicBackend& backend) {
  TheoremReport report;
  report.tolerance = options.tol;
  const int k = q.num_objectives();
  Vector ranges = Vector::Ones(k + 1);
  if (sdp_front.ranges.size() == k + 1) ranges = sdp_front.ranges;
  const double rhs_scale = 1.0 + (q.spec.rhs.center.size() ? q.spec.rhs.center.cwiseAbs().maxCoeff() : 0.0);
  const double feas_tol = options.tol * rhs_scale;

  std::vector<const ParetoPoint*> sdp_points;
  for (const auto& pt : sdp_front.points) {
    if (pt.origin == PointOrigin::weighted_sum) sdp_points.push_back(&pt);
  }

  for (const ParetoPoint* pt : sdp_points) {
    const double r = pt->decision.r;
    const bool at_zero = r <= options.level_tol;
    const bool at_one = r >= 1.0 - options.level_tol;
    if (!at_zero && !at_one) continue;
    TheoremCheck c;
    c.check = at_zero ? "zero_level_border" : "full_level_border";
    c.point_id = pt->id;
    QcqpPoint b;
    b.x_plus = pt->decision.x_plus;
    b.x_minus = q.split_negative ? pt->decision.x_minus : Vector();
    b.r = std::clamp(r, 0.0, 1.0);
    evaluate_objectives(q, b);
    const FeasibilityReport feas = qcqp_feasible(q, b, feas_tol);
    const double mismatch = ((b.objective_values - pt->objectives).cwiseQuotient(ranges)).cwiseAbs().maxCoeff();
    const double level = std::min(1.0, b.r + options.level_tol);
    const double t = weak_probe(b.x(), q, level, ranges.head(k), backend);
    c.measured = std::max({feas.max_residual / rhs_scale, mismatch, std::isnan(t) ? kInf : t});
    c.passed = feas.feasible && mismatch <= options.tol && !std::isnan(t) && t <= options.tol;
    std::ostringstream d;
    d << "residual " << feas.max_residual << ", objective mismatch " << mismatch << ", weak improvement " << t;
    c.detail = d.str();
    report.checks.push_back(std::move(c));
  }

  for (std::size_t i = 0; i < worst_case_points.size(); ++i) {
    const QcqpPoint& w = worst_case_points[i];
    TheoremCheck c;
    c.check = "worst_case_lift";
    c.point_id = static_cast<int>(i);
    const Matrix Z = lift_point(sdp, w);
    const double res = relaxation_residual(sdp, Z);
    Vector f = w.objective_values;
    if (f.size() != k + 1) {
      QcqpPoint tmp = w;
      evaluate_objectives(q, tmp);
      f = tmp.objective_values;
    }
    const Vector fn = f.cwiseQuotient(ranges);
    int dominated_by = -1;
    for (const ParetoPoint* pt : sdp_points) {
      if (dominates(pt->objectives.cwiseQuotient(ranges), fn, options.tol)) {
        dominated_by = pt->id;
        break;
      }
    }
    c.measured = res / rhs_scale;
    c.passed = res <= feas_tol && dominated_by < 0;
    std::ostringstream d;
    d << "lift residual " << res;
    if (dominated_by >= 0) d << ", dominated by SDP point " << dominated_by;
    c.detail = d.str();
    report.checks.push_back(std::move(c));
  }
  return report;
}

}  // namespace irnav
