#include "irnav/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace irnav {

std::string to_string(PointOrigin origin) {
  switch (origin) {
    case PointOrigin::weighted_sum: return "weighted_sum";
    case PointOrigin::epsilon_constraint: return "epsilon_constraint";
    case PointOrigin::projection: return "projection";
    case PointOrigin::reoptimized: return "reoptimized";
    case PointOrigin::worst_case: return "worst_case";
  }
  return "unknown";
}

PointOrigin point_origin_from_string(const std::string& s) {
  for (auto o : {PointOrigin::weighted_sum, PointOrigin::epsilon_constraint, PointOrigin::projection,
                 PointOrigin::reoptimized, PointOrigin::worst_case}) {
    if (to_string(o) == s) return o;
  }
  throw ParseError("unknown point origin '" + s + "'");
}

const ParetoPoint* ParetoDb::find(int id) const {
  for (const auto& p : points) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

int ParetoDb::next_id() const {
  int id = 0;
  for (const auto& p : points) id = std::max(id, p.id + 1);
  return id;
}

namespace {

bool usable(SolveStatus s) { return s == SolveStatus::optimal || s == SolveStatus::near_optimal; }

}  // namespace

LpProblem::LpProblem(LpInstance lp, Matrix objectives, std::vector<std::string> names,
                     std::shared_ptr<const ConicBackend> backend, LpOptions options)
    : lp_(std::move(lp)), objectives_(std::move(objectives)), names_(std::move(names)),
      backend_(std::move(backend)), options_(options) {
  if (objectives_.size() > 0) {
    lp_.cost = Vector::Zero(objectives_.cols());
    lp_.normalize();
  }
  while (names_.size() < static_cast<std::size_t>(objectives_.rows())) names_.push_back("f" + std::to_string(names_.size()));
}

Decision LpProblem::decision_of(const Vector& vars) const {
  Decision d;
  d.x_plus = vars;
  return d;
}

ScalarOutcome LpProblem::solve(const Vector& w, const std::vector<ObjectiveCut>& cuts) const {
  LpInstance lp = lp_;
  lp.cost = objectives_.transpose() * w;
  if (!cuts.empty()) {
    const int m0 = static_cast<int>(lp.A_ub.rows());
    lp.A_ub.conservativeResize(m0 + static_cast<int>(cuts.size()), Eigen::NoChange);
    lp.b_ub.conservativeResize(m0 + static_cast<int>(cuts.size()));
    for (std::size_t c = 0; c < cuts.size(); ++c) {
      lp.A_ub.row(m0 + static_cast<int>(c)) = cuts[c].coeffs.transpose() * objectives_;
      lp.b_ub[m0 + static_cast<int>(c)] = cuts[c].bound;
    }
  }
  const SolveReport rep = backend_->solve_lp(lp, options_);
  ScalarOutcome out;
  out.status = rep.status;
  if (!usable(rep.status)) return out;
  out.objectives = objectives_ * rep.primal;
  out.lower_bound = std::isfinite(rep.dual_bound) ? rep.dual_bound : rep.objective;
  out.decision = decision_of(rep.primal);
  return out;
}

LevelLpProblem::LevelLpProblem(const QcqpInstance& q, double r, std::shared_ptr<const ConicBackend> backend,
                               LpOptions options)
    : LpProblem(LpInstance{}, Matrix{}, q.objective_names, std::move(backend), options),
      multi_(lp_at_level(q, r)),
      r_(r) {
  lp_ = multi_.lp;
  objectives_ = multi_.objectives;
  lp_.cost = Vector::Zero(objectives_.cols());
  while (names_.size() < static_cast<std::size_t>(objectives_.rows())) names_.push_back("f" + std::to_string(names_.size()));
}

Decision LevelLpProblem::decision_of(const Vector& vars) const {
  Decision d;
  d.x_plus = vars.head(multi_.n);
  if (multi_.has_minus) d.x_minus = vars.tail(multi_.n);
  d.r = r_;
  return d;
}

SdpRelaxationProblem::SdpRelaxationProblem(SdpInstance sdp, std::shared_ptr<const ConicBackend> backend,
                                           SdpOptions options, double rank_tol, double full_level_tol)
    : sdp_(std::move(sdp)),
      backend_(std::move(backend)),
      options_(options),
      rank_tol_(rank_tol),
      full_level_tol_(full_level_tol) {}

namespace {

struct FacedSolve {
  SdpSolveReport report;
  int solves = 1;
};

// Solves sc; a solution with r near 1 is replaced by the r = 1 face solution when its objective
// is within the cut tolerance of the unrestricted one. With lexicographic cuts the face solution
// only has to satisfy them: the cut slack itself is what lets r drift below 1.
FacedSolve solve_with_face(const SdpInstance& sdp, const ScalarSdp& sc, const ConicBackend& backend,
                           const SdpOptions& options, double full_level_tol, double cut_tol_rel, bool has_cuts) {
  FacedSolve out;
  out.report = backend.solve_sdp(sc, options);
  if (!usable(out.report.status) || full_level_tol <= 0.0) return out;
  const int r = sdp.layout.r();
  const double z00 = out.report.Z(0, 0);
  if (!(z00 > 0.0) || out.report.Z(0, r) / z00 < 1.0 - full_level_tol) return out;
  const auto face = restrict_to_full_level(sc, sdp.layout);
  if (!face) return out;
  const SdpSolveReport rep = backend.solve_sdp(*face, options);
  ++out.solves;
  if (!usable(rep.status)) return out;
  const Matrix Z = expand_full_level(rep.Z, sdp.layout);
  const double v_face = inner(sc.objective, Z);
  const double v = inner(sc.objective, out.report.Z);
  if (!has_cuts && v_face > v + cut_tol_rel * (1.0 + std::abs(v))) return out;
  const double dual = out.report.dual_objective;
  out.report = rep;
  out.report.Z = Z;
  out.report.primal_objective = v_face;
  out.report.dual_objective = dual;
  return out;
}

}  // namespace

SdpSolution SdpRelaxationProblem::solve_full(const Vector& w) const {
  const FacedSolve fs = solve_with_face(sdp_, scalarize_sdp(sdp_, w), *backend_, options_, full_level_tol_, 1e-7, false);
  const SdpSolveReport& rep = fs.report;
  SdpSolution sol;
  sol.status = rep.status;
  sol.Z = rep.Z;
  sol.primal_objective = rep.primal_objective;
  sol.dual_objective = rep.dual_objective;
  sol.iterations = rep.iterations;
  if (!usable(rep.status)) return sol;
  sol.objective_values.resize(sdp_.num_objectives());
  for (int i = 0; i < sdp_.num_objectives(); ++i) sol.objective_values[i] = inner(sdp_.objective_blocks[i], rep.Z);
  sol.border = extract_border(sdp_, rep.Z, rank_tol_);
  return sol;
}

ScalarOutcome SdpRelaxationProblem::solve(const Vector& w, const std::vector<ObjectiveCut>& cuts) const {
  ScalarSdp sc = scalarize_sdp(sdp_, w);
  for (const auto& cut : cuts) {
    SymSparse block(sdp_.dim, sdp_.dim);
    for (int i = 0; i < cut.coeffs.size(); ++i) {
      if (cut.coeffs[i] != 0.0) block += cut.coeffs[i] * sdp_.objective_blocks[i];
    }
    sc.constraints.push_back({block, Sense::le, cut.bound});
  }
  const FacedSolve fs = solve_with_face(sdp_, sc, *backend_, options_, full_level_tol_, 1e-7, !cuts.empty());
  const SdpSolveReport& rep = fs.report;
  ScalarOutcome out;
  out.solves = fs.solves;
  out.status = rep.status;
  if (!usable(rep.status)) return out;
  out.objectives.resize(sdp_.num_objectives());
  for (int i = 0; i < sdp_.num_objectives(); ++i) out.objectives[i] = inner(sdp_.objective_blocks[i], rep.Z);
  out.lower_bound = rep.dual_objective;
  try {
    const Border b = extract_border(sdp_, rep.Z, rank_tol_);
    out.decision.x_plus = b.x_plus;
    out.decision.x_minus = b.x_minus;
    out.decision.r = b.r;
    out.decision.rank = b.rank_estimate;
  } catch (const ValidationError&) {
    out.status = SolveStatus::numerical_failure;
  }
  return out;
}

ScalarizationResult weighted_sum_solve(const MultiObjectiveProblem& problem, const Vector& w,
                                       bool lexicographic_cleanup) {
  if (w.size() != problem.num_objectives()) throw ValidationError("weights: length differs from objective count");
  if ((w.array() < 0.0).any() || !w.allFinite() || w.maxCoeff() <= 0.0) {
    throw ValidationError("weights: must be non-negative, finite and not all zero");
  }
  ScalarizationResult res;
  ScalarOutcome out = problem.solve(w, {});
  res.solves = out.solves;
  res.status = out.status;
  if (!usable(out.status)) return res;
  res.lower_bound = out.lower_bound;
  if (lexicographic_cleanup && (w.array() == 0.0).any()) {
    const double v = w.dot(out.objectives);
    const Vector w2 = (w.array() == 0.0).cast<double>();
    ScalarOutcome second = problem.solve(w2, {{w, v + problem.cut_tolerance(v)}});
    res.solves += second.solves;
    if (usable(second.status)) out = std::move(second);
  }
  res.point.objectives = out.objectives;
  res.point.decision = out.decision;
  res.point.origin = PointOrigin::weighted_sum;
  res.point.weights = w;
  return res;
}

ScalarizationResult epsilon_constraint_solve(const MultiObjectiveProblem& problem, int j, const Vector& eps) {
  const int p = problem.num_objectives();
  if (j < 0 || j >= p) throw ValidationError("j: objective index out of range");
  if (eps.size() != p) throw ValidationError("eps: length differs from objective count");
  std::vector<ObjectiveCut> cuts;
  for (int i = 0; i < p; ++i) {
    if (i == j) continue;
    if (!std::isfinite(eps[i])) throw ValidationError("eps[" + std::to_string(i) + "]: must be finite");
    cuts.push_back({Vector::Unit(p, i), eps[i]});
  }
  ScalarizationResult res;
  const ScalarOutcome out = problem.solve(Vector::Unit(p, j), cuts);
  res.solves = out.solves;
  res.status = out.status;
  if (!usable(out.status)) return res;
  res.lower_bound = out.lower_bound;
  res.point.objectives = out.objectives;
  res.point.decision = out.decision;
  res.point.origin = PointOrigin::epsilon_constraint;
  res.point.bounds = eps;
  return res;
}

bool dominates(const Vector& a, const Vector& b, double tol) {
  bool strict = false;
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] > b[i] + tol) return false;
    if (a[i] < b[i] - tol) strict = true;
  }
  return strict;
}

std::vector<ParetoPoint> dominance_filter(const std::vector<ParetoPoint>& points, double tol) {
  std::vector<ParetoPoint> kept;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool drop = false;
    for (std::size_t j = 0; j < points.size() && !drop; ++j) {
      if (j != i && dominates(points[j].objectives, points[i].objectives, tol)) drop = true;
    }
    for (const auto& k : kept) {
      if (drop) break;
      if ((k.objectives - points[i].objectives).cwiseAbs().maxCoeff() <= tol) drop = true;
    }
    if (!drop) kept.push_back(points[i]);
  }
  return kept;
}

namespace {

// Outer approximation {y : a_k . y >= b_k} in normalized objective space, kept as a vertex list.
class OuterPolytope {
 public:
  OuterPolytope(int p, double lo, double hi) : p_(p) {
    for (int i = 0; i < p; ++i) {
      a_.push_back(Vector::Unit(p, i));
      b_.push_back(lo);
      a_.push_back(-Vector::Unit(p, i));
      b_.push_back(-hi);
    }
    for (int mask = 0; mask < (1 << p); ++mask) {
      Vertex v;
      v.y.resize(p);
      for (int i = 0; i < p; ++i) {
        const bool up = (mask >> i) & 1;
        v.y[i] = up ? hi : lo;
        v.tight.push_back(2 * i + (up ? 1 : 0));
      }
      verts_.push_back(std::move(v));
    }
  }

  void add(Vector a, double b) {
    const double nrm = a.norm();
    if (!(nrm > 0.0) || !std::isfinite(b)) return;
    a /= nrm;
    b /= nrm;
    const int id = static_cast<int>(a_.size());
    a_.push_back(a);
    b_.push_back(b);
    std::vector<Vertex> kept, removed;
    for (auto& v : verts_) {
      const double s = a.dot(v.y) - b;
      if (s < -kTol) {
        removed.push_back(std::move(v));
      } else {
        if (s <= kTol) v.tight.push_back(id);
        kept.push_back(std::move(v));
      }
    }
    if (removed.empty()) {
      verts_ = std::move(kept);
      return;
    }
    std::vector<int> cand;
    for (const auto& v : removed) cand.insert(cand.end(), v.tight.begin(), v.tight.end());
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    std::vector<int> pick(p_ - 1);
    auto try_combo = [&]() {
      Matrix M(p_, p_);
      Vector rhs(p_);
      M.row(0) = a.transpose();
      rhs[0] = b;
      for (int k = 0; k < p_ - 1; ++k) {
        M.row(k + 1) = a_[pick[k]].transpose();
        rhs[k + 1] = b_[pick[k]];
      }
      Eigen::FullPivLU<Matrix> lu(M);
      if (lu.rank() < p_) return;
      const Vector y = lu.solve(rhs);
      if (!y.allFinite()) return;
      Vertex v;
      v.y = y;
      for (std::size_t k = 0; k < a_.size(); ++k) {
        const double s = a_[k].dot(y) - b_[k];
        if (s < -kTol) return;
        if (s <= kTol) v.tight.push_back(static_cast<int>(k));
      }
      for (const auto& u : kept) {
        if ((u.y - y).cwiseAbs().maxCoeff() <= kTol) return;
      }
      kept.push_back(std::move(v));
    };
    const int nc = static_cast<int>(cand.size());
    if (p_ == 2) {
      for (int i = 0; i < nc; ++i) {
        pick[0] = cand[i];
        try_combo();
      }
    } else {
      for (int i = 0; i < nc; ++i) {
        for (int j = i + 1; j < nc; ++j) {
          pick[0] = cand[i];
          pick[1] = cand[j];
          try_combo();
        }
      }
    }
    verts_ = std::move(kept);
  }

  std::vector<Vector> vertices() const {
    std::vector<Vector> out;
    for (const auto& v : verts_) out.push_back(v.y);
    return out;
  }

 private:
  struct Vertex {
    Vector y;
    std::vector<int> tight;
  };
  static constexpr double kTol = 1e-9;
  int p_;
  std::vector<Vector> a_;
  std::vector<double> b_;
  std::vector<Vertex> verts_;
};

// min t s.t. conv(points) + R^p_+ contains v + t 1; returns t and the supporting normal at the optimum.
std::pair<double, Vector> inner_distance(const std::vector<Vector>& pts, const Vector& v) {
  const int K = static_cast<int>(pts.size());
  const int p = static_cast<int>(v.size());
  LpInstance lp;
  lp.cost = Vector::Zero(K + 1);
  lp.cost[K] = 1.0;
  lp.A_ub = Matrix::Zero(p, K + 1);
  for (int k = 0; k < K; ++k) lp.A_ub.col(k) = pts[k];
  lp.A_ub.col(K).setConstant(-1.0);
  lp.b_ub = v;
  lp.A_eq = Matrix::Zero(1, K + 1);
  lp.A_eq.row(0).head(K).setOnes();
  lp.b_eq = Vector::Ones(1);
  lp.lower = Vector::Zero(K + 1);
  lp.lower[K] = -kInf;
  lp.upper = Vector::Constant(K + 1, kInf);
  const SolveReport rep = solve_lp(lp);
  if (!usable(rep.status)) throw SolverError("sandwich distance LP failed: " + to_string(rep.status));
  Vector mu = (-rep.dual_ub).cwiseMax(0.0);
  const double s = mu.sum();
  if (s > 0.0) {
    mu /= s;
  } else {
    mu = Vector::Constant(p, 1.0 / p);
  }
  return {rep.primal[K], mu};
}

}  // namespace

ParetoDb sandwich_front(const MultiObjectiveProblem& problem, double delta, const SandwichOptions& options) {
  if (!(delta > 0.0)) throw ValidationError("delta: must be positive");
  const int p = problem.num_objectives();
  if (p < 1 || p > 3) throw ValidationError("sandwich_front: supports 1 to 3 objectives");
  ParetoDb db;
  db.delta = delta;
  db.objective_names = problem.objective_names();
  std::vector<ParetoPoint> found;
  std::vector<SupportingPlane> planes;

  auto run = [&](const Vector& w) -> bool {
    ScalarizationResult res = weighted_sum_solve(problem, w);
    db.solve_count += res.solves;
    if (res.status == SolveStatus::unbounded) throw SolverError("unbounded objective in weighted sum");
    if (!usable(res.status)) {
      ++db.failed_solves;
      return false;
    }
    res.point.id = static_cast<int>(found.size());
    found.push_back(res.point);
    if (std::isfinite(res.lower_bound)) planes.push_back({w, res.lower_bound});
    return true;
  };

  for (int i = 0; i < p; ++i) run(Vector::Unit(p, i));
  if (found.empty()) throw SolverError("sandwich_front: no anchor could be solved");

  db.ideal = found.front().objectives;
  Vector hi = found.front().objectives;
  for (const auto& pt : found) {
    db.ideal = db.ideal.cwiseMin(pt.objectives);
    hi = hi.cwiseMax(pt.objectives);
  }
  db.ranges = hi - db.ideal;
  bool degenerate = true;
  for (int i = 0; i < p; ++i) {
    if (db.ranges[i] <= 1e-9 * (1.0 + std::abs(db.ideal[i]))) {
      db.ranges[i] = 1.0;
    } else {
      degenerate = false;
    }
  }
  const double dup_tol = 1e-9 * std::max(1.0, db.ranges.cwiseAbs().maxCoeff());
  auto finish = [&](double gap) {
    db.quality_gap = gap;
    if (db.gap_history.empty() || db.gap_history.back() != gap) db.gap_history.push_back(gap);
    db.points = dominance_filter(found, dup_tol);
    db.facets = planes;
    return db;
  };
  if (p == 1 || degenerate) return finish(0.0);

  auto normalize = [&](const Vector& f) { return Vector((f - db.ideal).cwiseQuotient(db.ranges)); };
  OuterPolytope outer(p, -1.0, options.box_upper);
  auto add_plane = [&](const SupportingPlane& pl) {
    const Vector a = pl.weights.cwiseProduct(db.ranges);
    outer.add(a, pl.offset - pl.weights.dot(db.ideal));
  };
  for (const auto& pl : planes) add_plane(pl);

  std::vector<Vector> used;
  for (int i = 0; i < p; ++i) used.push_back(Vector::Unit(p, i));
  double gap = kInf;
  while (true) {
    std::vector<Vector> inner_pts;
    for (const auto& pt : found) inner_pts.push_back(normalize(pt.objectives));
    gap = 0.0;
    Vector normal;
    for (const auto& v : outer.vertices()) {
      const auto [t, mu] = inner_distance(inner_pts, v);
      if (t > gap) {
        gap = t;
        normal = mu;
      }
    }
    db.gap_history.push_back(gap);
    if (gap <= delta || db.solve_count >= options.max_solves) break;
    Vector w = normal.cwiseQuotient(db.ranges);
    w = w.cwiseMax(0.0);
    w /= w.sum();
    bool repeated = false;
    for (const auto& u : used) repeated = repeated || (u - w).cwiseAbs().maxCoeff() <= 1e-9;
    if (repeated) break;
    used.push_back(w);
    const std::size_t before = planes.size();
    run(w);
    if (planes.size() > before) add_plane(planes.back());
  }
  return finish(gap);
}

double eps_efficiency(const Vector& f, const std::vector<Vector>& reference, const Vector& scale) {
  if (reference.empty()) throw ValidationError("reference front: empty");
  double best = kInf;
  for (const auto& q : reference) {
    if (q.size() != f.size()) throw ValidationError("reference front: dimension mismatch");
    Vector d = (f - q).cwiseAbs();
    if (scale.size()) d = d.cwiseQuotient(scale);
    best = std::min(best, d.maxCoeff());
  }
  return best;
}

std::vector<double> robustness_levels(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw ValidationError("step: must lie in (0, 1]");
  const int n = static_cast<int>(std::floor(1.0 / step + 1e-9));
  std::vector<double> levels;
  for (int i = 0; i <= n; ++i) levels.push_back(std::min(1.0, i * step));
  if (std::abs(levels.back() - 1.0) <= 1e-9) {
    levels.back() = 1.0;
  } else {
    levels.push_back(1.0);
  }
  return levels;
}

ParetoDb iterative_r_front(const QcqpInstance& q, double step, double delta,
                           std::shared_ptr<const ConicBackend> backend, const SandwichOptions& options) {
  ParetoDb db;
  db.kind = "iterative";
  db.delta = delta;
  db.levels = robustness_levels(step);
  db.objective_names = q.objective_names;
  db.objective_names.push_back("-r");
  const int k = q.num_objectives();
  std::vector<ParetoPoint> all;
  double gap = 0.0;
  for (double r : db.levels) {
    LevelLpProblem level(q, r, backend);
    ParetoDb part;
    try {
      part = sandwich_front(level, delta, options);
    } catch (const SolverError& e) {
      throw SolverError(std::string(e.what()) + " (at r = " + std::to_string(r) + ")");
    }
    db.solve_count += part.solve_count;
    db.failed_solves += part.failed_solves;
    gap = std::max(gap, part.quality_gap);
    for (auto pt : part.points) {
      Vector f(k + 1);
      f.head(k) = pt.objectives;
      f[k] = -r;
      pt.objectives = f;
      pt.decision.r = r;
      pt.id = static_cast<int>(all.size());
      all.push_back(std::move(pt));
    }
  }
  if (all.empty()) throw SolverError("iterative_r_front: no level produced a point");
  db.ideal = all.front().objectives;
  Vector hi = db.ideal;
  for (const auto& pt : all) {
    db.ideal = db.ideal.cwiseMin(pt.objectives);
    hi = hi.cwiseMax(pt.objectives);
  }
  db.ranges = (hi - db.ideal).unaryExpr([](double v) { return v > 0.0 ? v : 1.0; });
  db.points = dominance_filter(all, 1e-9 * std::max(1.0, db.ranges.maxCoeff()));
  db.quality_gap = gap;
  db.gap_history.push_back(gap);
  return db;
}

}  // namespace irnav
