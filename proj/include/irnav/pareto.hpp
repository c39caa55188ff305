#pragma once

#include <memory>
#include <string>
#include <vector>

#include "irnav/backend.hpp"
#include "irnav/interval.hpp"
#include "irnav/relaxation.hpp"

namespace irnav {

enum class PointOrigin { weighted_sum, epsilon_constraint, projection, reoptimized, worst_case };

std::string to_string(PointOrigin origin);
PointOrigin point_origin_from_string(const std::string& s);

/// Decision behind an objective vector: a QCQP point or the border of an SDP solution.
struct Decision {
  Vector x_plus;
  Vector x_minus;
  double r = 0.0;
  /// Numerical rank of Z for SDP points; 1 for points that are QCQP points by construction.
  int rank = 1;
};

struct ParetoPoint {
  int id = -1;
  Vector objectives;
  Decision decision;
  PointOrigin origin = PointOrigin::weighted_sum;
  /// Scalarization weights (weighted sums) or bounds (epsilon constraints); empty when not applicable.
  Vector weights;
  Vector bounds;
};

/// The half-space weights . f >= offset in raw objective units.
struct SupportingPlane {
  Vector weights;
  double offset = 0.0;
};

struct ParetoDb {
  std::string kind;
  std::string problem_hash;
  double delta = 0.0;
  double quality_gap = 0.0;
  std::vector<std::string> objective_names;
  std::vector<ParetoPoint> points;
  /// Normalization used for the gap: (f - ideal) / ranges, both taken from the lexicographic anchors.
  std::string normalization = "anchor_range";
  Vector ideal;
  Vector ranges;
  std::vector<SupportingPlane> facets;
  int solve_count = 0;
  int failed_solves = 0;
  std::vector<double> gap_history;
  /// Robustness levels swept by the iterative baseline.
  std::vector<double> levels;

  const ParetoPoint* find(int id) const;
  int next_id() const;
};

/// coeffs . f <= bound.
struct ObjectiveCut {
  Vector coeffs;
  double bound = 0.0;
};

struct ScalarOutcome {
  SolveStatus status = SolveStatus::numerical_failure;
  Vector objectives;
  /// Certified lower bound on w . f over the feasible set; only meaningful when solved without cuts.
  double lower_bound = -kInf;
  Decision decision;
  /// Backend solves spent on this outcome.
  int solves = 1;
};

class MultiObjectiveProblem {
 public:
  virtual ~MultiObjectiveProblem() = default;
  virtual int num_objectives() const = 0;
  virtual std::vector<std::string> objective_names() const = 0;
  /// min w . f subject to the problem's constraints and the cuts.
  virtual ScalarOutcome solve(const Vector& w, const std::vector<ObjectiveCut>& cuts) const = 0;
  /// Absolute slack granted to lexicographic cuts at objective value v.
  virtual double cut_tolerance(double v) const { return 1e-9 * (1.0 + std::abs(v)); }
};

/// min over {A_ub x <= b_ub, A_eq x = b_eq, bounds} of the objective rows; `lp.cost` is ignored.
class LpProblem : public MultiObjectiveProblem {
 public:
  LpProblem(LpInstance lp, Matrix objectives, std::vector<std::string> names = {},
            std::shared_ptr<const ConicBackend> backend = builtin_backend(), LpOptions options = {});
  int num_objectives() const override { return static_cast<int>(objectives_.rows()); }
  std::vector<std::string> objective_names() const override { return names_; }
  ScalarOutcome solve(const Vector& w, const std::vector<ObjectiveCut>& cuts) const override;
  /// Raw variable vector of the last optimal solve in `solve`; overridden to fill decisions.
  virtual Decision decision_of(const Vector& vars) const;

 protected:
  LpInstance lp_;
  Matrix objectives_;
  std::vector<std::string> names_;
  std::shared_ptr<const ConicBackend> backend_;
  LpOptions options_;
};

/// The level-r LP of a QCQP with its k dose objectives (r fixed, so -r is omitted).
class LevelLpProblem final : public LpProblem {
 public:
  LevelLpProblem(const QcqpInstance& q, double r, std::shared_ptr<const ConicBackend> backend = builtin_backend(),
                 LpOptions options = {});
  Decision decision_of(const Vector& vars) const override;
  double level() const { return r_; }

 private:
  MultiLp multi_;
  double r_;
};

/// The SDP relaxation with objectives (G (x+ - x-), -r). Solutions ending within `full_level_tol`
/// of r = 1 are re-solved on the face r = 1 and replaced when that is no worse (one extra solve).
class SdpRelaxationProblem final : public MultiObjectiveProblem {
 public:
  SdpRelaxationProblem(SdpInstance sdp, std::shared_ptr<const ConicBackend> backend = builtin_backend(),
                       SdpOptions options = {}, double rank_tol = 1e-6, double full_level_tol = 1e-6);
  int num_objectives() const override { return sdp_.num_objectives(); }
  std::vector<std::string> objective_names() const override { return sdp_.objective_names; }
  ScalarOutcome solve(const Vector& w, const std::vector<ObjectiveCut>& cuts) const override;
  double cut_tolerance(double v) const override { return 1e-7 * (1.0 + std::abs(v)); }
  const SdpInstance& instance() const { return sdp_; }
  /// Full solution of a weighted-sum solve (no cuts).
  SdpSolution solve_full(const Vector& w) const;

 private:
  SdpInstance sdp_;
  std::shared_ptr<const ConicBackend> backend_;
  SdpOptions options_;
  double rank_tol_;
  double full_level_tol_;
};

struct ScalarizationResult {
  SolveStatus status = SolveStatus::numerical_failure;
  ParetoPoint point;
  /// Lower bound on w . f from the first (uncut) solve.
  double lower_bound = -kInf;
  int solves = 0;
};

/// Weighted sum; when some weights vanish a second solve minimizes the neglected objectives
/// subject to w . f <= optimum + tolerance.
ScalarizationResult weighted_sum_solve(const MultiObjectiveProblem& problem, const Vector& w,
                                       bool lexicographic_cleanup = true);

/// min f_j subject to f_i <= eps_i for i != j. Throws ValidationError for non-finite eps_i, i != j.
ScalarizationResult epsilon_constraint_solve(const MultiObjectiveProblem& problem, int j, const Vector& eps);

/// Maximal nondominated subset in stable order; points within `tol` of an earlier kept point collapse.
std::vector<ParetoPoint> dominance_filter(const std::vector<ParetoPoint>& points, double tol = 0.0);
bool dominates(const Vector& a, const Vector& b, double tol = 0.0);

struct SandwichOptions {
  int max_solves = 200;
  /// Upper face of the bounding box of the outer approximation, in normalized units.
  double box_upper = 2.0;
};

/// Inner/outer sandwiching of a convex front with 1 to 3 objectives.
ParetoDb sandwich_front(const MultiObjectiveProblem& problem, double delta, const SandwichOptions& options = {});

/// Chebyshev distance from f to the nearest reference point, each coordinate divided by `scale`
/// (all ones when empty).
double eps_efficiency(const Vector& f, const std::vector<Vector>& reference, const Vector& scale = {});

/// r in {0, step, 2 step, ..., 1}; the last level is always 1.
std::vector<double> robustness_levels(double step);

/// Sandwiches every level-r LP and merges the fronts in (G x, -r) space.
ParetoDb iterative_r_front(const QcqpInstance& q, double step, double delta,
                           std::shared_ptr<const ConicBackend> backend = builtin_backend(),
                           const SandwichOptions& options = {});

}  // namespace irnav
