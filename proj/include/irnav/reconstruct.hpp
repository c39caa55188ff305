#pragma once

#include <optional>
#include <string>
#include <vector>

#include "irnav/pareto.hpp"

namespace irnav {

struct ProjectionResult {
  Vector x_plus_sdp;
  Vector x_minus_sdp;
  double r_sdp = 0.0;
  QcqpPoint output;
  /// Row attaining the ratio minimum; -1 when r was clipped at 1.
  int binding_row = -1;
  double r_loss = 0.0;
  double max_residual = 0.0;
  /// Set when the border violated nominal feasibility or the bounds beyond tolerance.
  bool warning = false;
  /// Set when a nominal violation at solver-noise level was removed by moving x (max-norm distance).
  bool restored = false;
  double displacement = 0.0;
  std::string message;
};

struct ProjectionOptions {
  /// Nominal slacks in [-nominal_tol, 0) count as tight rather than violated.
  double nominal_tol = 1e-9;
  /// Larger violations up to restore_tol (1 + |b_c|) per row are treated as solver noise: x moves to the
  /// nearest nominally feasible point before the ratio test. Beyond that r = 0 with a warning.
  double restore_tol = 1e-6;
  /// Border entries below zero and bound overshoots up to this size are clipped silently.
  double clip_tol = 1e-6;
};

/// Keeps x and maximizes r in closed form: r = min(1, min_{c_i > 0} slack_i / c_i).
ProjectionResult project_to_qcqp(const Vector& x_plus, const Vector& x_minus, double r_sdp, const QcqpInstance& q,
                                  const ProjectionOptions& options = {});
ProjectionResult project_to_qcqp(const Decision& border, const QcqpInstance& q, const ProjectionOptions& options = {});

/// The same single-variable problem solved by a backend LP; returns r (NaN on failure).
/// Negative slacks down to -nominal_tol count as tight, as in the closed form.
double project_r_via_lp(const Vector& x_plus, const Vector& x_minus, const QcqpInstance& q,
                        const ConicBackend& backend = *builtin_backend(), double nominal_tol = 1e-9);

enum class EfficiencyLevel { efficient, weakly_eps_efficient, unverified };
std::string to_string(EfficiencyLevel level);

struct EfficiencyVerdict {
  EfficiencyLevel level = EfficiencyLevel::unverified;
  double eps = 0.0;
  std::optional<QcqpPoint> witness;
  std::string evidence;
  int lp_solves = 0;
};

/// LP evidence at the point's robustness level: per-objective epsilon-constraint probes, then a
/// uniqueness probe on x, then a weak-dominance probe.
EfficiencyVerdict verify_efficiency(const QcqpPoint& p, const QcqpInstance& q, double eps_tol = 1e-6,
                                    const ConicBackend& backend = *builtin_backend());

/// Largest t such that some x' feasible at level r has G x' <= G x - t 1 (NaN on failure).
double weak_improvement(const Vector& x, const QcqpInstance& q, double r,
                        const ConicBackend& backend = *builtin_backend());

/// Level-r LP with G x' <= G x_p, minimizing weights . G x' (all ones when empty).
QcqpPoint reoptimize_at_r(const QcqpPoint& p, const QcqpInstance& q, const Vector& weights = {},
                          const ConicBackend& backend = *builtin_backend());

struct TheoremCheck {
  std::string check;
  int point_id = -1;
  bool passed = false;
  double measured = 0.0;
  std::string detail;
};

struct TheoremReport {
  std::vector<TheoremCheck> checks;
  double tolerance = 1e-6;

  int failures() const;
  bool all_passed() const { return failures() == 0; }
};

struct TheoremSuiteOptions {
  /// Objective tolerances are applied in units of the front's ranges.
  double tol = 1e-6;
  /// Borders with r below this (or above 1 minus this) count as r = 0 (r = 1).
  double level_tol = 1e-6;
};

/// Checks on an SDP front: borders at r = 0 and r = 1 are weakly efficient with matching
/// objectives; rank-1 lifts of level-1 efficient points are feasible and not dominated.
TheoremReport theorem_suite(const QcqpInstance& q, const SdpInstance& sdp, const ParetoDb& sdp_front,
                            const std::vector<QcqpPoint>& worst_case_points, const TheoremSuiteOptions& options = {},
                            const ConicBackend& backend = *builtin_backend());

}  // namespace irnav
