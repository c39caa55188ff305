#pragma once

#include <optional>
#include <string>
#include <vector>

#include "irnav/interval.hpp"
#include "irnav/sdp.hpp"

namespace irnav {

/// x^T Q x + 2 q^T x + gamma.
struct QuadraticTerm {
  Matrix Q;
  Vector q;
  double gamma = 0.0;
};

/// terms[0] is the objective, terms[1..m] the constraints (<= 0).
struct GenericQcqp {
  std::vector<QuadraticTerm> terms;
};

/// Lifted matrices [[gamma, q^T], [q, Q]] for every term (Q symmetrized), followed by e0 e0^T.
std::vector<Matrix> homogenize_qcqp(const GenericQcqp& g);

struct ValidIneqOptions {
  bool border_nonneg = true;
  bool diag_caps = true;
  bool full_nonneg = false;
};

/// Lifted vector z = (1, x+, [x-], r).
struct LiftedLayout {
  int n = 0;
  bool has_minus = true;

  int dim() const { return 2 + n * (has_minus ? 2 : 1); }
  int constant() const { return 0; }
  int plus(int j) const { return 1 + j; }
  int minus(int j) const { return 1 + n + j; }
  int r() const { return dim() - 1; }
  std::string label(int index) const;
};

struct SdpInstance {
  int dim = 0;
  LiftedLayout layout;
  /// <M_i, Z> <= 0, one per QCQP constraint row.
  std::vector<SymSparse> constraint_blocks;
  /// k dose objectives followed by the robustness objective -r.
  std::vector<SymSparse> objective_blocks;
  std::vector<std::string> objective_names;
  /// <normalization, Z> = 1.
  SymSparse normalization;
  /// Border sign constraints, the r-box and l <= x+ - x- <= u on border entries.
  std::vector<MatrixConstraint> bound_linear;
  /// Valid inequalities selected by ValidIneqOptions.
  std::vector<MatrixConstraint> extra_linear;

  int num_objectives() const { return static_cast<int>(objective_blocks.size()); }
};

SdpInstance build_sdp(const QcqpInstance& q, const ValidIneqOptions& opts = {});

/// min sum_i w_i <M_0^i, Z> over the relaxation; finite upper_bounds[i] add <M_0^i, Z> <= upper_bounds[i].
ScalarSdp scalarize_sdp(const SdpInstance& s, const Vector& w, const Vector& upper_bounds = {});

/// Rank-1 lift z z^T of a QCQP point.
/// The face r = 1 of a scalarized relaxation: the r coordinate merges into the constant one
/// (Z = V Zr V^T). Constraints that only involve Zr[0,0] are checked against Zr[0,0] = 1 and
/// dropped, exact duplicates are removed. Empty when the face violates such a constraint.
std::optional<ScalarSdp> restrict_to_full_level(const ScalarSdp& sdp, const LiftedLayout& layout);
Matrix expand_full_level(const Matrix& z_reduced, const LiftedLayout& layout);

Matrix lift_point(const SdpInstance& s, const QcqpPoint& p);

/// Max violation of all SDP constraints (blocks, normalization, linear rows) at Z; PSD-ness not included.
double relaxation_residual(const SdpInstance& s, const Matrix& Z);

struct Border {
  Vector x_plus;
  Vector x_minus;
  double r = 0.0;
  int rank_estimate = 0;
  /// Set when Z is numerically rank one, so the border is a QCQP-optimal candidate.
  bool rank_one = false;
};

/// Reads (x+, x-, r) off row 0 normalized by Z[0,0]; throws ValidationError when |Z[0,0] - 1| > z00_tol.
Border extract_border(const SdpInstance& s, const Matrix& Z, double rank_tol = 1e-6, double z00_tol = 1e-6);

struct SdpSolution {
  Matrix Z;
  Vector objective_values;
  Border border;
  SolveStatus status = SolveStatus::numerical_failure;
  double dual_objective = -kInf;
  double primal_objective = 0.0;
  int iterations = 0;
};

}  // namespace irnav
