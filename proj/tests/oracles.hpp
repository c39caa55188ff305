#pragma once

#include <random>
#include <vector>

#include "irnav/session.hpp"

namespace oracle {

using irnav::Matrix;
using irnav::Vector;

/// One variable: A in [1, 3] (A_c = 2, A_delta = 1), b = 2, maximize x, 0 <= x <= 10.
irnav::QcqpInstance t1(bool split_negative = false);
/// Same shape with other single-row data.
irnav::QcqpInstance single_row(double a_c, double a_d, double b_c, double upper = 10.0, bool split_negative = false);

/// Dense random interval system: m x n, entries in [-2, 2] with the given density, offsets up to
/// 60% of |A_c|, b_c in [0.5, 3], b_delta in [0, 0.3] when requested.
irnav::RobustnessSpec random_spec(std::mt19937_64& rng, int m, int n, double density, bool rhs_offsets);

/// Checks A x <= b for every extreme matrix and rhs of the level-r box, row by row.
bool strong_by_enumeration(const irnav::RobustnessSpec& spec, const Vector& x, double r, double tol);

/// Small QCQP with x in [0, 1]^n (no x- part): random nonnegative-offset rows, b_c > 0, two objectives.
irnav::QcqpInstance random_small_qcqp(std::mt19937_64& rng, int n, int m, double scale);

/// Largest r in [0, 1] with A_c x + r (A_delta |x| + b_delta) <= b_c, by bisection; -1 when even r = 0 fails.
double max_r_bisection(const irnav::QcqpInstance& q, const Vector& x, double tol = 1e-13);
/// The same from the row ratios (direct arithmetic on dense copies).
double max_r_ratio(const irnav::QcqpInstance& q, const Vector& x);

struct GridPoint {
  Vector x;
  double r = 0.0;
  Vector f;
};

/// Every grid point (spacing h over [l, u], n <= 2, x- absent) with its maximal r; nominal-infeasible points skipped.
std::vector<GridPoint> qcqp_grid(const irnav::QcqpInstance& q, double h);
/// Nondominated subset of objective vectors (2 or 3 objectives).
std::vector<Vector> nondominated(const std::vector<Vector>& points);

/// min over the QCQP of w . (G x, -r): grid search then golden-section / coordinate refinement.
double qcqp_weighted_min(const irnav::QcqpInstance& q, const Vector& w, double h, Vector* argmin = nullptr);

/// Phantom with `beamlets` beamlets small enough for grid oracles.
irnav::ProblemModel small_phantom(int grid, int beamlets, std::uint64_t seed);

}  // namespace oracle
