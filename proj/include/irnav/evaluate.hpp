#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "irnav/clustering.hpp"
#include "irnav/interval.hpp"
#include "irnav/problem.hpp"

namespace irnav {

struct DvhCurve {
  std::string structure;
  Vector dose_grid;
  /// Fraction of the structure's voxels receiving at least dose_grid[i].
  Vector volume_fraction;
};

/// `points` evenly spaced values from 0 to 1.1 * max_dose.
Vector dvh_grid(double max_dose, int points = 128);

DvhCurve dvh(const ProblemModel& model, const Vector& x, const std::string& structure, const Vector& grid);

/// One curve per structure on a shared grid (default grid when empty).
std::vector<DvhCurve> dvh_all(const ProblemModel& model, const Vector& x, const Vector& grid = {});

/// Columns: dose, then one fraction column per structure.
std::string dvh_csv(const std::vector<DvhCurve>& curves);

struct ScenarioReport {
  int count = 0;
  double r = 0.0;
  std::uint64_t seed = 0;
  /// Largest observed (A x - b)_i per row, clamped below at 0.
  Vector max_violation;
  int violating_samples = 0;
  double violating_fraction = 0.0;
  double worst_violation = 0.0;
};

/// Independent uniform draws of every entry of A and b from their level-r intervals.
ScenarioReport sample_scenarios(const RobustnessSpec& spec, const Vector& x, double r, int count, std::uint64_t seed,
                                double tol = 1e-9);

struct StructureGap {
  std::string structure;
  double max_gap = 0.0;
  double mean_gap = 0.0;
  int unclustered_violations = 0;
  double max_violation = 0.0;
};

struct ClusterGapReport {
  std::vector<StructureGap> structures;
  int total_violations = 0;
};

/// Compares super-voxel doses with their member voxels and counts unclustered bound violations.
ClusterGapReport cluster_gap_report(const ProblemModel& model, const ClusteredModel& clustered, const Vector& x,
                                    double tol = 1e-9);

}  // namespace irnav
