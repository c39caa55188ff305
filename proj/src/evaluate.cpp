#include "irnav/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace irnav {

Vector dvh_grid(double max_dose, int points) {
  if (points < 2) throw ValidationError("dvh grid: needs at least two points");
  const double top = max_dose > 0.0 ? 1.1 * max_dose : 1.0;
  return Vector::LinSpaced(points, 0.0, top);
}

DvhCurve dvh(const ProblemModel& model, const Vector& x, const std::string& structure, const Vector& grid) {
  const Structure& s = model.structure(structure);
  const Vector d = dose(model, x);
  std::vector<double> doses;
  for (int v : s.voxel_indices) doses.push_back(d[v]);
  std::sort(doses.begin(), doses.end());
  DvhCurve c;
  c.structure = structure;
  c.dose_grid = grid;
  c.volume_fraction.resize(grid.size());
  const double total = static_cast<double>(doses.size());
  for (int i = 0; i < grid.size(); ++i) {
    const auto first = std::lower_bound(doses.begin(), doses.end(), grid[i]);
    c.volume_fraction[i] = static_cast<double>(doses.end() - first) / total;
  }
  return c;
}

std::vector<DvhCurve> dvh_all(const ProblemModel& model, const Vector& x, const Vector& grid) {
  Vector g = grid;
  if (g.size() == 0) {
    const Vector d = dose(model, x);
    g = dvh_grid(d.size() ? d.maxCoeff() : 0.0);
  }
  std::vector<DvhCurve> out;
  for (const auto& s : model.structures) out.push_back(dvh(model, x, s.name, g));
  return out;
}

std::string dvh_csv(const std::vector<DvhCurve>& curves) {
  std::ostringstream out;
  out.precision(17);
  out << "dose";
  for (const auto& c : curves) out << ',' << c.structure;
  out << '\n';
  if (curves.empty()) return out.str();
  for (int i = 0; i < curves.front().dose_grid.size(); ++i) {
    out << curves.front().dose_grid[i];
    for (const auto& c : curves) out << ',' << c.volume_fraction[i];
    out << '\n';
  }
  return out.str();
}

ScenarioReport sample_scenarios(const RobustnessSpec& spec, const Vector& x, double r, int count, std::uint64_t seed,
                                double tol) {
  if (count < 1) throw ValidationError("count: must be at least 1");
  if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("r: must lie in [0, 1]");
  if (x.size() != spec.cols()) throw ValidationError("x: length differs from matrix columns");
  ScenarioReport rep;
  rep.count = count;
  rep.r = r;
  rep.seed = seed;
  const int m = spec.rows();
  rep.max_violation = Vector::Zero(m);

  // Offsets aligned with the center's sparsity pattern (offset pattern is a subset).
  const SparseMatrix& C = spec.matrix.center;
  const Matrix off = Matrix(spec.matrix.offset);
  std::vector<std::vector<std::pair<double, double>>> rows(m);
  for (int i = 0; i < m; ++i) {
    for (SparseMatrix::InnerIterator it(C, i); it; ++it) {
      const int j = static_cast<int>(it.col());
      rows[i].emplace_back(it.value() * x[j], r * off(i, j) * x[j]);
    }
    for (int j = 0; j < off.cols(); ++j) {
      if (off(i, j) != 0.0 && C.coeff(i, j) == 0.0) rows[i].emplace_back(0.0, r * off(i, j) * x[j]);
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int s = 0; s < count; ++s) {
    bool any = false;
    for (int i = 0; i < m; ++i) {
      double lhs = 0.0;
      for (const auto& [cx, dx] : rows[i]) lhs += cx + dx * u(rng);
      const double b = spec.rhs.center[i] + r * spec.rhs.offset[i] * u(rng);
      const double viol = lhs - b;
      if (viol > rep.max_violation[i]) rep.max_violation[i] = viol;
      if (viol > tol * (1.0 + std::abs(spec.rhs.center[i]))) any = true;
    }
    rep.violating_samples += any ? 1 : 0;
  }
  rep.violating_fraction = static_cast<double>(rep.violating_samples) / count;
  rep.worst_violation = m ? rep.max_violation.maxCoeff() : 0.0;
  return rep;
}

ClusterGapReport cluster_gap_report(const ProblemModel& model, const ClusteredModel& clustered, const Vector& x,
                                    double tol) {
  ClusterGapReport rep;
  const Vector d = dose(model, x);
  const Vector dc = dose(clustered.model, x);
  for (const auto& cs : clustered.model.structures) {
    StructureGap g;
    g.structure = cs.name;
    double sum = 0.0;
    int n = 0;
    for (int sv : cs.voxel_indices) {
      for (int v : clustered.lineage.at(sv)) {
        const double gap = std::abs(dc[sv] - d[v]);
        g.max_gap = std::max(g.max_gap, gap);
        sum += gap;
        ++n;
      }
    }
    g.mean_gap = n ? sum / n : 0.0;
    const Structure& s = model.structure(cs.name);
    if (s.is_constrained) {
      for (int v : s.voxel_indices) {
        const double over = std::max(d[v] - s.upper_bound, s.lower_bound - d[v]);
        if (over > tol * (1.0 + std::abs(d[v]))) {
          ++g.unclustered_violations;
          g.max_violation = std::max(g.max_violation, over);
        }
      }
    }
    rep.total_violations += g.unclustered_violations;
    rep.structures.push_back(std::move(g));
  }
  return rep;
}

}  // namespace irnav
