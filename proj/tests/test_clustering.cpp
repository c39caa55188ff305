#include <gtest/gtest.h>

#include <random>
#include <set>

#include "irnav/clustering.hpp"
#include "irnav/evaluate.hpp"
#include "irnav/pareto.hpp"
#include "oracles.hpp"

using namespace irnav;

namespace {

ProblemModel rows_model(const Matrix& D) {
  ProblemModel m;
  m.num_voxels = static_cast<int>(D.rows());
  m.num_beamlets = static_cast<int>(D.cols());
  m.dose_matrix = D.sparseView();
  std::vector<int> all(m.num_voxels);
  for (int i = 0; i < m.num_voxels; ++i) all[i] = i;
  m.structures.push_back({"S", all, -kInf, 10.0, true, true, std::nullopt});
  m.fluence_lower = Vector::Zero(m.num_beamlets);
  m.fluence_upper = Vector::Ones(m.num_beamlets);
  m.objectives.push_back(mean_objective(m, "S", 1));
  return m;
}

VoxelFeatures features(std::vector<std::pair<double, double>> pts) {
  VoxelFeatures f;
  f.mean.resize(static_cast<int>(pts.size()));
  f.variance.resize(static_cast<int>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    f.voxels.push_back(static_cast<int>(i));
    f.mean[i] = pts[i].first;
    f.variance[i] = pts[i].second;
  }
  return f;
}

double nominal_optimum(const ProblemModel& m, int objective) {
  const auto lp = assemble_nominal(m);
  LpInstance inst;
  inst.cost = lp.objectives.row(objective).transpose();
  inst.A_ub = Matrix(lp.constraint_matrix);
  inst.b_ub = lp.rhs;
  inst.lower = lp.lower;
  inst.upper = lp.upper;
  const auto rep = solve_lp(inst);
  EXPECT_EQ(rep.status, SolveStatus::optimal);
  return rep.objective;
}

}  // namespace

TEST(Clustering, RowFeatureExamples) {
  Matrix D(3, 2);
  D << 1, 3, 0, 0, 2, 2;
  const auto m = rows_model(D);
  const auto f = row_features(m, m.structures[0]);
  EXPECT_DOUBLE_EQ(f.mean[0], 2);
  EXPECT_DOUBLE_EQ(f.variance[0], 1);
  EXPECT_DOUBLE_EQ(f.mean[1], 0);
  EXPECT_DOUBLE_EQ(f.variance[1], 0);
  EXPECT_DOUBLE_EQ(f.mean[2], 2);
  EXPECT_DOUBLE_EQ(f.variance[2], 0);

  const auto four = rows_model(Matrix::Constant(1, 4, 2.0));
  const auto g = row_features(four, four.structures[0]);
  EXPECT_DOUBLE_EQ(g.mean[0], 2);
  EXPECT_DOUBLE_EQ(g.variance[0], 0);
}

TEST(Clustering, KmeansExamples) {
  const auto f = features({{1, 0}, {1, 0}, {5, 0}});
  const auto two = kmeans(f, 2);
  EXPECT_EQ(two[0], two[1]);
  EXPECT_NE(two[0], two[2]);

  const auto f4 = features({{1, 0}, {2, 1}, {4, 0.5}, {9, 3}});
  const auto each = kmeans(f4, 4);
  EXPECT_EQ(std::set<int>(each.begin(), each.end()).size(), 4u);
  const auto one = kmeans(f4, 1);
  for (int l : one) EXPECT_EQ(l, 0);
  EXPECT_THROW(kmeans(f4, 0), ValidationError);
  EXPECT_THROW(kmeans(f4, 5), ValidationError);
}

TEST(Clustering, AggregateExamples) {
  Matrix D(3, 2);
  D << 1, 3, 3, 5, 7, 0;
  const auto m = rows_model(D);
  ClusterMap cmap;
  cmap.structures.push_back({"S", {0, 1, 2}, {0, 0, 1}, 2});
  const auto c = aggregate(m, cmap);
  const Matrix A(c.model.dose_matrix);
  ASSERT_EQ(A.rows(), 2);
  EXPECT_DOUBLE_EQ(A(0, 0), 2);
  EXPECT_DOUBLE_EQ(A(0, 1), 4);
  EXPECT_DOUBLE_EQ(A(1, 0), 7);
  EXPECT_DOUBLE_EQ(A(1, 1), 0);
  EXPECT_EQ(c.lineage[0], (std::vector<int>{0, 1}));
  EXPECT_EQ(c.model.structures[0].upper_bound, 10.0);
  EXPECT_EQ(c.model.objectives[0].coefficients, m.objectives[0].coefficients);
}

TEST(ClusteringProperty, IdentityClusteringReproducesOptima) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto m = oracle::small_phantom(7, 4, seed);
    const auto c = aggregate(m, identity_clusters(m));
    for (int k = 0; k < static_cast<int>(m.objectives.size()); ++k) {
      EXPECT_NEAR(nominal_optimum(c.model, k), nominal_optimum(m, k), 1e-9);
    }
  }
}

TEST(ClusteringProperty, ClustersStayInsideStructuresAndAreDense) {
  const auto m = oracle::small_phantom(10, 5, 4);
  ClusterRequest req;
  req.fraction = 0.25;
  const auto cmap = cluster_model(m, req);
  for (const auto& sc : cmap.structures) {
    const auto& st = m.structure(sc.structure);
    EXPECT_TRUE(st.is_constrained);
    EXPECT_EQ(sc.voxels, st.voxel_indices);
    EXPECT_EQ(sc.labels.size(), sc.voxels.size());
    std::set<int> ids(sc.labels.begin(), sc.labels.end());
    EXPECT_EQ(static_cast<int>(ids.size()), sc.k);
    EXPECT_EQ(*ids.begin(), 0);
    EXPECT_EQ(*ids.rbegin(), sc.k - 1);
  }
}

TEST(ClusteringProperty, MeanDosePreserved) {
  const auto m = oracle::small_phantom(10, 5, 5);
  ClusterRequest req;
  req.k = 4;
  const auto c = aggregate(m, cluster_model(m, req));
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 10; ++t) {
    const Vector x = Vector::NullaryExpr(m.num_beamlets, [&] { return u(rng); });
    const Vector d = dose(m, x), dc = dose(c.model, x);
    for (const auto& st : c.model.structures) {
      if (!st.is_constrained) continue;
      double weighted = 0, count = 0;
      for (int v : st.voxel_indices) {
        weighted += dc[v] * static_cast<double>(c.lineage[v].size());
        count += static_cast<double>(c.lineage[v].size());
      }
      double direct = 0;
      for (int v : m.structure(st.name).voxel_indices) direct += d[v];
      EXPECT_NEAR(weighted / count, direct / static_cast<double>(m.structure(st.name).voxel_indices.size()), 1e-12);
    }
  }
}

TEST(ClusteringProperty, DeterministicForSeed) {
  const auto m = oracle::small_phantom(10, 5, 6);
  ClusterRequest req;
  req.k = 5;
  req.seed = 9;
  const auto a = cluster_model(m, req), b = cluster_model(m, req);
  ASSERT_EQ(a.structures.size(), b.structures.size());
  for (std::size_t i = 0; i < a.structures.size(); ++i) EXPECT_EQ(a.structures[i].labels, b.structures[i].labels);
  const auto round = cluster_map_from_json(cluster_map_to_json(a));
  for (std::size_t i = 0; i < a.structures.size(); ++i) EXPECT_EQ(round.structures[i].labels, a.structures[i].labels);
}

TEST(ClusteringProperty, ClusteredFeasibleMayViolateButIsReported) {
  const auto m = oracle::small_phantom(10, 5, 7);
  ClusterRequest req;
  req.k = 2;
  const auto c = aggregate(m, cluster_model(m, req));
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 20; ++t) {
    const Vector x = Vector::NullaryExpr(m.num_beamlets, [&] { return u(rng); });
    const auto rep = cluster_gap_report(m, c, x);
    int sum = 0;
    for (const auto& s : rep.structures) {
      sum += s.unclustered_violations;
      EXPECT_GE(s.max_gap, 0.0);
      if (s.unclustered_violations == 0) EXPECT_EQ(s.max_violation, 0.0);
    }
    EXPECT_EQ(sum, rep.total_violations);
  }
}
