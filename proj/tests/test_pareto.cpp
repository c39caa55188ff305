#include <gtest/gtest.h>

#include <random>

#include "irnav/pareto.hpp"
#include "oracles.hpp"

using namespace irnav;

namespace {

// min (x1, x2) over x1 + x2 >= 1, [0, 1]^2: the front is the segment from (0, 1) to (1, 0).
LpProblem segment() {
  LpInstance lp;
  lp.A_ub = Matrix::Constant(1, 2, -1.0);
  lp.b_ub = Vector::Constant(1, -1.0);
  lp.lower = Vector::Zero(2);
  lp.upper = Vector::Ones(2);
  lp.cost = Vector::Zero(2);
  return LpProblem(lp, Matrix::Identity(2, 2), {"x1", "x2"});
}

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

ParetoPoint pp(const Vector& f) {
  ParetoPoint p;
  p.objectives = f;
  return p;
}

}  // namespace

TEST(Pareto, WeightedSumExamples) {
  const auto prob = segment();
  const auto a = weighted_sum_solve(prob, v2(1, 0));
  ASSERT_EQ(a.status, SolveStatus::optimal);
  EXPECT_NEAR(a.point.objectives[0], 0.0, 1e-9);
  EXPECT_NEAR(a.point.objectives[1], 1.0, 1e-9);
  EXPECT_EQ(a.solves, 2);

  const auto b = weighted_sum_solve(prob, v2(1, 1));
  EXPECT_NEAR(b.point.objectives.sum(), 1.0, 1e-9);
  EXPECT_EQ(b.solves, 1);
  EXPECT_NEAR(b.lower_bound, 1.0, 1e-9);

  EXPECT_THROW(weighted_sum_solve(prob, v2(0, 0)), ValidationError);
  EXPECT_THROW(weighted_sum_solve(prob, v2(-1, 1)), ValidationError);
}

TEST(Pareto, WeightedSumOnT1RelaxationMaximizesR) {
  SdpRelaxationProblem prob(build_sdp(oracle::t1()));
  const auto res = weighted_sum_solve(prob, v2(0, 1));
  ASSERT_TRUE(res.status == SolveStatus::optimal || res.status == SolveStatus::near_optimal);
  EXPECT_NEAR(res.point.objectives[1], -1.0, 1e-6);
  EXPECT_NEAR(res.point.decision.r, 1.0, 1e-6);
  // Lexicographic clean-up pushes x to the largest value that still allows r = 1.
  EXPECT_NEAR(res.point.decision.x_plus[0], 2.0 / 3.0, 1e-5);
}

TEST(Pareto, EpsilonConstraintExamples) {
  const auto prob = segment();
  const auto a = epsilon_constraint_solve(prob, 0, v2(0, 0.25));
  ASSERT_EQ(a.status, SolveStatus::optimal);
  EXPECT_NEAR(a.point.objectives[0], 0.75, 1e-9);
  EXPECT_NEAR(a.point.objectives[1], 0.25, 1e-9);
  EXPECT_EQ(a.point.origin, PointOrigin::epsilon_constraint);
  EXPECT_EQ(epsilon_constraint_solve(prob, 0, v2(0, -1)).status, SolveStatus::infeasible);
  EXPECT_THROW(epsilon_constraint_solve(prob, 0, v2(0, kInf)), ValidationError);
  EXPECT_NO_THROW(epsilon_constraint_solve(prob, 0, v2(kInf, 0.5)));
}

TEST(Pareto, DominanceFilterExamples) {
  auto a = dominance_filter({pp(v2(1, 1)), pp(v2(2, 2))});
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].objectives, v2(1, 1));
  EXPECT_EQ(dominance_filter({pp(v2(1, 2)), pp(v2(2, 1))}).size(), 2u);
  EXPECT_EQ(dominance_filter({pp(v2(1, 2)), pp(v2(1, 2))}).size(), 1u);
  EXPECT_TRUE(dominates(v2(1, 1), v2(1, 2)));
  EXPECT_FALSE(dominates(v2(1, 2), v2(1, 2)));
}

TEST(Pareto, SandwichSegmentExamples) {
  const auto prob = segment();
  const auto coarse = sandwich_front(prob, 0.5);
  EXPECT_GE(coarse.points.size(), 2u);
  // Anchors carry the lexicographic cut slack of 1e-9 (1 + |v|).
  const double tol = 2.1e-9;
  bool a0 = false, a1 = false;
  for (const auto& p : coarse.points) {
    a0 = a0 || (std::abs(p.objectives[0]) <= tol && std::abs(p.objectives[1] - 1) <= tol);
    a1 = a1 || (std::abs(p.objectives[0] - 1) <= tol && std::abs(p.objectives[1]) <= tol);
  }
  EXPECT_TRUE(a0 && a1);

  const auto fine = sandwich_front(prob, 0.01);
  EXPECT_LE(fine.quality_gap, 0.01);
  EXPECT_LE(fine.solve_count, 10);
}

TEST(Pareto, SandwichSinglePointFront) {
  LpInstance lp;
  lp.A_ub = Matrix::Constant(1, 2, -1.0);
  lp.b_ub = Vector::Constant(1, -1.0);
  lp.lower = Vector::Zero(2);
  lp.upper = Vector::Constant(2, 2.0);
  lp.cost = Vector::Zero(2);
  Matrix G(2, 2);
  G << 1, 1, 2, 2;
  const LpProblem prob(lp, G, {"a", "b"});
  const auto db = sandwich_front(prob, 0.04);
  EXPECT_EQ(db.points.size(), 1u);
  EXPECT_EQ(db.quality_gap, 0.0);
}

TEST(Pareto, EpsEfficiencyExamples) {
  EXPECT_EQ(eps_efficiency(v2(0.3, 0.7), {v2(0.3, 0.7), v2(1, 0)}), 0.0);
  Vector p(3), r(3);
  p << 1.034, -45.06, -0.862;
  r << 1.0339, -45.0665, -0.84;
  EXPECT_NEAR(eps_efficiency(p, {r}), 0.022, 1e-9);
  EXPECT_NEAR(eps_efficiency(v2(0.5, 0), {v2(0, 0)}), 0.5, 1e-15);
  EXPECT_NEAR(eps_efficiency(v2(0.5, 0), {v2(0, 0)}, v2(2, 1)), 0.25, 1e-15);
}

TEST(Pareto, RobustnessLevels) {
  EXPECT_EQ(robustness_levels(0.04).size(), 26u);
  EXPECT_EQ(robustness_levels(1.0), (std::vector<double>{0.0, 1.0}));
  const auto h = robustness_levels(0.3);
  EXPECT_EQ(h.back(), 1.0);
  EXPECT_THROW(robustness_levels(0.0), ValidationError);
}

TEST(Pareto, IterativeFrontOnT1) {
  const auto db = iterative_r_front(oracle::t1(), 0.5, 0.04);
  EXPECT_EQ(db.levels, (std::vector<double>{0.0, 0.5, 1.0}));
  ASSERT_EQ(db.points.size(), 3u);
  std::vector<double> xs;
  for (const auto& p : db.points) xs.push_back(-p.objectives[0]);
  std::sort(xs.begin(), xs.end());
  EXPECT_NEAR(xs[0], 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(xs[1], 0.8, 1e-9);
  EXPECT_NEAR(xs[2], 1.0, 1e-9);
  EXPECT_EQ(dominance_filter(db.points).size(), 3u);
  EXPECT_EQ(iterative_r_front(oracle::t1(), 1.0, 0.04).levels.size(), 2u);
}

TEST(Pareto, SdpFrontOnT1MeetsGap) {
  SdpRelaxationProblem prob(build_sdp(oracle::t1()));
  const auto db = sandwich_front(prob, 0.04);
  EXPECT_LE(db.quality_gap, 0.04);
  EXPECT_GE(db.points.size(), 2u);
}

TEST(ParetoProperty, PositiveWeightPointsMutuallyNondominated) {
  std::mt19937_64 rng(51);
  for (int inst = 0; inst < 4; ++inst) {
    const auto q = oracle::random_small_qcqp(rng, 2, 3, 0.3);
    SdpRelaxationProblem prob(build_sdp(q));
    const auto db = sandwich_front(prob, 0.05);
    for (std::size_t i = 0; i < db.points.size(); ++i) {
      for (std::size_t j = 0; j < db.points.size(); ++j) {
        if (i != j) EXPECT_FALSE(dominates(db.points[i].objectives, db.points[j].objectives, 0.0));
      }
    }
  }
}

TEST(ParetoProperty, GapHistoryNonIncreasing) {
  std::mt19937_64 rng(52);
  for (int inst = 0; inst < 4; ++inst) {
    const auto q = oracle::random_small_qcqp(rng, 2, 3, 0.3);
    SdpRelaxationProblem prob(build_sdp(q));
    const auto db = sandwich_front(prob, 0.02);
    ASSERT_FALSE(db.gap_history.empty());
    for (std::size_t i = 1; i < db.gap_history.size(); ++i) {
      EXPECT_LE(db.gap_history[i], db.gap_history[i - 1] + 1e-12);
    }
    EXPECT_EQ(db.quality_gap, db.gap_history.back());
  }
}

TEST(ParetoProperty, IterativeFrontApproachesBruteForce) {
  // T1 front: x(r) = 2 / (2 + r). Largest distance from the exact curve to the nearest stored point.
  const auto q = oracle::t1();
  auto coverage = [&](double step) {
    const auto db = iterative_r_front(q, step, 0.01);
    double worst = 0;
    for (int i = 0; i <= 1000; ++i) {
      const double r = i / 1000.0;
      Vector f = v2(-2.0 / (2.0 + r), -r);
      double best = kInf;
      for (const auto& p : db.points) best = std::min(best, (p.objectives - f).lpNorm<Eigen::Infinity>());
      worst = std::max(worst, best);
    }
    return worst;
  };
  const double a = coverage(0.5), b = coverage(0.1), c = coverage(0.02);
  EXPECT_GT(a, b);
  EXPECT_GT(b, c);
  EXPECT_LE(c, 0.011);
}

TEST(ParetoProperty, SandwichPointsAreEpsCloseToBruteForce) {
  std::mt19937_64 rng(53);
  const double delta = 0.04, h = 1e-3, level = 0.5;
  for (int inst = 0; inst < 3; ++inst) {
    const auto q = oracle::random_small_qcqp(rng, 2, 3, 0.3);
    const LevelLpProblem prob(q, level);
    const auto db = sandwich_front(prob, delta);
    std::vector<Vector> fs;
    for (const auto& g : oracle::qcqp_grid(q, h)) {
      if (g.r >= level) fs.push_back(q.objectives * g.x);
    }
    const auto front = oracle::nondominated(fs);
    ASSERT_FALSE(front.empty());
    double resolution = 0;
    for (int i = 0; i < 2; ++i) resolution = std::max(resolution, h * q.objectives.row(i).lpNorm<1>() / db.ranges[i]);
    for (const auto& p : db.points) EXPECT_LE(eps_efficiency(p.objectives, front, db.ranges), delta + resolution);
  }
}
