#include <gtest/gtest.h>

#include <random>

#include "irnav/pareto.hpp"
#include "irnav/relaxation.hpp"
#include "oracles.hpp"

using namespace irnav;

namespace {

double quad(const Matrix& M, const Vector& z) { return z.dot(M * z); }

Vector random_feasible_x(std::mt19937_64& rng, const QcqpInstance& q) {
  std::uniform_real_distribution<double> u(0, 1);
  for (;;) {
    Vector x = Vector::NullaryExpr(q.num_vars(), [&] { return u(rng); });
    x = q.lower + x.cwiseProduct(q.upper - q.lower);
    if (oracle::max_r_ratio(q, x) >= 0) return x;
    x *= 0.5;
    if (oracle::max_r_ratio(q, x) >= 0) return x;
  }
}

}  // namespace

TEST(Relaxation, HomogenizeExamples) {
  GenericQcqp g;
  g.terms.push_back({Matrix::Ones(1, 1), Vector::Zero(1), -1.0});
  Vector c(2);
  c << 3, -1;
  g.terms.push_back({Matrix::Zero(2, 2), c / 2, 0.0});
  EXPECT_THROW(homogenize_qcqp(g), ValidationError);
  g.terms.pop_back();
  const auto ms = homogenize_qcqp(g);
  ASSERT_EQ(ms.size(), 2u);
  Matrix expect(2, 2);
  expect << -1, 0, 0, 1;
  EXPECT_EQ(ms[0], expect);
  Matrix norm = Matrix::Zero(2, 2);
  norm(0, 0) = 1;
  EXPECT_EQ(ms[1], norm);

  GenericQcqp lin;
  lin.terms.push_back({Matrix::Zero(2, 2), c / 2, 0.0});
  const auto ml = homogenize_qcqp(lin);
  EXPECT_EQ(ml[0](0, 1), 1.5);
  EXPECT_EQ(ml[0](2, 0), -0.5);
  EXPECT_EQ(ml[0].bottomRightCorner(2, 2), Matrix::Zero(2, 2));
}

TEST(Relaxation, HomogenizeSymmetrizesAndEvaluates) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> nd;
  GenericQcqp g;
  for (int i = 0; i < 3; ++i) {
    Matrix Q = Matrix::NullaryExpr(3, 3, [&] { return nd(rng); });
    g.terms.push_back({Q, Vector::NullaryExpr(3, [&] { return nd(rng); }), nd(rng)});
  }
  const auto ms = homogenize_qcqp(g);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(ms[i], ms[i].transpose());
    for (int t = 0; t < 5; ++t) {
      const Vector x = Vector::NullaryExpr(3, [&] { return nd(rng); });
      Vector z(4);
      z << 1, x;
      const auto& term = g.terms[i];
      EXPECT_NEAR(quad(ms[i], z), x.dot(term.Q * x) + 2 * term.q.dot(x) + term.gamma, 1e-10);
    }
  }
}

TEST(Relaxation, T1ConstraintBlockIdentity) {
  const auto sdp = build_sdp(oracle::t1(false));
  ASSERT_EQ(sdp.dim, 3);
  const Matrix M(sdp.constraint_blocks[0]);
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int t = 0; t < 5; ++t) {
    const double x = u(rng), r = u(rng);
    Vector z(3);
    z << 1, x, r;
    EXPECT_NEAR(quad(M, z), 2 * x + r * x - 2, 1e-12);
  }
}

TEST(Relaxation, RObjectiveReadsOffDiagonal) {
  const auto sdp = build_sdp(oracle::t1(true));
  ASSERT_EQ(sdp.num_objectives(), 2);
  Vector z(4);
  z << 1, 0.7, 0.2, 0.35;
  EXPECT_NEAR(quad(Matrix(sdp.objective_blocks[1]), z), -0.35, 1e-15);
  EXPECT_NEAR(quad(Matrix(sdp.objective_blocks[0]), z), -(0.7 - 0.2), 1e-15);

  ValidIneqOptions off;
  off.border_nonneg = off.diag_caps = off.full_nonneg = false;
  EXPECT_TRUE(build_sdp(oracle::t1(true), off).extra_linear.empty());
  EXPECT_FALSE(sdp.extra_linear.empty());
}

TEST(Relaxation, ScalarizeExamples) {
  auto q = oracle::t1(true);
  const auto sdp = build_sdp(q);
  EXPECT_EQ(Matrix(scalarize_sdp(sdp, Vector::Unit(2, 0)).objective), Matrix(sdp.objective_blocks[0]));
  EXPECT_EQ(Matrix(scalarize_sdp(sdp, Vector::Unit(2, 1)).objective), Matrix(sdp.objective_blocks[1]));

  q.objectives = Matrix::Constant(2, 1, -1.0);
  q.objective_names = {"a", "b"};
  const auto twin = build_sdp(q);
  Vector w(3);
  w << 1, 1, 0;
  EXPECT_EQ(Matrix(scalarize_sdp(twin, w).objective), 2 * Matrix(twin.objective_blocks[0]));
}

TEST(Relaxation, ExtractBorderExamples) {
  const auto sdp = build_sdp(oracle::t1(true));
  Vector z(4);
  z << 1, 0.5, 0, 0.2;
  const auto b = extract_border(sdp, z * z.transpose());
  EXPECT_EQ(b.x_plus[0], 0.5);
  EXPECT_EQ(b.x_minus[0], 0.0);
  EXPECT_EQ(b.r, 0.2);
  EXPECT_EQ(b.rank_estimate, 1);
  EXPECT_TRUE(b.rank_one);

  const auto id = extract_border(sdp, Matrix::Identity(4, 4));
  EXPECT_EQ(id.x_plus[0], 0.0);
  EXPECT_EQ(id.r, 0.0);
  EXPECT_EQ(id.rank_estimate, 4);

  EXPECT_THROW(extract_border(sdp, 2 * Matrix::Identity(4, 4)), ValidationError);
}

TEST(Relaxation, SolvedT1BorderFeasibleForLinearRows) {
  const auto sdp = build_sdp(oracle::t1(true));
  SdpRelaxationProblem prob(sdp);
  const auto sol = prob.solve_full(Vector::Ones(2));
  ASSERT_TRUE(sol.status == SolveStatus::optimal || sol.status == SolveStatus::near_optimal);
  EXPECT_LE(relaxation_residual(sdp, sol.Z), 1e-7);
  EXPECT_GE(sol.border.x_plus[0], -1e-9);
  EXPECT_GE(sol.border.r, -1e-9);
  EXPECT_LE(sol.border.r, 1 + 1e-9);
}

TEST(RelaxationProperty, RankOneLiftsOfFeasiblePointsSatisfyEverything) {
  std::mt19937_64 rng(33);
  ValidIneqOptions all;
  all.full_nonneg = true;
  for (int inst = 0; inst < 20; ++inst) {
    auto q = oracle::random_small_qcqp(rng, 1 + inst % 3, 1 + inst % 4, 0.3);
    q.split_negative = inst % 2 == 0;
    for (const auto& opts : {ValidIneqOptions{}, all}) {
      const auto sdp = build_sdp(q, opts);
      for (int t = 0; t < 10; ++t) {
        const Vector x = random_feasible_x(rng, q);
        const double rmax = oracle::max_r_ratio(q, x);
        const double r = std::uniform_real_distribution<double>(0, rmax)(rng);
        const auto p = make_point(q, x, r);
        ASSERT_TRUE(qcqp_feasible(q, p).feasible);
        EXPECT_LE(relaxation_residual(sdp, lift_point(sdp, p)), 1e-12);
      }
    }
  }
}

TEST(RelaxationProperty, BlocksAreExactlySymmetric) {
  std::mt19937_64 rng(34);
  const auto sdp = build_sdp(oracle::random_small_qcqp(rng, 3, 5, 0.2));
  auto check = [](const SymSparse& a) { EXPECT_EQ(Matrix(a), Matrix(a).transpose()); };
  for (const auto& b : sdp.constraint_blocks) check(b);
  for (const auto& b : sdp.objective_blocks) check(b);
  check(sdp.normalization);
  for (const auto& c : sdp.bound_linear) check(c.a);
  for (const auto& c : sdp.extra_linear) check(c.a);
}

TEST(Relaxation, FullLevelFaceRoundTrip) {
  const auto q = oracle::t1(false);
  const auto sdp = build_sdp(q);
  const auto sc = scalarize_sdp(sdp, Vector::Unit(2, 1));
  const auto face = restrict_to_full_level(sc, sdp.layout);
  ASSERT_TRUE(face.has_value());
  EXPECT_EQ(face->dim, sdp.dim - 1);
  const auto rep = solve_sdp(*face);
  ASSERT_EQ(rep.status, SolveStatus::optimal);
  const Matrix Z = expand_full_level(rep.Z, sdp.layout);
  EXPECT_NEAR(Z(0, sdp.layout.r()), 1.0, 1e-9);
  EXPECT_NEAR(Z(sdp.layout.r(), sdp.layout.r()), 1.0, 1e-9);
  EXPECT_LE(relaxation_residual(sdp, Z), 1e-7);
  EXPECT_NEAR(inner(sc.objective, Z), -1.0, 1e-7);
}

TEST(Relaxation, FaceRejectedWhenFullLevelInfeasible) {
  const auto sdp = build_sdp(oracle::t1());
  auto sc = scalarize_sdp(sdp, Vector::Unit(2, 1));
  // Z_0r <= 0.25 becomes Zr[0,0] <= 0.25 on the face, which contradicts Zr[0,0] = 1.
  sc.constraints.push_back({sym_entry(sdp.dim, 0, sdp.layout.r(), 0.5), Sense::le, 0.25});
  EXPECT_FALSE(restrict_to_full_level(sc, sdp.layout).has_value());
}
