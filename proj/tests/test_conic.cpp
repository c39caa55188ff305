#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "irnav/backend.hpp"
#include "irnav/pareto.hpp"
#include "irnav/relaxation.hpp"
#include "oracles.hpp"

using namespace irnav;

namespace {

LpInstance max_x(double a) {
  LpInstance lp;
  lp.cost = Vector::Constant(1, -1.0);
  lp.A_ub = Matrix::Constant(1, 1, a);
  lp.b_ub = Vector::Constant(1, 2.0);
  lp.lower = Vector::Zero(1);
  lp.upper = Vector::Constant(1, 10.0);
  return lp;
}

LpInstance random_lp(std::mt19937_64& rng, int n, int m) {
  std::uniform_real_distribution<double> u(0, 1);
  LpInstance lp;
  lp.cost = Vector::NullaryExpr(n, [&] { return -1.0 + 2.0 * u(rng); });
  lp.A_ub = Matrix::NullaryExpr(m, n, [&] { return -0.3 + u(rng); });
  lp.b_ub = Vector::NullaryExpr(m, [&] { return 0.5 + u(rng); });
  lp.lower = Vector::Zero(n);
  lp.upper = Vector::Constant(n, 3.0);
  if (n > 2) {
    lp.A_eq = Matrix::Ones(1, n);
    lp.b_eq = Vector::Constant(1, 1.0);
  }
  return lp;
}

ScalarSdp t1_max_r() {
  const auto sdp = build_sdp(oracle::t1(true));
  return scalarize_sdp(sdp, Vector::Unit(2, 1));
}

}  // namespace

TEST(Lp, Examples) {
  auto a = solve_lp(max_x(2.0));
  ASSERT_EQ(a.status, SolveStatus::optimal);
  EXPECT_NEAR(a.primal[0], 1.0, 1e-10);
  auto b = solve_lp(max_x(3.0));
  ASSERT_EQ(b.status, SolveStatus::optimal);
  EXPECT_NEAR(b.primal[0], 2.0 / 3.0, 1e-10);

  LpInstance bad;
  bad.cost = Vector::Zero(1);
  bad.A_ub.resize(2, 1);
  bad.A_ub << 1, -1;
  bad.b_ub = Vector(2);
  bad.b_ub << 1, -2;
  EXPECT_EQ(solve_lp(bad).status, SolveStatus::infeasible);
}

TEST(Lp, UnboundedDetected) {
  LpInstance lp;
  lp.cost = Vector::Constant(1, -1.0);
  lp.lower = Vector::Zero(1);
  lp.upper = Vector::Constant(1, kInf);
  EXPECT_EQ(solve_lp(lp).status, SolveStatus::unbounded);
}

TEST(Lp, NonFiniteDataRejected) {
  auto lp = max_x(2.0);
  lp.A_ub(0, 0) = std::nan("");
  EXPECT_THROW(solve_lp(lp), ValidationError);
}

TEST(LpProperty, WeakDualityAndCertifiedGap) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 60; ++t) {
    const auto lp = random_lp(rng, 2 + t % 4, 1 + t % 5);
    const auto rep = solve_lp(lp);
    if (rep.status != SolveStatus::optimal) continue;
    EXPECT_GE(rep.objective, rep.dual_bound - 1e-9);
    EXPECT_LE(rep.duality_gap, 1e-8 * (1 + std::abs(rep.objective)));
    EXPECT_LE(lp_residual(lp, rep.primal), 1e-8);
  }
}

TEST(Sdp, Examples) {
  ScalarSdp s;
  s.dim = 2;
  s.objective = sym_entry(2, 1, 1, 1.0);
  s.constraints.push_back({sym_entry(2, 0, 0, 1.0), Sense::eq, 1.0});
  const auto a = solve_sdp(s);
  ASSERT_EQ(a.status, SolveStatus::optimal);
  EXPECT_NEAR(a.primal_objective, 0.0, 1e-7);
  EXPECT_NEAR(a.Z(0, 0), 1.0, 1e-7);
  EXPECT_NEAR(a.Z(1, 1), 0.0, 1e-6);

  const auto t1 = solve_sdp(t1_max_r());
  ASSERT_EQ(t1.status, SolveStatus::optimal);
  EXPECT_NEAR(t1.primal_objective, -1.0, 1e-6);

  ScalarSdp inf = s;
  inf.constraints.push_back({sym_entry(2, 0, 0, 1.0), Sense::le, 0.0});
  EXPECT_EQ(solve_sdp(inf).status, SolveStatus::infeasible);
}

TEST(Sdp, RankExamples) {
  Vector z(3);
  z << 1, 0.5, -2;
  EXPECT_EQ(rank_of(z * z.transpose()), 1);
  EXPECT_EQ(rank_of(Matrix::Identity(4, 4)), 4);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1;
  d(1, 1) = 1e-12;
  EXPECT_EQ(rank_of(d, 1e-6), 1);
  EXPECT_EQ(rank_of(Matrix::Zero(3, 3)), 0);
}

TEST(SdpProperty, ReportedResidualMatchesRecomputation) {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 12; ++t) {
    const auto q = oracle::random_small_qcqp(rng, 2, 3, 0.3);
    const auto sdp = build_sdp(q);
    std::uniform_real_distribution<double> u(0.05, 1);
    const Vector w = Vector::NullaryExpr(3, [&] { return u(rng); });
    const auto sc = scalarize_sdp(sdp, w);
    const auto rep = solve_sdp(sc);
    ASSERT_TRUE(rep.status == SolveStatus::optimal || rep.status == SolveStatus::near_optimal);
    const double again = sdp_residual(sc, rep.Z);
    EXPECT_LE(std::abs(again - rep.max_residual), 10 * 1e-8 + 1e-12);
    EXPECT_GE(rep.min_eigenvalue, -1e-8);
  }
}

TEST(Backend, TextFormatsRoundTrip) {
  const auto sc = t1_max_r();
  std::stringstream ss;
  write_sdp_text(ss, sc);
  const auto back = read_sdp_text(ss);
  EXPECT_EQ(back.dim, sc.dim);
  ASSERT_EQ(back.constraints.size(), sc.constraints.size());
  EXPECT_EQ(Matrix(back.objective), Matrix(sc.objective));
  for (std::size_t i = 0; i < sc.constraints.size(); ++i) {
    EXPECT_EQ(Matrix(back.constraints[i].a), Matrix(sc.constraints[i].a));
    EXPECT_EQ(back.constraints[i].sense, sc.constraints[i].sense);
    EXPECT_EQ(back.constraints[i].rhs, sc.constraints[i].rhs);
  }

  std::mt19937_64 rng(23);
  const auto lp = random_lp(rng, 4, 3);
  std::stringstream ls;
  write_lp_text(ls, lp);
  const auto lb = read_lp_text(ls);
  EXPECT_EQ(lb.cost, lp.cost);
  EXPECT_EQ(lb.A_ub, lp.A_ub);
  EXPECT_EQ(lb.A_eq, lp.A_eq);
  EXPECT_EQ(lb.upper, lp.upper);

  std::stringstream garbage("# irnav-sdp 1\ndim x\n");
  EXPECT_THROW(read_sdp_text(garbage), ParseError);
}

TEST(Backend, ProcessBackendAgreesWithBuiltin) {
  ProcessBackend proc(IRNAV_CLI_PATH);
  const auto builtin = builtin_backend();
  std::mt19937_64 rng(24);
  for (int t = 0; t < 4; ++t) {
    const auto lp = random_lp(rng, 3, 3);
    const auto a = builtin->solve_lp(lp), b = proc.solve_lp(lp);
    ASSERT_EQ(a.status, b.status);
    if (a.status == SolveStatus::optimal) EXPECT_NEAR(a.objective, b.objective, 1e-5);
  }
  for (int t = 0; t < 3; ++t) {
    const auto q = oracle::random_small_qcqp(rng, 2, 2, 0.2);
    const auto sc = scalarize_sdp(build_sdp(q), Vector::Ones(3));
    const auto a = builtin->solve_sdp(sc), b = proc.solve_sdp(sc);
    EXPECT_EQ(a.status, b.status);
    EXPECT_NEAR(a.primal_objective, b.primal_objective, 1e-5);
  }
}

TEST(Backend, EnvironmentSelectsProcessBackend) {
  ::setenv("IRNAV_SOLVER", IRNAV_CLI_PATH, 1);
  const auto b = make_backend_from_env();
  EXPECT_EQ(b->name(), std::string("process:") + IRNAV_CLI_PATH);
  const auto rep = b->solve_lp(max_x(3.0));
  EXPECT_NEAR(rep.primal[0], 2.0 / 3.0, 1e-9);
  ::unsetenv("IRNAV_SOLVER");
  EXPECT_EQ(make_backend_from_env()->name(), "builtin");
}

TEST(Backend, ProcessBackendMissingExecutableIsSolverError) {
  ProcessBackend proc("/nonexistent/irnav-solver");
  EXPECT_THROW(proc.solve_lp(max_x(2.0)), SolverError);
}
