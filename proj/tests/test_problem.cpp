#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "irnav/phantom.hpp"
#include "irnav/problem.hpp"

using namespace irnav;

namespace {

ProblemModel one_row_model(double lb, double ub) {
  ProblemModel m;
  m.num_voxels = 1;
  m.num_beamlets = 2;
  Matrix D(1, 2);
  D << 1, 2;
  m.dose_matrix = D.sparseView();
  m.structures.push_back({"T", {0}, lb, ub, true, true, std::nullopt});
  m.fluence_lower = Vector::Zero(2);
  m.fluence_upper = Vector::Constant(2, 10);
  m.objectives.push_back(mean_objective(m, "T", 1));
  return m;
}

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "irnav_test_problem";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Problem, StackingMatchesHandExample) {
  const auto lp = assemble_nominal(one_row_model(1, 3));
  Matrix expected(2, 2);
  expected << 1, 2, -1, -2;
  EXPECT_EQ(Matrix(lp.constraint_matrix), expected);
  EXPECT_DOUBLE_EQ(lp.rhs[0], 3);
  EXPECT_DOUBLE_EQ(lp.rhs[1], -1);
  ASSERT_EQ(lp.row_provenance.size(), 2u);
  EXPECT_EQ(lp.row_provenance[0].side, RowSide::upper);
  EXPECT_EQ(lp.row_provenance[1].side, RowSide::lower);
}

TEST(Problem, ZeroLowerBoundRowKeptUnlessOmitted) {
  const auto m = one_row_model(0, 3);
  EXPECT_EQ(assemble_nominal(m).num_rows(), 2);
  AssembleOptions opt;
  opt.omit_trivial_lower_rows = true;
  EXPECT_EQ(assemble_nominal(m, opt).num_rows(), 1);
}

TEST(Problem, OverlappingStructuresDuplicateRows) {
  auto m = one_row_model(1, 3);
  m.structures.push_back({"U", {0}, -kInf, 5, true, false, std::nullopt});
  const auto lp = assemble_nominal(m);
  EXPECT_EQ(lp.num_rows(), 3);
  EXPECT_EQ(lp.row_provenance[2].structure, "U");
  EXPECT_EQ(lp.row_provenance[2].voxel, 0);
}

TEST(Problem, MeanObjectiveExamples) {
  ProblemModel m;
  m.num_voxels = 3;
  m.num_beamlets = 2;
  Matrix D(3, 2);
  D << 1, 3, 3, 5, 2, 2;
  m.dose_matrix = D.sparseView();
  m.structures.push_back({"A", {0, 1}, -kInf, kInf, false, true, std::nullopt});
  m.structures.push_back({"P", {2}, -kInf, kInf, false, true, std::nullopt});
  m.fluence_lower = Vector::Zero(2);
  m.fluence_upper = Vector::Ones(2);
  const auto a = mean_objective(m, "A", 1);
  EXPECT_DOUBLE_EQ(a.coefficients[0], 2);
  EXPECT_DOUBLE_EQ(a.coefficients[1], 4);
  const auto single = mean_objective(m, "P", 1);
  EXPECT_DOUBLE_EQ(single.coefficients[0], 2);
  const auto neg = mean_objective(m, "P", -1);
  EXPECT_DOUBLE_EQ(neg.coefficients[0], -2);
  EXPECT_DOUBLE_EQ(neg.coefficients[1], -2);
}

TEST(Problem, BoundInversionNamesStructure) {
  auto m = one_row_model(50, 40);
  try {
    m.validate();
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("T"), std::string::npos);
  }
}

TEST(Problem, EmptyStructureListRejected) {
  auto m = one_row_model(1, 3);
  m.structures.clear();
  m.objectives.clear();
  EXPECT_THROW(m.validate(), ValidationError);
}

TEST(Problem, VoxelIndexOutOfRangeRejected) {
  auto m = one_row_model(1, 3);
  m.structures[0].voxel_indices = {3};
  EXPECT_THROW(m.validate(), ValidationError);
}

TEST(Problem, RoundTripThroughFile) {
  PhantomSpec spec;
  spec.grid = 2;
  spec.beamlets = 2;
  const auto m = generate_phantom(spec);
  ASSERT_EQ(m.num_voxels, 4);
  const auto path = temp_file("phantom4.json");
  save_problem(m, path);
  const auto back = load_problem(path);
  EXPECT_EQ(back.num_voxels, 4);
  EXPECT_EQ(back.num_beamlets, 2);
  EXPECT_EQ(Matrix(back.dose_matrix), Matrix(m.dose_matrix));
  EXPECT_EQ(back.structures.size(), m.structures.size());

  const auto bin = temp_file("phantom4b.json");
  save_problem(m, bin, true);
  EXPECT_EQ(Matrix(load_problem(bin).dose_matrix), Matrix(m.dose_matrix));
}

TEST(Problem, MalformedFileIsParseError) {
  const auto path = temp_file("bad.json");
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(load_problem(path), ParseError);
  EXPECT_THROW(load_problem(temp_file("missing.json")), ParseError);
}

TEST(Problem, RowCountAndDoseWindowEquivalence) {
  PhantomSpec spec;
  spec.grid = 6;
  spec.beamlets = 4;
  const auto m = generate_phantom(spec);
  const auto lp = assemble_nominal(m);
  int expected = 0;
  for (const auto& s : m.structures) {
    if (!s.is_constrained) continue;
    const int k = static_cast<int>(s.voxel_indices.size());
    expected += (std::isfinite(s.upper_bound) ? k : 0) + (std::isfinite(s.lower_bound) ? k : 0);
  }
  EXPECT_EQ(lp.num_rows(), expected);
  EXPECT_EQ(static_cast<int>(lp.row_provenance.size()), lp.num_rows());

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  const Matrix A(lp.constraint_matrix);
  for (int t = 0; t < 200; ++t) {
    const Vector x = Vector::NullaryExpr(m.num_beamlets, [&] { return u(rng); });
    const bool rows_hold = ((A * x - lp.rhs).array() <= 0).all();
    const Vector d = dose(m, x);
    bool window = true;
    for (const auto& s : m.structures) {
      if (!s.is_constrained) continue;
      for (int v : s.voxel_indices) window = window && d[v] <= s.upper_bound && d[v] >= s.lower_bound;
    }
    EXPECT_EQ(rows_hold, window);
  }
}

TEST(Problem, MeanObjectiveMatchesDenseSum) {
  PhantomSpec spec;
  spec.grid = 7;
  spec.beamlets = 5;
  const auto m = generate_phantom(spec);
  const Matrix D(m.dose_matrix);
  for (const auto& s : m.structures) {
    Vector sum = Vector::Zero(m.num_beamlets);
    for (int v : s.voxel_indices) sum += D.row(v).transpose();
    sum /= static_cast<double>(s.voxel_indices.size());
    EXPECT_LT((mean_objective(m, s.name, 1).coefficients - sum).cwiseAbs().maxCoeff(), 1e-12) << s.name;
  }
}
