#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "irnav/types.hpp"

namespace irnav {

/// A named voxel set with dose bounds in Gy. Infinite bounds mean "absent".
struct Structure {
  std::string name;
  std::vector<int> voxel_indices;
  double lower_bound = -kInf;
  double upper_bound = kInf;
  bool is_constrained = false;
  bool is_optimized = false;
  /// Experimental: bound on the structure's mean dose, emitted as one aggregated row.
  std::optional<double> mean_upper_bound;
};

/// One row of the objective matrix, always in minimization sense.
struct LinearObjective {
  std::string name;
  Vector coefficients;
  /// Set when the objective was derived as a structure mean; kept for round-tripping.
  std::optional<std::string> mean_of_structure;
  int sign = 1;
};

struct ProblemModel {
  int num_voxels = 0;
  int num_beamlets = 0;
  SparseMatrix dose_matrix;
  std::vector<Structure> structures;
  Vector fluence_lower;
  Vector fluence_upper;
  std::vector<LinearObjective> objectives;

  /// Throws ValidationError naming the first violated invariant.
  void validate() const;
  const Structure& structure(std::string_view name) const;
  int structure_index(std::string_view name) const;
};

enum class RowSide { upper, lower, mean_upper };

/// Where a stacked constraint row came from. `voxel` is a (super-)voxel id of the model.
struct RowProvenance {
  std::string structure;
  int voxel = -1;
  RowSide side = RowSide::upper;
};

/// The stacked one-sided LP  A x <= b,  l <= x <= u,  objectives G x.
struct NominalLp {
  SparseMatrix constraint_matrix;
  Vector rhs;
  Matrix objectives;
  std::vector<std::string> objective_names;
  Vector lower;
  Vector upper;
  std::vector<RowProvenance> row_provenance;

  int num_rows() const { return static_cast<int>(rhs.size()); }
  int num_vars() const { return static_cast<int>(lower.size()); }
};

struct AssembleOptions {
  /// Skip rows -D_i x <= 0 for zero lower bounds (redundant when l >= 0 and D >= 0).
  bool omit_trivial_lower_rows = false;
};

enum class ProblemFormat { json };

ProblemModel load_problem(const std::filesystem::path& path, ProblemFormat format = ProblemFormat::json);

/// Writes the problem document; with `binary_sidecar` the matrix goes to `<stem>.dose.bin`.
void save_problem(const ProblemModel& model, const std::filesystem::path& path, bool binary_sidecar = false);

/// `base_dir` resolves relative sidecar paths.
ProblemModel problem_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::json problem_to_json(const ProblemModel& model);

NominalLp assemble_nominal(const ProblemModel& model, const AssembleOptions& options = {});

/// g_j = sign * mean over the structure's voxels of D_ij.
LinearObjective mean_objective(const ProblemModel& model, std::string_view structure_name, int sign);

/// Voxel doses d = D x.
Vector dose(const ProblemModel& model, const Vector& fluence);

std::string to_string(RowSide side);

}  // namespace irnav
