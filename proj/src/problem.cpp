#include "irnav/problem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace irnav {

using nlohmann::json;

namespace {

double bound_from_json(const json& v, double absent) {
  if (v.is_null()) return absent;
  if (!v.is_number()) throw ParseError("bound must be a number or null");
  return v.get<double>();
}

json bound_to_json(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

Vector bounds_vector(const json& v, int n, double absent, const char* field) {
  Vector out(n);
  if (v.is_null() || v.is_number()) {
    out.setConstant(bound_from_json(v, absent));
    return out;
  }
  if (!v.is_array() || static_cast<int>(v.size()) != n) {
    throw ParseError(std::string("fluence_bounds.") + field + ": expected scalar or array of length " +
                     std::to_string(n));
  }
  for (int j = 0; j < n; ++j) out[j] = bound_from_json(v[j], absent);
  return out;
}

SparseMatrix read_binary_triplets(const std::filesystem::path& path, int rows, int cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("dose_matrix.path: cannot open " + path.string());
  std::vector<Triplet> triplets;
  while (true) {
    unsigned char buf[24];
    in.read(reinterpret_cast<char*>(buf), sizeof buf);
    if (in.gcount() == 0) break;
    if (in.gcount() != sizeof buf) throw ParseError("dose_matrix: truncated binary triplet file");
    std::uint64_t i = 0, j = 0, bits = 0;
    for (int b = 7; b >= 0; --b) {
      i = (i << 8) | buf[b];
      j = (j << 8) | buf[8 + b];
      bits = (bits << 8) | buf[16 + b];
    }
    double v;
    static_assert(sizeof v == sizeof bits);
    std::memcpy(&v, &bits, sizeof v);
    if (i >= static_cast<std::uint64_t>(rows) || j >= static_cast<std::uint64_t>(cols)) {
      throw ValidationError("dose_matrix.entries: index out of range");
    }
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
  }
  SparseMatrix m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

void write_binary_triplets(const std::filesystem::path& path, const SparseMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (int i = 0; i < m.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(m, i); it; ++it) {
      std::uint64_t words[3] = {static_cast<std::uint64_t>(it.row()), static_cast<std::uint64_t>(it.col()), 0};
      double v = it.value();
      std::memcpy(&words[2], &v, sizeof v);
      unsigned char buf[24];
      for (int w = 0; w < 3; ++w) {
        for (int b = 0; b < 8; ++b) buf[8 * w + b] = static_cast<unsigned char>(words[w] >> (8 * b));
      }
      out.write(reinterpret_cast<const char*>(buf), sizeof buf);
    }
  }
}

}  // namespace

std::string to_string(RowSide side) {
  switch (side) {
    case RowSide::upper: return "upper";
    case RowSide::lower: return "lower";
    case RowSide::mean_upper: return "mean_upper";
  }
  return "unknown";
}

int ProblemModel::structure_index(std::string_view name) const {
  for (std::size_t s = 0; s < structures.size(); ++s) {
    if (structures[s].name == name) return static_cast<int>(s);
  }
  return -1;
}

const Structure& ProblemModel::structure(std::string_view name) const {
  int s = structure_index(name);
  if (s < 0) throw ValidationError("unknown structure '" + std::string(name) + "'");
  return structures[s];
}

void ProblemModel::validate() const {
  if (num_voxels <= 0) throw ValidationError("num_voxels: must be positive");
  if (num_beamlets <= 0) throw ValidationError("num_beamlets: must be positive");
  if (dose_matrix.rows() != num_voxels || dose_matrix.cols() != num_beamlets) {
    throw ValidationError("dose_matrix: shape does not match num_voxels x num_beamlets");
  }
  for (int i = 0; i < dose_matrix.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(dose_matrix, i); it; ++it) {
      if (!(it.value() >= 0.0) || !std::isfinite(it.value())) {
        throw ValidationError("dose_matrix: entry (" + std::to_string(it.row()) + "," + std::to_string(it.col()) +
                              ") must be finite and non-negative");
      }
    }
  }
  if (fluence_lower.size() != num_beamlets || fluence_upper.size() != num_beamlets) {
    throw ValidationError("fluence_bounds: length must equal num_beamlets");
  }
  for (int j = 0; j < num_beamlets; ++j) {
    if (fluence_lower[j] > fluence_upper[j]) {
      throw ValidationError("fluence_bounds: lower[" + std::to_string(j) + "] exceeds upper");
    }
  }
  if (structures.empty()) throw ValidationError("structures: list is empty");
  bool any_role = false;
  for (std::size_t s = 0; s < structures.size(); ++s) {
    const auto& st = structures[s];
    const std::string field = "structures[" + std::to_string(s) + "] '" + st.name + "'";
    if (st.voxel_indices.empty()) throw ValidationError(field + ": voxels must be non-empty");
    for (int v : st.voxel_indices) {
      if (v < 0 || v >= num_voxels) throw ValidationError(field + ": voxel index " + std::to_string(v) + " out of range");
    }
    if (st.lower_bound > st.upper_bound) {
      std::ostringstream msg;
      msg << field << ": lb " << st.lower_bound << " exceeds ub " << st.upper_bound;
      throw ValidationError(msg.str());
    }
    any_role = any_role || st.is_constrained || st.is_optimized;
  }
  if (!any_role) throw ValidationError("structures: at least one structure must be constrained or optimized");
  for (std::size_t k = 0; k < objectives.size(); ++k) {
    if (objectives[k].coefficients.size() != num_beamlets) {
      throw ValidationError("objectives[" + std::to_string(k) + "]: coefficient length must equal num_beamlets");
    }
  }
}

ProblemModel problem_from_json(const json& doc, const std::filesystem::path& base_dir) {
  ProblemModel model;
  try {
    model.num_voxels = doc.at("num_voxels").get<int>();
    model.num_beamlets = doc.at("num_beamlets").get<int>();
    if (model.num_voxels <= 0) throw ValidationError("num_voxels: must be positive");
    if (model.num_beamlets <= 0) throw ValidationError("num_beamlets: must be positive");

    for (const auto& js : doc.at("structures")) {
      Structure st;
      st.name = js.at("name").get<std::string>();
      st.voxel_indices = js.at("voxels").get<std::vector<int>>();
      std::sort(st.voxel_indices.begin(), st.voxel_indices.end());
      st.voxel_indices.erase(std::unique(st.voxel_indices.begin(), st.voxel_indices.end()), st.voxel_indices.end());
      st.lower_bound = bound_from_json(js.value("lb", json()), -kInf);
      st.upper_bound = bound_from_json(js.value("ub", json()), kInf);
      st.is_constrained = js.value("constrained", false);
      st.is_optimized = js.value("optimized", false);
      if (js.contains("mean_ub") && !js["mean_ub"].is_null()) st.mean_upper_bound = js["mean_ub"].get<double>();
      model.structures.push_back(std::move(st));
    }

    const auto& fb = doc.at("fluence_bounds");
    model.fluence_lower = bounds_vector(fb.value("lower", json()), model.num_beamlets, -kInf, "lower");
    model.fluence_upper = bounds_vector(fb.value("upper", json()), model.num_beamlets, kInf, "upper");

    const auto& dm = doc.at("dose_matrix");
    const std::string format = dm.value("format", "triplets");
    const int rows = dm.value("rows", model.num_voxels);
    const int cols = dm.value("cols", model.num_beamlets);
    if (rows != model.num_voxels || cols != model.num_beamlets) {
      throw ValidationError("dose_matrix: rows/cols do not match num_voxels/num_beamlets");
    }
    if (format == "triplets") {
      std::vector<Triplet> triplets;
      for (const auto& e : dm.at("entries")) {
        if (!e.is_array() || e.size() != 3) throw ParseError("dose_matrix.entries: each entry must be [i, j, v]");
        const auto i = e[0].get<long long>();
        const auto j = e[1].get<long long>();
        if (i < 0 || i >= rows || j < 0 || j >= cols) {
          throw ValidationError("dose_matrix.entries: index (" + std::to_string(i) + "," + std::to_string(j) +
                                ") out of range");
        }
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), e[2].get<double>());
      }
      model.dose_matrix.resize(rows, cols);
      model.dose_matrix.setFromTriplets(triplets.begin(), triplets.end());
    } else if (format == "binary_triplets") {
      std::filesystem::path p = dm.at("path").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      model.dose_matrix = read_binary_triplets(p, rows, cols);
    } else {
      throw ParseError("dose_matrix.format: unsupported '" + format + "'");
    }
    model.dose_matrix.makeCompressed();

    if (doc.contains("objectives")) {
      for (const auto& jo : doc["objectives"]) {
        const std::string kind = jo.value("kind", "mean");
        const std::string name = jo.value("name", "");
        if (kind == "mean") {
          const std::string structure = jo.at("structure").get<std::string>();
          const int sign = jo.value("sign", 1);
          if (sign != 1 && sign != -1) throw ValidationError("objectives." + name + ".sign: must be +1 or -1");
          if (model.structure_index(structure) < 0) {
            throw ValidationError("objectives." + name + ".structure: unknown structure '" + structure + "'");
          }
          LinearObjective obj = mean_objective(model, structure, sign);
          if (!name.empty()) obj.name = name;
          model.objectives.push_back(std::move(obj));
        } else if (kind == "explicit") {
          LinearObjective obj;
          obj.name = name;
          auto c = jo.at("coefficients").get<std::vector<double>>();
          if (static_cast<int>(c.size()) != model.num_beamlets) {
            throw ValidationError("objectives." + name + ".coefficients: length must equal num_beamlets");
          }
          obj.coefficients = Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size()));
          model.objectives.push_back(std::move(obj));
        } else {
          throw ParseError("objectives." + name + ".kind: unsupported '" + kind + "'");
        }
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed problem document: ") + e.what());
  }
  model.validate();
  return model;
}

json problem_to_json(const ProblemModel& model) {
  json doc;
  doc["num_voxels"] = model.num_voxels;
  doc["num_beamlets"] = model.num_beamlets;
  json structures = json::array();
  for (const auto& st : model.structures) {
    json js{{"name", st.name},
            {"voxels", st.voxel_indices},
            {"lb", bound_to_json(st.lower_bound)},
            {"ub", bound_to_json(st.upper_bound)},
            {"constrained", st.is_constrained},
            {"optimized", st.is_optimized}};
    if (st.mean_upper_bound) js["mean_ub"] = *st.mean_upper_bound;
    structures.push_back(std::move(js));
  }
  doc["structures"] = std::move(structures);
  json lower = json::array(), upper = json::array();
  for (int j = 0; j < model.num_beamlets; ++j) {
    lower.push_back(bound_to_json(model.fluence_lower[j]));
    upper.push_back(bound_to_json(model.fluence_upper[j]));
  }
  doc["fluence_bounds"] = {{"lower", lower}, {"upper", upper}};
  json objectives = json::array();
  for (const auto& obj : model.objectives) {
    if (obj.mean_of_structure) {
      objectives.push_back({{"name", obj.name}, {"kind", "mean"}, {"structure", *obj.mean_of_structure}, {"sign", obj.sign}});
    } else {
      objectives.push_back({{"name", obj.name},
                            {"kind", "explicit"},
                            {"coefficients", std::vector<double>(obj.coefficients.begin(), obj.coefficients.end())}});
    }
  }
  doc["objectives"] = std::move(objectives);
  json entries = json::array();
  for (int i = 0; i < model.dose_matrix.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(model.dose_matrix, i); it; ++it) {
      entries.push_back(json::array({it.row(), it.col(), it.value()}));
    }
  }
  doc["dose_matrix"] = {{"format", "triplets"},
                        {"rows", model.num_voxels},
                        {"cols", model.num_beamlets},
                        {"entries", std::move(entries)}};
  return doc;
}

ProblemModel load_problem(const std::filesystem::path& path, ProblemFormat format) {
  if (format != ProblemFormat::json) throw ParseError("unsupported problem format");
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError("problem file " + path.string() + " is not valid JSON: " + e.what());
  }
  return problem_from_json(doc, path.parent_path());
}

void save_problem(const ProblemModel& model, const std::filesystem::path& path, bool binary_sidecar) {
  json doc = problem_to_json(model);
  if (binary_sidecar) {
    std::filesystem::path sidecar = path;
    sidecar.replace_extension(".dose.bin");
    write_binary_triplets(sidecar, model.dose_matrix);
    doc["dose_matrix"] = {{"format", "binary_triplets"},
                          {"rows", model.num_voxels},
                          {"cols", model.num_beamlets},
                          {"path", sidecar.filename().string()}};
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

NominalLp assemble_nominal(const ProblemModel& model, const AssembleOptions& options) {
  model.validate();
  const int n = model.num_beamlets;
  std::vector<Triplet> triplets;
  std::vector<double> rhs;
  NominalLp lp;

  auto push_row = [&](const SparseMatrix& d, int voxel, double sign, double bound, const Structure& st, RowSide side) {
    const int row = static_cast<int>(rhs.size());
    for (SparseMatrix::InnerIterator it(d, voxel); it; ++it) triplets.emplace_back(row, it.col(), sign * it.value());
    rhs.push_back(sign * bound);
    lp.row_provenance.push_back({st.name, voxel, side});
  };

  for (const auto& st : model.structures) {
    if (!st.is_constrained) continue;
    const bool has_upper = std::isfinite(st.upper_bound);
    const bool has_lower = std::isfinite(st.lower_bound) &&
                           !(options.omit_trivial_lower_rows && st.lower_bound <= 0.0);
    for (int v : st.voxel_indices) {
      if (has_upper) push_row(model.dose_matrix, v, 1.0, st.upper_bound, st, RowSide::upper);
      if (has_lower) push_row(model.dose_matrix, v, -1.0, st.lower_bound, st, RowSide::lower);
    }
    if (st.mean_upper_bound) {
      const LinearObjective g = mean_objective(model, st.name, 1);
      const int row = static_cast<int>(rhs.size());
      for (int j = 0; j < n; ++j) {
        if (g.coefficients[j] != 0.0) triplets.emplace_back(row, j, g.coefficients[j]);
      }
      rhs.push_back(*st.mean_upper_bound);
      lp.row_provenance.push_back({st.name, -1, RowSide::mean_upper});
    }
  }

  lp.constraint_matrix.resize(static_cast<Eigen::Index>(rhs.size()), n);
  lp.constraint_matrix.setFromTriplets(triplets.begin(), triplets.end());
  lp.constraint_matrix.makeCompressed();
  lp.rhs = Eigen::Map<const Vector>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  lp.objectives.resize(static_cast<Eigen::Index>(model.objectives.size()), n);
  for (std::size_t k = 0; k < model.objectives.size(); ++k) {
    lp.objectives.row(static_cast<Eigen::Index>(k)) = model.objectives[k].coefficients.transpose();
    lp.objective_names.push_back(model.objectives[k].name);
  }
  lp.lower = model.fluence_lower;
  lp.upper = model.fluence_upper;
  return lp;
}

LinearObjective mean_objective(const ProblemModel& model, std::string_view structure_name, int sign) {
  const Structure& st = model.structure(structure_name);
  if (st.voxel_indices.empty()) throw ValidationError("structure '" + st.name + "' has no voxels");
  LinearObjective obj;
  obj.name = std::string(sign < 0 ? "-mean(" : "mean(") + st.name + ")";
  obj.coefficients = Vector::Zero(model.num_beamlets);
  for (int v : st.voxel_indices) {
    for (SparseMatrix::InnerIterator it(model.dose_matrix, v); it; ++it) obj.coefficients[it.col()] += it.value();
  }
  obj.coefficients *= static_cast<double>(sign) / static_cast<double>(st.voxel_indices.size());
  obj.mean_of_structure = st.name;
  obj.sign = sign;
  return obj;
}

Vector dose(const ProblemModel& model, const Vector& fluence) {
  if (fluence.size() != model.num_beamlets) {
    throw ValidationError("fluence: length " + std::to_string(fluence.size()) + " does not match num_beamlets " +
                          std::to_string(model.num_beamlets));
  }
  return model.dose_matrix * fluence;
}

}  // namespace irnav
