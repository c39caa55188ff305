#include "irnav/serialize.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>

namespace irnav {

namespace {

json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double number_from(const json& v, const std::string& field) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::nan("");
  }
  if (v.is_null()) return std::nan("");
  throw ParseError(field + ": expected a number");
}

const json& need(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  return doc.at(key);
}

std::vector<std::string> strings_from(const json& doc, const char* key) {
  std::vector<std::string> out;
  if (!doc.contains(key)) return out;
  for (const auto& s : doc.at(key)) out.push_back(s.get<std::string>());
  return out;
}

}  // namespace

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
  return out;
}

Vector vector_from_json(const json& doc, const std::string& field) {
  if (!doc.is_array()) throw ParseError(field + ": expected an array");
  Vector v(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) v[static_cast<int>(i)] = number_from(doc[i], field);
  return v;
}

std::string digest(const json& doc) {
  const std::string text = doc.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string problem_hash(const ProblemModel& model) { return digest(problem_to_json(model)); }

json to_json(const Decision& d) {
  return {{"x_plus", vector_to_json(d.x_plus)},
          {"x_minus", vector_to_json(d.x_minus)},
          {"r", number(d.r)},
          {"rank", d.rank}};
}

Decision decision_from_json(const json& doc) {
  Decision d;
  d.x_plus = vector_from_json(need(doc, "x_plus"), "x_plus");
  d.x_minus = vector_from_json(doc.value("x_minus", json::array()), "x_minus");
  d.r = number_from(need(doc, "r"), "r");
  d.rank = doc.value("rank", 1);
  return d;
}

json to_json(const ParetoPoint& p) {
  return {{"id", p.id},
          {"objectives", vector_to_json(p.objectives)},
          {"decision", to_json(p.decision)},
          {"origin", to_string(p.origin)},
          {"params", {{"weights", vector_to_json(p.weights)}, {"bounds", vector_to_json(p.bounds)}}}};
}

ParetoPoint pareto_point_from_json(const json& doc) {
  ParetoPoint p;
  p.id = need(doc, "id").get<int>();
  p.objectives = vector_from_json(need(doc, "objectives"), "objectives");
  p.decision = decision_from_json(need(doc, "decision"));
  p.origin = point_origin_from_string(need(doc, "origin").get<std::string>());
  if (doc.contains("params")) {
    const auto& params = doc.at("params");
    p.weights = vector_from_json(params.value("weights", json::array()), "weights");
    p.bounds = vector_from_json(params.value("bounds", json::array()), "bounds");
  }
  return p;
}

json to_json(const ParetoDb& db) {
  json points = json::array();
  for (const auto& p : db.points) points.push_back(to_json(p));
  json facets = json::array();
  for (const auto& f : db.facets) facets.push_back({{"weights", vector_to_json(f.weights)}, {"offset", number(f.offset)}});
  json gaps = json::array();
  for (double g : db.gap_history) gaps.push_back(number(g));
  json levels = json::array();
  for (double l : db.levels) levels.push_back(number(l));
  return {{"format", "irnav-paretodb/1"},
          {"kind", db.kind},
          {"problem_hash", db.problem_hash},
          {"delta", number(db.delta)},
          {"quality_gap", number(db.quality_gap)},
          {"objective_names", db.objective_names},
          {"normalization", {{"kind", db.normalization}, {"ideal", vector_to_json(db.ideal)}, {"ranges", vector_to_json(db.ranges)}}},
          {"points", points},
          {"facets", facets},
          {"solve_count", db.solve_count},
          {"failed_solves", db.failed_solves},
          {"gap_history", gaps},
          {"levels", levels}};
}

ParetoDb pareto_db_from_json(const json& doc) {
  ParetoDb db;
  db.kind = doc.value("kind", "");
  db.problem_hash = doc.value("problem_hash", "");
  db.delta = number_from(need(doc, "delta"), "delta");
  db.quality_gap = number_from(need(doc, "quality_gap"), "quality_gap");
  db.objective_names = strings_from(doc, "objective_names");
  if (doc.contains("normalization")) {
    const auto& n = doc.at("normalization");
    db.normalization = n.value("kind", "anchor_range");
    db.ideal = vector_from_json(n.value("ideal", json::array()), "ideal");
    db.ranges = vector_from_json(n.value("ranges", json::array()), "ranges");
  }
  for (const auto& p : need(doc, "points")) db.points.push_back(pareto_point_from_json(p));
  for (const auto& f : doc.value("facets", json::array())) {
    db.facets.push_back({vector_from_json(need(f, "weights"), "weights"), number_from(need(f, "offset"), "offset")});
  }
  db.solve_count = doc.value("solve_count", 0);
  db.failed_solves = doc.value("failed_solves", 0);
  for (const auto& g : doc.value("gap_history", json::array())) db.gap_history.push_back(number_from(g, "gap_history"));
  for (const auto& l : doc.value("levels", json::array())) db.levels.push_back(number_from(l, "levels"));
  if (db.quality_gap < 0.0) throw ParseError("quality_gap: must be non-negative");
  return db;
}

json to_json(const QcqpPoint& p) {
  return {{"x_plus", vector_to_json(p.x_plus)},
          {"x_minus", vector_to_json(p.x_minus)},
          {"x", vector_to_json(p.x())},
          {"r", number(p.r)},
          {"objectives", vector_to_json(p.objective_values)}};
}

QcqpPoint qcqp_point_from_json(const json& doc) {
  QcqpPoint p;
  if (doc.contains("x_plus")) {
    p.x_plus = vector_from_json(doc.at("x_plus"), "x_plus");
    p.x_minus = vector_from_json(doc.value("x_minus", json::array()), "x_minus");
  } else {
    p.x_plus = vector_from_json(need(doc, "x"), "x");
  }
  p.r = number_from(need(doc, "r"), "r");
  p.objective_values = vector_from_json(doc.value("objectives", json::array()), "objectives");
  return p;
}

json to_json(const ProjectionResult& r) {
  return {{"input", {{"x_plus", vector_to_json(r.x_plus_sdp)}, {"x_minus", vector_to_json(r.x_minus_sdp)}, {"r", number(r.r_sdp)}}},
          {"output", to_json(r.output)},
          {"r", number(r.output.r)},
          {"binding_row", r.binding_row < 0 ? json(nullptr) : json(r.binding_row)},
          {"r_loss", number(r.r_loss)},
          {"max_residual", number(r.max_residual)},
          {"warning", r.warning},
          {"restored", r.restored},
          {"displacement", number(r.displacement)},
          {"message", r.message}};
}

json to_json(const EfficiencyVerdict& v) {
  return {{"level", to_string(v.level)},
          {"eps", number(v.eps)},
          {"witness", v.witness ? to_json(*v.witness) : json(nullptr)},
          {"evidence", v.evidence},
          {"lp_solves", v.lp_solves}};
}

json to_json(const TheoremReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"check", c.check},
                      {"point_id", c.point_id},
                      {"passed", c.passed},
                      {"measured", number(c.measured)},
                      {"detail", c.detail}});
  }
  return {{"checks", checks}, {"tolerance", r.tolerance}, {"failures", r.failures()}};
}

json to_json(const DvhCurve& c) {
  return {{"structure", c.structure}, {"dose", vector_to_json(c.dose_grid)}, {"volume", vector_to_json(c.volume_fraction)}};
}

json to_json(const ScenarioReport& r) {
  return {{"count", r.count},
          {"r", number(r.r)},
          {"seed", r.seed},
          {"violating_samples", r.violating_samples},
          {"violating_fraction", number(r.violating_fraction)},
          {"worst_violation", number(r.worst_violation)}};
}

json to_json(const ClusterGapReport& r) {
  json rows = json::array();
  for (const auto& s : r.structures) {
    rows.push_back({{"structure", s.structure},
                    {"max_gap", number(s.max_gap)},
                    {"mean_gap", number(s.mean_gap)},
                    {"unclustered_violations", s.unclustered_violations},
                    {"max_violation", number(s.max_violation)}});
  }
  return {{"structures", rows}, {"total_violations", r.total_violations}};
}

json to_json(const FeasibilityReport& r) {
  return {{"feasible", r.feasible},
          {"max_residual", number(r.max_residual)},
          {"worst_row", r.worst_row},
          {"structure", r.provenance.structure},
          {"voxel", r.provenance.voxel},
          {"side", to_string(r.provenance.side)},
          {"detail", r.detail}};
}

std::string canonical_dump(const json& doc, int indent) { return doc.dump(indent); }

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << canonical_dump(doc, 1) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace irnav
