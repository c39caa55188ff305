#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "irnav/evaluate.hpp"
#include "irnav/reconstruct.hpp"

namespace irnav {

using nlohmann::json;

json vector_to_json(const Vector& v);
Vector vector_from_json(const json& doc, const std::string& field = "vector");

/// 64-bit FNV-1a over the canonical dump, as 16 hex digits.
std::string digest(const json& doc);
std::string problem_hash(const ProblemModel& model);

json to_json(const Decision& d);
Decision decision_from_json(const json& doc);
json to_json(const ParetoPoint& p);
ParetoPoint pareto_point_from_json(const json& doc);
json to_json(const ParetoDb& db);
ParetoDb pareto_db_from_json(const json& doc);

json to_json(const QcqpPoint& p);
QcqpPoint qcqp_point_from_json(const json& doc);
json to_json(const ProjectionResult& r);
json to_json(const EfficiencyVerdict& v);
json to_json(const TheoremReport& r);
json to_json(const DvhCurve& c);
json to_json(const ScenarioReport& r);
json to_json(const ClusterGapReport& r);
json to_json(const FeasibilityReport& r);

/// Sorted keys, shortest round-trip doubles, non-finite numbers as null.
std::string canonical_dump(const json& doc, int indent = -1);
json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& doc);

}  // namespace irnav
