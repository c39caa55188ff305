#include "irnav/session.hpp"

#include <chrono>
#include <cmath>
#include <ctime>

namespace irnav {

namespace fs = std::filesystem;

namespace {

const char* const kProblemFile = "problem.json";
const char* const kClusterFile = "cluster_map.json";
const char* const kManifestFile = "manifest.json";

std::string front_file(const std::string& name) { return "front_" + name + ".json"; }

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json config_to_json(const SessionConfig& c) {
  return {{"scale", c.scale},   {"delta", c.delta},     {"step", c.step},
          {"seed", c.seed},     {"eps_tol", c.eps_tol}, {"theorem_tol", c.theorem_tol},
          {"sdp_tol", c.sdp_tol}};
}

SessionConfig config_from_json(const json& doc) {
  SessionConfig c;
  c.scale = doc.value("scale", c.scale);
  c.delta = doc.value("delta", c.delta);
  c.step = doc.value("step", c.step);
  c.seed = doc.value("seed", c.seed);
  c.eps_tol = doc.value("eps_tol", c.eps_tol);
  c.theorem_tol = doc.value("theorem_tol", c.theorem_tol);
  c.sdp_tol = doc.value("sdp_tol", c.sdp_tol);
  return c;
}

json front_summary(const ParetoDb& db) {
  return {{"kind", db.kind},
          {"points", db.points.size()},
          {"solve_count", db.solve_count},
          {"failed_solves", db.failed_solves},
          {"quality_gap", db.quality_gap},
          {"delta", db.delta},
          {"levels", db.levels.size()},
          {"problem_hash", db.problem_hash}};
}

QcqpPoint point_of_decision(const QcqpInstance& q, const Decision& d) {
  QcqpPoint p;
  p.x_plus = d.x_plus;
  p.x_minus = q.split_negative ? d.x_minus : Vector();
  p.r = d.r;
  evaluate_objectives(q, p);
  return p;
}

}  // namespace

QcqpInstance session_qcqp(const ProblemModel& model, double scale) {
  AssembleOptions opts;
  opts.omit_trivial_lower_rows = true;
  const NominalLp lp = assemble_nominal(model, opts);
  const bool split = (lp.lower.array() < 0.0).any();
  return assemble_qcqp(lp, scale, split);
}

Session::Session(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
  load();
}

void Session::load() {
  const fs::path manifest = dir_ / kManifestFile;
  if (fs::exists(manifest)) {
    const json m = read_json_file(manifest);
    config_ = config_from_json(m.value("config", json::object()));
    artifacts_ = m.value("artifacts", json::object());
  }
  if (fs::exists(dir_ / kProblemFile)) {
    problem_ = load_problem(dir_ / kProblemFile);
    hash_ = problem_hash(*problem_);
  }
  if (fs::exists(dir_ / kClusterFile)) clusters_ = cluster_map_from_json(read_json_file(dir_ / kClusterFile));
  if (problem_) rebuild_working();
  auto load_front = [&](const std::string& name, std::optional<ParetoDb>& slot) {
    const fs::path p = dir_ / front_file(name);
    if (fs::exists(p)) slot = pareto_db_from_json(read_json_file(p));
  };
  load_front("sdp", sdp_front_);
  load_front("iter", iter_front_);
  load_front("worstcase", worstcase_front_);
}

void Session::rebuild_working() {
  if (clusters_) {
    clustered_ = aggregate(*problem_, *clusters_);
  } else {
    clustered_.reset();
  }
  const ProblemModel& m = working_model();
  qcqp_ = session_qcqp(m, config_.scale);
  sdp_ = build_sdp(*qcqp_);
  working_hash_ = digest({{"model", problem_hash(m)}, {"scale", config_.scale}});
}

const ProblemModel& Session::problem() const {
  if (!problem_) throw ConflictError("no problem loaded; run `irnav phantom` first");
  return *problem_;
}

const ProblemModel& Session::working_model() const { return clustered_ ? clustered_->model : problem(); }

std::string Session::working_hash() const {
  problem();
  return working_hash_;
}

const QcqpInstance& Session::qcqp() const {
  problem();
  return *qcqp_;
}

const SdpInstance& Session::sdp() const {
  problem();
  return *sdp_;
}

void Session::check_front(const ParetoDb& db, const std::string& name) const {
  if (db.problem_hash != working_hash()) {
    throw ConflictError("front '" + name + "' was computed for instance " + db.problem_hash + " but the session is at " +
                        working_hash_ + "; recompute it");
  }
}

const ParetoDb& Session::front(const std::string& name) const {
  const std::optional<ParetoDb>* slot = nullptr;
  std::string cmd;
  if (name == "sdp") {
    slot = &sdp_front_;
    cmd = "front-sdp";
  } else if (name == "iter") {
    slot = &iter_front_;
    cmd = "front-iter";
  } else if (name == "worstcase") {
    slot = &worstcase_front_;
    cmd = "front-worstcase";
  } else {
    throw ValidationError("front: unknown name '" + name + "' (expected sdp, iter or worstcase)");
  }
  if (!slot->has_value()) throw ConflictError("no " + name + " front computed yet; run `irnav " + cmd + "` first");
  check_front(**slot, name);
  return **slot;
}

void Session::set_problem(ProblemModel model) {
  model.validate();
  save_problem(model, dir_ / kProblemFile);
  problem_ = std::move(model);
  hash_ = problem_hash(*problem_);
  clusters_.reset();
  fs::remove(dir_ / kClusterFile);
  artifacts_.erase(kClusterFile);
  rebuild_working();
  artifacts_[kProblemFile] = {{"problem_hash", hash_}, {"created", utc_now()}};
  save_manifest();
}

void Session::set_scale(double scale) {
  if (!(scale >= 0.0) || !std::isfinite(scale)) throw ValidationError("scale: must be a non-negative number");
  if (scale == config_.scale) return;
  config_.scale = scale;
  if (problem_) rebuild_working();
  save_manifest();
}

ProblemModel Session::make_phantom(const PhantomSpec& spec) {
  set_problem(generate_phantom(spec));
  return *problem_;
}

ClusterMap Session::cluster(const ClusterRequest& request) {
  ClusterMap cmap = cluster_model(problem(), request);
  clusters_ = cmap;
  rebuild_working();
  save_artifact(kClusterFile, cluster_map_to_json(cmap));
  return cmap;
}

void Session::clear_clusters() {
  clusters_.reset();
  fs::remove(dir_ / kClusterFile);
  artifacts_.erase(kClusterFile);
  if (problem_) rebuild_working();
  save_manifest();
}

ParetoDb Session::with_worstcase(ParetoDb db) const {
  if (!worstcase_front_ || worstcase_front_->problem_hash != db.problem_hash) return db;
  // Lifts that match a relaxation point up to the SDP cut slack are already represented.
  auto near = [](const Vector& a, const Vector& b) {
    for (int i = 0; i < a.size(); ++i) {
      if (std::abs(a[i] - b[i]) > 1e-7 * (1.0 + std::abs(b[i]))) return false;
    }
    return true;
  };
  for (const auto& wp : worstcase_front_->points) {
    bool covered = false;
    for (const auto& p : db.points) {
      if (p.origin == PointOrigin::worst_case && (p.decision.x_plus - wp.decision.x_plus).cwiseAbs().maxCoeff() <= 1e-12) {
        covered = true;
      }
      if (dominates(p.objectives, wp.objectives, 0.0) || near(p.objectives, wp.objectives)) covered = true;
    }
    if (covered) continue;
    std::erase_if(db.points, [&](const ParetoPoint& p) { return dominates(wp.objectives, p.objectives, 0.0); });
    ParetoPoint lifted = wp;
    lifted.id = db.next_id();
    lifted.origin = PointOrigin::worst_case;
    db.points.push_back(std::move(lifted));
  }
  return db;
}

const ParetoDb& Session::compute_sdp_front(double delta) {
  SdpOptions opts;
  opts.tol = config_.sdp_tol;
  SdpRelaxationProblem problem(sdp(), make_backend_from_env(), opts);
  ParetoDb db = sandwich_front(problem, delta);
  db.kind = "sdp";
  db.problem_hash = working_hash();
  config_.delta = delta;
  sdp_front_ = with_worstcase(std::move(db));
  save_artifact(front_file("sdp"), to_json(*sdp_front_));
  return *sdp_front_;
}

const ParetoDb& Session::compute_iter_front(double step, double delta) {
  ParetoDb db = iterative_r_front(qcqp(), step, delta, make_backend_from_env());
  db.problem_hash = working_hash();
  config_.step = step;
  iter_front_ = std::move(db);
  save_artifact(front_file("iter"), to_json(*iter_front_));
  return *iter_front_;
}

const ParetoDb& Session::compute_worstcase_front(double delta) {
  LevelLpProblem level(qcqp(), 1.0, make_backend_from_env());
  ParetoDb db = sandwich_front(level, delta);
  db.kind = "worstcase";
  db.problem_hash = working_hash();
  db.levels = {1.0};
  db.objective_names.push_back("-r");
  const int k = qcqp().num_objectives();
  for (auto& p : db.points) {
    Vector f(k + 1);
    f.head(k) = p.objectives;
    f[k] = -1.0;
    p.objectives = f;
    p.decision.r = 1.0;
    p.origin = PointOrigin::worst_case;
  }
  if (db.ideal.size() == k) {
    db.ideal.conservativeResize(k + 1);
    db.ideal[k] = -1.0;
    db.ranges.conservativeResize(k + 1);
    db.ranges[k] = 1.0;
  }
  worstcase_front_ = std::move(db);
  save_artifact(front_file("worstcase"), to_json(*worstcase_front_));
  if (sdp_front_ && sdp_front_->problem_hash == worstcase_front_->problem_hash) {
    sdp_front_ = with_worstcase(*sdp_front_);
    save_artifact(front_file("sdp"), to_json(*sdp_front_));
  }
  return *worstcase_front_;
}

const ParetoPoint& Session::add_sdp_point(const ParetoPoint& point) {
  front("sdp");
  ParetoDb& db = *sdp_front_;
  const double tol = 1e-9 * std::max(1.0, db.ranges.size() ? db.ranges.maxCoeff() : 1.0);
  for (const auto& p : db.points) {
    if ((p.objectives - point.objectives).cwiseAbs().maxCoeff() <= tol) return p;
  }
  ParetoPoint fresh = point;
  fresh.id = db.next_id();
  std::vector<ParetoPoint> kept;
  for (auto& p : db.points) {
    if (!dominates(fresh.objectives, p.objectives, tol)) kept.push_back(std::move(p));
  }
  kept.push_back(fresh);
  db.points = std::move(kept);
  ++db.solve_count;
  save_artifact(front_file("sdp"), to_json(db));
  return *db.find(fresh.id);
}

const ParetoPoint& Session::point(int id, const std::string& front_name) const {
  const ParetoPoint* p = front(front_name).find(id);
  if (!p) throw ValidationError("point-id " + std::to_string(id) + " not in the " + front_name + " front");
  return *p;
}

ProjectionResult Session::project(int id, const std::string& front_name) const {
  return project_to_qcqp(point(id, front_name).decision, qcqp());
}

json Session::verify(int id, const std::string& front_name) const {
  const ParetoPoint& p = point(id, front_name);
  json out = {{"point_id", id}, {"front", front_name}};
  QcqpPoint qp;
  if (front_name == "sdp" && p.origin != PointOrigin::worst_case) {
    const ProjectionResult proj = project_to_qcqp(p.decision, qcqp());
    out["projection"] = to_json(proj);
    qp = proj.output;
  } else {
    qp = point_of_decision(qcqp(), p.decision);
  }
  const auto backend = make_backend_from_env();
  const EfficiencyVerdict verdict = verify_efficiency(qp, qcqp(), config_.eps_tol, *backend);
  out["verdict"] = to_json(verdict);
  out["point"] = to_json(qp);
  if (verdict.level != EfficiencyLevel::efficient) {
    const QcqpPoint better = reoptimize_at_r(qp, qcqp(), {}, *backend);
    out["reoptimized"] = to_json(better);
  }
  return out;
}

Vector Session::fluence_of(int id, const std::string& front_name) const {
  const ParetoPoint& p = point(id, front_name);
  if (front_name == "sdp" && p.origin != PointOrigin::worst_case) return project(id, front_name).output.x();
  return point_of_decision(qcqp(), p.decision).x();
}

std::vector<DvhCurve> Session::dvh(int id, bool clustered, const std::string& front_name) const {
  const Vector x = fluence_of(id, front_name);
  if (clustered) {
    if (!clustered_) throw ConflictError("no cluster map in this session; run `irnav cluster` first");
    return dvh_all(clustered_->model, x);
  }
  return dvh_all(problem(), x);
}

TheoremReport Session::theorem_report() const {
  const ParetoDb& sdp_db = front("sdp");
  std::vector<QcqpPoint> worst;
  if (worstcase_front_ && worstcase_front_->problem_hash == working_hash()) {
    for (const auto& p : worstcase_front_->points) worst.push_back(point_of_decision(qcqp(), p.decision));
  }
  TheoremSuiteOptions opts;
  opts.tol = config_.theorem_tol;
  return theorem_suite(qcqp(), sdp(), sdp_db, worst, opts, *make_backend_from_env());
}

json Session::report() const {
  json out = {{"problem_hash", working_hash()}, {"config", config_to_json(config_)}, {"fronts", json::object()}};
  out["clustered"] = clustered_.has_value();
  const std::pair<const char*, const std::optional<ParetoDb>*> slots[] = {
      {"sdp", &sdp_front_}, {"iter", &iter_front_}, {"worstcase", &worstcase_front_}};
  for (const auto& [name, slot] : slots) {
    if (!slot->has_value()) continue;
    json s = front_summary(**slot);
    s["stale"] = (*slot)->problem_hash != working_hash_;
    out["fronts"][name] = s;
  }
  if (sdp_front_ && iter_front_) {
    const int a = sdp_front_->solve_count;
    const int b = iter_front_->solve_count;
    out["comparison"] = {{"sdp_solves", a},
                         {"iter_solves", b},
                         {"iter_levels", iter_front_->levels.size()},
                         {"ratio", a > 0 ? static_cast<double>(b) / a : 0.0},
                         {"sdp_fewer", a < b},
                         {"sdp_points", sdp_front_->points.size()},
                         {"iter_points", iter_front_->points.size()}};
  }
  if (sdp_front_ && sdp_front_->problem_hash == working_hash_) out["theorem_suite"] = to_json(theorem_report());
  return out;
}

void Session::save_artifact(const std::string& name, const json& doc) {
  write_json_file(dir_ / name, doc);
  json entry = {{"created", utc_now()}};
  if (problem_) entry["problem_hash"] = working_hash_;
  artifacts_[name] = entry;
  save_manifest();
}

json Session::manifest() const {
  json m = {{"format", "irnav-session/1"}, {"config", config_to_json(config_)}, {"artifacts", artifacts_}};
  if (problem_) {
    m["problem_hash"] = hash_;
    m["instance_hash"] = working_hash_;
  }
  return m;
}

void Session::save_manifest() const { write_json_file(dir_ / kManifestFile, manifest()); }

}  // namespace irnav
