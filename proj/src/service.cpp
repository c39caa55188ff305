#include "irnav/service.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <shared_mutex>
#include <thread>

#include <httplib.h>

namespace irnav {

namespace {

struct HttpError : std::runtime_error {
  HttpError(int s, const std::string& what) : std::runtime_error(what), status(s) {}
  int status;
};

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) throw ParseError("request body: empty, expected a JSON object");
  json doc;
  try {
    doc = json::parse(req.body);
  } catch (const json::exception& e) {
    throw ParseError(std::string("request body: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("request body: expected a JSON object");
  return doc;
}

Vector finite_vector(const json& doc, const std::string& field, int size) {
  const Vector v = vector_from_json(doc, field);
  if (v.size() != size) {
    throw ValidationError(field + ": expected " + std::to_string(size) + " entries, got " + std::to_string(v.size()));
  }
  if (!v.allFinite()) throw ValidationError(field + ": entries must be finite");
  return v;
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(canonical_dump(body), "application/json");
}

}  // namespace

struct Service::Impl {
  std::shared_ptr<Session> session;
  mutable std::shared_mutex mutex;
  httplib::Server server;
  std::atomic<int> diagnostics{0};

  std::mutex job_mutex;
  std::thread job;
  json job_status = {{"state", "idle"}};

  explicit Impl(std::shared_ptr<Session> s) : session(std::move(s)) { routes(); }

  ~Impl() {
    if (job.joinable()) job.join();
  }

  using Handler = std::function<json(const httplib::Request&, int&)>;

  // Wraps a handler with the error mapping: 400 malformed, 409 state conflicts, 500 solver trouble.
  httplib::Server::Handler wrap(Handler h) {
    return [this, h](const httplib::Request& req, httplib::Response& res) {
      try {
        int status = 200;
        json body = h(req, status);
        reply(res, status, body);
      } catch (const HttpError& e) {
        reply(res, e.status, {{"error", e.what()}, {"status", e.status}});
      } catch (const ConflictError& e) {
        reply(res, 409, {{"error", e.what()}, {"status", 409}});
      } catch (const ParseError& e) {
        reply(res, 400, {{"error", e.what()}, {"status", 400}});
      } catch (const ValidationError& e) {
        reply(res, 400, {{"error", e.what()}, {"status", 400}});
      } catch (const json::exception& e) {
        reply(res, 400, {{"error", std::string("malformed payload: ") + e.what()}, {"status", 400}});
      } catch (const std::exception& e) {
        char id[32];
        std::snprintf(id, sizeof id, "diag-%06d", ++diagnostics);
        std::cerr << "[irnav serve] " << id << ' ' << req.method << ' ' << req.path << ": " << e.what() << '\n';
        reply(res, 500, {{"error", e.what()}, {"status", 500}, {"diagnostic_id", id}});
      }
    };
  }

  void get(const std::string& path, Handler h) {
    auto w = wrap(std::move(h));
    server.Get("/api/v1" + path, w);
    server.Get("/api" + path, w);
  }

  void post(const std::string& path, Handler h) {
    auto w = wrap(std::move(h));
    server.Post("/api/v1" + path, w);
    server.Post("/api" + path, w);
  }

  void check_hash(const json& body) const {
    if (body.contains("problem_hash") && body.at("problem_hash").get<std::string>() != session->working_hash()) {
      throw ConflictError("problem_hash " + body.at("problem_hash").get<std::string>() +
                          " does not match the session instance " + session->working_hash());
    }
  }

  // A border or QCQP point from {point_id} or {point: {x_plus[, x_minus] | x, r}}.
  Decision decision_from(const json& body, const std::string& front_name = "sdp") const {
    if (body.contains("point_id")) return session->point(body.at("point_id").get<int>(), front_name).decision;
    if (!body.contains("point")) throw ParseError("expected 'point' or 'point_id'");
    const json& p = body.at("point");
    if (!p.is_object()) throw ParseError("point: expected an object");
    const int n = session->qcqp().num_vars();
    Decision d;
    if (p.contains("x_plus")) {
      d.x_plus = finite_vector(p.at("x_plus"), "x_plus", n);
      if (session->qcqp().split_negative) {
        d.x_minus = p.contains("x_minus") ? finite_vector(p.at("x_minus"), "x_minus", n) : Vector(Vector::Zero(n));
      }
    } else if (p.contains("x")) {
      const Vector x = finite_vector(p.at("x"), "x", n);
      d.x_plus = x.cwiseMax(0.0);
      if (session->qcqp().split_negative) {
        d.x_minus = (-x).cwiseMax(0.0);
      } else if ((x.array() < 0.0).any()) {
        throw ValidationError("x: negative entries but the instance has no x- part");
      }
    } else {
      throw ParseError("point: expected 'x_plus' or 'x'");
    }
    if (!p.contains("r")) throw ParseError("point: missing 'r'");
    d.r = p.at("r").get<double>();
    if (!std::isfinite(d.r)) throw ValidationError("r: must be finite");
    return d;
  }

  json navigate(const json& body) {
    const std::string front_name = body.value("front", "sdp");
    ParetoDb db;
    SdpInstance sdp;
    std::string hash;
    {
      std::shared_lock lock(mutex);
      check_hash(body);
      db = session->front(front_name);
      sdp = session->sdp();
      hash = session->working_hash();
    }
    const int p = static_cast<int>(db.objective_names.size());
    if (body.contains("reference_point")) {
      const Vector ref = finite_vector(body.at("reference_point"), "reference_point", p);
      const Vector ranges = db.ranges.size() == p ? db.ranges : Vector(Vector::Ones(p));
      const ParetoPoint* best = nullptr;
      double best_d = kInf;
      for (const auto& pt : db.points) {
        const double d = (pt.objectives - ref).cwiseQuotient(ranges).norm();
        if (d < best_d) {
          best_d = d;
          best = &pt;
        }
      }
      if (!best) throw ConflictError("front has no points");
      return {{"point", to_json(*best)}, {"method", "reference_point"}, {"distance", best_d}, {"cached", true},
              {"problem_hash", hash}};
    }
    if (!body.contains("weights")) throw ParseError("expected 'weights' or 'reference_point'");
    Vector w = finite_vector(body.at("weights"), "weights", p);
    if ((w.array() < 0.0).any() || w.sum() <= 0.0) throw ValidationError("weights: must be non-negative and not all zero");
    w /= w.sum();
    for (const auto& pt : db.points) {
      if (pt.weights.size() == p && (pt.weights / pt.weights.sum() - w).cwiseAbs().maxCoeff() <= 1e-9) {
        return {{"point", to_json(pt)}, {"method", "weights"}, {"cached", true}, {"problem_hash", hash}};
      }
    }
    if (front_name != "sdp") throw ValidationError("weights: fresh solves are only available on the sdp front");
    SdpOptions opts;
    opts.tol = session->config().sdp_tol;
    SdpRelaxationProblem problem(std::move(sdp), make_backend_from_env(), opts);
    const ScalarizationResult r = weighted_sum_solve(problem, w);
    if (r.status != SolveStatus::optimal && r.status != SolveStatus::near_optimal) {
      throw SolverError("weighted-sum solve ended with status " + to_string(r.status));
    }
    std::unique_lock lock(mutex);
    if (session->working_hash() != hash) throw ConflictError("session instance changed during the solve; retry");
    const ParetoPoint& stored = session->add_sdp_point(r.point);
    return {{"point", to_json(stored)}, {"method", "weights"}, {"cached", false}, {"problem_hash", hash}};
  }

  void start_job(const json& body) {
    const std::string kind = body.value("kind", "");
    if (kind != "front-sdp" && kind != "front-iter" && kind != "front-worstcase") {
      throw ValidationError("kind: expected front-sdp, front-iter or front-worstcase");
    }
    const double delta = body.value("delta", session->config().delta);
    const double step = body.value("step", session->config().step);
    if (!(delta > 0.0)) throw ValidationError("delta: must be positive");
    if (!(step > 0.0 && step <= 1.0)) throw ValidationError("step: must lie in (0, 1]");
    std::lock_guard g(job_mutex);
    if (job_status.value("state", "") == "running") throw ConflictError("a job is already running; poll /api/v1/status");
    if (job.joinable()) job.join();
    job_status = {{"state", "running"}, {"kind", kind}};
    job = std::thread([this, kind, delta, step] {
      json done;
      try {
        std::unique_lock lock(mutex);
        if (kind == "front-sdp") {
          done = {{"state", "done"}, {"kind", kind}, {"solve_count", session->compute_sdp_front(delta).solve_count}};
        } else if (kind == "front-iter") {
          done = {{"state", "done"}, {"kind", kind}, {"solve_count", session->compute_iter_front(step, delta).solve_count}};
        } else {
          done = {{"state", "done"}, {"kind", kind}, {"solve_count", session->compute_worstcase_front(delta).solve_count}};
        }
      } catch (const std::exception& e) {
        done = {{"state", "failed"}, {"kind", kind}, {"error", e.what()}};
      }
      std::lock_guard g2(job_mutex);
      job_status = done;
    });
  }

  void routes() {
    get("/front", [this](const httplib::Request& req, int&) {
      std::shared_lock lock(mutex);
      const std::string name = req.has_param("front") ? req.get_param_value("front") : "sdp";
      json out = to_json(session->front(name));
      return out;
    });
    post("/navigate", [this](const httplib::Request& req, int&) { return navigate(parse_body(req)); });
    post("/project", [this](const httplib::Request& req, int&) {
      const json body = parse_body(req);
      std::shared_lock lock(mutex);
      check_hash(body);
      const Decision d = decision_from(body, body.value("front", "sdp"));
      json out = to_json(project_to_qcqp(d, session->qcqp()));
      out["problem_hash"] = session->working_hash();
      return out;
    });
    post("/reoptimize", [this](const httplib::Request& req, int&) {
      const json body = parse_body(req);
      std::shared_lock lock(mutex);
      check_hash(body);
      const QcqpInstance& q = session->qcqp();
      const Decision d = decision_from(body, body.value("front", "sdp"));
      const ProjectionResult proj = project_to_qcqp(d, q);
      Vector w;
      if (body.contains("weights")) w = finite_vector(body.at("weights"), "weights", q.num_objectives());
      const auto backend = make_backend_from_env();
      const QcqpPoint better = reoptimize_at_r(proj.output, q, w, *backend);
      const EfficiencyVerdict verdict = verify_efficiency(better, q, session->config().eps_tol, *backend);
      return json{{"input", to_json(proj.output)},
                  {"point", to_json(better)},
                  {"verdict", to_json(verdict)},
                  {"problem_hash", session->working_hash()}};
    });
    get("/dvh", [this](const httplib::Request& req, int&) {
      if (!req.has_param("point")) throw ParseError("query: missing 'point'");
      int id = 0;
      try {
        id = std::stoi(req.get_param_value("point"));
      } catch (const std::exception&) {
        throw ParseError("point: expected an integer id");
      }
      bool clustered = false;
      if (req.has_param("clustered")) {
        const std::string c = req.get_param_value("clustered");
        if (c != "true" && c != "false" && c != "1" && c != "0") throw ParseError("clustered: expected true or false");
        clustered = c == "true" || c == "1";
      }
      const std::string name = req.has_param("front") ? req.get_param_value("front") : "sdp";
      std::shared_lock lock(mutex);
      json curves = json::array();
      for (const auto& c : session->dvh(id, clustered, name)) curves.push_back(to_json(c));
      return json{{"point_id", id}, {"clustered", clustered}, {"curves", curves}};
    });
    get("/report", [this](const httplib::Request&, int&) {
      std::shared_lock lock(mutex);
      return session->report();
    });
    get("/status", [this](const httplib::Request&, int&) {
      json out;
      {
        std::lock_guard g(job_mutex);
        out["job"] = job_status;
      }
      std::shared_lock lock(mutex, std::try_to_lock);
      out["busy"] = !lock.owns_lock();
      if (lock.owns_lock()) {
        out["has_problem"] = session->has_problem();
        if (session->has_problem()) out["problem_hash"] = session->working_hash();
        out["fronts"] = {{"sdp", session->sdp_front().has_value()},
                         {"iter", session->iter_front().has_value()},
                         {"worstcase", session->worstcase_front().has_value()}};
      }
      return out;
    });
    post("/compute", [this](const httplib::Request& req, int& status) {
      start_job(parse_body(req));
      status = 202;
      std::lock_guard g(job_mutex);
      return job_status;
    });
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (res.body.empty()) {
        reply(res, res.status, {{"error", "no route for " + req.method + " " + req.path}, {"status", res.status}});
      }
    });
  }
};

Service::Service(std::shared_ptr<Session> session) : impl_(std::make_unique<Impl>(std::move(session))) {}

Service::~Service() { stop(); }

int Service::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool Service::bind(const std::string& host, int port) { return impl_->server.bind_to_port(host, port); }

bool Service::run() { return impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_) impl_->server.stop();
}

void Service::wait_for_job() {
  std::thread t;
  {
    std::lock_guard g(impl_->job_mutex);
    t.swap(impl_->job);
  }
  if (t.joinable()) t.join();
}

}  // namespace irnav
