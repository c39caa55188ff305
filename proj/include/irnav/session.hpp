#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "irnav/phantom.hpp"
#include "irnav/serialize.hpp"

namespace irnav {

/// HTTP-facing error classes: bad input, stale or missing state, solver trouble.
class ConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SessionConfig {
  /// Relative uncertainty: A_delta = scale * |A_c|.
  double scale = 0.02;
  double delta = 0.04;
  double step = 0.04;
  std::uint64_t seed = 42;
  double eps_tol = 1e-6;
  double theorem_tol = 1e-6;
  double sdp_tol = 1e-8;
};

/// Everything the CLI and the server work on. Artifacts live in one directory with manifest.json.
class Session {
 public:
  /// Opens (or creates) the directory and loads whatever artifacts are present.
  explicit Session(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  SessionConfig& config() { return config_; }
  const SessionConfig& config() const { return config_; }

  bool has_problem() const { return problem_.has_value(); }
  const ProblemModel& problem() const;
  /// Hash of the model the fronts are computed on (the clustered one when a cluster map exists).
  std::string working_hash() const;
  const ProblemModel& working_model() const;
  const std::optional<ClusteredModel>& clustered() const { return clustered_; }
  const QcqpInstance& qcqp() const;
  const SdpInstance& sdp() const;

  const std::optional<ParetoDb>& sdp_front() const { return sdp_front_; }
  const std::optional<ParetoDb>& iter_front() const { return iter_front_; }
  const std::optional<ParetoDb>& worstcase_front() const { return worstcase_front_; }
  /// The named front ("sdp", "iter" or "worstcase"); ConflictError when absent or stale.
  const ParetoDb& front(const std::string& name) const;

  void set_problem(ProblemModel model);
  /// Changes the uncertainty scale; fronts of the old instance become stale.
  void set_scale(double scale);
  ProblemModel make_phantom(const PhantomSpec& spec);
  ClusterMap cluster(const ClusterRequest& request);
  void clear_clusters();

  const ParetoDb& compute_sdp_front(double delta);
  const ParetoDb& compute_iter_front(double step, double delta);
  const ParetoDb& compute_worstcase_front(double delta);
  /// Adds a freshly solved weighted-sum point to the SDP front (kept only if nondominated).
  const ParetoPoint& add_sdp_point(const ParetoPoint& point);

  /// Stored point of a front; ValidationError for unknown ids.
  const ParetoPoint& point(int id, const std::string& front_name = "sdp") const;
  ProjectionResult project(int id, const std::string& front_name = "sdp") const;
  /// Projects SDP points first; QCQP points are verified as they are.
  json verify(int id, const std::string& front_name = "sdp") const;
  /// Fluence of a point after projection when it is an SDP point.
  Vector fluence_of(int id, const std::string& front_name = "sdp") const;
  std::vector<DvhCurve> dvh(int id, bool clustered, const std::string& front_name = "sdp") const;
  TheoremReport theorem_report() const;
  json report() const;

  /// Writes an artifact and records it in the manifest.
  void save_artifact(const std::string& name, const json& doc);
  json manifest() const;
  void save_manifest() const;

 private:
  void rebuild_working();
  void load();
  void check_front(const ParetoDb& db, const std::string& name) const;
  ParetoDb with_worstcase(ParetoDb sdp) const;

  std::filesystem::path dir_;
  SessionConfig config_;
  std::optional<ProblemModel> problem_;
  std::optional<ClusterMap> clusters_;
  std::optional<ClusteredModel> clustered_;
  std::string hash_;
  std::string working_hash_;
  std::optional<QcqpInstance> qcqp_;
  std::optional<SdpInstance> sdp_;
  std::optional<ParetoDb> sdp_front_;
  std::optional<ParetoDb> iter_front_;
  std::optional<ParetoDb> worstcase_front_;
  json artifacts_ = json::object();
};

/// Builds the QCQP of a model the way sessions do (trivial lower rows dropped, x- only when needed).
QcqpInstance session_qcqp(const ProblemModel& model, double scale);

}  // namespace irnav
