#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>

#include <json.hpp>

#include "irnav/lp.hpp"
#include "irnav/sdp.hpp"

namespace irnav {

class ConicBackend {
 public:
  virtual ~ConicBackend() = default;
  virtual std::string name() const = 0;
  virtual SolveReport solve_lp(const LpInstance& lp, const LpOptions& options = {}) const = 0;
  virtual SdpSolveReport solve_sdp(const ScalarSdp& sdp, const SdpOptions& options = {}) const = 0;
};

class BuiltinBackend final : public ConicBackend {
 public:
  std::string name() const override { return "builtin"; }
  SolveReport solve_lp(const LpInstance& lp, const LpOptions& options = {}) const override;
  SdpSolveReport solve_sdp(const ScalarSdp& sdp, const SdpOptions& options = {}) const override;
};

/// Runs `<executable> solve --kind lp|sdp --input <file> --output <report.json> --tol <tol>`
/// with the problem in the text formats below and reads back a JSON report.
class ProcessBackend final : public ConicBackend {
 public:
  explicit ProcessBackend(std::string executable);
  std::string name() const override { return "process:" + executable_; }
  SolveReport solve_lp(const LpInstance& lp, const LpOptions& options = {}) const override;
  SdpSolveReport solve_sdp(const ScalarSdp& sdp, const SdpOptions& options = {}) const override;

 private:
  nlohmann::json run(const std::string& kind, const std::string& payload, double tol) const;
  std::string executable_;
};

std::shared_ptr<const ConicBackend> builtin_backend();

/// ProcessBackend when IRNAV_SOLVER names an executable, the built-in backend otherwise.
std::shared_ptr<const ConicBackend> make_backend_from_env();

// Sparse text formats.
//
//   # irnav-sdp 1
//   dim <d>
//   constraints <m>
//   objective <nnz>
//   <i> <j> <v>            (upper triangle, 0-based, repeated nnz times)
//   constraint <L|E|G> <rhs> <nnz>
//   <i> <j> <v>
//   ...
//
//   # irnav-lp 1
//   vars <n>
//   cost <c_1> ... <c_n>
//   lower <l_1> ... <l_n>  (inf / -inf allowed)
//   upper <u_1> ... <u_n>
//   ub_rows <m>
//   row <rhs> <nnz> <j> <v> ...
//   eq_rows <k>
//   row <rhs> <nnz> <j> <v> ...
void write_sdp_text(std::ostream& out, const ScalarSdp& sdp);
ScalarSdp read_sdp_text(std::istream& in);
void write_lp_text(std::ostream& out, const LpInstance& lp);
LpInstance read_lp_text(std::istream& in);

nlohmann::json report_to_json(const SolveReport& report);
SolveReport lp_report_from_json(const nlohmann::json& doc);
nlohmann::json report_to_json(const SdpSolveReport& report);
SdpSolveReport sdp_report_from_json(const nlohmann::json& doc);

}  // namespace irnav
