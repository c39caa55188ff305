#include "irnav/backend.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace irnav {

SolveReport BuiltinBackend::solve_lp(const LpInstance& lp, const LpOptions& options) const {
  return irnav::solve_lp(lp, options);
}

SdpSolveReport BuiltinBackend::solve_sdp(const ScalarSdp& sdp, const SdpOptions& options) const {
  return irnav::solve_sdp(sdp, options);
}

std::shared_ptr<const ConicBackend> builtin_backend() {
  static const auto instance = std::make_shared<const BuiltinBackend>();
  return instance;
}

std::shared_ptr<const ConicBackend> make_backend_from_env() {
  const char* exe = std::getenv("IRNAV_SOLVER");
  if (exe && *exe) return std::make_shared<const ProcessBackend>(exe);
  return builtin_backend();
}

namespace {

void write_num(std::ostream& out, double v) {
  if (std::isinf(v)) {
    out << (v > 0 ? "inf" : "-inf");
  } else {
    out << v;
  }
}

double parse_num(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw ParseError("expected a number, got '" + tok + "'");
  return v;
}

class Tokens {
 public:
  explicit Tokens(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] == '#') {
        header_.push_back(line);
        continue;
      }
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) toks_.push_back(tok);
    }
  }
  const std::vector<std::string>& header() const { return header_; }
  std::string next() {
    if (pos_ >= toks_.size()) throw ParseError("unexpected end of input");
    return toks_[pos_++];
  }
  void expect(const std::string& word) {
    const std::string t = next();
    if (t != word) throw ParseError("expected '" + word + "', got '" + t + "'");
  }
  double number() { return parse_num(next()); }
  long integer() {
    const double v = number();
    if (v != std::floor(v) || v < 0) throw ParseError("expected a non-negative integer");
    return static_cast<long>(v);
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::string> toks_;
  std::size_t pos_ = 0;
};

void write_upper_triplets(std::ostream& out, const SymSparse& a) {
  std::vector<Triplet> t;
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SymSparse::InnerIterator it(a, k); it; ++it) {
      if (it.row() <= it.col() && it.value() != 0.0) t.emplace_back(it.row(), it.col(), it.value());
    }
  }
  out << t.size() << '\n';
  for (const auto& e : t) out << e.row() << ' ' << e.col() << ' ' << e.value() << '\n';
}

SymSparse read_upper_triplets(Tokens& tok, int dim) {
  const long nnz = tok.integer();
  std::vector<Triplet> t;
  for (long k = 0; k < nnz; ++k) {
    const long i = tok.integer(), j = tok.integer();
    const double v = tok.number();
    if (i >= dim || j >= dim) throw ParseError("matrix index out of range");
    t.emplace_back(i, j, v);
    if (i != j) t.emplace_back(j, i, v);
  }
  SymSparse m(dim, dim);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Sense sense_from(const std::string& s) {
  if (s == "L") return Sense::le;
  if (s == "E") return Sense::eq;
  if (s == "G") return Sense::ge;
  throw ParseError("unknown constraint sense '" + s + "'");
}

void write_rows(std::ostream& out, const Matrix& A, const Vector& b) {
  for (int i = 0; i < A.rows(); ++i) {
    int nnz = 0;
    for (int j = 0; j < A.cols(); ++j) nnz += A(i, j) != 0.0;
    out << "row ";
    write_num(out, b[i]);
    out << ' ' << nnz;
    for (int j = 0; j < A.cols(); ++j) {
      if (A(i, j) != 0.0) out << ' ' << j << ' ' << A(i, j);
    }
    out << '\n';
  }
}

void read_rows(Tokens& tok, int n, Matrix& A, Vector& b) {
  const long m = tok.integer();
  A = Matrix::Zero(m, n);
  b.resize(m);
  for (long i = 0; i < m; ++i) {
    tok.expect("row");
    b[i] = tok.number();
    const long nnz = tok.integer();
    for (long k = 0; k < nnz; ++k) {
      const long j = tok.integer();
      if (j >= n) throw ParseError("column index out of range");
      A(i, j) = tok.number();
    }
  }
}

nlohmann::json vec_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i])) {
      a.push_back(v[i]);
    } else {
      a.push_back(nullptr);
    }
  }
  return a;
}

Vector vec_from(const nlohmann::json& a) {
  Vector v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].is_null() ? kInf : a[i].get<double>();
  return v;
}

double num_or(const nlohmann::json& doc, const char* key, double fallback) {
  if (!doc.contains(key) || doc[key].is_null()) return fallback;
  return doc[key].get<double>();
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

}  // namespace

void write_sdp_text(std::ostream& out, const ScalarSdp& sdp) {
  out << std::setprecision(17);
  out << "# irnav-sdp 1\n";
  out << "dim " << sdp.dim << '\n';
  out << "constraints " << sdp.constraints.size() << '\n';
  out << "objective ";
  write_upper_triplets(out, sdp.objective);
  for (const auto& c : sdp.constraints) {
    out << "constraint " << to_string(c.sense) << ' ' << c.rhs << ' ';
    write_upper_triplets(out, c.a);
  }
}

ScalarSdp read_sdp_text(std::istream& in) {
  Tokens tok(in);
  if (tok.header().empty() || tok.header().front().rfind("# irnav-sdp", 0) != 0) {
    throw ParseError("missing '# irnav-sdp' header");
  }
  ScalarSdp sdp;
  tok.expect("dim");
  sdp.dim = static_cast<int>(tok.integer());
  tok.expect("constraints");
  const long m = tok.integer();
  tok.expect("objective");
  sdp.objective = read_upper_triplets(tok, sdp.dim);
  for (long i = 0; i < m; ++i) {
    tok.expect("constraint");
    MatrixConstraint c;
    c.sense = sense_from(tok.next());
    c.rhs = tok.number();
    c.a = read_upper_triplets(tok, sdp.dim);
    sdp.constraints.push_back(std::move(c));
  }
  sdp.validate();
  return sdp;
}

void write_lp_text(std::ostream& out, const LpInstance& input) {
  LpInstance lp = input;
  lp.normalize();
  out << std::setprecision(17);
  out << "# irnav-lp 1\n";
  out << "vars " << lp.num_vars() << '\n';
  for (const auto& [label, v] : {std::pair<const char*, const Vector*>{"cost", &lp.cost}, {"lower", &lp.lower},
                                 {"upper", &lp.upper}}) {
    out << label;
    for (int j = 0; j < v->size(); ++j) {
      out << ' ';
      write_num(out, (*v)[j]);
    }
    out << '\n';
  }
  out << "ub_rows " << lp.A_ub.rows() << '\n';
  write_rows(out, lp.A_ub, lp.b_ub);
  out << "eq_rows " << lp.A_eq.rows() << '\n';
  write_rows(out, lp.A_eq, lp.b_eq);
}

LpInstance read_lp_text(std::istream& in) {
  Tokens tok(in);
  if (tok.header().empty() || tok.header().front().rfind("# irnav-lp", 0) != 0) {
    throw ParseError("missing '# irnav-lp' header");
  }
  LpInstance lp;
  tok.expect("vars");
  const int n = static_cast<int>(tok.integer());
  for (auto [label, v] : {std::pair<const char*, Vector*>{"cost", &lp.cost}, {"lower", &lp.lower},
                          {"upper", &lp.upper}}) {
    tok.expect(label);
    v->resize(n);
    for (int j = 0; j < n; ++j) (*v)[j] = tok.number();
  }
  tok.expect("ub_rows");
  read_rows(tok, n, lp.A_ub, lp.b_ub);
  tok.expect("eq_rows");
  read_rows(tok, n, lp.A_eq, lp.b_eq);
  lp.normalize();
  return lp;
}

nlohmann::json report_to_json(const SolveReport& r) {
  nlohmann::json doc;
  doc["kind"] = "lp";
  doc["status"] = to_string(r.status);
  doc["primal"] = vec_json(r.primal);
  doc["objective"] = r.objective;
  doc["dual_bound"] = std::isfinite(r.dual_bound) ? nlohmann::json(r.dual_bound) : nlohmann::json();
  doc["duality_gap"] = std::isfinite(r.duality_gap) ? nlohmann::json(r.duality_gap) : nlohmann::json();
  doc["dual_ub"] = vec_json(r.dual_ub);
  doc["dual_eq"] = vec_json(r.dual_eq);
  doc["max_residual"] = std::isfinite(r.max_residual) ? nlohmann::json(r.max_residual) : nlohmann::json();
  doc["iterations"] = r.iterations;
  doc["wall_time"] = r.wall_time;
  return doc;
}

SolveReport lp_report_from_json(const nlohmann::json& doc) {
  SolveReport r;
  r.status = solve_status_from_string(doc.at("status").get<std::string>());
  r.primal = vec_from(doc.value("primal", nlohmann::json::array()));
  r.objective = num_or(doc, "objective", 0.0);
  r.dual_bound = num_or(doc, "dual_bound", -kInf);
  r.duality_gap = num_or(doc, "duality_gap", kInf);
  r.dual_ub = vec_from(doc.value("dual_ub", nlohmann::json::array()));
  r.dual_eq = vec_from(doc.value("dual_eq", nlohmann::json::array()));
  r.max_residual = num_or(doc, "max_residual", kInf);
  r.iterations = doc.value("iterations", 0);
  r.wall_time = num_or(doc, "wall_time", 0.0);
  return r;
}

nlohmann::json report_to_json(const SdpSolveReport& r) {
  nlohmann::json doc;
  doc["kind"] = "sdp";
  doc["status"] = to_string(r.status);
  nlohmann::json z = nlohmann::json::array();
  for (int i = 0; i < r.Z.rows(); ++i) z.push_back(vec_json(r.Z.row(i).transpose()));
  doc["Z"] = z;
  doc["y"] = vec_json(r.y);
  auto fin = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
  doc["primal_objective"] = fin(r.primal_objective);
  doc["dual_objective"] = fin(r.dual_objective);
  doc["primal_infeasibility"] = fin(r.primal_infeasibility);
  doc["dual_infeasibility"] = fin(r.dual_infeasibility);
  doc["relative_gap"] = fin(r.relative_gap);
  doc["max_residual"] = fin(r.max_residual);
  doc["min_eigenvalue"] = fin(r.min_eigenvalue);
  doc["iterations"] = r.iterations;
  doc["wall_time"] = r.wall_time;
  return doc;
}

SdpSolveReport sdp_report_from_json(const nlohmann::json& doc) {
  SdpSolveReport r;
  r.status = solve_status_from_string(doc.at("status").get<std::string>());
  const auto& z = doc.value("Z", nlohmann::json::array());
  r.Z.resize(static_cast<int>(z.size()), static_cast<int>(z.size()));
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i].size() != z.size()) throw ParseError("report field 'Z' is not square");
    r.Z.row(static_cast<int>(i)) = vec_from(z[i]).transpose();
  }
  r.y = vec_from(doc.value("y", nlohmann::json::array()));
  r.primal_objective = num_or(doc, "primal_objective", 0.0);
  r.dual_objective = num_or(doc, "dual_objective", -kInf);
  r.primal_infeasibility = num_or(doc, "primal_infeasibility", kInf);
  r.dual_infeasibility = num_or(doc, "dual_infeasibility", kInf);
  r.relative_gap = num_or(doc, "relative_gap", kInf);
  r.max_residual = num_or(doc, "max_residual", kInf);
  r.min_eigenvalue = num_or(doc, "min_eigenvalue", 0.0);
  r.iterations = doc.value("iterations", 0);
  r.wall_time = num_or(doc, "wall_time", 0.0);
  return r;
}

ProcessBackend::ProcessBackend(std::string executable) : executable_(std::move(executable)) {}

nlohmann::json ProcessBackend::run(const std::string& kind, const std::string& payload, double tol) const {
  static std::atomic<unsigned long> counter{0};
  const auto dir = std::filesystem::temp_directory_path();
  const std::string stem = "irnav-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  const auto input = dir / (stem + "." + kind);
  const auto output = dir / (stem + ".json");
  {
    std::ofstream f(input);
    f << payload;
    if (!f) throw SolverError("cannot write " + input.string());
  }
  std::ostringstream cmd;
  cmd << shell_quote(executable_) << " solve --kind " << kind << " --input " << shell_quote(input.string())
      << " --output " << shell_quote(output.string()) << " --tol " << std::setprecision(17) << tol
      << " > /dev/null 2>&1";
  const int rc = std::system(cmd.str().c_str());
  std::filesystem::remove(input);
  std::ifstream f(output);
  if (rc != 0 || !f) {
    std::filesystem::remove(output);
    throw SolverError("external solver '" + executable_ + "' failed with exit status " + std::to_string(rc));
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    std::filesystem::remove(output);
    throw SolverError(std::string("external solver wrote malformed JSON: ") + e.what());
  }
  std::filesystem::remove(output);
  return doc;
}

SolveReport ProcessBackend::solve_lp(const LpInstance& lp, const LpOptions& options) const {
  std::ostringstream text;
  write_lp_text(text, lp);
  return lp_report_from_json(run("lp", text.str(), options.tol));
}

SdpSolveReport ProcessBackend::solve_sdp(const ScalarSdp& sdp, const SdpOptions& options) const {
  std::ostringstream text;
  write_sdp_text(text, sdp);
  return sdp_report_from_json(run("sdp", text.str(), options.tol));
}

}  // namespace irnav
