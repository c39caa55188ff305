#include "irnav/relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace irnav {

std::vector<Matrix> homogenize_qcqp(const GenericQcqp& g) {
  if (g.terms.empty()) throw ValidationError("GenericQcqp.terms: empty");
  const int N = static_cast<int>(g.terms.front().q.size());
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < g.terms.size(); ++i) {
    const auto& t = g.terms[i];
    if (t.q.size() != N || t.Q.rows() != N || t.Q.cols() != N) {
      throw ValidationError("GenericQcqp.terms[" + std::to_string(i) + "]: dimension mismatch");
    }
    Matrix M(N + 1, N + 1);
    M(0, 0) = t.gamma;
    M.block(0, 1, 1, N) = t.q.transpose();
    M.block(1, 0, N, 1) = t.q;
    M.block(1, 1, N, N) = 0.5 * (t.Q + t.Q.transpose());
    out.push_back(std::move(M));
  }
  Matrix norm = Matrix::Zero(N + 1, N + 1);
  norm(0, 0) = 1.0;
  out.push_back(norm);
  return out;
}

std::string LiftedLayout::label(int index) const {
  if (index == constant()) return "1";
  if (index == r()) return "r";
  if (index <= n) return "x+[" + std::to_string(index - 1) + "]";
  return "x-[" + std::to_string(index - 1 - n) + "]";
}

namespace {

class BlockBuilder {
 public:
  explicit BlockBuilder(int dim) : dim_(dim) {}
  // Adds value at (i,j) and (j,i); on the diagonal once.
  void sym(int i, int j, double value) {
    if (value == 0.0) return;
    t_.emplace_back(i, j, value);
    if (i != j) t_.emplace_back(j, i, value);
  }
  SymSparse build() {
    SymSparse m(dim_, dim_);
    m.setFromTriplets(t_.begin(), t_.end());
    m.makeCompressed();
    t_.clear();
    return m;
  }

 private:
  int dim_;
  std::vector<Triplet> t_;
};

MatrixConstraint entry_constraint(int dim, int i, int j, Sense sense, double rhs) {
  // <E, Z> with E the symmetric unit at (i,j) reads Z_ij directly.
  return {sym_entry(dim, i, j, i == j ? 1.0 : 0.5), sense, rhs};
}

}  // namespace

SdpInstance build_sdp(const QcqpInstance& q, const ValidIneqOptions& opts) {
  q.validate();
  SdpInstance s;
  s.layout.n = q.num_vars();
  s.layout.has_minus = q.split_negative;
  const LiftedLayout& L = s.layout;
  const int n = L.n;
  const int d = L.dim();
  s.dim = d;
  const int R = L.r();

  const Matrix Ac = Matrix(q.spec.matrix.center);
  const Matrix Ad = Matrix(q.spec.matrix.offset);
  const Vector& bc = q.spec.rhs.center;
  const Vector& bd = q.spec.rhs.offset;

  BlockBuilder bb(d);
  for (int i = 0; i < q.num_rows(); ++i) {
    bb.sym(0, 0, -bc[i]);
    bb.sym(0, R, 0.5 * bd[i]);
    for (int j = 0; j < n; ++j) {
      bb.sym(0, L.plus(j), 0.5 * Ac(i, j));
      bb.sym(L.plus(j), R, 0.5 * Ad(i, j));
      if (L.has_minus) {
        bb.sym(0, L.minus(j), -0.5 * Ac(i, j));
        bb.sym(L.minus(j), R, 0.5 * Ad(i, j));
      }
    }
    s.constraint_blocks.push_back(bb.build());
  }

  for (int k = 0; k < q.num_objectives(); ++k) {
    for (int j = 0; j < n; ++j) {
      bb.sym(0, L.plus(j), 0.5 * q.objectives(k, j));
      if (L.has_minus) bb.sym(0, L.minus(j), -0.5 * q.objectives(k, j));
    }
    s.objective_blocks.push_back(bb.build());
    s.objective_names.push_back(k < static_cast<int>(q.objective_names.size()) ? q.objective_names[k]
                                                                               : "f" + std::to_string(k));
  }
  bb.sym(0, R, -0.5);
  s.objective_blocks.push_back(bb.build());
  s.objective_names.push_back("-r");

  s.normalization = sym_entry(d, 0, 0, 1.0);

  // Border entries: x+, x- >= 0 and 0 <= r <= 1.
  for (int idx = 1; idx < d; ++idx) s.bound_linear.push_back(entry_constraint(d, 0, idx, Sense::ge, 0.0));
  s.bound_linear.push_back(entry_constraint(d, 0, R, Sense::le, 1.0));
  for (int j = 0; j < n; ++j) {
    auto bound_row = [&](Sense sense, double rhs) {
      if (!L.has_minus) {
        s.bound_linear.push_back(entry_constraint(d, 0, L.plus(j), sense, rhs));
        return;
      }
      bb.sym(0, L.plus(j), 0.5);
      bb.sym(0, L.minus(j), -0.5);
      s.bound_linear.push_back({bb.build(), sense, rhs});
    };
    // With x- eliminated, a zero lower bound is already the sign constraint.
    if (std::isfinite(q.lower[j]) && (L.has_minus || q.lower[j] > 0.0)) bound_row(Sense::ge, q.lower[j]);
    if (std::isfinite(q.upper[j])) bound_row(Sense::le, q.upper[j]);
  }

  if (opts.full_nonneg) {
    for (int i = 1; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        if (i == j) continue;
        s.extra_linear.push_back(entry_constraint(d, i, j, Sense::ge, 0.0));
      }
    }
  } else if (opts.border_nonneg) {
    for (int j = 1; j < R; ++j) s.extra_linear.push_back(entry_constraint(d, R, j, Sense::ge, 0.0));
  }
  if (opts.diag_caps) {
    auto cap = [&](int idx, double lo, double hi) {
      const double c = std::max(hi * hi, lo * lo);
      if (std::isfinite(c)) s.extra_linear.push_back(entry_constraint(d, idx, idx, Sense::le, c));
    };
    for (int j = 0; j < n; ++j) {
      cap(L.plus(j), q.lower[j], q.upper[j]);
      if (L.has_minus) cap(L.minus(j), q.lower[j], q.upper[j]);
    }
    cap(R, 0.0, 1.0);
  }
  return s;
}

ScalarSdp scalarize_sdp(const SdpInstance& s, const Vector& w, const Vector& upper_bounds) {
  if (w.size() != s.num_objectives()) throw ValidationError("weights: length differs from objective count");
  if ((w.array() < 0.0).any() || !w.allFinite()) throw ValidationError("weights: must be finite and non-negative");
  if (w.cwiseAbs().maxCoeff() == 0.0) throw ValidationError("weights: all zero");
  ScalarSdp out;
  out.dim = s.dim;
  out.objective = SymSparse(s.dim, s.dim);
  for (int i = 0; i < w.size(); ++i) {
    if (w[i] != 0.0) out.objective += w[i] * s.objective_blocks[i];
  }
  out.objective.makeCompressed();
  out.constraints.push_back({s.normalization, Sense::eq, 1.0});
  for (const auto& block : s.constraint_blocks) out.constraints.push_back({block, Sense::le, 0.0});
  for (const auto& c : s.bound_linear) out.constraints.push_back(c);
  for (const auto& c : s.extra_linear) out.constraints.push_back(c);
  for (int i = 0; i < upper_bounds.size(); ++i) {
    if (std::isfinite(upper_bounds[i])) out.constraints.push_back({s.objective_blocks[i], Sense::le, upper_bounds[i]});
  }
  return out;
}

std::optional<ScalarSdp> restrict_to_full_level(const ScalarSdp& sdp, const LiftedLayout& layout) {
  const int d = layout.dim();
  if (sdp.dim != d) throw ValidationError("restrict_to_full_level: dimension differs from layout");
  const int r = layout.r();
  auto phi = [r](int i) { return i == r ? 0 : i; };
  auto remap = [&](const SymSparse& m) {
    std::vector<Triplet> t;
    for (int k = 0; k < m.outerSize(); ++k) {
      for (SymSparse::InnerIterator it(m, k); it; ++it) t.emplace_back(phi(it.row()), phi(it.col()), it.value());
    }
    SymSparse out(d - 1, d - 1);
    out.setFromTriplets(t.begin(), t.end());
    out.prune(0.0);
    out.makeCompressed();
    return out;
  };
  ScalarSdp out;
  out.dim = d - 1;
  out.objective = remap(sdp.objective);
  std::vector<std::string> seen;
  bool have_normalization = false;
  for (const auto& c : sdp.constraints) {
    SymSparse a = remap(c.a);
    const bool corner_only = a.nonZeros() == 0 || (a.nonZeros() == 1 && a.coeff(0, 0) != 0.0);
    if (corner_only && !(c.sense == Sense::eq && !have_normalization && a.nonZeros() == 1)) {
      const double v = a.nonZeros() ? a.coeff(0, 0) : 0.0;
      const double slack = 1e-9 * (1.0 + std::abs(c.rhs));
      const bool ok = c.sense == Sense::le ? v <= c.rhs + slack
                      : c.sense == Sense::ge ? v >= c.rhs - slack
                                             : std::abs(v - c.rhs) <= slack;
      if (!ok) return std::nullopt;
      continue;
    }
    if (corner_only) have_normalization = true;
    auto hex = [](double v) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%a", v);
      return std::string(buf);
    };
    std::string key = to_string(c.sense) + ' ' + hex(c.rhs);
    for (int k = 0; k < a.outerSize(); ++k) {
      for (SymSparse::InnerIterator it(a, k); it; ++it) {
        key += ' ' + std::to_string(it.row()) + ',' + std::to_string(it.col()) + '=' + hex(it.value());
      }
    }
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(std::move(key));
    out.constraints.push_back({std::move(a), c.sense, c.rhs});
  }
  return out;
}

Matrix expand_full_level(const Matrix& z_reduced, const LiftedLayout& layout) {
  const int d = layout.dim();
  const int r = layout.r();
  Matrix Z(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) Z(i, j) = z_reduced(i == r ? 0 : i, j == r ? 0 : j);
  }
  return Z;
}

Matrix lift_point(const SdpInstance& s, const QcqpPoint& p) {
  const LiftedLayout& L = s.layout;
  Vector z = Vector::Zero(s.dim);
  z[0] = 1.0;
  for (int j = 0; j < L.n; ++j) {
    z[L.plus(j)] = p.x_plus[j];
    if (L.has_minus) z[L.minus(j)] = p.x_minus.size() ? p.x_minus[j] : 0.0;
  }
  z[L.r()] = p.r;
  return z * z.transpose();
}

double relaxation_residual(const SdpInstance& s, const Matrix& Z) {
  double res = std::abs(inner(s.normalization, Z) - 1.0);
  for (const auto& block : s.constraint_blocks) res = std::max(res, inner(block, Z));
  auto lin = [&](const std::vector<MatrixConstraint>& cs) {
    for (const auto& c : cs) {
      const double v = inner(c.a, Z) - c.rhs;
      if (c.sense == Sense::le) res = std::max(res, v);
      if (c.sense == Sense::ge) res = std::max(res, -v);
      if (c.sense == Sense::eq) res = std::max(res, std::abs(v));
    }
  };
  lin(s.bound_linear);
  lin(s.extra_linear);
  return res;
}

Border extract_border(const SdpInstance& s, const Matrix& Z, double rank_tol, double z00_tol) {
  if (Z.rows() != s.dim || Z.cols() != s.dim) throw ValidationError("Z: wrong shape");
  const double z00 = Z(0, 0);
  if (!(std::abs(z00 - 1.0) <= z00_tol)) {
    throw ValidationError("Z[0,0]: deviates from 1 by " + std::to_string(std::abs(z00 - 1.0)));
  }
  const LiftedLayout& L = s.layout;
  Border b;
  b.x_plus.resize(L.n);
  b.x_minus = L.has_minus ? Vector(L.n) : Vector();
  for (int j = 0; j < L.n; ++j) {
    b.x_plus[j] = Z(0, L.plus(j)) / z00;
    if (L.has_minus) b.x_minus[j] = Z(0, L.minus(j)) / z00;
  }
  b.r = Z(0, L.r()) / z00;
  b.rank_estimate = rank_of(Z, rank_tol);
  b.rank_one = b.rank_estimate == 1;
  return b;
}

}  // namespace irnav
