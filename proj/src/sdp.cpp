#include "irnav/sdp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace irnav {

std::string to_string(Sense sense) {
  switch (sense) {
    case Sense::le: return "L";
    case Sense::eq: return "E";
    case Sense::ge: return "G";
  }
  return "?";
}

double inner(const SymSparse& a, const Matrix& Z) {
  double acc = 0.0;
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SymSparse::InnerIterator it(a, k); it; ++it) acc += it.value() * Z(it.row(), it.col());
  }
  return acc;
}

SymSparse sym_entry(int dim, int i, int j, double value) {
  SymSparse m(dim, dim);
  std::vector<Triplet> t;
  if (i == j) {
    t.emplace_back(i, i, value);
  } else {
    t.emplace_back(i, j, value);
    t.emplace_back(j, i, value);
  }
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

void ScalarSdp::validate() const {
  if (dim <= 0) throw ValidationError("ScalarSdp: dim must be positive");
  auto check = [&](const SymSparse& a, const std::string& what) {
    if (a.rows() != dim || a.cols() != dim) throw ValidationError("ScalarSdp: " + what + " has wrong shape");
    const Matrix dense = Matrix(a);
    if (!dense.allFinite()) throw ValidationError("ScalarSdp: " + what + " has non-finite entries");
    if ((dense - dense.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + dense.cwiseAbs().maxCoeff())) {
      throw ValidationError("ScalarSdp: " + what + " is not symmetric");
    }
  };
  check(objective, "objective");
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    check(constraints[i].a, "constraint " + std::to_string(i));
    if (!std::isfinite(constraints[i].rhs)) throw ValidationError("ScalarSdp: non-finite rhs");
  }
}

double sdp_residual(const ScalarSdp& problem, const Matrix& Z) {
  double res = 0.0;
  for (const auto& c : problem.constraints) {
    const double v = inner(c.a, Z) - c.rhs;
    switch (c.sense) {
      case Sense::le: res = std::max(res, v); break;
      case Sense::ge: res = std::max(res, -v); break;
      case Sense::eq: res = std::max(res, std::abs(v)); break;
    }
  }
  return res;
}

int rank_of(const Matrix& Z, double rel_tol) {
  if (Z.size() == 0) return 0;
  const Matrix sym = 0.5 * (Z + Z.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues();
  const double lmax = ev.maxCoeff();
  if (lmax <= 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] > rel_tol * lmax) ++rank;
  }
  return rank;
}

namespace {

// Largest alpha with X + alpha dX PSD (infinite when dX keeps X PSD).
double max_psd_step(const Eigen::LLT<Matrix>& chol, const Matrix& dX) {
  Matrix tmp = chol.matrixL().solve(dX);
  Matrix m = chol.matrixL().solve(tmp.transpose());
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  return lmin < 0.0 ? -1.0 / lmin : kInf;
}

double max_orthant_step(const Vector& v, const Vector& dv) {
  double alpha = kInf;
  for (int i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

struct HalfFactor {
  bool dense = true;
  std::vector<int> rows;
  Matrix rows_block;
};

// Writes a symmetric A as P + P^T where P lives on as few rows as possible, so that
// W A W = K + K^T with K = W(:, rows) * (P(rows, :) W) costs O(|rows| d^2).
HalfFactor half_factor(const SymSparse& a, int d) {
  std::vector<int> count(d, 0);
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SymSparse::InnerIterator it(a, k); it; ++it) ++count[it.row()];
  }
  std::vector<std::vector<std::pair<int, double>>> prow(d);
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SymSparse::InnerIterator it(a, k); it; ++it) {
      const int i = static_cast<int>(it.row()), j = static_cast<int>(it.col());
      if (i == j) {
        prow[i].emplace_back(j, 0.5 * it.value());
      } else if (i < j) {
        const int owner = count[i] >= count[j] ? i : j;
        const int other = owner == i ? j : i;
        prow[owner].emplace_back(other, it.value());
      }
    }
  }
  HalfFactor hf;
  for (int i = 0; i < d; ++i) {
    if (!prow[i].empty()) hf.rows.push_back(i);
  }
  if (2 * static_cast<int>(hf.rows.size()) >= d) return hf;
  hf.dense = false;
  hf.rows_block = Matrix::Zero(static_cast<int>(hf.rows.size()), d);
  for (std::size_t r = 0; r < hf.rows.size(); ++r) {
    for (const auto& [col, v] : prow[hf.rows[r]]) hf.rows_block(static_cast<int>(r), col) += v;
  }
  return hf;
}

struct Direction {
  Matrix dX, dS;
  Vector dy, ds, dz;
};

}  // namespace

SdpSolveReport solve_sdp(const ScalarSdp& problem, const SdpOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  problem.validate();
  const int d = problem.dim;
  const int mc = static_cast<int>(problem.constraints.size());

  // Row scaling of constraints and objective scaling.
  std::vector<SymSparse> A(mc);
  Vector b(mc), row_scale(mc);
  std::vector<int> slack_row;
  std::vector<double> sig;
  Vector slack_of = Vector::Constant(mc, -1);
  for (int i = 0; i < mc; ++i) {
    const auto& c = problem.constraints[i];
    double nrm = c.a.norm();
    if (nrm == 0.0) nrm = 1.0;
    row_scale[i] = nrm;
    A[i] = c.a / nrm;
    A[i].makeCompressed();
    b[i] = c.rhs / nrm;
    if (c.sense != Sense::eq) {
      slack_of[i] = static_cast<double>(slack_row.size());
      slack_row.push_back(i);
      sig.push_back(c.sense == Sense::le ? 1.0 : -1.0);
    }
  }
  const int ns = static_cast<int>(slack_row.size());
  std::vector<HalfFactor> halves(mc);
  for (int i = 0; i < mc; ++i) halves[i] = half_factor(A[i], d);
  const double c_scale = std::max(1.0, problem.objective.norm());
  const Matrix C = Matrix(problem.objective) / c_scale;
  const double normC = C.norm();
  const double normb = b.norm();

  SdpSolveReport report;
  auto finish = [&]() {
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  // Starting point.
  double xi = std::max(10.0, std::sqrt(static_cast<double>(d)));
  for (int i = 0; i < mc; ++i) xi = std::max(xi, (1.0 + std::abs(b[i])) * std::sqrt(static_cast<double>(d)));
  const double eta = std::max({10.0, std::sqrt(static_cast<double>(d)), normC});
  Matrix X = xi * Matrix::Identity(d, d);
  Matrix S = eta * Matrix::Identity(d, d);
  Vector y = Vector::Zero(mc);
  Vector s = Vector::Constant(ns, xi);
  Vector z = Vector::Constant(ns, eta);
  const double N = static_cast<double>(d + ns);

  auto calA = [&](const Matrix& M) {
    Vector out(mc);
    for (int i = 0; i < mc; ++i) out[i] = inner(A[i], M);
    return out;
  };
  auto calAt = [&](const Vector& v) {
    Matrix out = Matrix::Zero(d, d);
    for (int i = 0; i < mc; ++i) {
      if (v[i] == 0.0) continue;
      for (int k = 0; k < A[i].outerSize(); ++k) {
        for (SymSparse::InnerIterator it(A[i], k); it; ++it) out(it.row(), it.col()) += v[i] * it.value();
      }
    }
    return out;
  };

  struct Snapshot {
    Matrix X;
    Vector y;
    double score = kInf;
    double pinf = kInf, dinf = kInf, gap = kInf, pobj = 0.0, dobj = 0.0;
  } best;

  double step_factor = 0.9;
  int stalls = 0;
  SolveStatus status = SolveStatus::numerical_failure;
  int it = 0;
  double pinf = kInf, dinf = kInf, gap = kInf, pobj = 0.0, dobj = 0.0;
  for (; it <= options.max_iterations; ++it) {
    Vector rp = b - calA(X);
    for (int k = 0; k < ns; ++k) rp[slack_row[k]] -= sig[k] * s[k];
    const Matrix Rd = C - calAt(y) - S;
    Vector rz(ns);
    for (int k = 0; k < ns; ++k) rz[k] = -sig[k] * y[slack_row[k]] - z[k];
    pobj = (C.cwiseProduct(X)).sum();
    dobj = b.dot(y);
    const double mu = ((X.cwiseProduct(S)).sum() + s.dot(z)) / N;
    pinf = rp.norm() / (1.0 + normb);
    dinf = std::sqrt(Rd.squaredNorm() + rz.squaredNorm()) / (1.0 + normC);
    gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double score = std::max({pinf, dinf, gap});
    if (score < best.score) best = {X, y, score, pinf, dinf, gap, pobj, dobj};
    if (pinf <= options.tol && dinf <= options.tol && gap <= options.tol) {
      status = SolveStatus::optimal;
      break;
    }
    // Farkas-type certificates from diverging iterates.
    if (dobj > 0.0 && pinf > 1e-6 &&
        (normC + std::sqrt(Rd.squaredNorm() + rz.squaredNorm())) / dobj < 1e-8) {
      status = SolveStatus::infeasible;
      break;
    }
    if (pobj < 0.0 && dinf > 1e-6 && (rp.norm() + normb) / (-pobj) < 1e-8) {
      status = SolveStatus::unbounded;
      break;
    }
    if (it == options.max_iterations) break;

    // Nesterov-Todd scaling: G^{-1} X G^{-T} = G^T S G = diag(lambda).
    Eigen::LLT<Matrix> cholX(X), cholS(S);
    if (cholX.info() != Eigen::Success || cholS.info() != Eigen::Success) break;
    const Matrix LX = cholX.matrixL();
    const Matrix LS = cholS.matrixL();
    Eigen::JacobiSVD<Matrix> svd(LS.transpose() * LX, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector lam = svd.singularValues();
    if (lam.minCoeff() <= 0.0) break;
    const Vector lam_isqrt = lam.cwiseSqrt().cwiseInverse();
    const Matrix G = LX * svd.matrixV() * lam_isqrt.asDiagonal();
    const Matrix Ginv = lam.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() *
                        LX.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d));
    const Matrix W = G * G.transpose();

    // Schur complement M_ij = <A_i, W A_j W> + diag(s/z), using A_j = P_j + P_j^T.
    Matrix M(mc, mc);
    for (int j = 0; j < mc; ++j) {
      const HalfFactor& hf = halves[j];
      Matrix Y;
      if (hf.dense) {
        const Matrix AW = A[j] * W;
        Y.noalias() = W * AW;
      } else {
        const Matrix PW = hf.rows_block * W;
        Matrix K(d, d);
        K.noalias() = W(Eigen::all, hf.rows) * PW;
        Y = K + K.transpose();
      }
      for (int i = j; i < mc; ++i) {
        const double v = inner(A[i], Y);
        M(i, j) = v;
        M(j, i) = v;
      }
    }
    for (int k = 0; k < ns; ++k) M(slack_row[k], slack_row[k]) += s[k] / z[k];
    Eigen::LLT<Matrix> cholM(M);
    Eigen::LDLT<Matrix> ldltM;
    const bool use_llt = cholM.info() == Eigen::Success;
    if (!use_llt) ldltM.compute(M);

    const Matrix WRdW = W * Rd * W;
    auto direction = [&](const Matrix& Rtilde, const Vector& rc) {
      Matrix T(d, d);
      for (int p = 0; p < d; ++p) {
        for (int q = 0; q < d; ++q) T(p, q) = 2.0 * Rtilde(p, q) / (lam[p] + lam[q]);
      }
      const Matrix GTG = G * T * G.transpose();
      const Matrix H = GTG - WRdW;
      Vector rhs = rp - calA(H);
      for (int k = 0; k < ns; ++k) rhs[slack_row[k]] -= sig[k] * (rc[k] - s[k] * rz[k]) / z[k];
      Direction dir;
      dir.dy = use_llt ? Vector(cholM.solve(rhs)) : Vector(ldltM.solve(rhs));
      dir.dS = Rd - calAt(dir.dy);
      dir.dS = 0.5 * (dir.dS + dir.dS.transpose());
      dir.dX = GTG - W * dir.dS * W;
      dir.dX = 0.5 * (dir.dX + dir.dX.transpose());
      dir.dz.resize(ns);
      dir.ds.resize(ns);
      for (int k = 0; k < ns; ++k) {
        dir.dz[k] = rz[k] - sig[k] * dir.dy[slack_row[k]];
        dir.ds[k] = (rc[k] - s[k] * dir.dz[k]) / z[k];
      }
      return dir;
    };

    const Matrix lam2 = lam.cwiseAbs2().asDiagonal();
    // Predictor.
    const Direction aff = direction(-lam2, -s.cwiseProduct(z));
    double ap = std::min(1.0, std::min(max_psd_step(cholX, aff.dX), max_orthant_step(s, aff.ds)));
    double ad = std::min(1.0, std::min(max_psd_step(cholS, aff.dS), max_orthant_step(z, aff.dz)));
    const double mu_aff = (((X + ap * aff.dX).cwiseProduct(S + ad * aff.dS)).sum() +
                           (s + ap * aff.ds).dot(z + ad * aff.dz)) / N;
    double gamma = mu > 0.0 ? std::pow(std::max(mu_aff, 0.0) / mu, 3.0) : 0.0;
    gamma = std::clamp(gamma, 0.0, 1.0);

    // Corrector.
    const Matrix dXt = Ginv * aff.dX * Ginv.transpose();
    const Matrix dSt = G.transpose() * aff.dS * G;
    const Matrix prod = dXt * dSt;
    const Matrix Rt = gamma * mu * Matrix::Identity(d, d) - lam2 - 0.5 * (prod + prod.transpose());
    Vector rc = Vector::Constant(ns, gamma * mu) - s.cwiseProduct(z) - aff.ds.cwiseProduct(aff.dz);
    const Direction dir = direction(Rt, rc);

    ap = std::min(1.0, step_factor * std::min(max_psd_step(cholX, dir.dX), max_orthant_step(s, dir.ds)));
    ad = std::min(1.0, step_factor * std::min(max_psd_step(cholS, dir.dS), max_orthant_step(z, dir.dz)));
    if (!std::isfinite(ap) || !std::isfinite(ad)) break;

    X += ap * dir.dX;
    s += ap * dir.ds;
    y += ad * dir.dy;
    S += ad * dir.dS;
    z += ad * dir.dz;
    X = 0.5 * (X + X.transpose());
    S = 0.5 * (S + S.transpose());
    step_factor = 0.9 + 0.09 * std::min(ap, ad);
    stalls = (std::max(ap, ad) < 1e-8) ? stalls + 1 : 0;
    if (stalls >= 3) break;
  }

  if (status == SolveStatus::numerical_failure) {
    // Fall back to the best iterate seen.
    X = best.X;
    y = best.y;
    pinf = best.pinf;
    dinf = best.dinf;
    gap = best.gap;
    pobj = best.pobj;
    dobj = best.dobj;
    const double loose = std::max(1e-6, std::sqrt(options.tol));
    if (pinf <= loose && dinf <= loose && gap <= loose) status = SolveStatus::near_optimal;
  }

  report.status = status;
  report.Z = X;
  report.y = y.cwiseQuotient(row_scale) * c_scale;
  report.primal_objective = pobj * c_scale;
  report.dual_objective = dobj * c_scale;
  report.primal_infeasibility = pinf;
  report.dual_infeasibility = dinf;
  report.relative_gap = gap;
  report.iterations = it;
  if (status == SolveStatus::optimal || status == SolveStatus::near_optimal) {
    report.max_residual = sdp_residual(problem, X);
    Eigen::SelfAdjointEigenSolver<Matrix> es(X, Eigen::EigenvaluesOnly);
    report.min_eigenvalue = es.eigenvalues().minCoeff();
  }
  finish();
  return report;
}

}  // namespace irnav
