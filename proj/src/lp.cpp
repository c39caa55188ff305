#include "irnav/lp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

namespace irnav {

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::near_optimal: return "near_optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "numerical_failure";
}

SolveStatus solve_status_from_string(const std::string& s) {
  if (s == "optimal") return SolveStatus::optimal;
  if (s == "near_optimal") return SolveStatus::near_optimal;
  if (s == "infeasible") return SolveStatus::infeasible;
  if (s == "unbounded") return SolveStatus::unbounded;
  return SolveStatus::numerical_failure;
}

void LpInstance::normalize() {
  const int n = num_vars();
  if (A_ub.size() == 0) A_ub.resize(0, n);
  if (A_eq.size() == 0) A_eq.resize(0, n);
  if (b_ub.size() == 0) b_ub.resize(A_ub.rows());
  if (b_eq.size() == 0) b_eq.resize(A_eq.rows());
  if (lower.size() == 0) lower = Vector::Constant(n, -kInf);
  if (upper.size() == 0) upper = Vector::Constant(n, kInf);
  if (A_ub.cols() != n || A_eq.cols() != n || b_ub.size() != A_ub.rows() || b_eq.size() != A_eq.rows() ||
      lower.size() != n || upper.size() != n) {
    throw ValidationError("LpInstance: inconsistent dimensions");
  }
  if (!cost.allFinite() || !A_ub.allFinite() || !A_eq.allFinite() || !b_ub.allFinite() || !b_eq.allFinite()) {
    throw ValidationError("LpInstance: non-finite data");
  }
  for (int j = 0; j < n; ++j) {
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] == kInf || upper[j] == -kInf) {
      throw ValidationError("LpInstance: invalid bound on variable " + std::to_string(j));
    }
  }
}

double lp_residual(const LpInstance& lp, const Vector& x) {
  double res = 0.0;
  if (lp.A_ub.rows() > 0) res = std::max(res, ((lp.A_ub * x) - lp.b_ub).maxCoeff());
  if (lp.A_eq.rows() > 0) res = std::max(res, ((lp.A_eq * x) - lp.b_eq).cwiseAbs().maxCoeff());
  for (int j = 0; j < x.size(); ++j) {
    if (std::isfinite(lp.lower[j])) res = std::max(res, lp.lower[j] - x[j]);
    if (std::isfinite(lp.upper[j])) res = std::max(res, x[j] - lp.upper[j]);
  }
  return res;
}

namespace {

// x_j = offset_j + sum over parts (coef * x'_col)
struct VarMap {
  double offset = 0.0;
  int col_a = -1;
  double coef_a = 1.0;
  int col_b = -1;  // second part for free variables (coefficient -1)
};

enum class RowKind { ub, eq, bound };

struct StdRow {
  RowKind kind;
  int source;  // index into A_ub / A_eq / variable
};

class Tableau {
 public:
  Tableau(int rows, int cols) : t_(Matrix::Zero(rows + 1, cols + 1)), basis_(rows, -1) {}

  int rows() const { return static_cast<int>(t_.rows()) - 1; }
  int cols() const { return static_cast<int>(t_.cols()) - 1; }
  double& at(int i, int j) { return t_(i, j); }
  double rhs(int i) const { return t_(i, cols()); }
  double& rhs(int i) { return t_(i, cols()); }
  double reduced(int j) const { return t_(rows(), j); }
  auto objective_row() { return t_.row(rows()); }
  std::vector<int>& basis() { return basis_; }

  void pivot(int r, int q) {
    const double p = t_(r, q);
    t_.row(r) /= p;
    t_(r, q) = 1.0;
    for (int i = 0; i <= rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, q);
      if (f != 0.0) {
        t_.row(i) -= f * t_.row(r);
        t_(i, q) = 0.0;
      }
    }
    basis_[r] = q;
  }

  /// Sets the objective row to reduced costs of `cost` for the current basis.
  void price(const Vector& cost) {
    auto obj = objective_row();
    obj.setZero();
    obj.head(cols()) = cost.transpose();
    for (int i = 0; i < rows(); ++i) {
      const int b = basis_[i];
      if (b >= 0 && cost[b] != 0.0) obj -= cost[b] * t_.row(i);
    }
  }

  enum class Outcome { optimal, unbounded, limit };

  Outcome run(const std::vector<bool>& allowed, double tol, int max_pivots, int& pivots) {
    int degenerate_streak = 0;
    while (pivots < max_pivots) {
      const bool bland = degenerate_streak > 50;
      int q = -1;
      double best = -tol;
      for (int j = 0; j < cols(); ++j) {
        if (!allowed[j]) continue;
        const double d = reduced(j);
        if (d < best) {
          q = j;
          if (bland) break;
          best = d;
        }
      }
      if (q < 0) return Outcome::optimal;

      int r = -1;
      double best_ratio = kInf;
      double best_piv = 0.0;
      for (int i = 0; i < rows(); ++i) {
        const double a = t_(i, q);
        if (a <= 1e-9) continue;
        const double ratio = std::max(rhs(i), 0.0) / a;
        if (ratio < best_ratio - 1e-12) {
          best_ratio = ratio;
          r = i;
          best_piv = a;
        } else if (ratio <= best_ratio + 1e-12) {
          const bool take = bland ? basis_[i] < basis_[r] : a > best_piv;
          if (take) {
            r = i;
            best_piv = a;
            best_ratio = std::min(best_ratio, ratio);
          }
        }
      }
      if (r < 0) return Outcome::unbounded;
      degenerate_streak = best_ratio <= 1e-12 ? degenerate_streak + 1 : 0;
      pivot(r, q);
      ++pivots;
    }
    return Outcome::limit;
  }

 private:
  Matrix t_;
  std::vector<int> basis_;
};

}  // namespace

SolveReport solve_lp(const LpInstance& input, const LpOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  LpInstance lp = input;
  lp.normalize();
  const int n = lp.num_vars();
  SolveReport report;
  auto finish = [&](SolveReport& rep) -> SolveReport& {
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
  };

  // Variable substitution onto x' >= 0.
  std::vector<VarMap> vmap(n);
  int nstd = 0;
  std::vector<StdRow> bound_rows;
  std::vector<double> bound_rhs;
  for (int j = 0; j < n; ++j) {
    VarMap& m = vmap[j];
    if (std::isfinite(lp.lower[j])) {
      m.offset = lp.lower[j];
      m.col_a = nstd++;
      if (std::isfinite(lp.upper[j])) {
        bound_rows.push_back({RowKind::bound, j});
        bound_rhs.push_back(lp.upper[j] - lp.lower[j]);
      }
    } else if (std::isfinite(lp.upper[j])) {
      m.offset = lp.upper[j];
      m.col_a = nstd++;
      m.coef_a = -1.0;
    } else {
      m.col_a = nstd++;
      m.col_b = nstd++;
    }
  }
  Vector offset(n);
  for (int j = 0; j < n; ++j) offset[j] = vmap[j].offset;

  auto expand_row = [&](const auto& row, auto&& out) {
    out.setZero();
    for (int j = 0; j < n; ++j) {
      const double a = row[j];
      if (a == 0.0) continue;
      out[vmap[j].col_a] += a * vmap[j].coef_a;
      if (vmap[j].col_b >= 0) out[vmap[j].col_b] -= a;
    }
  };

  const int m_ub = static_cast<int>(lp.A_ub.rows());
  const int m_eq = static_cast<int>(lp.A_eq.rows());
  const int m_bd = static_cast<int>(bound_rows.size());
  const int m = m_ub + m_bd + m_eq;
  const int n_slack = m_ub + m_bd;

  // Standard form rows: [A' | slack] x = b', with row sign flips so that b' >= 0.
  Matrix A_std = Matrix::Zero(m, nstd + n_slack);
  Vector b_std(m);
  for (int i = 0; i < m_ub; ++i) {
    expand_row(lp.A_ub.row(i), A_std.row(i).head(nstd));
    A_std(i, nstd + i) = 1.0;
    b_std[i] = lp.b_ub[i] - lp.A_ub.row(i).dot(offset);
  }
  for (int k = 0; k < m_bd; ++k) {
    const int i = m_ub + k;
    A_std(i, vmap[bound_rows[k].source].col_a) = 1.0;
    A_std(i, nstd + i) = 1.0;
    b_std[i] = bound_rhs[k];
  }
  for (int k = 0; k < m_eq; ++k) {
    const int i = n_slack + k;
    expand_row(lp.A_eq.row(k), A_std.row(i).head(nstd));
    b_std[i] = lp.b_eq[k] - lp.A_eq.row(k).dot(offset);
  }
  Vector row_sign = Vector::Ones(m);
  for (int i = 0; i < m; ++i) {
    if (b_std[i] < 0.0) {
      row_sign[i] = -1.0;
      A_std.row(i) *= -1.0;
      b_std[i] = -b_std[i];
    }
  }

  Vector cost_std = Vector::Zero(nstd + n_slack);
  double cost_const = lp.cost.dot(offset);
  for (int j = 0; j < n; ++j) {
    cost_std[vmap[j].col_a] += lp.cost[j] * vmap[j].coef_a;
    if (vmap[j].col_b >= 0) cost_std[vmap[j].col_b] -= lp.cost[j];
  }

  // Rows whose slack can start basic (unflipped inequality rows) need no artificial.
  std::vector<int> art_rows;
  for (int i = 0; i < m; ++i) {
    const bool slack_basic = i < n_slack && row_sign[i] > 0.0;
    if (!slack_basic) art_rows.push_back(i);
  }
  const int n_real = nstd + n_slack;
  const int n_art = static_cast<int>(art_rows.size());
  Tableau tab(m, n_real + n_art);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n_real; ++j) tab.at(i, j) = A_std(i, j);
    tab.rhs(i) = b_std[i];
    if (i < n_slack && row_sign[i] > 0.0) tab.basis()[i] = nstd + i;
  }
  for (int a = 0; a < n_art; ++a) {
    tab.at(art_rows[a], n_real + a) = 1.0;
    tab.basis()[art_rows[a]] = n_real + a;
  }

  const double tol = options.tol;
  int pivots = 0;
  std::vector<bool> allowed(n_real + n_art, true);

  if (n_art > 0) {
    Vector phase1 = Vector::Zero(n_real + n_art);
    phase1.tail(n_art).setOnes();
    tab.price(phase1);
    auto outcome = tab.run(allowed, tol * 1e-2, options.max_pivots, pivots);
    if (outcome == Tableau::Outcome::limit) {
      report.status = SolveStatus::numerical_failure;
      report.iterations = pivots;
      return finish(report);
    }
    double infeas = 0.0;
    for (int i = 0; i < m; ++i) {
      if (tab.basis()[i] >= n_real) infeas += tab.rhs(i);
    }
    const double scale = 1.0 + b_std.cwiseAbs().maxCoeff();
    if (infeas > tol * scale) {
      report.status = SolveStatus::infeasible;
      report.iterations = pivots;
      return finish(report);
    }
    // Drive zero-level artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
      if (tab.basis()[i] < n_real) continue;
      int q = -1;
      double best = 1e-9;
      for (int j = 0; j < n_real; ++j) {
        if (std::abs(tab.at(i, j)) > best) {
          best = std::abs(tab.at(i, j));
          q = j;
        }
      }
      if (q >= 0) tab.pivot(i, q);
    }
    for (int a = 0; a < n_art; ++a) allowed[n_real + a] = false;
  }

  Vector cost_full = Vector::Zero(n_real + n_art);
  cost_full.head(n_real) = cost_std;
  tab.price(cost_full);
  auto outcome = tab.run(allowed, tol * 1e-2, options.max_pivots, pivots);
  report.iterations = pivots;
  if (outcome == Tableau::Outcome::unbounded) {
    report.status = SolveStatus::unbounded;
    return finish(report);
  }
  if (outcome == Tableau::Outcome::limit) {
    report.status = SolveStatus::numerical_failure;
    return finish(report);
  }

  // Recompute the basic solution and duals from the original data.
  Vector x_std = Vector::Zero(n_real);
  Vector y = Vector::Zero(m);
  std::vector<int> real_rows, real_cols;
  for (int i = 0; i < m; ++i) {
    if (tab.basis()[i] < n_real) {
      real_rows.push_back(i);
      real_cols.push_back(tab.basis()[i]);
    }
  }
  bool refined = false;
  if (static_cast<int>(real_rows.size()) == m) {
    Matrix B(m, m);
    Vector cb(m);
    for (int k = 0; k < m; ++k) {
      B.col(k) = A_std.col(real_cols[k]);
      cb[k] = cost_std[real_cols[k]];
    }
    Eigen::PartialPivLU<Matrix> lu(B);
    if (std::abs(lu.determinant()) > 1e-300) {
      Vector xb = lu.solve(b_std);
      if (xb.allFinite() && (B * xb - b_std).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + b_std.cwiseAbs().maxCoeff())) {
        for (int k = 0; k < m; ++k) x_std[real_cols[k]] = std::max(xb[k], 0.0);
        y = lu.transpose().solve(cb);
        refined = y.allFinite();
      }
    }
  }
  if (!refined) {
    x_std.setZero();
    for (int i = 0; i < m; ++i) {
      if (tab.basis()[i] < n_real) x_std[tab.basis()[i]] = std::max(tab.rhs(i), 0.0);
    }
    // Duals from the tableau: reduced cost of slack column i equals -y_i (slacks have zero cost).
    y.setZero();
    for (int i = 0; i < n_slack; ++i) y[i] = -tab.reduced(nstd + i) * row_sign[i];
  }

  Vector x(n);
  for (int j = 0; j < n; ++j) {
    double v = vmap[j].offset + vmap[j].coef_a * x_std[vmap[j].col_a];
    if (vmap[j].col_b >= 0) v -= x_std[vmap[j].col_b];
    x[j] = v;
  }
  // Snap bound-active values exactly onto their bounds.
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(lp.lower[j]) && x[j] < lp.lower[j]) x[j] = lp.lower[j];
    if (std::isfinite(lp.upper[j]) && x[j] > lp.upper[j]) x[j] = lp.upper[j];
  }

  report.primal = x;
  report.objective = lp.cost.dot(x);
  const Vector reduced = cost_std - A_std.transpose() * y;
  const double dual_violation = std::max(0.0, -reduced.minCoeff());
  report.dual_bound = b_std.dot(y) + cost_const;
  report.duality_gap = std::abs(report.objective - report.dual_bound) + dual_violation;
  // Undo row flips: multipliers in the original row orientation.
  Vector y_orig = y.cwiseProduct(row_sign);
  report.dual_ub = y_orig.head(m_ub);
  report.dual_eq = y_orig.tail(m_eq);
  report.max_residual = lp_residual(lp, x);
  const double scale = 1.0 + std::abs(report.objective);
  report.status = (report.max_residual <= tol * (1.0 + b_std.cwiseAbs().maxCoeff()) &&
                   report.duality_gap <= tol * scale * 10.0)
                      ? SolveStatus::optimal
                      : SolveStatus::near_optimal;
  return finish(report);
}

}  // namespace irnav
