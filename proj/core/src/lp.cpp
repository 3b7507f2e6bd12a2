#include "rkd/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rkd/errors.hpp"

namespace rkd {
namespace {

constexpr double kPivotTol = 1e-12;

struct Tableau {
  Eigen::MatrixXd t;  // rows: constraints then objective; last column: rhs
  std::vector<int> basis;

  int rows() const { return static_cast<int>(t.rows()) - 1; }
  int cols() const { return static_cast<int>(t.cols()) - 1; }

  void pivot(int r, int c) {
    t.row(r) /= t(r, c);
    for (int i = 0; i <= rows(); ++i)
      if (i != r && t(i, c) != 0.0) t.row(i) -= t(i, c) * t.row(r);
    basis[r] = c;
  }

  // Maximizes the objective row (stored as reduced costs: entering columns
  // have a negative entry). Columns >= `allowed` never enter.
  bool optimize(int allowed) {
    const int obj = rows();
    for (int guard = 0; guard < 100000; ++guard) {
      int enter = -1;
      for (int c = 0; c < allowed; ++c)
        if (t(obj, c) < -kPivotTol) {
          enter = c;
          break;
        }
      if (enter < 0) return true;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0; r < rows(); ++r) {
        if (t(r, enter) <= kPivotTol) continue;
        const double ratio = t(r, cols()) / t(r, enter);
        if (ratio < best - kPivotTol || (ratio <= best + kPivotTol && leave >= 0 && basis[r] < basis[leave])) {
          best = std::min(best, ratio);
          leave = r;
        }
      }
      if (leave < 0) return false;  // unbounded
      pivot(leave, enter);
    }
    throw NumericError("simplex did not terminate");
  }
};

}  // namespace

LpSolution simplex_maximize(const LinearProgram& lp) {
  const int n = static_cast<int>(lp.c.size());
  const int m_ub = static_cast<int>(lp.b_ub.size());
  const int m_eq = static_cast<int>(lp.b_eq.size());
  const int m = m_ub + m_eq;
  for (int i = 0; i < m_ub; ++i)
    if (lp.b_ub(i) < 0) throw DomainError("inequality right-hand sides must be nonnegative");

  // Columns: x (n), slacks (m_ub), artificials (m_eq), rhs.
  const int total = n + m_ub + m_eq;
  Tableau tab{Eigen::MatrixXd::Zero(m + 1, total + 1), std::vector<int>(m)};
  for (int i = 0; i < m_ub; ++i) {
    tab.t.row(i).head(n) = lp.a_ub.row(i);
    tab.t(i, n + i) = 1.0;
    tab.t(i, total) = lp.b_ub(i);
    tab.basis[i] = n + i;
  }
  for (int i = 0; i < m_eq; ++i) {
    const double s = lp.b_eq(i) < 0 ? -1.0 : 1.0;
    tab.t.row(m_ub + i).head(n) = s * lp.a_eq.row(i);
    tab.t(m_ub + i, n + m_ub + i) = 1.0;
    tab.t(m_ub + i, total) = s * lp.b_eq(i);
    tab.basis[m_ub + i] = n + m_ub + i;
  }

  LpSolution sol;
  if (m_eq > 0) {
    // Phase 1: maximize -sum(artificials).
    for (int i = 0; i < m_eq; ++i) tab.t.row(m) -= tab.t.row(m_ub + i);
    for (int i = 0; i < m_eq; ++i) tab.t(m, n + m_ub + i) = 0.0;
    tab.optimize(n + m_ub);
    if (tab.t(m, total) < -1e-9) return sol;
    // Drive remaining artificials out of the basis where possible.
    for (int r = 0; r < m; ++r) {
      if (tab.basis[r] < n + m_ub) continue;
      for (int c = 0; c < n + m_ub; ++c)
        if (std::abs(tab.t(r, c)) > 1e-9) {
          tab.pivot(r, c);
          break;
        }
    }
  }
  sol.feasible = true;

  // Phase 2 objective in reduced-cost form.
  tab.t.row(m).setZero();
  tab.t.row(m).head(n) = -lp.c.transpose();
  for (int r = 0; r < m; ++r) {
    const int b = tab.basis[r];
    if (b < n && lp.c(b) != 0.0) tab.t.row(m) += lp.c(b) * tab.t.row(r);
  }
  sol.bounded = tab.optimize(n + m_ub);
  if (!sol.bounded) return sol;
  sol.x = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < m; ++r)
    if (tab.basis[r] < n) sol.x(tab.basis[r]) = tab.t(r, total);
  sol.value = lp.c.dot(sol.x);
  return sol;
}

namespace {

struct SpectralLp {
  Eigen::VectorXd cost;  // (1 - lambda_i)^2
  Eigen::VectorXd objective;  // 1 for i < K
  double budget = 0.0;
  double count = 0.0;  // n - K
};

SpectralLp make_spectral_lp(const Eigen::VectorXd& lambdas, int k, double delta) {
  const int n = static_cast<int>(lambdas.size());
  if (k < 1 || k >= n) throw DomainError("need 1 <= K < |lambdas|");
  if (n > kMaxLpEigenvalues) throw SizeLimit("spectral LP is capped at 40 eigenvalues");
  if (delta < 0) throw DomainError("Delta must be nonnegative");
  SpectralLp lp;
  lp.cost = (1.0 - lambdas.array()).square();
  lp.objective = Eigen::VectorXd::Zero(n);
  lp.objective.head(k).setOnes();
  lp.budget = lp.cost.tail(n - k).sum() + delta;
  lp.count = n - k;
  return lp;
}

}  // namespace

double spectral_lp_simplex(const Eigen::VectorXd& lambdas, int k, double delta) {
  const auto s = make_spectral_lp(lambdas, k, delta);
  const int n = static_cast<int>(lambdas.size());
  LinearProgram lp;
  lp.c = s.objective;
  lp.a_ub = Eigen::MatrixXd::Zero(n + 1, n);
  lp.a_ub.topRows(n).setIdentity();
  lp.a_ub.row(n) = s.cost.transpose();
  lp.b_ub = Eigen::VectorXd::Ones(n + 1);
  lp.b_ub(n) = s.budget;
  lp.a_eq = Eigen::MatrixXd::Ones(1, n);
  lp.b_eq = Eigen::VectorXd::Constant(1, s.count);
  const auto sol = simplex_maximize(lp);
  if (!sol.feasible || !sol.bounded) throw NumericError("spectral LP reported infeasible or unbounded");
  return sol.value;
}

double spectral_lp_dual_arrangement(const Eigen::VectorXd& lambdas, int k, double delta) {
  const auto s = make_spectral_lp(lambdas, k, delta);
  const int n = static_cast<int>(lambdas.size());
  // g(a, b) = sum_i max(0, o_i - a - b c_i) + a (n - K) + b B,  b >= 0.
  const auto g = [&](double a, double b) {
    double v = a * s.count + b * s.budget;
    for (int i = 0; i < n; ++i) v += std::max(0.0, s.objective(i) - a - b * s.cost(i));
    return v;
  };
  double best = std::min(g(0.0, 0.0), g(1.0, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double dc = s.cost(i) - s.cost(j);
      if (std::abs(dc) < 1e-15) continue;
      const double b = (s.objective(i) - s.objective(j)) / dc;
      if (b < 0) continue;
      best = std::min(best, g(s.objective(i) - b * s.cost(i), b));
    }
  return best;
}

double spectral_lp_vertex_enumeration(const Eigen::VectorXd& lambdas, int k, double delta) {
  const auto s = make_spectral_lp(lambdas, k, delta);
  const int n = static_cast<int>(lambdas.size());
  if (n > 14) throw SizeLimit("vertex enumeration is capped at 14 eigenvalues");
  constexpr double kTol = 1e-10;
  double best = -std::numeric_limits<double>::infinity();
  const auto consider = [&](const Eigen::VectorXd& xi) {
    if ((xi.array() < -kTol).any() || (xi.array() > 1 + kTol).any()) return;
    if (std::abs(xi.sum() - s.count) > 1e-8) return;
    if (s.cost.dot(xi) > s.budget + 1e-10) return;
    best = std::max(best, s.objective.dot(xi));
  };
  Eigen::VectorXd xi(n);
  // free = indices left fractional; -1 marks an unused slot.
  for (int f1 = -1; f1 < n; ++f1)
    for (int f2 = (f1 < 0 ? -1 : f1 + 1); f2 < n; ++f2) {
      if (f1 < 0 && f2 >= 0) continue;
      std::vector<int> fixed;
      for (int i = 0; i < n; ++i)
        if (i != f1 && i != f2) fixed.push_back(i);
      const long combos = 1L << fixed.size();
      for (long mask = 0; mask < combos; ++mask) {
        double used = 0.0, spent = 0.0;
        for (size_t t = 0; t < fixed.size(); ++t) {
          const double v = (mask >> t) & 1 ? 1.0 : 0.0;
          xi(fixed[t]) = v;
          used += v;
          spent += v * s.cost(fixed[t]);
        }
        if (f1 < 0) {
          consider(xi);
        } else if (f2 < 0) {
          xi(f1) = s.count - used;
          consider(xi);
        } else {
          // Both the count and the budget constraint tight.
          const double det = s.cost(f2) - s.cost(f1);
          if (std::abs(det) < 1e-15) continue;
          const double r1 = s.count - used, r2 = s.budget - spent;
          xi(f2) = (r2 - s.cost(f1) * r1) / det;
          xi(f1) = r1 - xi(f2);
          consider(xi);
        }
      }
    }
  if (!std::isfinite(best)) throw NumericError("vertex enumeration found no feasible point");
  return best;
}

std::optional<SpectralLpDual> spectral_lp_closed_form_dual(const Eigen::VectorXd& lambdas, int k, int k0, double delta,
                                                     std::string* why) {
  const int n = static_cast<int>(lambdas.size());
  const auto fail = [&](const std::string& msg) -> std::optional<SpectralLpDual> {
    if (why) *why = msg;
    return std::nullopt;
  };
  if (k < 1 || k >= n) return fail("need 1 <= K < |X|");
  if (k0 < 1 || k0 > k) return fail("need 1 <= K0 <= K");
  const auto sq = [&](int i) { return (1.0 - lambdas(i - 1)) * (1.0 - lambdas(i - 1)); };
  if (!(delta < sq(k))) return fail("Delta < (1 - lambda_K)^2 violated");
  if (!(lambdas(k0 - 1) < lambdas(k))) return fail("lambda_K0 < lambda_{K+1} violated");
  const double den = sq(k0) - sq(k + 1);
  if (!(den > 0)) return fail("(1 - lambda_K0)^2 > (1 - lambda_{K+1})^2 violated");
  const double gap = sq(k0) - sq(k);
  if (delta == 0.0 && gap > 0.0) return fail("C_K0 is infinite (Delta = 0 with lambda_K0 < lambda_K)");

  SpectralLpDual d;
  d.omega = Eigen::VectorXd::Zero(n);
  for (int i = k0 + 1; i <= k; ++i) d.omega(i - 1) = (sq(k0) - sq(i)) / den;
  for (int i = k + 1; i <= n; ++i) d.omega(i - 1) = (sq(k + 1) - sq(i)) / den;
  d.omega_sum = sq(k + 1) / den;
  d.omega_delta = 1.0 / den;

  double budget = delta;
  for (int i = k + 1; i <= n; ++i) budget += sq(i);
  d.value = d.omega.sum() - (n - k) * d.omega_sum + budget * d.omega_delta;
  // (1 + (K - K0) C) Delta with C = gap / Delta, written without the division.
  d.closed_form = (delta + (k - k0) * gap) / den;

  for (int i = 1; i <= n; ++i) {
    const double lhs = d.omega(i - 1) - d.omega_sum + sq(i) * d.omega_delta;
    const double need = i <= k ? 1.0 : 0.0;
    d.max_violation = std::max({d.max_violation, need - lhs, -d.omega(i - 1)});
  }
  return d;
}

LpBoundResult lp_bound_oracle(const Eigen::VectorXd& lambdas, int k, int k0, double delta) {
  std::string why;
  const auto dual = spectral_lp_closed_form_dual(lambdas, k, k0, delta, &why);
  if (!dual) throw DomainError("LP bound preconditions: " + why);
  LpBoundResult r;
  r.primal = spectral_lp_simplex(lambdas, k, delta);
  r.primal_check = spectral_lp_dual_arrangement(lambdas, k, delta);
  if (lambdas.size() <= 12) r.primal_enumerated = spectral_lp_vertex_enumeration(lambdas, k, delta);
  r.dual = dual->closed_form;
  r.dual_point_violation = dual->max_violation;
  r.solvers_agree = std::abs(r.primal - r.primal_check) <= 1e-9 &&
                    (!r.primal_enumerated || std::abs(r.primal - *r.primal_enumerated) <= 1e-9);
  r.weak_duality = r.primal <= r.dual + 1e-9;
  return r;
}

}  // namespace rkd
