#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rkd {

// max c^T x  s.t.  A_ub x <= b_ub (b_ub >= 0),  A_eq x = b_eq,  x >= 0.
// Dense two-phase tableau simplex with Bland's rule.
struct LinearProgram {
  Eigen::VectorXd c;
  Eigen::MatrixXd a_ub;
  Eigen::VectorXd b_ub;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
};

struct LpSolution {
  bool feasible = false;
  bool bounded = true;
  double value = 0.0;
  Eigen::VectorXd x;
};

LpSolution simplex_maximize(const LinearProgram& lp);

// The eigenvalue-mass LP behind the empirical clustering bound:
//   max sum_{i<=K} xi_i  s.t.  0 <= xi <= 1,  sum xi = n - K,
//   sum (1 - lambda_i)^2 xi_i <= sum_{i>K} (1 - lambda_i)^2 + Delta.
// Three independent solvers for the same optimum.
double spectral_lp_simplex(const Eigen::VectorXd& lambdas, int k, double delta);
// Minimizes the two-variable Lagrangian dual, a convex piecewise-linear
// function, over the vertices of its line arrangement.
double spectral_lp_dual_arrangement(const Eigen::VectorXd& lambdas, int k, double delta);
// Enumerates basic solutions: all but at most two variables at a bound.
// Capped at 14 eigenvalues.
double spectral_lp_vertex_enumeration(const Eigen::VectorXd& lambdas, int k, double delta);

struct SpectralLpDual {
  Eigen::VectorXd omega;   // per-variable upper-bound multipliers
  double omega_sum = 0.0;  // multiplier on the equality
  double omega_delta = 0.0;  // multiplier on the mass constraint
  double value = 0.0;      // dual objective at this point
  double closed_form = 0.0;  // (1 + (K-K0) C) Delta / ((1-l_K0)^2 - (1-l_{K+1})^2)
  double max_violation = 0.0;  // largest dual-feasibility violation
};

// Returns an empty optional with `why` set when a precondition fails.
std::optional<SpectralLpDual> spectral_lp_closed_form_dual(const Eigen::VectorXd& lambdas, int k, int k0, double delta,
                                                     std::string* why = nullptr);

struct LpBoundResult {
  double primal = 0.0;            // simplex
  double primal_check = 0.0;      // dual-arrangement solver
  std::optional<double> primal_enumerated;  // vertex enumeration when small
  double dual = 0.0;              // closed form
  double dual_point_violation = 0.0;
  bool solvers_agree = false;     // within 1e-9
  bool weak_duality = false;      // primal <= dual + 1e-9
};

inline constexpr int kMaxLpEigenvalues = 40;

LpBoundResult lp_bound_oracle(const Eigen::VectorXd& lambdas, int k, int k0, double delta);

}  // namespace rkd
