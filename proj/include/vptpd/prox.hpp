#pragma once

#include <array>

#include "vptpd/grid.hpp"
#include "vptpd/mobility.hpp"

namespace vptpd {

/// One cell of the weighted proximal problem
///   min 1/2 D_rho (rho - rho_hat)^2 + 1/2 sum_j D_m[j] (m_j - m_hat_j)^2 + zeta/2 phi(rho, m).
struct ProxCellInput
{
  int dim = 1;
  double rho_hat = 0;
  std::array<double, kMaxDim> m_hat{0, 0, 0};
  double D_rho = 1;
  std::array<double, kMaxDim> D_m{1, 1, 1};
  double zeta = 1;

  /// sum_j (D_m[j] m_hat_j)^2
  double weighted_momentum_sq() const;
};

struct InitialPlan
{
  enum class Outcome
  {
    DirectSolution,
    NewtonFrom,
  };
  Outcome outcome = Outcome::NewtonFrom;
  double rho = 0; // rho* for DirectSolution, rho_0 otherwise
  double rho_mid = 0;
  double c1 = 0;
  double c2 = 0;
  // Open interval known to contain the root of L (NewtonFrom only).
  double bracket_lo = 0;
  double bracket_hi = 0;
};

struct LValue
{
  double value;
  double deriv;
  double magnitude; // sum of the absolute values of the terms of L, sets its roundoff level
};

/// Reduced optimality function of rho after eliminating m, and its derivative.
/// Requires M(rho) >= 0 with M'(rho) finite.
LValue L_eval(double rho, const ProxCellInput& in, const Mobility<double>& mob);

/// Default interior offset for Newton starts next to a singular endpoint.
double default_delta_off(const Mobility<double>& mob);

/// Case table of initial values: either the exact minimizer or a Newton start
/// from which the iteration is monotone.
InitialPlan plan_initial(const ProxCellInput& in, const Mobility<double>& mob, double delta_off);

struct ProxOptions
{
  double tol = 1e-12; // on |L|, scaled by max(1, D_rho)
  int max_iter = 200;
  double delta_off = -1; // <= 0 picks default_delta_off(mob)
};

struct ProxCellResult
{
  double rho = 0;
  std::array<double, kMaxDim> m{0, 0, 0};
  int iterations = 0;
  bool direct = false;
  bool bisection_used = false;
  /// Newton left the monotone regime at some step (iterate moved against the expected side of the root).
  bool monotonicity_violated = false;
  double residual = 0; // |L(rho*)| for Newton solutions, 0 otherwise
  /// The root sits between two adjacent doubles and |L| at both exceeds tol
  /// (steep L next to a singular endpoint); rho is the better of the two.
  bool float_limited = false;
};

/// Unique minimizer of the cell problem; rho always ends inside the closed admissible interval.
/// Throws ConvergenceError if Newton does not settle within max_iter.
ProxCellResult prox_cell(const ProxCellInput& in, const Mobility<double>& mob, const ProxOptions& opts = {});

/// Objective of the cell problem (with the exact, extended-valued phi).
double prox_cell_objective(const ProxCellInput& in, const Mobility<double>& mob, double rho,
                           const std::array<double, kMaxDim>& m);

struct ProxStats
{
  long newton_iterations = 0;
  long bisection_fallbacks = 0;
  long direct_solutions = 0;
  int max_cell_iterations = 0;

  ProxStats& operator+=(const ProxStats& o);
};

/// Applies the weighted proximal map of (lambda / 2tau) Phi_h cellwise.
/// `weights` is diag(I_u) in the same stacked layout as u.
Vector prox_field(const Vector& u_hat, const Vector& weights, double lambda, double tau, const Mobility<double>& mob,
                  const GridSpec& g, const ProxOptions& opts = {}, ProxStats* stats = nullptr);

} // namespace vptpd
