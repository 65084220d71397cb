#pragma once

#include <array>
#include <optional>
#include <string>

#include "vptpd/action.hpp"
#include "vptpd/energy.hpp"
#include "vptpd/grid.hpp"
#include "vptpd/mobility.hpp"
#include "vptpd/precond.hpp"
#include "vptpd/prox.hpp"

namespace vptpd {

struct SolverParams
{
  double lambda0 = 0.556;
  double sigma0 = 0.667;
  double kappa1 = 0.3;
  double kappa2 = 0.8;
  double tol = 1e-5; // on e1
  double TOL = 1e-5; // on max(e2..e5)
  int iter_max = 20000;
  bool adaptive = false;
  double lambda_max = 3 * 0.556;
  double lambda_min = 0.556;
  double gamma_plus = 1.2;
  double gamma_minus = 0.8;
  double theta_max = 0.99;
  /// Step size of the PrePDJKO baseline (unit-weight primal metric).
  double lambda_baseline = 0.556;
  /// Relative slack before a monitor counts as having increased.
  double monitor_hysteresis = 1e-14;
  /// Floor on the primal metric entries in units of the cell volume; 0 keeps max(r, 1e-8).
  double iu_floor = 0;

  /// Sets lambda0 and the adaptive caps lambda_max = 3 lambda0, lambda_min = lambda0.
  SolverParams& with_lambda0(double lambda);
  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

enum class SolverKind
{
  Vptpd,
  VptpdAdaptive,
  PrePdJko,
};

std::string to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& name);

struct Monitors
{
  std::array<double, 5> e{0, 0, 0, 0, 0};

  double constraint() const { return e[0]; }
  double max_relative() const;
  bool converged(const SolverParams& p) const { return e[0] < p.tol && max_relative() < p.TOL; }
};

/// |now - prev| / |now| with 0/0 -> 0.
double relative_change(double now, double prev);
double relative_change(const Vector& now, const Vector& prev);

/// Everything that defines one JKO step besides the warm start.
struct JkoProblem
{
  const GridSpec& grid;
  const Mobility<double>& mobility;
  const EnergyModel& energy;
  ActionParams action;
};

/// Per-iterate scalars needed by the monitors.
struct IterateValues
{
  double energy = 0;
  double action = 0;
};

Monitors compute_monitors(const Vector& u_next, const Vector& u_now, const Vector& p_next, const Vector& p_now,
                          const IterateValues& next, const IterateValues& now, const ConstraintSystem& sys);

/// Step-size update from the alignment of the last two primal increments and
/// the monitor trend.
double adapt_lambda(double lambda_prev, const Vector& du_now, const Vector& du_prev, const Monitors& now,
                    const Monitors& prev, const SolverParams& params);

/// Gradient of J_h in the stacked layout (zero on the momentum block).
Vector stacked_energy_grad(const EnergyModel& model, const Vector& u, const GridSpec& g);

/// Surrogate for grad F_h(u_next) implied by the proximal step.
Vector grad_F_tilde(const Vector& u_next, const Vector& u_bar, const Vector& p_bar, const DiagOperator& Iu,
                    double lambda, const Vector& grad_J_bar, const Vector& grad_J_next, const SparseMatrix& B);

struct IterState
{
  Vector u, u_prev, p, p_prev, u_bar, p_bar;
  Vector du, du_prev; // u_n - u_{n-1} and the one before
  Monitors monitors, monitors_prev;
  IterateValues values;
  double lambda = 0;
  int iteration = 0;
  int history = 0; // accepted iterates with monitors available, capped at 2

  static IterState warm_start(const Vector& u0, const Vector& p0, double lambda);
};

/// Preconditioners and constraints fixed for one JKO step.
struct StepSystems
{
  ConstraintSystem constraints;
  DiagOperator Iu;
  DualPreconditioner Ip;
};

StepSystems build_step_systems(const JkoProblem& prob, const Vector& u_k, const DualSolverOptions& dual = {},
                               double iu_floor = 0);

/// One VPTPD iteration; returns the state after the extrapolation.
IterState vptpd_iterate(const IterState& s, const StepSystems& sys, const JkoProblem& prob,
                        const SolverParams& params, ProxStats* stats = nullptr);

struct IterStats
{
  bool converged = false;
  int iterations = 0;
  double wall_ms = 0;
  Monitors monitors;
  double lambda_min = 0;
  double lambda_max = 0;
  double lambda_mean = 0;
  ProxStats prox;
  int factorizations = 0;
  bool min_rho_ok = true; // every inner iterate stayed inside the mobility bounds
};

struct JkoResult
{
  Vector u;
  Vector p;
  IterStats stats;
};

/// VPTPD iteration for one JKO step, warm-started from (u_k, p_k). Does not throw on
/// iter_max; check stats.converged.
JkoResult solve_jko_step(const JkoProblem& prob, const Vector& u_k, const Vector& p_k, const SolverParams& params,
                         const DualSolverOptions& dual = {});

/// Preconditioned primal-dual baseline with I_u = I/lambda and I_p = lambda B B^T.
JkoResult prepdjko_step(const JkoProblem& prob, const Vector& u_k, const Vector& p_k, const SolverParams& params,
                        const DualSolverOptions& dual = {});

JkoResult solve_step(SolverKind kind, const JkoProblem& prob, const Vector& u_k, const Vector& p_k,
                     SolverParams params, const DualSolverOptions& dual = {});

} // namespace vptpd
