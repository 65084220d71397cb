#include "vptpd/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "vptpd/errors.hpp"

namespace vptpd {

SolverParams& SolverParams::with_lambda0(double lambda)
{
  lambda0 = lambda;
  lambda_max = 3 * lambda;
  lambda_min = lambda;
  return *this;
}

void SolverParams::validate() const
{
  const auto require = [](bool ok, const char* msg) {
    if (!ok) { throw ConfigError(std::string("SolverParams: ") + msg); }
  };
  require(lambda0 > 0 && sigma0 > 0, "lambda0 and sigma0 must be positive");
  require(lambda_baseline > 0, "lambda_baseline must be positive");
  require(iu_floor >= 0, "iu_floor must be nonnegative");
  require(kappa1 >= 0 && kappa2 >= 0, "kappa1 and kappa2 must be nonnegative");
  require(tol > 0 && TOL > 0, "tol and TOL must be positive");
  require(iter_max > 0, "iter_max must be positive");
  require(gamma_plus > 1, "gamma_plus must exceed 1");
  require(gamma_minus > 0 && gamma_minus < 1, "gamma_minus must lie in (0, 1)");
  require(gamma_plus * gamma_minus < 1, "gamma_plus * gamma_minus must be below 1");
  require(theta_max > 0 && theta_max < 1, "theta_max must lie in (0, 1)");
  require(lambda_min <= lambda0 && lambda0 <= lambda_max, "need lambda_min <= lambda0 <= lambda_max");
  require(monitor_hysteresis >= 0, "monitor_hysteresis must be nonnegative");
}

std::string to_string(SolverKind kind)
{
  switch (kind) {
  case SolverKind::Vptpd: return "vptpd";
  case SolverKind::VptpdAdaptive: return "vptpd_s";
  case SolverKind::PrePdJko: return "prepdjko";
  }
  return "?";
}

SolverKind solver_kind_from_string(const std::string& name)
{
  if (name == "vptpd") { return SolverKind::Vptpd; }
  if (name == "vptpd_s") { return SolverKind::VptpdAdaptive; }
  if (name == "prepdjko") { return SolverKind::PrePdJko; }
  throw ConfigError("unknown solver '" + name + "' (expected vptpd, vptpd_s or prepdjko)");
}

double Monitors::max_relative() const
{
  return std::max({e[1], e[2], e[3], e[4]});
}

double relative_change(double now, double prev)
{
  const double num = std::abs(now - prev);
  if (num == 0) { return 0; }
  if (!std::isfinite(num)) { return std::numeric_limits<double>::infinity(); }
  return num / std::abs(now);
}

double relative_change(const Vector& now, const Vector& prev)
{
  const double num = (now - prev).norm();
  if (num == 0) { return 0; }
  return num / now.norm();
}

Monitors compute_monitors(const Vector& u_next, const Vector& u_now, const Vector& p_next, const Vector& p_now,
                          const IterateValues& next, const IterateValues& now, const ConstraintSystem& sys)
{
  Monitors m;
  const Vector res = sys.residual(u_next);
  m.e[0] = res.norm() / std::sqrt(static_cast<double>(res.size()));
  m.e[1] = relative_change(next.energy, now.energy);
  m.e[2] = relative_change(next.action, now.action);
  m.e[3] = relative_change(u_next, u_now);
  m.e[4] = relative_change(p_next, p_now);
  return m;
}

double adapt_lambda(double lambda_prev, const Vector& du_now, const Vector& du_prev, const Monitors& now,
                    const Monitors& prev, const SolverParams& params)
{
  double lambda = lambda_prev;
  if (du_now.dot(du_prev) > params.theta_max * du_now.norm() * du_prev.norm()) {
    lambda = std::min(lambda * params.gamma_plus, params.lambda_max);
  }
  bool increased = false;
  for (std::size_t i = 0; i < now.e.size(); ++i) {
    if (now.e[i] > prev.e[i] * (1 + params.monitor_hysteresis)) { increased = true; }
  }
  if (increased) { lambda = std::max(lambda * params.gamma_minus, params.lambda_min); }
  return lambda;
}

Vector stacked_energy_grad(const EnergyModel& model, const Vector& u, const GridSpec& g)
{
  Vector out = Vector::Zero(u.size());
  out.head(g.size()) = energy_grad(model, project_to_energy_domain(model, rho_block(u, g)), g);
  return out;
}

Vector grad_F_tilde(const Vector& u_next, const Vector& u_bar, const Vector& p_bar, const DiagOperator& Iu,
                    double lambda, const Vector& grad_J_bar, const Vector& grad_J_next, const SparseMatrix& B)
{
  check_shape(u_next.size() == u_bar.size() && u_next.size() == Iu.size() && grad_J_bar.size() == u_next.size()
                && grad_J_next.size() == u_next.size() && B.cols() == u_next.size() && B.rows() == p_bar.size(),
              "grad_F_tilde: inconsistent sizes");
  Vector out = Iu.apply(u_bar - u_next) / lambda;
  out -= B.transpose() * p_bar;
  out += grad_J_next - grad_J_bar;
  return out;
}

IterState IterState::warm_start(const Vector& u0, const Vector& p0, double lambda)
{
  IterState s;
  s.u = s.u_prev = s.u_bar = u0;
  s.p = s.p_prev = s.p_bar = p0;
  s.du = s.du_prev = Vector::Zero(u0.size());
  s.lambda = lambda;
  return s;
}

StepSystems build_step_systems(const JkoProblem& prob, const Vector& u_k, const DualSolverOptions& dual,
                               double iu_floor)
{
  ConstraintSystem cs = assemble_constraints(prob.grid, rho_block(u_k, prob.grid));
  DiagOperator iu = build_Iu(u_k, prob.mobility, prob.energy, prob.action, prob.grid,
                             iu_floor * prob.grid.cell_volume());
  DualPreconditioner ip(cs.B, iu, dual);
  return {std::move(cs), std::move(iu), std::move(ip)};
}

namespace {

IterateValues evaluate(const JkoProblem& prob, const Vector& u)
{
  const auto rho = rho_block(u, prob.grid);
  return {energy_value(prob.energy, project_to_energy_domain(prob.energy, rho), prob.grid),
          action_total(u, prob.mobility, prob.grid)};
}

bool within_bounds(const Vector& u, const Mobility<double>& mob, const GridSpec& g)
{
  const auto [lo, hi] = mob.bounds();
  const auto rho = rho_block(u, g);
  return rho.minCoeff() >= lo && rho.maxCoeff() <= hi;
}

// Records the new iterate and its monitors, then shifts histories.
void accept(IterState& s, Vector u_next, Vector p_next, const IterateValues& values, const ConstraintSystem& cs,
            double kappa1, double kappa2)
{
  const Monitors mon = compute_monitors(u_next, s.u, p_next, s.p, values, s.values, cs);
  s.du_prev = std::move(s.du);
  s.du = u_next - s.u;
  s.u_prev = std::move(s.u);
  s.p_prev = std::move(s.p);
  s.u = std::move(u_next);
  s.p = std::move(p_next);
  s.u_bar = (1 + kappa1) * s.u - kappa1 * s.u_prev;
  s.p_bar = (1 + kappa2) * s.p - kappa2 * s.p_prev;
  s.monitors_prev = s.monitors;
  s.monitors = mon;
  s.values = values;
  ++s.iteration;
  s.history = std::min(s.history + 1, 2);
}

struct LambdaTrack
{
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0;
  double sum = 0;
  long count = 0;

  void add(double l)
  {
    lo = std::min(lo, l);
    hi = std::max(hi, l);
    sum += l;
    ++count;
  }
  void write(IterStats& st) const
  {
    st.lambda_min = count ? lo : 0;
    st.lambda_max = hi;
    st.lambda_mean = count ? sum / count : 0;
  }
};

double elapsed_ms(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

void check_step_inputs(const JkoProblem& prob, const Vector& u_k, const Vector& p_k)
{
  check_shape(u_k.size() == prob.grid.unknowns(), "solve_jko_step: u_k must have size N(1+d)");
  check_shape(p_k.size() == prob.grid.size(), "solve_jko_step: p_k must have size N");
  const auto rho = rho_block(u_k, prob.grid);
  for (Index c = 0; c < rho.size(); ++c) {
    if (!(prob.mobility.eval(rho[c]) >= 0)) { throw DomainError("solve_jko_step: M(rho^k) must be nonnegative"); }
  }
}

} // namespace

IterState vptpd_iterate(const IterState& s, const StepSystems& sys, const JkoProblem& prob,
                        const SolverParams& params, ProxStats* stats)
{
  const GridSpec& g = prob.grid;
  const SparseMatrix& B = sys.constraints.B;
  const double lambda = s.lambda;

  const Vector grad_bar = stacked_energy_grad(prob.energy, s.u_bar, g);
  const Vector v = s.u_bar - lambda * sys.Iu.apply_inverse(grad_bar + B.transpose() * s.p_bar);
  Vector u_next = prox_field(v, sys.Iu.entries, lambda, prob.action.tau, prob.mobility, g, {}, stats);

  const Vector grad_next = stacked_energy_grad(prob.energy, u_next, g);
  // I_u^-1 (grad F~ + B^T p_bar), simplified.
  const Vector w = (s.u_bar - u_next) / lambda + sys.Iu.apply_inverse(grad_next - grad_bar);
  const Vector rhs = sys.constraints.residual(u_next) - B * w;
  Vector p_next = s.p_bar + params.sigma0 * sys.Ip.solve(rhs);

  const IterateValues values = evaluate(prob, u_next);
  IterState out = s;
  accept(out, std::move(u_next), std::move(p_next), values, sys.constraints, params.kappa1, params.kappa2);
  return out;
}

JkoResult solve_jko_step(const JkoProblem& prob, const Vector& u_k, const Vector& p_k, const SolverParams& params,
                         const DualSolverOptions& dual)
{
  params.validate();
  check_step_inputs(prob, u_k, p_k);
  const auto t0 = std::chrono::steady_clock::now();
  const StepSystems sys = build_step_systems(prob, u_k, dual, params.iu_floor);

  IterState s = IterState::warm_start(u_k, p_k, params.lambda0);
  s.values = evaluate(prob, u_k);
  JkoResult res;
  LambdaTrack track;
  while (s.iteration < params.iter_max) {
    track.add(s.lambda);
    s = vptpd_iterate(s, sys, prob, params, &res.stats.prox);
    if (!within_bounds(s.u, prob.mobility, prob.grid)) { res.stats.min_rho_ok = false; }
    if (s.monitors.converged(params)) {
      res.stats.converged = true;
      break;
    }
    if (params.adaptive && s.history >= 2) {
      s.lambda = adapt_lambda(s.lambda, s.du, s.du_prev, s.monitors, s.monitors_prev, params);
    }
  }
  res.u = s.u;
  res.p = s.p;
  res.stats.iterations = s.iteration;
  res.stats.monitors = s.monitors;
  res.stats.factorizations = sys.Ip.factorizations();
  track.write(res.stats);
  res.stats.wall_ms = elapsed_ms(t0);
  return res;
}

JkoResult prepdjko_step(const JkoProblem& prob, const Vector& u_k, const Vector& p_k, const SolverParams& params,
                        const DualSolverOptions& dual)
{
  params.validate();
  check_step_inputs(prob, u_k, p_k);
  const auto t0 = std::chrono::steady_clock::now();
  const GridSpec& g = prob.grid;
  const double lambda = params.lambda_baseline;
  const ConstraintSystem cs = assemble_constraints(g, rho_block(u_k, g));
  const DualPreconditioner ip = DualPreconditioner::scaled_gram(cs.B, lambda, dual);
  const Vector ones = Vector::Ones(u_k.size());

  IterState s = IterState::warm_start(u_k, p_k, lambda);
  s.values = evaluate(prob, u_k);
  JkoResult res;
  while (s.iteration < params.iter_max) {
    const Vector grad = stacked_energy_grad(prob.energy, s.u, g);
    const Vector v = s.u - lambda * (grad + cs.B.transpose() * s.p);
    Vector u_next = prox_field(v, ones, lambda, prob.action.tau, prob.mobility, g, {}, &res.stats.prox);
    const Vector u_bar = 2 * u_next - s.u;
    Vector p_next = s.p + params.sigma0 * ip.solve(cs.residual(u_bar));
    const IterateValues values = evaluate(prob, u_next);
    // Extrapolation acts on u only; the dual iterate is used as is.
    accept(s, std::move(u_next), std::move(p_next), values, cs, 1.0, 0.0);
    if (!within_bounds(s.u, prob.mobility, g)) { res.stats.min_rho_ok = false; }
    if (s.monitors.converged(params)) {
      res.stats.converged = true;
      break;
    }
  }
  res.u = s.u;
  res.p = s.p;
  res.stats.iterations = s.iteration;
  res.stats.monitors = s.monitors;
  res.stats.factorizations = ip.factorizations();
  res.stats.lambda_min = res.stats.lambda_max = res.stats.lambda_mean = lambda;
  res.stats.wall_ms = elapsed_ms(t0);
  return res;
}

JkoResult solve_step(SolverKind kind, const JkoProblem& prob, const Vector& u_k, const Vector& p_k,
                     SolverParams params, const DualSolverOptions& dual)
{
  switch (kind) {
  case SolverKind::Vptpd: params.adaptive = false; return solve_jko_step(prob, u_k, p_k, params, dual);
  case SolverKind::VptpdAdaptive: params.adaptive = true; return solve_jko_step(prob, u_k, p_k, params, dual);
  case SolverKind::PrePdJko: return prepdjko_step(prob, u_k, p_k, params, dual);
  }
  throw ConfigError("unknown solver kind");
}

} // namespace vptpd
