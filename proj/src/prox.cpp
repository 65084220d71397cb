#include "vptpd/prox.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "vptpd/action.hpp"
#include "vptpd/errors.hpp"

namespace vptpd {

double ProxCellInput::weighted_momentum_sq() const
{
  double acc = 0;
  for (int j = 0; j < dim; ++j) {
    const double a = D_m[j] * m_hat[j];
    acc += a * a;
  }
  return acc;
}

LValue L_eval(double rho, const ProxCellInput& in, const Mobility<double>& mob)
{
  const double M = mob.eval(rho);
  const double d1 = mob.deriv(rho);
  if (!(M >= 0) || !std::isfinite(d1)) { throw DomainError("L_eval: rho outside the region where M >= 0 and M' is finite"); }
  const double d2 = mob.deriv2(rho);
  double s = 0;
  double t = 0;
  for (int j = 0; j < in.dim; ++j) {
    const double a = in.D_m[j] * in.m_hat[j];
    const double den = in.D_m[j] * M + in.zeta;
    const double q = a / den;
    s += q * q;
    t += q * q * in.D_m[j] / den;
  }
  const double z = in.zeta;
  const double pull = 0.5 * z * d1 * s;
  return {in.D_rho * (rho - in.rho_hat) - pull, in.D_rho - 0.5 * z * d2 * s + z * d1 * d1 * t,
          in.D_rho * (std::abs(rho) + std::abs(in.rho_hat)) + std::abs(pull)};
}

double default_delta_off(const Mobility<double>& mob)
{
  return mob.bounded() ? 1e-8 * std::max(1.0, mob.beta() - mob.alpha()) : 1e-8;
}

InitialPlan plan_initial(const ProxCellInput& in, const Mobility<double>& mob, double delta_off)
{
  using Outcome = InitialPlan::Outcome;
  constexpr double inf = std::numeric_limits<double>::infinity();
  InitialPlan plan;
  const double a_sq = in.weighted_momentum_sq();
  plan.c1 = -a_sq / (2 * in.zeta * in.D_rho);
  const auto direct = [&](double r) {
    plan.outcome = Outcome::DirectSolution;
    plan.rho = r;
    return plan;
  };
  const auto newton = [&](double start, double lo, double hi) {
    plan.outcome = Outcome::NewtonFrom;
    plan.rho = start;
    plan.bracket_lo = lo;
    plan.bracket_hi = hi;
    return plan;
  };
  const double rho_hat = in.rho_hat;
  switch (mob.kind()) {
  case MobilityKind::Power:
    if (rho_hat <= delta_off) { return newton(delta_off, 0, inf); }
    return newton(rho_hat, rho_hat, inf);
  case MobilityKind::Linear:
    if (rho_hat <= plan.c1) { return direct(0); }
    return newton(0, 0, inf);
  case MobilityKind::ConcavePower: {
    const double a = mob.alpha();
    const double b = mob.beta();
    plan.rho_mid = 0.5 * (a + b);
    plan.c2 = (b - a) * a_sq / (2 * in.zeta * in.D_rho);
    if (rho_hat < plan.rho_mid) { return newton(a + delta_off, a, plan.rho_mid); }
    if (rho_hat == plan.rho_mid) { return direct(plan.rho_mid); }
    return newton(b - delta_off, plan.rho_mid, b);
  }
  case MobilityKind::ConcaveQuadratic: {
    const double a = mob.alpha();
    const double b = mob.beta();
    plan.rho_mid = 0.5 * (a + b);
    plan.c2 = (b - a) * a_sq / (2 * in.zeta * in.D_rho);
    if (rho_hat <= a - plan.c2) { return direct(a); }
    if (rho_hat < plan.rho_mid) { return newton(a, a, plan.rho_mid); }
    if (rho_hat == plan.rho_mid) { return direct(plan.rho_mid); }
    if (rho_hat < b + plan.c2) { return newton(b, plan.rho_mid, b); }
    return direct(b);
  }
  }
  return plan;
}

namespace {

void recover_momentum(ProxCellResult& out, const ProxCellInput& in, const Mobility<double>& mob)
{
  const double M = std::max(mob.eval(out.rho), 0.0);
  for (int j = 0; j < in.dim; ++j) {
    out.m[j] = M == 0 ? 0.0 : M * in.D_m[j] * in.m_hat[j] / (in.D_m[j] * M + in.zeta);
  }
}

[[noreturn]] void fail(const ProxCellInput& in, const Mobility<double>& mob, double x, double l, int iters)
{
  std::ostringstream os;
  os.precision(17);
  os << "prox_cell: Newton did not converge after " << iters << " iterations (mobility " << to_string(mob.kind())
     << ", rho_hat=" << in.rho_hat << ", D_rho=" << in.D_rho << ", zeta=" << in.zeta << ", rho=" << x
     << ", L=" << l << ")";
  throw ConvergenceError(os.str());
}

// Moves a start next to a singular endpoint closer to it until L has the sign
// expected on that side of the root. Returns false if the root cannot be
// separated from the endpoint in floating point.
bool settle_singular_start(double& x, double endpoint, bool from_left, const ProxCellInput& in,
                           const Mobility<double>& mob)
{
  double offset = std::abs(x - endpoint);
  for (;;) {
    const double l = L_eval(x, in, mob).value;
    if (from_left ? l <= 0 : l >= 0) { return true; }
    offset *= 1e-3;
    const double next = from_left ? endpoint + offset : endpoint - offset;
    if (next == endpoint || offset == 0) { return false; }
    x = next;
  }
}

} // namespace

ProxCellResult prox_cell(const ProxCellInput& in, const Mobility<double>& mob, const ProxOptions& opts)
{
  if (!(in.D_rho > 0) || !(in.zeta > 0)) { throw DomainError("prox_cell: weights and zeta must be positive"); }
  for (int j = 0; j < in.dim; ++j) {
    if (!(in.D_m[j] > 0)) { throw DomainError("prox_cell: weights and zeta must be positive"); }
  }
  ProxCellResult out;
  const auto [lo, hi] = mob.bounds();

  // Without momentum L is linear and the minimizer is the projection of rho_hat.
  if (in.weighted_momentum_sq() == 0) {
    out.rho = std::clamp(in.rho_hat, lo, hi);
    out.direct = true;
    return out;
  }

  const double delta = opts.delta_off > 0 ? opts.delta_off : default_delta_off(mob);
  const InitialPlan plan = plan_initial(in, mob, delta);
  if (plan.outcome == InitialPlan::Outcome::DirectSolution) {
    out.rho = plan.rho;
    out.direct = true;
    recover_momentum(out, in, mob);
    return out;
  }

  double x = plan.rho;
  double br_lo = plan.bracket_lo;
  double br_hi = plan.bracket_hi;
  // Side of the root the start sits on; Newton stays on that side for these starts.
  // Starts next to a singular endpoint belong on the endpoint side of the root.
  bool from_left = L_eval(x, in, mob).value <= 0;
  if (!mob.regular_at_bounds()) {
    from_left = mob.kind() == MobilityKind::Power || x < plan.rho_mid;
    const double endpoint = from_left ? lo : hi;
    if (!settle_singular_start(x, endpoint, from_left, in, mob)) {
      out.rho = endpoint;
      out.direct = true;
      recover_momentum(out, in, mob);
      return out;
    }
  }

  const double tol = opts.tol * std::max(1.0, in.D_rho);
  double prev_abs = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iter; ++it) {
    const LValue l = L_eval(x, in, mob);
    out.iterations = it;
    const double floor = 64 * std::numeric_limits<double>::epsilon() * l.magnitude;
    if (std::abs(l.value) <= std::max(tol, floor)) {
      out.residual = std::abs(l.value);
      break;
    }
    if (it > 1 && std::abs(l.value) > prev_abs) { out.monotonicity_violated = true; }
    prev_abs = std::abs(l.value);
    if (l.value < 0) {
      br_lo = std::max(br_lo, x);
    } else {
      br_hi = std::min(br_hi, x);
    }
    double next = x - l.value / l.deriv;
    const bool inside = std::isfinite(next) && next >= br_lo && next <= br_hi;
    if (!inside) {
      out.bisection_used = true;
      next = std::isfinite(br_hi) ? 0.5 * (br_lo + br_hi) : 2 * std::max(std::abs(x), 1.0);
    }
    if ((from_left && next < x) || (!from_left && next > x)) { out.monotonicity_violated = true; }
    const double neighbour = std::nextafter(x, next > x ? hi : lo);
    if (std::abs(next - x) <= std::abs(neighbour - x)) {
      // The root lies within one ulp; keep whichever double has the smaller |L|.
      double best = std::abs(l.value);
      if (neighbour != x && mob.admissible(neighbour)) {
        try {
          const double ln = std::abs(L_eval(neighbour, in, mob).value);
          if (ln < best) {
            best = ln;
            x = neighbour;
          }
        } catch (const DomainError&) {
        }
      }
      out.residual = best;
      out.float_limited = best > tol;
      break;
    }
    x = next;
    if (it + 1 == opts.max_iter) { fail(in, mob, x, l.value, opts.max_iter); }
  }
  out.rho = std::clamp(x, lo, hi);
  recover_momentum(out, in, mob);
  return out;
}

double prox_cell_objective(const ProxCellInput& in, const Mobility<double>& mob, double rho,
                           const std::array<double, kMaxDim>& m)
{
  double m_sq = 0;
  double quad = in.D_rho * (rho - in.rho_hat) * (rho - in.rho_hat);
  for (int j = 0; j < in.dim; ++j) {
    m_sq += m[j] * m[j];
    quad += in.D_m[j] * (m[j] - in.m_hat[j]) * (m[j] - in.m_hat[j]);
  }
  return 0.5 * quad + 0.5 * in.zeta * phi(rho, m_sq, mob);
}

ProxStats& ProxStats::operator+=(const ProxStats& o)
{
  newton_iterations += o.newton_iterations;
  bisection_fallbacks += o.bisection_fallbacks;
  direct_solutions += o.direct_solutions;
  max_cell_iterations = std::max(max_cell_iterations, o.max_cell_iterations);
  return *this;
}

Vector prox_field(const Vector& u_hat, const Vector& weights, double lambda, double tau, const Mobility<double>& mob,
                  const GridSpec& g, const ProxOptions& opts, ProxStats* stats)
{
  check_shape(u_hat.size() == g.unknowns() && weights.size() == g.unknowns(),
              "prox_field: state and weights must have size N(1+d)");
  const Index n = g.size();
  const int d = g.dim();
  const double zeta = lambda * g.cell_volume() / tau;
  Vector out(u_hat.size());
  long newton = 0;
  long bisect = 0;
  long direct = 0;
  int max_it = 0;
  std::exception_ptr error;
#pragma omp parallel for schedule(static) reduction(+ : newton, bisect, direct) reduction(max : max_it)
  for (Index c = 0; c < n; ++c) {
    ProxCellInput in;
    in.dim = d;
    in.rho_hat = u_hat[c];
    in.D_rho = weights[c];
    in.zeta = zeta;
    for (int j = 0; j < d; ++j) {
      in.m_hat[j] = u_hat[(j + 1) * n + c];
      in.D_m[j] = weights[(j + 1) * n + c];
    }
    try {
      const ProxCellResult r = prox_cell(in, mob, opts);
      out[c] = r.rho;
      for (int j = 0; j < d; ++j) { out[(j + 1) * n + c] = r.m[j]; }
      newton += r.iterations;
      bisect += r.bisection_used ? 1 : 0;
      direct += r.direct ? 1 : 0;
      max_it = std::max(max_it, r.iterations);
    } catch (...) {
#pragma omp critical
      if (!error) { error = std::current_exception(); }
    }
  }
  if (error) { std::rethrow_exception(error); }
  if (stats) {
    ProxStats s;
    s.newton_iterations = newton;
    s.bisection_fallbacks = bisect;
    s.direct_solutions = direct;
    s.max_cell_iterations = max_it;
    *stats += s;
  }
  return out;
}

} // namespace vptpd
