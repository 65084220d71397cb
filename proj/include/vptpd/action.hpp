#pragma once

#include <cmath>
#include <limits>

#include "vptpd/errors.hpp"
#include "vptpd/grid.hpp"
#include "vptpd/mobility.hpp"

namespace vptpd {

struct ActionParams
{
  double tau = 0.01;
  double r = 1e-5;
};

/// Benamou-Brenier action density |m|^2 / M(rho), extended by 0 at (M, m) = (0, 0)
/// and +infinity elsewhere off the admissible set.
template <typename Scalar>
Scalar phi(Scalar rho, Scalar m_sq, const Mobility<Scalar>& mob)
{
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
  if (!mob.admissible(rho)) { return inf; }
  const Scalar M = mob.eval(rho);
  if (M > 0) { return m_sq / M; }
  return m_sq == 0 ? Scalar(0) : inf;
}

/// Regularized density |m|^2 / (M(rho) + r).
template <typename Scalar>
Scalar phi_hat(Scalar rho, Scalar m_sq, const Mobility<Scalar>& mob, Scalar r)
{
  const Scalar denom = mob.eval(rho) + r;
  if (!(denom > 0)) { throw DomainError("phi_hat: M(rho) + r must be positive"); }
  return m_sq / denom;
}

/// Diagonal second derivatives of (1/2tau) phi_hat dV with respect to rho and each m_j.
template <typename Scalar>
struct ActionHessCell
{
  Scalar h_rho;
  Scalar h_m;
};

template <typename Scalar>
ActionHessCell<Scalar> action_hess_cell(Scalar rho, Scalar m_sq, const Mobility<Scalar>& mob, Scalar tau, Scalar r,
                                        Scalar dv)
{
  const Scalar s = mob.eval(rho) + r;
  if (!(s > 0)) { throw DomainError("action_hess_diag: M(rho) + r must be positive"); }
  const Scalar scale = dv / (2 * tau);
  ActionHessCell<Scalar> out{Scalar(0), scale * 2 / s};
  if (m_sq != 0) {
    const Scalar d1 = mob.deriv(rho);
    const Scalar d2 = mob.deriv2(rho);
    out.h_rho = scale * m_sq * (2 * d1 * d1 / (s * s * s) - d2 / (s * s));
  }
  return out;
}

struct ActionHessDiag
{
  ScalarField h_rho;
  FluxField h_m;
};

/// Phi_h(u) = sum_i phi(rho_i, m_i) dV.
double action_total(const Vector& u, const Mobility<double>& mob, const GridSpec& g);

ActionHessDiag action_hess_diag(const Vector& u, const Mobility<double>& mob, const ActionParams& params,
                                const GridSpec& g);

} // namespace vptpd
