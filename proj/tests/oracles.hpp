#pragma once

// Reference computations written without the library's algorithms. Tests
// compare the solver against these.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "vptpd/grid.hpp"
#include "vptpd/mobility.hpp"
#include "vptpd/prox.hpp"

namespace oracle {

using vptpd::Index;
using vptpd::Vector;

// Cell objective after minimizing each m_j exactly:
//   min_m 1/2 D (m - a)^2 + zeta/2 m^2 / M  =  1/2 D a^2 zeta / (D M + zeta).
// At M = 0 this gives 1/2 D a^2 (m forced to 0), so g is continuous on the closed interval.
inline double reduced_objective(const vptpd::ProxCellInput& in, const vptpd::Mobility<double>& mob, double rho)
{
  const double M = std::max(mob.eval(rho), 0.0);
  double g = 0.5 * in.D_rho * (rho - in.rho_hat) * (rho - in.rho_hat);
  for (int j = 0; j < in.dim; ++j) {
    g += 0.5 * in.D_m[j] * in.m_hat[j] * in.m_hat[j] * in.zeta / (in.D_m[j] * M + in.zeta);
  }
  return g;
}

struct BruteResult
{
  double rho;
  double objective;
};

// Grid search with repeated zoom. g is convex on the admissible interval, so
// zooming around the best node cannot lose the minimizer.
inline BruteResult brute_force_prox(const vptpd::ProxCellInput& in, const vptpd::Mobility<double>& mob,
                                    int nodes = 4001, int levels = 7)
{
  auto [lo, hi] = mob.bounds();
  if (!std::isfinite(hi)) {
    const double start = std::max(in.rho_hat, 0.0);
    const double reach = std::sqrt(2 * reduced_objective(in, mob, start) / in.D_rho);
    hi = std::max(in.rho_hat, 0.0) + reach + 1e-12;
    lo = std::max(0.0, in.rho_hat - reach);
  }
  double best = lo;
  double best_g = std::numeric_limits<double>::infinity();
  double a = lo;
  double b = hi;
  for (int level = 0; level < levels; ++level) {
    const double h = (b - a) / (nodes - 1);
    for (int k = 0; k < nodes; ++k) {
      const double x = std::min(a + k * h, b);
      const double g = reduced_objective(in, mob, x);
      if (g < best_g) {
        best_g = g;
        best = x;
      }
    }
    a = std::max(lo, best - 2 * h);
    b = std::min(hi, best + 2 * h);
  }
  return {best, best_g};
}

// Central differences of a scalar function of a vector.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h)
{
  Vector g(x.size());
  Vector y = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double s = h * std::max(1.0, std::abs(x[i]));
    y[i] = x[i] + s;
    const double fp = f(y);
    y[i] = x[i] - s;
    const double fm = f(y);
    y[i] = x[i];
    g[i] = (fp - fm) / (2 * s);
  }
  return g;
}

// Diagonal of the Jacobian of a vector field, by central differences.
inline Vector fd_jacobian_diag(const std::function<Vector(const Vector&)>& f, const Vector& x, double h)
{
  Vector d(x.size());
  Vector y = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double s = h * std::max(1.0, std::abs(x[i]));
    y[i] = x[i] + s;
    const double fp = f(y)[i];
    y[i] = x[i] - s;
    const double fm = f(y)[i];
    y[i] = x[i];
    d[i] = (fp - fm) / (2 * s);
  }
  return d;
}

inline double rel_err(const Vector& a, const Vector& b)
{
  const double scale = std::max(b.norm(), std::numeric_limits<double>::min());
  return (a - b).norm() / scale;
}

// Dense divergence with explicit ghost cells m_ghost = -m_boundary.
inline Vector dense_divergence(const Eigen::MatrixXd& m, const vptpd::GridSpec& g)
{
  Vector out = Vector::Zero(g.size());
  for (Index c = 0; c < g.size(); ++c) {
    const auto idx = g.multi_index(c);
    for (int j = 0; j < g.dim(); ++j) {
      auto up = idx;
      auto dn = idx;
      up[j] += 1;
      dn[j] -= 1;
      const double mu = up[j] < g.cells(j) ? m(g.linear_index(up), j) : -m(c, j);
      const double md = dn[j] >= 0 ? m(g.linear_index(dn), j) : -m(c, j);
      out[c] += (mu - md) / (2 * g.spacing(j));
    }
  }
  return out;
}

// Dense B = [I | D] assembled column by column from the ghost rule.
inline Eigen::MatrixXd dense_B(const vptpd::GridSpec& g)
{
  const Index n = g.size();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, g.unknowns());
  B.leftCols(n).setIdentity();
  for (int j = 0; j < g.dim(); ++j) {
    for (Index c = 0; c < n; ++c) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, g.dim());
      m(c, j) = 1;
      B.col((j + 1) * n + c) = dense_divergence(m, g);
    }
  }
  return B;
}

// Saturation equilibrium min(1, exp(C - x^2/2)) with C fixed by the cell-sum mass.
inline Vector saturation_equilibrium(const vptpd::GridSpec& g, double target_mass)
{
  const auto profile = [&](double C) {
    Vector r(g.size());
    for (Index i = 0; i < g.size(); ++i) {
      const double x = g.center(0, i);
      r[i] = std::min(1.0, std::exp(C - 0.5 * x * x));
    }
    return r;
  };
  double a = -50;
  double b = 50;
  for (int it = 0; it < 200; ++it) {
    const double c = 0.5 * (a + b);
    if (profile(c).sum() * g.cell_volume() < target_mass) {
      a = c;
    } else {
      b = c;
    }
  }
  return profile(0.5 * (a + b));
}

// L is increasing, so the root lies between the two doubles adjacent to rho
// when L changes sign across them. A neighbour outside the region where L is
// defined counts as the endpoint side.
inline bool root_between_neighbours(const vptpd::ProxCellInput& in, const vptpd::Mobility<double>& mob, double rho)
{
  const auto side = [&](double x, bool left) {
    try {
      const double l = vptpd::L_eval(x, in, mob).value;
      return left ? l <= 0 : l >= 0;
    } catch (const std::exception&) {
      return true;
    }
  };
  constexpr double inf = std::numeric_limits<double>::infinity();
  return side(std::nextafter(rho, -inf), true) && side(std::nextafter(rho, inf), false);
}

// Random cell input; the ranges cover both sides of every initial-value threshold.
inline vptpd::ProxCellInput random_cell_input(std::mt19937_64& gen, const vptpd::Mobility<double>& mob)
{
  std::uniform_real_distribution<double> u01(0, 1);
  vptpd::ProxCellInput in;
  in.dim = 1 + static_cast<int>(gen() % 3);
  const auto [lo, hi] = mob.bounds();
  const double width = std::isfinite(hi) ? hi - lo : 2.0;
  in.rho_hat = lo + width * (3 * u01(gen) - 1);
  for (int j = 0; j < in.dim; ++j) {
    in.m_hat[j] = (2 * u01(gen) - 1) * std::pow(10.0, 2 * u01(gen) - 1.5);
    in.D_m[j] = std::pow(10.0, 2 * u01(gen) - 1);
  }
  in.D_rho = std::pow(10.0, u01(gen) - 1);
  in.zeta = std::pow(10.0, 2 * u01(gen) - 1);
  return in;
}

} // namespace oracle
