#include "vptpd/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vptpd/errors.hpp"

namespace vptpd {

GaussRule gauss_legendre(int order)
{
  GaussRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    // Chebyshev-like initial guess, then Newton on P_order.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1;
      double p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double pk = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = order * (x * p1 - p0) / (x * x - 1);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) { break; }
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2 / ((1 - x * x) * dp * dp);
  }
  return rule;
}

namespace {

const GaussRule& default_rule()
{
  static const GaussRule rule = gauss_legendre(12);
  return rule;
}

double box_integral(const PointFunction& f, int dim, const Point& lo, const Point& hi)
{
  const auto& rule = default_rule();
  const int q = static_cast<int>(rule.nodes.size());
  Point half{0, 0, 0};
  Point mid{0, 0, 0};
  double jac = 1;
  for (int j = 0; j < dim; ++j) {
    half[j] = 0.5 * (hi[j] - lo[j]);
    mid[j] = 0.5 * (hi[j] + lo[j]);
    jac *= half[j];
  }
  const int total = dim == 1 ? q : (dim == 2 ? q * q : q * q * q);
  double acc = 0;
  for (int k = 0; k < total; ++k) {
    int rem = k;
    Point x{0, 0, 0};
    double w = 1;
    for (int j = 0; j < dim; ++j) {
      const int ij = rem % q;
      rem /= q;
      x[j] = mid[j] + half[j] * rule.nodes[ij];
      w *= rule.weights[ij];
    }
    acc += w * f(x);
  }
  return acc * jac;
}

// Integral over the box spanned by `corner` and `corner + extent`, singular at `corner`.
double corner_integral(const PointFunction& f, int dim, const Point& corner, Point extent)
{
  constexpr int kMaxLevels = 400;
  constexpr int kCheckLevel = 60;
  double total = 0;
  int quiet = 0;
  for (int level = 0; level < kMaxLevels; ++level) {
    double term = 0;
    const int pieces = 1 << dim;
    // All halves except the one touching the corner.
    for (int piece = 1; piece < pieces; ++piece) {
      Point lo = corner;
      Point hi = corner;
      for (int j = 0; j < dim; ++j) {
        const double a = (piece >> j) & 1 ? 0.5 * extent[j] : 0.0;
        const double b = (piece >> j) & 1 ? extent[j] : 0.5 * extent[j];
        lo[j] = corner[j] + std::min(a, b);
        hi[j] = corner[j] + std::max(a, b);
      }
      term += box_integral(f, dim, lo, hi);
    }
    if (!std::isfinite(term)) { throw DomainError("box_average: integrand not finite away from the singular point"); }
    total += term;
    if (std::abs(term) <= 1e-17 * std::abs(total)) {
      if (++quiet >= 3) { return total; }
    } else {
      quiet = 0;
    }
    if (level >= kCheckLevel && std::abs(term) > 1e-8 * std::abs(total)) {
      throw DomainError("box_average: singularity is not integrable");
    }
    for (int j = 0; j < dim; ++j) { extent[j] *= 0.5; }
  }
  throw DomainError("box_average: singularity is not integrable");
}

} // namespace

double box_average(const PointFunction& f, int dim, const Point& lo, const Point& hi,
                   const std::optional<Point>& singular)
{
  double vol = 1;
  for (int j = 0; j < dim; ++j) {
    if (!(hi[j] > lo[j])) { throw DomainError("box_average: empty box"); }
    vol *= hi[j] - lo[j];
  }
  if (!singular) { return box_integral(f, dim, lo, hi) / vol; }

  const Point& s = *singular;
  for (int j = 0; j < dim; ++j) {
    if (s[j] < lo[j] || s[j] > hi[j]) { throw DomainError("box_average: singular point outside box"); }
  }
  double acc = 0;
  for (int orth = 0; orth < (1 << dim); ++orth) {
    Point extent{0, 0, 0};
    bool empty = false;
    for (int j = 0; j < dim; ++j) {
      extent[j] = (orth >> j) & 1 ? hi[j] - s[j] : lo[j] - s[j];
      empty = empty || extent[j] == 0;
    }
    if (!empty) { acc += corner_integral(f, dim, s, extent); }
  }
  return acc / vol;
}

} // namespace vptpd
