#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "vptpd/errors.hpp"

namespace vptpd {

enum class MobilityKind
{
  Linear,           // M = rho
  Power,            // M = rho^xi
  ConcaveQuadratic, // M = (rho - alpha)(beta - rho)
  ConcavePower,     // M = (rho - alpha)^xi (beta - rho)^xi
};

std::string to_string(MobilityKind kind);
MobilityKind mobility_kind_from_string(const std::string& name);

/// Concave mobility M(rho) with analytic first and second derivatives.
///
/// Outside the admissible interval the analytic continuation is returned for the
/// polynomial kinds and NaN for the fractional-power kinds; the solver never asks
/// for either.
template <typename Scalar = double>
class Mobility
{
public:
  static Mobility linear() { return Mobility(MobilityKind::Linear, 1, 0, 0); }
  static Mobility power(Scalar xi)
  {
    if (!(xi > 0 && xi < 1)) { throw DomainError("Power mobility needs xi in (0,1)"); }
    return Mobility(MobilityKind::Power, xi, 0, 0);
  }
  static Mobility concave_quadratic(Scalar alpha, Scalar beta)
  {
    if (!(alpha < beta)) { throw DomainError("ConcaveQuadratic mobility needs alpha < beta"); }
    return Mobility(MobilityKind::ConcaveQuadratic, 1, alpha, beta);
  }
  static Mobility concave_power(Scalar xi, Scalar alpha, Scalar beta)
  {
    if (!(xi > 0 && xi < 1)) { throw DomainError("ConcavePower mobility needs xi in (0,1)"); }
    if (!(alpha < beta)) { throw DomainError("ConcavePower mobility needs alpha < beta"); }
    return Mobility(MobilityKind::ConcavePower, xi, alpha, beta);
  }

  Mobility() = default;

  MobilityKind kind() const { return kind_; }
  Scalar xi() const { return xi_; }
  Scalar alpha() const { return alpha_; }
  Scalar beta() const { return beta_; }
  bool bounded() const { return kind_ == MobilityKind::ConcaveQuadratic || kind_ == MobilityKind::ConcavePower; }

  /// Closed interval on which M >= 0.
  std::pair<Scalar, Scalar> bounds() const
  {
    if (bounded()) { return {alpha_, beta_}; }
    return {Scalar(0), std::numeric_limits<Scalar>::infinity()};
  }

  bool admissible(Scalar rho) const
  {
    const auto [lo, hi] = bounds();
    return rho >= lo && rho <= hi;
  }

  Scalar eval(Scalar rho) const
  {
    using std::pow;
    switch (kind_) {
    case MobilityKind::Linear: return rho;
    case MobilityKind::Power: return pow(rho, xi_);
    case MobilityKind::ConcaveQuadratic: return (rho - alpha_) * (beta_ - rho);
    case MobilityKind::ConcavePower: return pow(rho - alpha_, xi_) * pow(beta_ - rho, xi_);
    }
    return Scalar(0);
  }

  /// M'(rho); +/-infinity at an endpoint where a fractional power is singular.
  Scalar deriv(Scalar rho) const
  {
    using std::pow;
    constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
    switch (kind_) {
    case MobilityKind::Linear: return Scalar(1);
    case MobilityKind::Power:
      if (rho == 0) { return inf; }
      return xi_ * pow(rho, xi_ - 1);
    case MobilityKind::ConcaveQuadratic: return alpha_ + beta_ - 2 * rho;
    case MobilityKind::ConcavePower: {
      const Scalar a = rho - alpha_;
      const Scalar b = beta_ - rho;
      if (a == 0) { return inf; }
      if (b == 0) { return -inf; }
      // xi (a b)^(xi-1) (b - a)
      return xi_ * pow(a * b, xi_ - 1) * (b - a);
    }
    }
    return Scalar(0);
  }

  Scalar deriv2(Scalar rho) const
  {
    using std::pow;
    constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
    switch (kind_) {
    case MobilityKind::Linear: return Scalar(0);
    case MobilityKind::Power:
      if (rho == 0) { return -inf; }
      return xi_ * (xi_ - 1) * pow(rho, xi_ - 2);
    case MobilityKind::ConcaveQuadratic: return Scalar(-2);
    case MobilityKind::ConcavePower: {
      const Scalar a = rho - alpha_;
      const Scalar b = beta_ - rho;
      if (a == 0 || b == 0) { return -inf; }
      // d/drho [xi (ab)^(xi-1) (b-a)] with (ab)' = b - a and (b-a)' = -2
      const Scalar ab = a * b;
      return xi_ * ((xi_ - 1) * pow(ab, xi_ - 2) * (b - a) * (b - a) - 2 * pow(ab, xi_ - 1));
    }
    }
    return Scalar(0);
  }

  /// M' is finite at the endpoints (xi == 1 kinds).
  bool regular_at_bounds() const
  {
    return kind_ == MobilityKind::Linear || kind_ == MobilityKind::ConcaveQuadratic;
  }

  bool operator==(const Mobility&) const = default;

private:
  Mobility(MobilityKind k, Scalar xi, Scalar alpha, Scalar beta)
    : kind_(k)
    , xi_(xi)
    , alpha_(alpha)
    , beta_(beta)
  {
  }

  MobilityKind kind_ = MobilityKind::Linear;
  Scalar xi_ = 1;
  Scalar alpha_ = 0;
  Scalar beta_ = 0;
};

inline std::string to_string(MobilityKind kind)
{
  switch (kind) {
  case MobilityKind::Linear: return "linear";
  case MobilityKind::Power: return "power";
  case MobilityKind::ConcaveQuadratic: return "concave_quadratic";
  case MobilityKind::ConcavePower: return "concave_power";
  }
  return "unknown";
}

inline MobilityKind mobility_kind_from_string(const std::string& name)
{
  if (name == "linear") { return MobilityKind::Linear; }
  if (name == "power") { return MobilityKind::Power; }
  if (name == "concave_quadratic") { return MobilityKind::ConcaveQuadratic; }
  if (name == "concave_power") { return MobilityKind::ConcavePower; }
  throw ConfigError("unknown mobility kind '" + name + "'");
}

} // namespace vptpd
