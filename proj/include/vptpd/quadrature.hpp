#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

namespace vptpd {

using Point = std::array<double, 3>;
using PointFunction = std::function<double(const Point&)>;

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule
{
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussRule gauss_legendre(int order);

/// Mean of f over the axis-aligned box [lo, hi] in `dim` dimensions.
///
/// If `singular` is given (a point inside the closed box where f may blow up),
/// the box is split into orthants cornered at that point and each orthant is
/// integrated by dyadic refinement toward the corner. Throws DomainError when
/// the refinement does not settle, which is how a non-integrable singularity shows up.
double box_average(const PointFunction& f, int dim, const Point& lo, const Point& hi,
                   const std::optional<Point>& singular = std::nullopt);

} // namespace vptpd
