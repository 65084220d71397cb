#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vptpd/grid.hpp"
#include "vptpd/quadrature.hpp"

namespace vptpd {

enum class InternalKind
{
  None,
  Entropy,     // rho (ln rho - 1)
  DoubleWell,  // (1 - rho^2)^2 / 4
  Logarithmic, // theta/2 [(1+rho) ln((1+rho)/2) + (1-rho) ln((1-rho)/2)] + theta_c/2 (1 - rho^2)
};

std::string to_string(InternalKind kind);
InternalKind internal_kind_from_string(const std::string& name);

/// Pointwise internal energy density H.
///
/// Entropy derivatives are evaluated at max(rho, kEntropyFloor) so that cells
/// sitting exactly on rho = 0 keep finite gradients. Logarithmic derivatives clamp
/// to |rho| <= 1 - kLogMargin. Values strictly outside [0, inf) or [-1, 1] throw.
struct InternalPotential
{
  static constexpr double kEntropyFloor = 1e-14;
  static constexpr double kLogMargin = 1e-12;

  InternalKind kind = InternalKind::None;
  double theta = 0.3;
  double theta_c = 1.0;

  double value(double rho) const;
  double deriv(double rho) const;
  double deriv2(double rho) const;

  /// Nearest point of the closed domain of H (identity for polynomial kinds).
  double project(double rho) const;
};

/// Pairwise interaction kernel W sampled on the difference lattice of a grid.
///
/// table() is indexed by offsets k_j in [-(n_j-1), n_j-1]; apply() returns
/// (sum_k W(x_i - x_k) rho_k)_i either by direct summation or by a zero-padded
/// cyclic convolution.
class InteractionKernel
{
public:
  /// Samples W at every lattice offset; the zero offset gets the mean of W over
  /// the cell [-dx/2, dx/2]^d (handles a singularity at the origin).
  static InteractionKernel sample(const PointFunction& w, const GridSpec& g);

  double at_offset(const std::array<Index, kMaxDim>& offset) const;
  double zero_value() const { return zero_; }

  /// Convolution through the FFT path when the grid has more than this many cells.
  void set_direct_threshold(Index n) { direct_threshold_ = n; }
  ScalarField apply(const ScalarField& rho) const;
  ScalarField apply_direct(const ScalarField& rho) const;
  ScalarField apply_fft(const ScalarField& rho) const;

  const GridSpec& grid() const { return grid_; }
  const std::vector<double>& table() const { return table_; }

private:
  Index table_index(const std::array<Index, kMaxDim>& offset) const;
  void prepare_fft();

  GridSpec grid_;
  std::array<Index, kMaxDim> extent_{1, 1, 1}; // 2 n_j - 1
  std::vector<double> table_;
  double zero_ = 0;
  Index direct_threshold_ = 128;
  std::array<Index, kMaxDim> padded_{1, 1, 1}; // 2 n_j
  std::shared_ptr<const std::vector<std::complex<double>>> kernel_hat_;
};

/// Cubic wall energy f_w(rho) = eps/sqrt(2) cos(beta_w) (rho^3/3 - rho) on one face.
struct WallEnergy
{
  int axis = 2;
  bool lower_face = true;
  double contact_angle = 0.7853981633974483;
  double eps = 0.01;

  double value(double rho) const;
  double deriv(double rho) const;
  double deriv2(double rho) const;
};

struct EnergyModel
{
  InternalPotential internal;
  std::optional<ScalarField> potential;
  double dirichlet_eps = 0;
  std::optional<InteractionKernel> interaction;
  std::optional<WallEnergy> wall;
};

/// Samples an external potential at each cell center; cells whose closure
/// contains `singular` get the cell mean instead.
ScalarField sample_potential(const PointFunction& v, const GridSpec& g, const std::optional<Point>& singular);

double energy_value(const EnergyModel& model, const ScalarField& rho, const GridSpec& g);
ScalarField energy_grad(const EnergyModel& model, const ScalarField& rho, const GridSpec& g);
ScalarField energy_hess_diag(const EnergyModel& model, const ScalarField& rho, const GridSpec& g);

/// Projects rho onto the domain of the internal potential (used for extrapolated iterates).
ScalarField project_to_energy_domain(const EnergyModel& model, const ScalarField& rho);

/// Cells of the wall layer and the face area element.
std::vector<Index> wall_cells(const WallEnergy& wall, const GridSpec& g);
double wall_face_area(const WallEnergy& wall, const GridSpec& g);

} // namespace vptpd
