#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace vptpd {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using ScalarField = Eigen::VectorXd;
/// N x d, column j holds the j-th momentum component at every cell center.
using FluxField = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

constexpr int kMaxDim = 3;

/// Uniform box partition of [l_1,r_1] x ... x [l_d,r_d].
///
/// Cells are numbered row-major with axis 0 varying fastest:
///   linear = i_0 + n_0 * (i_1 + n_1 * i_2).
/// Field dumps and every stencil in the library use this ordering.
class GridSpec
{
public:
  GridSpec() = default;
  GridSpec(std::vector<Index> cells, std::vector<double> lower, std::vector<double> upper);

  int dim() const { return dim_; }
  Index cells(int axis) const { return n_[axis]; }
  double lower(int axis) const { return l_[axis]; }
  double upper(int axis) const { return r_[axis]; }
  double spacing(int axis) const { return dx_[axis]; }
  Index stride(int axis) const { return stride_[axis]; }
  Index size() const { return size_; }
  double cell_volume() const { return dv_; }
  double volume() const { return dv_ * static_cast<double>(size_); }

  /// Size of the primal unknown u = (rho, m_1..m_d).
  Index unknowns() const { return size_ * (1 + dim_); }

  std::array<Index, kMaxDim> multi_index(Index linear) const;
  Index linear_index(const std::array<Index, kMaxDim>& idx) const;
  /// Coordinate of the cell center along one axis.
  double center(int axis, Index i) const { return l_[axis] + (static_cast<double>(i) + 0.5) * dx_[axis]; }
  std::array<double, kMaxDim> center(Index linear) const;

  bool operator==(const GridSpec&) const = default;

private:
  int dim_ = 0;
  std::array<Index, kMaxDim> n_{1, 1, 1};
  std::array<double, kMaxDim> l_{0, 0, 0};
  std::array<double, kMaxDim> r_{1, 1, 1};
  std::array<double, kMaxDim> dx_{1, 1, 1};
  std::array<Index, kMaxDim> stride_{1, 1, 1};
  Index size_ = 0;
  double dv_ = 1;
};

/// Linear constraint B u = b of one JKO step, B = [I | D_1 .. D_d].
struct ConstraintSystem
{
  SparseMatrix B;
  ScalarField b;

  Vector residual(const Eigen::Ref<const Vector>& u) const { return B * u - b; }
};

// Views of the stacked primal unknown.
inline auto rho_block(Vector& u, const GridSpec& g) { return u.head(g.size()); }
inline auto rho_block(const Vector& u, const GridSpec& g) { return u.head(g.size()); }
inline Eigen::Map<FluxField> flux_block(Vector& u, const GridSpec& g)
{
  return {u.data() + g.size(), g.size(), g.dim()};
}
inline Eigen::Map<const FluxField> flux_block(const Vector& u, const GridSpec& g)
{
  return {u.data() + g.size(), g.size(), g.dim()};
}
Vector stack_state(const ScalarField& rho, const FluxField& m);

/// Central-difference divergence; ghosts across the boundary are m_ghost = -m_boundary.
ScalarField divergence(const FluxField& m, const GridSpec& g);

ConstraintSystem assemble_constraints(const GridSpec& g, const ScalarField& rho_prev);
/// Only the divergence block D of B.
SparseMatrix divergence_matrix(const GridSpec& g);

/// Second-order Laplacian with homogeneous Neumann (mirror) boundary.
ScalarField neumann_laplacian(const ScalarField& rho, const GridSpec& g);

/// Sum over interior faces of squared one-sided differences, times dV.
/// Its gradient with respect to rho is -2 * neumann_laplacian(rho) * dV.
double gradient_energy_sum(const ScalarField& rho, const GridSpec& g);

/// Number of in-domain neighbours of each cell weighted by 1/dx_j^2, i.e. minus
/// the diagonal of the Neumann Laplacian.
ScalarField laplacian_diagonal(const GridSpec& g);

double mass(const ScalarField& rho, const GridSpec& g);

} // namespace vptpd
