#include "vptpd/grid.hpp"

#include <numeric>
#include <string>

#include "vptpd/errors.hpp"

namespace vptpd {

GridSpec::GridSpec(std::vector<Index> cells, std::vector<double> lower, std::vector<double> upper)
{
  const auto d = cells.size();
  if (d < 1 || d > kMaxDim || lower.size() != d || upper.size() != d) {
    throw ShapeError("GridSpec: dimension must be 1..3 with matching bounds");
  }
  dim_ = static_cast<int>(d);
  size_ = 1;
  dv_ = 1;
  for (int j = 0; j < dim_; ++j) {
    if (cells[j] < 1) { throw ShapeError("GridSpec: cell count must be >= 1"); }
    if (!(upper[j] > lower[j])) { throw ShapeError("GridSpec: upper bound must exceed lower bound"); }
    n_[j] = cells[j];
    l_[j] = lower[j];
    r_[j] = upper[j];
    dx_[j] = (upper[j] - lower[j]) / static_cast<double>(cells[j]);
    stride_[j] = size_;
    size_ *= cells[j];
    dv_ *= dx_[j];
  }
}

std::array<Index, kMaxDim> GridSpec::multi_index(Index linear) const
{
  std::array<Index, kMaxDim> idx{0, 0, 0};
  for (int j = 0; j < dim_; ++j) {
    idx[j] = linear % n_[j];
    linear /= n_[j];
  }
  return idx;
}

Index GridSpec::linear_index(const std::array<Index, kMaxDim>& idx) const
{
  Index lin = 0;
  for (int j = 0; j < dim_; ++j) { lin += idx[j] * stride_[j]; }
  return lin;
}

std::array<double, kMaxDim> GridSpec::center(Index linear) const
{
  const auto idx = multi_index(linear);
  std::array<double, kMaxDim> x{0, 0, 0};
  for (int j = 0; j < dim_; ++j) { x[j] = center(j, idx[j]); }
  return x;
}

Vector stack_state(const ScalarField& rho, const FluxField& m)
{
  check_shape(m.rows() == rho.size(), "stack_state: rho and m disagree on cell count");
  Vector u(rho.size() * (1 + m.cols()));
  u.head(rho.size()) = rho;
  u.tail(m.size()) = m.reshaped();
  return u;
}

ScalarField divergence(const FluxField& m, const GridSpec& g)
{
  check_shape(m.rows() == g.size() && m.cols() == g.dim(), "divergence: flux shape does not match grid");
  ScalarField out = ScalarField::Zero(g.size());
  for (int j = 0; j < g.dim(); ++j) {
    const Index s = g.stride(j);
    const Index nj = g.cells(j);
    const double h = 0.5 / g.spacing(j);
    for (Index c = 0; c < g.size(); ++c) {
      const Index ij = (c / s) % nj;
      const double mc = m(c, j);
      const double plus = ij + 1 < nj ? m(c + s, j) : -mc;
      const double minus = ij > 0 ? m(c - s, j) : -mc;
      out[c] += (plus - minus) * h;
    }
  }
  return out;
}

SparseMatrix divergence_matrix(const GridSpec& g)
{
  const Index n = g.size();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n * g.dim() * 2));
  for (int j = 0; j < g.dim(); ++j) {
    const Index s = g.stride(j);
    const Index nj = g.cells(j);
    const double h = 0.5 / g.spacing(j);
    const Index col0 = j * n;
    for (Index c = 0; c < n; ++c) {
      const Index ij = (c / s) % nj;
      // Reflected ghosts fold back onto the cell itself; at nj == 1 they cancel.
      if (ij + 1 < nj) {
        trips.emplace_back(c, col0 + c + s, h);
      } else {
        trips.emplace_back(c, col0 + c, -h);
      }
      if (ij > 0) {
        trips.emplace_back(c, col0 + c - s, -h);
      } else {
        trips.emplace_back(c, col0 + c, h);
      }
    }
  }
  SparseMatrix D(n, n * g.dim());
  D.setFromTriplets(trips.begin(), trips.end());
  D.prune(0.0);
  return D;
}

ConstraintSystem assemble_constraints(const GridSpec& g, const ScalarField& rho_prev)
{
  check_shape(rho_prev.size() == g.size(), "assemble_constraints: rho_prev length must equal N");
  const Index n = g.size();
  const SparseMatrix D = divergence_matrix(g);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n + D.nonZeros()));
  for (Index c = 0; c < n; ++c) { trips.emplace_back(c, c, 1.0); }
  for (Index r = 0; r < D.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(D, r); it; ++it) { trips.emplace_back(r, n + it.col(), it.value()); }
  }
  ConstraintSystem sys;
  sys.B.resize(n, g.unknowns());
  sys.B.setFromTriplets(trips.begin(), trips.end());
  sys.B.makeCompressed();
  sys.b = rho_prev;
  return sys;
}

ScalarField neumann_laplacian(const ScalarField& rho, const GridSpec& g)
{
  check_shape(rho.size() == g.size(), "neumann_laplacian: field length must equal N");
  ScalarField out = ScalarField::Zero(g.size());
  for (int j = 0; j < g.dim(); ++j) {
    const Index s = g.stride(j);
    const Index nj = g.cells(j);
    const double w = 1.0 / (g.spacing(j) * g.spacing(j));
    for (Index c = 0; c < g.size(); ++c) {
      const Index ij = (c / s) % nj;
      double acc = 0;
      if (ij + 1 < nj) { acc += rho[c + s] - rho[c]; }
      if (ij > 0) { acc += rho[c - s] - rho[c]; }
      out[c] += w * acc;
    }
  }
  return out;
}

double gradient_energy_sum(const ScalarField& rho, const GridSpec& g)
{
  check_shape(rho.size() == g.size(), "gradient_energy_sum: field length must equal N");
  double acc = 0;
  for (int j = 0; j < g.dim(); ++j) {
    const Index s = g.stride(j);
    const Index nj = g.cells(j);
    const double w = 1.0 / (g.spacing(j) * g.spacing(j));
    for (Index c = 0; c < g.size(); ++c) {
      if ((c / s) % nj + 1 < nj) {
        const double diff = rho[c + s] - rho[c];
        acc += w * diff * diff;
      }
    }
  }
  return acc * g.cell_volume();
}

ScalarField laplacian_diagonal(const GridSpec& g)
{
  ScalarField out = ScalarField::Zero(g.size());
  for (int j = 0; j < g.dim(); ++j) {
    const Index s = g.stride(j);
    const Index nj = g.cells(j);
    const double w = 1.0 / (g.spacing(j) * g.spacing(j));
    for (Index c = 0; c < g.size(); ++c) {
      const Index ij = (c / s) % nj;
      out[c] += w * static_cast<double>((ij + 1 < nj) + (ij > 0));
    }
  }
  return out;
}

double mass(const ScalarField& rho, const GridSpec& g)
{
  check_shape(rho.size() == g.size(), "mass: field length must equal N");
  return rho.sum() * g.cell_volume();
}

} // namespace vptpd
