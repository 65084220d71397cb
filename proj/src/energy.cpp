#include "vptpd/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "vptpd/errors.hpp"

namespace vptpd {

std::string to_string(InternalKind kind)
{
  switch (kind) {
  case InternalKind::None: return "none";
  case InternalKind::Entropy: return "entropy";
  case InternalKind::DoubleWell: return "double_well";
  case InternalKind::Logarithmic: return "logarithmic";
  }
  return "unknown";
}

InternalKind internal_kind_from_string(const std::string& name)
{
  if (name == "none") { return InternalKind::None; }
  if (name == "entropy") { return InternalKind::Entropy; }
  if (name == "double_well") { return InternalKind::DoubleWell; }
  if (name == "logarithmic") { return InternalKind::Logarithmic; }
  throw ConfigError("unknown internal potential '" + name + "'");
}

// ---------------------------------------------------------------------------
// Internal potential

namespace {

void check_entropy(double rho)
{
  if (!(rho >= 0)) { throw DomainError("entropy: density must be nonnegative"); }
}

double check_log(double rho)
{
  if (!(rho >= -1 && rho <= 1)) { throw DomainError("logarithmic potential: density must lie in [-1, 1]"); }
  constexpr double edge = 1 - InternalPotential::kLogMargin;
  return std::clamp(rho, -edge, edge);
}

} // namespace

double InternalPotential::value(double rho) const
{
  switch (kind) {
  case InternalKind::None: return 0;
  case InternalKind::Entropy:
    check_entropy(rho);
    return rho == 0 ? 0.0 : rho * (std::log(rho) - 1);
  case InternalKind::DoubleWell: {
    const double q = 1 - rho * rho;
    return 0.25 * q * q;
  }
  case InternalKind::Logarithmic: {
    const double r = check_log(rho);
    return 0.5 * theta * ((1 + r) * std::log(0.5 * (1 + r)) + (1 - r) * std::log(0.5 * (1 - r)))
           + 0.5 * theta_c * (1 - rho * rho);
  }
  }
  return 0;
}

double InternalPotential::deriv(double rho) const
{
  switch (kind) {
  case InternalKind::None: return 0;
  case InternalKind::Entropy: check_entropy(rho); return std::log(std::max(rho, kEntropyFloor));
  case InternalKind::DoubleWell: return rho * rho * rho - rho;
  case InternalKind::Logarithmic: {
    const double r = check_log(rho);
    return 0.5 * theta * std::log((1 + r) / (1 - r)) - theta_c * rho;
  }
  }
  return 0;
}

double InternalPotential::deriv2(double rho) const
{
  switch (kind) {
  case InternalKind::None: return 0;
  case InternalKind::Entropy: check_entropy(rho); return 1 / std::max(rho, kEntropyFloor);
  case InternalKind::DoubleWell: return 3 * rho * rho - 1;
  case InternalKind::Logarithmic: {
    const double r = check_log(rho);
    return theta / (1 - r * r) - theta_c;
  }
  }
  return 0;
}

double InternalPotential::project(double rho) const
{
  switch (kind) {
  case InternalKind::Entropy: return std::max(rho, 0.0);
  case InternalKind::Logarithmic: return std::clamp(rho, -1.0, 1.0);
  default: return rho;
  }
}

// ---------------------------------------------------------------------------
// Wall energy

double WallEnergy::value(double rho) const
{
  return eps / std::numbers::sqrt2 * std::cos(contact_angle) * (rho * rho * rho / 3 - rho);
}

double WallEnergy::deriv(double rho) const
{
  return eps / std::numbers::sqrt2 * std::cos(contact_angle) * (rho * rho - 1);
}

double WallEnergy::deriv2(double rho) const
{
  return eps / std::numbers::sqrt2 * std::cos(contact_angle) * 2 * rho;
}

std::vector<Index> wall_cells(const WallEnergy& wall, const GridSpec& g)
{
  if (wall.axis < 0 || wall.axis >= g.dim()) { throw ShapeError("wall energy: axis outside grid dimension"); }
  const Index target = wall.lower_face ? 0 : g.cells(wall.axis) - 1;
  std::vector<Index> out;
  for (Index c = 0; c < g.size(); ++c) {
    if (g.multi_index(c)[wall.axis] == target) { out.push_back(c); }
  }
  return out;
}

double wall_face_area(const WallEnergy& wall, const GridSpec& g)
{
  return g.cell_volume() / g.spacing(wall.axis);
}

// ---------------------------------------------------------------------------
// Interaction kernel

namespace {

using Complex = std::complex<double>;

// In-place separable FFT over a row-major (axis 0 fastest) array.
void fft_nd(std::vector<Complex>& data, const std::array<Index, kMaxDim>& dims, bool inverse)
{
  thread_local Eigen::FFT<double> fft; // keeps its plans between calls
  Index stride = 1;
  const Index total = static_cast<Index>(data.size());
  for (int j = 0; j < kMaxDim; ++j) {
    const Index len = dims[j];
    if (len > 1) {
      std::vector<Complex> line(len);
      std::vector<Complex> out(len);
      const Index block = stride * len;
      for (Index base = 0; base < total; base += block) {
        for (Index off = 0; off < stride; ++off) {
          for (Index t = 0; t < len; ++t) { line[t] = data[base + off + t * stride]; }
          if (inverse) {
            fft.inv(out, line);
          } else {
            fft.fwd(out, line);
          }
          for (Index t = 0; t < len; ++t) { data[base + off + t * stride] = out[t]; }
        }
      }
    }
    stride *= len;
  }
}

} // namespace

InteractionKernel InteractionKernel::sample(const PointFunction& w, const GridSpec& g)
{
  InteractionKernel k;
  k.grid_ = g;
  Index total = 1;
  for (int j = 0; j < g.dim(); ++j) {
    k.extent_[j] = 2 * g.cells(j) - 1;
    total *= k.extent_[j];
  }
  k.table_.assign(static_cast<std::size_t>(total), 0.0);
  Point lo{0, 0, 0};
  Point hi{0, 0, 0};
  for (int j = 0; j < g.dim(); ++j) {
    lo[j] = -0.5 * g.spacing(j);
    hi[j] = 0.5 * g.spacing(j);
  }
  k.zero_ = box_average(w, g.dim(), lo, hi, Point{0, 0, 0});
  for (Index t = 0; t < total; ++t) {
    Index rem = t;
    Point x{0, 0, 0};
    bool zero = true;
    for (int j = 0; j < g.dim(); ++j) {
      const Index kj = rem % k.extent_[j] - (g.cells(j) - 1);
      rem /= k.extent_[j];
      x[j] = static_cast<double>(kj) * g.spacing(j);
      zero = zero && kj == 0;
    }
    k.table_[t] = zero ? k.zero_ : w(x);
    if (!std::isfinite(k.table_[t])) { throw DomainError("interaction kernel is not finite at a lattice offset"); }
  }
  k.prepare_fft();
  return k;
}

Index InteractionKernel::table_index(const std::array<Index, kMaxDim>& offset) const
{
  Index idx = 0;
  Index stride = 1;
  for (int j = 0; j < grid_.dim(); ++j) {
    const Index shifted = offset[j] + grid_.cells(j) - 1;
    if (shifted < 0 || shifted >= extent_[j]) { throw ShapeError("interaction kernel: offset outside lattice"); }
    idx += shifted * stride;
    stride *= extent_[j];
  }
  return idx;
}

double InteractionKernel::at_offset(const std::array<Index, kMaxDim>& offset) const
{
  return table_[table_index(offset)];
}

void InteractionKernel::prepare_fft()
{
  Index total = 1;
  for (int j = 0; j < kMaxDim; ++j) {
    padded_[j] = j < grid_.dim() ? 2 * grid_.cells(j) : 1;
    total *= padded_[j];
  }
  auto hat = std::make_shared<std::vector<Complex>>(static_cast<std::size_t>(total), Complex(0, 0));
  for (Index q = 0; q < total; ++q) {
    Index rem = q;
    std::array<Index, kMaxDim> off{0, 0, 0};
    bool used = true;
    for (int j = 0; j < grid_.dim(); ++j) {
      const Index qj = rem % padded_[j];
      rem /= padded_[j];
      const Index n = grid_.cells(j);
      if (qj < n) {
        off[j] = qj;
      } else if (qj > padded_[j] - n) {
        off[j] = qj - padded_[j];
      } else {
        used = false;
      }
    }
    if (used) { (*hat)[q] = table_[table_index(off)]; }
  }
  fft_nd(*hat, padded_, false);
  kernel_hat_ = std::move(hat);
}

ScalarField InteractionKernel::apply_direct(const ScalarField& rho) const
{
  check_shape(rho.size() == grid_.size(), "interaction: field length must equal N");
  const Index n = grid_.size();
  std::vector<std::array<Index, kMaxDim>> idx(static_cast<std::size_t>(n));
  for (Index c = 0; c < n; ++c) { idx[c] = grid_.multi_index(c); }
  ScalarField out(n);
  for (Index i = 0; i < n; ++i) {
    double acc = 0;
    for (Index k = 0; k < n; ++k) {
      std::array<Index, kMaxDim> off{0, 0, 0};
      for (int j = 0; j < grid_.dim(); ++j) { off[j] = idx[i][j] - idx[k][j]; }
      acc += table_[table_index(off)] * rho[k];
    }
    out[i] = acc;
  }
  return out;
}

ScalarField InteractionKernel::apply_fft(const ScalarField& rho) const
{
  check_shape(rho.size() == grid_.size(), "interaction: field length must equal N");
  const Index total = padded_[0] * padded_[1] * padded_[2];
  std::vector<Complex> buf(static_cast<std::size_t>(total), Complex(0, 0));
  const auto pad_index = [&](const std::array<Index, kMaxDim>& m) {
    return m[0] + padded_[0] * (m[1] + padded_[1] * m[2]);
  };
  for (Index c = 0; c < grid_.size(); ++c) { buf[pad_index(grid_.multi_index(c))] = rho[c]; }
  fft_nd(buf, padded_, false);
  for (Index q = 0; q < total; ++q) { buf[q] *= (*kernel_hat_)[q]; }
  fft_nd(buf, padded_, true);
  ScalarField out(grid_.size());
  for (Index c = 0; c < grid_.size(); ++c) { out[c] = buf[pad_index(grid_.multi_index(c))].real(); }
  return out;
}

ScalarField InteractionKernel::apply(const ScalarField& rho) const
{
  return grid_.size() > direct_threshold_ ? apply_fft(rho) : apply_direct(rho);
}

// ---------------------------------------------------------------------------
// Energy functional

ScalarField sample_potential(const PointFunction& v, const GridSpec& g, const std::optional<Point>& singular)
{
  ScalarField out(g.size());
  for (Index c = 0; c < g.size(); ++c) {
    const auto idx = g.multi_index(c);
    Point lo{0, 0, 0};
    Point hi{0, 0, 0};
    bool contains = singular.has_value();
    for (int j = 0; j < g.dim(); ++j) {
      lo[j] = g.lower(j) + static_cast<double>(idx[j]) * g.spacing(j);
      hi[j] = lo[j] + g.spacing(j);
      if (singular) { contains = contains && (*singular)[j] >= lo[j] && (*singular)[j] <= hi[j]; }
    }
    out[c] = contains ? box_average(v, g.dim(), lo, hi, singular) : v(g.center(c));
    if (!std::isfinite(out[c])) { throw DomainError("external potential is not finite at a cell center"); }
  }
  return out;
}

namespace {

void check_model(const EnergyModel& model, const ScalarField& rho, const GridSpec& g)
{
  check_shape(rho.size() == g.size(), "energy: field length must equal N");
  if (model.potential) { check_shape(model.potential->size() == g.size(), "energy: potential length must equal N"); }
  if (model.interaction) { check_shape(model.interaction->grid() == g, "energy: interaction kernel built on another grid"); }
}

} // namespace

double energy_value(const EnergyModel& model, const ScalarField& rho, const GridSpec& g)
{
  check_model(model, rho, g);
  const double dv = g.cell_volume();
  double local = 0;
  for (Index c = 0; c < g.size(); ++c) { local += model.internal.value(rho[c]); }
  if (model.potential) { local += model.potential->dot(rho); }
  double total = local * dv;
  if (model.dirichlet_eps > 0) {
    total += 0.5 * model.dirichlet_eps * model.dirichlet_eps * gradient_energy_sum(rho, g);
  }
  if (model.interaction) { total += 0.5 * dv * dv * rho.dot(model.interaction->apply(rho)); }
  if (model.wall) {
    double acc = 0;
    for (Index c : wall_cells(*model.wall, g)) { acc += model.wall->value(rho[c]); }
    total += acc * wall_face_area(*model.wall, g);
  }
  return total;
}

ScalarField energy_grad(const EnergyModel& model, const ScalarField& rho, const GridSpec& g)
{
  check_model(model, rho, g);
  const double dv = g.cell_volume();
  ScalarField out(g.size());
  for (Index c = 0; c < g.size(); ++c) { out[c] = model.internal.deriv(rho[c]); }
  if (model.potential) { out += *model.potential; }
  if (model.dirichlet_eps > 0) { out -= model.dirichlet_eps * model.dirichlet_eps * neumann_laplacian(rho, g); }
  out *= dv;
  if (model.interaction) { out += dv * dv * model.interaction->apply(rho); }
  if (model.wall) {
    const double da = wall_face_area(*model.wall, g);
    for (Index c : wall_cells(*model.wall, g)) { out[c] += model.wall->deriv(rho[c]) * da; }
  }
  return out;
}

ScalarField energy_hess_diag(const EnergyModel& model, const ScalarField& rho, const GridSpec& g)
{
  check_model(model, rho, g);
  const double dv = g.cell_volume();
  ScalarField out(g.size());
  for (Index c = 0; c < g.size(); ++c) { out[c] = model.internal.deriv2(rho[c]); }
  if (model.dirichlet_eps > 0) { out += model.dirichlet_eps * model.dirichlet_eps * laplacian_diagonal(g); }
  out *= dv;
  if (model.interaction) { out.array() += dv * dv * model.interaction->zero_value(); }
  if (model.wall) {
    const double da = wall_face_area(*model.wall, g);
    for (Index c : wall_cells(*model.wall, g)) { out[c] += model.wall->deriv2(rho[c]) * da; }
  }
  return out;
}

ScalarField project_to_energy_domain(const EnergyModel& model, const ScalarField& rho)
{
  if (model.internal.kind != InternalKind::Entropy && model.internal.kind != InternalKind::Logarithmic) { return rho; }
  return rho.unaryExpr([&](double r) { return model.internal.project(r); });
}

} // namespace vptpd
