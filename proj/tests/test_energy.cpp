#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "vptpd/energy.hpp"
#include "vptpd/errors.hpp"

using namespace vptpd;

namespace {

Vector random_in(std::mt19937_64& gen, Index n, double lo, double hi)
{
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) { v[i] = u(gen); }
  return v;
}

double gaussian_kernel(const Point& x) { return std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])); }

// Naive double sum with the kernel evaluated directly, zero offset replaced by `w0`.
double naive_interaction(const PointFunction& w, double w0, const ScalarField& rho, const GridSpec& g)
{
  double acc = 0;
  for (Index i = 0; i < g.size(); ++i) {
    const auto xi = g.center(i);
    for (Index k = 0; k < g.size(); ++k) {
      const auto xk = g.center(k);
      const Point d{xi[0] - xk[0], xi[1] - xk[1], xi[2] - xk[2]};
      acc += (i == k ? w0 : w(d)) * rho[i] * rho[k];
    }
  }
  return 0.5 * acc * g.cell_volume() * g.cell_volume();
}

// Midpoint-rule cell mean, an independent estimate for smooth kernels.
double midpoint_cell_mean(const PointFunction& w, const GridSpec& g, int sub)
{
  double acc = 0;
  int count = 0;
  for (int a = 0; a < sub; ++a) {
    for (int b = 0; b < (g.dim() > 1 ? sub : 1); ++b) {
      Point x{(a + 0.5) / sub - 0.5, 0, 0};
      x[0] *= g.spacing(0);
      if (g.dim() > 1) { x[1] = ((b + 0.5) / sub - 0.5) * g.spacing(1); }
      acc += w(x);
      ++count;
    }
  }
  return acc / count;
}

struct Combo
{
  const char* name;
  EnergyModel model;
  GridSpec grid;
  double lo, hi;
};

std::vector<Combo> combos()
{
  std::vector<Combo> out;
  const GridSpec g1({9}, {-1}, {2});
  const GridSpec g2({5, 4}, {0, 0}, {1, 0.8});
  const GridSpec g3({4, 3, 3}, {0, 0, 0}, {1, 1, 0.6});
  {
    EnergyModel m;
    m.internal.kind = InternalKind::Entropy;
    m.potential = sample_potential([](const Point& x) { return 0.5 * x[0] * x[0]; }, g1, std::nullopt);
    out.push_back({"entropy+potential", m, g1, 0.2, 1.5});
  }
  {
    EnergyModel m;
    m.internal.kind = InternalKind::DoubleWell;
    m.dirichlet_eps = 0.3;
    out.push_back({"double well+dirichlet", m, g2, -0.9, 0.9});
  }
  {
    EnergyModel m;
    m.internal.kind = InternalKind::Logarithmic;
    m.dirichlet_eps = 0.1;
    out.push_back({"logarithmic+dirichlet", m, g2, -0.9, 0.9});
  }
  {
    EnergyModel m;
    m.internal.kind = InternalKind::Entropy;
    m.interaction = InteractionKernel::sample(gaussian_kernel, g2);
    out.push_back({"entropy+interaction", m, g2, 0.2, 1.5});
  }
  {
    EnergyModel m;
    m.internal.kind = InternalKind::DoubleWell;
    m.dirichlet_eps = 0.2;
    m.wall = WallEnergy{2, true, std::numbers::pi / 3, 0.2};
    out.push_back({"double well+dirichlet+wall", m, g3, -0.9, 0.9});
  }
  {
    EnergyModel m;
    m.internal.kind = InternalKind::Entropy;
    m.interaction = InteractionKernel::sample(
      [](const Point& x) { return std::log(std::abs(x[0])) / (2 * std::numbers::pi); }, g1);
    out.push_back({"entropy+log kernel", m, g1, 0.2, 1.5});
  }
  return out;
}

} // namespace

TEST_SUITE("energy")
{
  TEST_CASE("values on constant fields")
  {
    const GridSpec g({4, 4}, {0, 0}, {1, 1});
    EnergyModel ent;
    ent.internal.kind = InternalKind::Entropy;
    CHECK(energy_value(ent, ScalarField::Ones(16), g) == doctest::Approx(-1.0));

    EnergyModel dw;
    dw.internal.kind = InternalKind::DoubleWell;
    CHECK(energy_value(dw, ScalarField::Zero(16), g) == doctest::Approx(0.25));

    EnergyModel lg;
    lg.internal.kind = InternalKind::Logarithmic;
    const GridSpec g2({4}, {0}, {2});
    CHECK(energy_value(lg, ScalarField::Zero(4), g2) == doctest::Approx(2 * (0.3 * std::log(0.5) + 0.5)));
    CHECK(energy_value(lg, ScalarField::Zero(4), g2) / 2 == doctest::Approx(0.29206).epsilon(1e-5));

    EnergyModel w1;
    w1.interaction = InteractionKernel::sample([](const Point&) { return 1.0; }, g);
    std::mt19937_64 gen(1);
    const ScalarField rho = random_in(gen, 16, 0, 2);
    CHECK(energy_value(w1, rho, g) == doctest::Approx(0.5 * mass(rho, g) * mass(rho, g)));
  }

  TEST_CASE("gradients on constant fields")
  {
    const GridSpec g({6}, {0}, {1});
    EnergyModel ent;
    ent.internal.kind = InternalKind::Entropy;
    CHECK(energy_grad(ent, ScalarField::Ones(6), g).norm() == 0.0);
    EnergyModel dir;
    dir.dirichlet_eps = 0.5;
    CHECK(energy_grad(dir, ScalarField::Constant(6, 0.3), g).norm() < 1e-14);
  }

  TEST_CASE("hessian diagonal reference values")
  {
    const GridSpec g({4}, {0}, {2});
    EnergyModel ent;
    ent.internal.kind = InternalKind::Entropy;
    CHECK(energy_hess_diag(ent, ScalarField::Constant(4, 2), g)[1] == doctest::Approx(0.5 * 0.5));
    EnergyModel dw;
    dw.internal.kind = InternalKind::DoubleWell;
    CHECK(energy_hess_diag(dw, ScalarField::Zero(4), g)[2] == doctest::Approx(-0.5));
    EnergyModel dir;
    dir.dirichlet_eps = 0.1;
    // interior cell, dx = 0.5: eps^2 * 2 / dx^2 * dV = 0.01 * 8 * 0.5
    CHECK(energy_hess_diag(dir, ScalarField::Zero(4), g)[1] == doctest::Approx(0.01 * 8 * 0.5));
    // boundary cell has one neighbour
    CHECK(energy_hess_diag(dir, ScalarField::Zero(4), g)[0] == doctest::Approx(0.01 * 4 * 0.5));
  }

  TEST_CASE("gradient matches finite differences for every term combination")
  {
    std::mt19937_64 gen(2);
    for (auto& c : combos()) {
      CAPTURE(c.name);
      const Vector rho = random_in(gen, c.grid.size(), c.lo, c.hi);
      const auto f = [&](const Vector& r) { return energy_value(c.model, r, c.grid); };
      const Vector fd = oracle::fd_gradient(f, rho, 1e-6);
      CHECK(oracle::rel_err(energy_grad(c.model, rho, c.grid), fd) < 1e-6);
    }
  }

  TEST_CASE("hessian diagonal matches finite differences of the gradient")
  {
    std::mt19937_64 gen(3);
    for (auto& c : combos()) {
      CAPTURE(c.name);
      const Vector rho = random_in(gen, c.grid.size(), c.lo, c.hi);
      const auto grad = [&](const Vector& r) { return Vector(energy_grad(c.model, r, c.grid)); };
      const Vector fd = oracle::fd_jacobian_diag(grad, rho, 1e-5);
      CHECK(oracle::rel_err(energy_hess_diag(c.model, rho, c.grid), fd) < 1e-5);
    }
  }

  TEST_CASE("interaction: direct and FFT paths match the naive double sum")
  {
    std::mt19937_64 gen(4);
    for (const GridSpec& g : {GridSpec({11}, {-1}, {1}), GridSpec({6, 5}, {0, 0}, {1, 1}),
                              GridSpec({4, 3, 3}, {0, 0, 0}, {1, 1, 1})}) {
      auto k = InteractionKernel::sample(gaussian_kernel, g);
      const ScalarField rho = random_in(gen, g.size(), 0, 1);
      const double naive = naive_interaction(gaussian_kernel, k.zero_value(), rho, g);
      const double dv = g.cell_volume();
      CHECK(0.5 * dv * dv * rho.dot(k.apply_direct(rho)) == doctest::Approx(naive).epsilon(1e-10));
      CHECK(0.5 * dv * dv * rho.dot(k.apply_fft(rho)) == doctest::Approx(naive).epsilon(1e-10));
      CHECK((k.apply_direct(rho) - k.apply_fft(rho)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  TEST_CASE("kernel sampling: constant, log cell mean, evenness")
  {
    const GridSpec g({8, 6}, {0, 0}, {1, 1});
    const auto kc = InteractionKernel::sample([](const Point&) { return 2.5; }, g);
    for (double v : kc.table()) { CHECK(v == doctest::Approx(2.5)); }

    const double dx = 30.0 / 800;
    const GridSpec g1({800}, {-15}, {15});
    const auto klog = InteractionKernel::sample(
      [](const Point& x) { return std::log(std::abs(x[0])) / (2 * std::numbers::pi); }, g1);
    CHECK(klog.zero_value() == doctest::Approx((std::log(dx / 2) - 1) / (2 * std::numbers::pi)).epsilon(1e-10));

    const auto kg = InteractionKernel::sample(gaussian_kernel, g);
    // midpoint rule with one Richardson step
    const double mean = (4 * midpoint_cell_mean(gaussian_kernel, g, 800) - midpoint_cell_mean(gaussian_kernel, g, 400)) / 3;
    CHECK(kg.zero_value() == doctest::Approx(mean).epsilon(1e-8));
    std::mt19937_64 gen(5);
    for (int t = 0; t < 50; ++t) {
      const Index a = static_cast<Index>(gen() % 15) - 7;
      const Index b = static_cast<Index>(gen() % 11) - 5;
      CHECK(kg.at_offset({a, b, 0}) == kg.at_offset({-a, -b, 0}));
    }
    CHECK_THROWS_AS(kg.at_offset({8, 0, 0}), ShapeError);
  }

  TEST_CASE("kernel with a non-finite lattice value is rejected")
  {
    const GridSpec g({4}, {0}, {1});
    CHECK_THROWS_AS(InteractionKernel::sample([](const Point& x) { return 1.0 / (x[0] - 0.25); }, g), DomainError);
  }

  TEST_CASE("singular potential uses the cell mean")
  {
    const GridSpec g({4, 4}, {-1, -1}, {1, 1});
    const auto v = [](const Point& x) { return -0.25 * std::log(std::hypot(x[0], x[1])); };
    const ScalarField s = sample_potential(v, g, Point{0, 0, 0});
    // origin is a vertex: the four cells around it share the mean of -1/4 ln|x| over [0, 0.5]^2
    const double mean = -0.25 * (0.5 * (std::log(2.0) + std::numbers::pi / 2 - 3) + std::log(0.5));
    for (Index c : {g.linear_index({1, 1, 0}), g.linear_index({2, 1, 0}), g.linear_index({1, 2, 0}),
                    g.linear_index({2, 2, 0})}) {
      CHECK(s[c] == doctest::Approx(mean).epsilon(1e-9));
    }
    CHECK(s[0] == doctest::Approx(v(g.center(0))));
  }

  TEST_CASE("domain errors")
  {
    const GridSpec g({3}, {0}, {1});
    EnergyModel lg;
    lg.internal.kind = InternalKind::Logarithmic;
    ScalarField bad(3);
    bad << 0, 1.2, 0;
    CHECK_THROWS_AS(energy_value(lg, bad, g), DomainError);
    EnergyModel ent;
    ent.internal.kind = InternalKind::Entropy;
    bad << 0.5, -0.1, 0.5;
    CHECK_THROWS_AS(energy_grad(ent, bad, g), DomainError);
    // exactly at the endpoint is clamped, not rejected
    ScalarField edge(3);
    edge << -1, 0, 1;
    CHECK(std::isfinite(energy_value(lg, edge, g)));
    CHECK(energy_grad(lg, edge, g).allFinite());
    CHECK(energy_grad(ent, ScalarField::Zero(3), g).allFinite());
  }

  TEST_CASE("projection onto the energy domain")
  {
    EnergyModel ent;
    ent.internal.kind = InternalKind::Entropy;
    ScalarField r(3);
    r << -0.2, 0.5, 2;
    const ScalarField p = project_to_energy_domain(ent, r);
    CHECK(p[0] == 0.0);
    CHECK(p[2] == 2.0);
    EnergyModel dw;
    dw.internal.kind = InternalKind::DoubleWell;
    CHECK(project_to_energy_domain(dw, r) == r);
  }

  TEST_CASE("wall energy on the lower z face")
  {
    const GridSpec g({3, 2, 4}, {0, 0, 0}, {1, 1, 1});
    const WallEnergy w{2, true, std::numbers::pi / 4, 0.01};
    const auto cells = wall_cells(w, g);
    CHECK(cells.size() == 6);
    for (Index c : cells) { CHECK(g.multi_index(c)[2] == 0); }
    CHECK(wall_face_area(w, g) == doctest::Approx(1.0 / 6));
    EnergyModel m;
    m.wall = w;
    const double f1 = 0.01 / std::sqrt(2.0) * std::cos(std::numbers::pi / 4) * (1.0 / 3 - 1);
    CHECK(energy_value(m, ScalarField::Ones(g.size()), g) == doctest::Approx(f1 * 6 / 6));
    CHECK_THROWS_AS(wall_cells(WallEnergy{2, true, 0.5, 0.01}, GridSpec({4, 4}, {0, 0}, {1, 1})), ShapeError);
  }

  TEST_CASE("internal kind names round-trip")
  {
    for (auto k : {InternalKind::None, InternalKind::Entropy, InternalKind::DoubleWell, InternalKind::Logarithmic}) {
      CHECK(internal_kind_from_string(to_string(k)) == k);
    }
    CHECK_THROWS_AS(internal_kind_from_string("quartic"), ConfigError);
  }
}
