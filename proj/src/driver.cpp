#include "vptpd/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "vptpd/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vptpd {

namespace {

// Metric floor for phase-field presets, equal to the depth of the well's
// concavity (min H'' = -1). On coarse grids the Dirichlet term no longer
// dominates it and interface cells with the default floor jump across the well.
constexpr double kWellFloor = 1.0;

double norm(const Point& x, int dim)
{
  double s = 0;
  for (int j = 0; j < dim; ++j) { s += x[j] * x[j]; }
  return std::sqrt(s);
}

GridSpec make_grid(const std::vector<Index>& preset_cells, const std::vector<Index>& override_cells,
                   std::vector<double> lo, std::vector<double> hi)
{
  const auto& cells = override_cells.empty() ? preset_cells : override_cells;
  if (cells.size() != preset_cells.size()) { throw ConfigError("grid override has the wrong dimension"); }
  return GridSpec(cells, std::move(lo), std::move(hi));
}

template <typename F>
ScalarField sample_cells(const GridSpec& g, F&& f)
{
  ScalarField out(g.size());
  for (Index c = 0; c < g.size(); ++c) { out[c] = f(g.center(c)); }
  return out;
}

// Uniform doubles in [0, 1) from the top 53 bits, independent of the standard
// library's distribution implementation.
double unit_uniform(std::mt19937_64& gen)
{
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

FlowConfig saturation1d(const Recipe& r)
{
  FlowConfig cfg;
  cfg.grid = make_grid({400}, r.cells, {-4}, {4});
  cfg.mobility = Mobility<double>::concave_quadratic(0, 1);
  cfg.energy.internal.kind = InternalKind::Entropy;
  cfg.energy.potential = sample_potential([](const Point& x) { return 0.5 * x[0] * x[0]; }, cfg.grid, std::nullopt);
  cfg.tau = 0.01;
  cfg.steps = 1500;
  cfg.rho0 = ScalarField::Constant(cfg.grid.size(), 3.32 / cfg.grid.volume());
  cfg.params.with_lambda0(0.05);
  return cfg;
}

FlowConfig keller_segel_1d(const Recipe& r)
{
  FlowConfig cfg;
  cfg.grid = make_grid({800}, r.cells, {-15}, {15});
  cfg.mobility = Mobility<double>::linear();
  cfg.energy.internal.kind = InternalKind::Entropy;
  cfg.energy.interaction = InteractionKernel::sample(
    [](const Point& x) { return std::log(std::abs(x[0])) / (2 * std::numbers::pi); }, cfg.grid);
  cfg.tau = 0.01;
  cfg.steps = 200;
  // r must sit below the 1e-8 background or the dual metric is wrong in vacuum
  cfg.regularization = 1e-10;
  cfg.params.with_lambda0(0.2);
  const double c = r.options.ks_mass;
  cfg.rho0 = sample_cells(cfg.grid, [c](const Point& x) {
    const double a = x[0] - 2;
    const double b = x[0] + 2;
    return c / std::sqrt(std::numbers::pi) * (std::exp(-4 * a * a) + std::exp(-4 * b * b)) + 1e-8;
  });
  return cfg;
}

FlowConfig cahn_hilliard_2d(const Recipe& r)
{
  FlowConfig cfg;
  cfg.grid = make_grid({128, 128}, r.cells, {0, 0}, {1, 1});
  cfg.mobility = Mobility<double>::concave_quadratic(-1, 1);
  cfg.energy.internal.kind = InternalKind::DoubleWell;
  cfg.energy.dirichlet_eps = 0.018;
  cfg.tau = 0.001;
  cfg.steps = 10000;
  std::mt19937_64 gen(r.options.seed);
  cfg.rho0.resize(cfg.grid.size());
  for (Index c = 0; c < cfg.grid.size(); ++c) { cfg.rho0[c] = -0.4 + (0.2 * unit_uniform(gen) - 0.1); }
  cfg.params.iu_floor = kWellFloor;
  return cfg;
}

FlowConfig aggregation_drift_2d(const Recipe& r)
{
  FlowConfig cfg;
  cfg.grid = make_grid({128, 128}, r.cells, {-1.5, -1.5}, {1.5, 1.5});
  cfg.mobility = Mobility<double>::linear();
  cfg.energy.internal.kind = InternalKind::None;
  const Point origin{0, 0, 0};
  cfg.energy.potential =
    sample_potential([](const Point& x) { return -0.25 * std::log(norm(x, 2)); }, cfg.grid, origin);
  cfg.energy.interaction = InteractionKernel::sample(
    [](const Point& x) {
      const double n = norm(x, 2);
      return 0.5 * n * n - std::log(n);
    },
    cfg.grid);
  cfg.tau = 0.2;
  cfg.steps = 40;
  constexpr double p[5] = {0, 0.5, -0.5, 0.5, -0.5};
  constexpr double q[5] = {0, -0.5, -0.5, 0.5, 0.5};
  constexpr double k = 0.5;
  constexpr double c_agg = 0.2;
  constexpr double eps = 0.1;
  cfg.rho0 = sample_cells(cfg.grid, [&](const Point& x) {
    double v = 1e-8;
    for (int i = 0; i < 5; ++i) {
      const double d = std::hypot(x[0] + p[i], x[1] + q[i]);
      v += k * (1 - std::tanh((d - c_agg) / (std::numbers::sqrt2 * eps)));
    }
    return v;
  });
  return cfg;
}

FlowConfig wetting_3d(const Recipe& r)
{
  FlowConfig cfg;
  cfg.grid = make_grid({64, 64, 40}, r.cells, {-0.5, -0.5, 0}, {0.5, 0.5, 0.4});
  cfg.mobility = Mobility<double>::concave_quadratic(-1, 1);
  cfg.energy.internal.kind = InternalKind::DoubleWell;
  const double eps = 0.01;
  cfg.energy.dirichlet_eps = eps;
  WallEnergy wall;
  wall.axis = 2;
  wall.lower_face = true;
  wall.contact_angle = r.options.contact_angle;
  wall.eps = eps;
  cfg.energy.wall = wall;
  cfg.tau = 0.1;
  cfg.steps = 10;
  cfg.rho0 = sample_cells(cfg.grid, [eps](const Point& x) {
    return -std::tanh((norm(x, 3) - 0.25) / (std::numbers::sqrt2 * eps));
  });
  cfg.params.iu_floor = kWellFloor;
  cfg.params.with_lambda0(0.1);
  return cfg;
}

FlowConfig fracture_3d(const Recipe& r)
{
  FlowConfig cfg;
  cfg.grid = make_grid({256, 64, 64}, r.cells, {-2, -0.5, -0.5}, {2, 0.5, 0.5});
  cfg.mobility = Mobility<double>::concave_quadratic(-1, 1);
  const InternalKind kind = r.options.fracture_potential;
  if (kind != InternalKind::DoubleWell && kind != InternalKind::Logarithmic) {
    throw ConfigError("fracture_3d: potential must be double_well or logarithmic");
  }
  cfg.energy.internal.kind = kind;
  cfg.energy.internal.theta = 0.3;
  cfg.energy.internal.theta_c = 1.0;
  cfg.energy.dirichlet_eps = 0.02;
  cfg.tau = 0.001;
  cfg.steps = kind == InternalKind::DoubleWell ? 2000 : 6000;
  cfg.rho0 = sample_cells(cfg.grid, [](const Point& x) {
    return std::abs(x[0]) < 1.8 && std::abs(x[1]) < 0.1 && std::abs(x[2]) < 0.1 ? 1.0 : -1.0;
  });
  cfg.params.tol = 1e-6;
  cfg.params.TOL = 1e-6;
  cfg.params.iu_floor = kWellFloor;
  return cfg;
}

using Builder = FlowConfig (*)(const Recipe&);

struct PresetEntry
{
  const char* name;
  Builder build;
};

constexpr PresetEntry kPresets[] = {
  {"saturation1d", saturation1d},
  {"keller_segel_1d", keller_segel_1d},
  {"cahn_hilliard_2d", cahn_hilliard_2d},
  {"aggregation_drift_2d", aggregation_drift_2d},
  {"wetting_3d", wetting_3d},
  {"fracture_3d", fracture_3d},
};

std::string joined_names()
{
  std::string s;
  for (const auto& p : kPresets) {
    if (!s.empty()) { s += ", "; }
    s += p.name;
  }
  return s;
}

} // namespace

void FlowConfig::validate() const
{
  if (rho0.size() != grid.size()) { throw ConfigError("rho0 must have one value per cell"); }
  if (!(tau > 0)) { throw ConfigError("tau must be positive"); }
  if (steps < 0) { throw ConfigError("steps must be nonnegative"); }
  if (!(regularization > 0)) { throw ConfigError("r must be positive"); }
  params.validate();
  for (Index c = 0; c < rho0.size(); ++c) {
    if (!mobility.admissible(rho0[c])) { throw ConfigError("rho0 lies outside the mobility bounds"); }
  }
  const ScalarField projected = project_to_energy_domain(energy, rho0);
  if ((projected - rho0).cwiseAbs().maxCoeff() > 0) { throw ConfigError("rho0 lies outside the energy domain"); }
  // Phase-field variables in [-1, 1] may carry negative mass; densities may not.
  if (mobility.bounds().first == 0 && !(mass(rho0, grid) > 0)) { throw ConfigError("rho0 must have positive mass"); }
}

std::vector<std::string> preset_names()
{
  std::vector<std::string> out;
  for (const auto& p : kPresets) { out.emplace_back(p.name); }
  return out;
}

FlowConfig build_preset(const Recipe& recipe, std::optional<int> steps)
{
  for (const auto& p : kPresets) {
    if (recipe.preset == p.name) {
      FlowConfig cfg = p.build(recipe);
      cfg.recipe = recipe;
      if (steps) { cfg.steps = *steps; }
      return cfg;
    }
  }
  throw ConfigError("unknown preset '" + recipe.preset + "'; valid presets: " + joined_names());
}

FlowConfig preset(const std::string& name, const PresetOptions& options)
{
  return build_preset(Recipe{name, options, {}});
}

FlowConfig scaled(const FlowConfig& cfg, int factor)
{
  if (factor < 1) { throw ConfigError("scale factor must be a positive integer"); }
  if (cfg.recipe.preset.empty()) { throw ConfigError("scaled: config was not built from a preset"); }
  Recipe r = cfg.recipe;
  r.cells.clear();
  for (int j = 0; j < cfg.grid.dim(); ++j) {
    const Index n = (cfg.grid.cells(j) + factor - 1) / factor;
    if (n < 4) {
      std::ostringstream os;
      os << "scaled: axis " << j << " would have " << n << " cells (< 4)";
      throw ConfigError(os.str());
    }
    r.cells.push_back(n);
  }
  FlowConfig out = build_preset(r, (cfg.steps + factor - 1) / factor);
  out.tau = cfg.tau;
  out.solver = cfg.solver;
  out.params = cfg.params;
  out.regularization = cfg.regularization;
  out.dual = cfg.dual;
  out.dump_every = cfg.dump_every;
  out.strict = cfg.strict;
  return out;
}

long Trajectory::total_iterations() const
{
  long s = 0;
  for (const auto& r : records) { s += r.iters; }
  return s;
}

double Trajectory::total_wall_ms() const
{
  double s = 0;
  for (const auto& r : records) { s += r.wall_ms; }
  return s;
}

namespace {

StepRecord describe(const FlowConfig& cfg, int step, const Vector& u)
{
  const auto rho = rho_block(u, cfg.grid);
  StepRecord rec;
  rec.step = step;
  rec.time = step * cfg.tau;
  rec.energy = energy_value(cfg.energy, project_to_energy_domain(cfg.energy, rho), cfg.grid);
  rec.mass = mass(rho, cfg.grid);
  rec.rho_min = rho.minCoeff();
  rec.rho_max = rho.maxCoeff();
  return rec;
}

template <typename E>
[[noreturn]] void rethrow_with_step(const E& e, int step)
{
  throw E("step " + std::to_string(step) + ": " + e.what());
}

} // namespace

Trajectory run_flow(const FlowConfig& cfg, const FieldObserver& observer)
{
  cfg.validate();
  const GridSpec& g = cfg.grid;
  const JkoProblem prob{g, cfg.mobility, cfg.energy, cfg.action()};

  Trajectory traj;
  traj.seed = cfg.seed();
  Vector u = stack_state(cfg.rho0, FluxField::Zero(g.size(), g.dim()));
  Vector p = Vector::Zero(g.size());
  traj.records.push_back(describe(cfg, 0, u));
  if (observer) { observer(0, 0.0, cfg.rho0); }

  for (int k = 1; k <= cfg.steps; ++k) {
    JkoResult res;
    try {
      res = solve_step(cfg.solver, prob, u, p, cfg.params, cfg.dual);
    } catch (const ConvergenceError& e) {
      rethrow_with_step(e, k);
    } catch (const DomainError& e) {
      rethrow_with_step(e, k);
    } catch (const ShapeError& e) {
      rethrow_with_step(e, k);
    }
    const double prev_energy = traj.records.back().energy;
    u = std::move(res.u);
    p = std::move(res.p);
    StepRecord rec = describe(cfg, k, u);
    rec.iters = res.stats.iterations;
    rec.lambda_mean = res.stats.lambda_mean;
    rec.wall_ms = res.stats.wall_ms;
    rec.converged = res.stats.converged;
    rec.constraint_residual = res.stats.monitors.constraint();
    traj.records.push_back(rec);

    if (!res.stats.converged) {
      std::ostringstream os;
      os << "step " << k << ": no convergence in " << cfg.params.iter_max << " iterations (e1="
         << res.stats.monitors.e[0] << ", max e2..e5=" << res.stats.monitors.max_relative() << ")";
      if (cfg.strict) { throw ConvergenceError(os.str()); }
      traj.warnings.push_back(os.str());
    }
    const double slack = 2 * cfg.params.TOL * (1 + std::abs(prev_energy));
    if (rec.energy > prev_energy + slack) {
      std::ostringstream os;
      os.precision(17);
      os << "step " << k << ": energy increased from " << prev_energy << " to " << rec.energy;
      if (cfg.strict) { throw ConvergenceError(os.str()); }
      traj.warnings.push_back(os.str());
    }
    const bool dump = k == cfg.steps || (cfg.dump_every > 0 && k % cfg.dump_every == 0);
    if (observer && dump) { observer(k, rec.time, rho_block(u, g)); }
  }
  traj.final_u = std::move(u);
  traj.final_p = std::move(p);
  return traj;
}

void set_thread_count(int n)
{
#ifdef _OPENMP
  if (n > 0) { omp_set_num_threads(n); }
#else
  (void)n;
#endif
}

} // namespace vptpd
