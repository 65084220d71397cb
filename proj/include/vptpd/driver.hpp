#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vptpd/energy.hpp"
#include "vptpd/grid.hpp"
#include "vptpd/mobility.hpp"
#include "vptpd/solver.hpp"

namespace vptpd {

/// Knobs that select a variant of a preset. Unused fields are ignored.
struct PresetOptions
{
  double ks_mass = 1.0;                             // keller_segel_1d amplitude C
  double contact_angle = 0.7853981633974483;        // wetting_3d beta_w
  InternalKind fracture_potential = InternalKind::DoubleWell;
  std::uint64_t seed = 42;                          // cahn_hilliard_2d initial noise
};

/// The recipe a config was built from, kept so that it can be rebuilt on another grid.
struct Recipe
{
  std::string preset;
  PresetOptions options;
  std::vector<Index> cells; // empty: the preset's own grid
};

struct FlowConfig
{
  Recipe recipe;
  GridSpec grid;
  Mobility<double> mobility = Mobility<double>::linear();
  EnergyModel energy;
  double tau = 0.01;
  int steps = 1;
  ScalarField rho0;
  SolverKind solver = SolverKind::Vptpd;
  SolverParams params;
  ActionParams action() const { return {tau, regularization}; }
  double regularization = 1e-5; // r in the regularized action
  DualSolverOptions dual;
  /// Steps whose density is passed to the observer; 0 means only the first and last.
  int dump_every = 0;
  /// Strict mode: nonconvergence or an energy increase beyond the slack throws.
  bool strict = false;

  /// Throws ConfigError if rho0 is missing, inadmissible or massless.
  void validate() const;
  std::uint64_t seed() const { return recipe.options.seed; }
};

std::vector<std::string> preset_names();
FlowConfig preset(const std::string& name, const PresetOptions& options = {});
/// Rebuilds a preset on a different grid; steps default to the preset's own count.
FlowConfig build_preset(const Recipe& recipe, std::optional<int> steps = std::nullopt);

/// Same physics with every n_j divided by `factor` (rounded up) and the step
/// count divided likewise. Solver settings and tau carry over.
FlowConfig scaled(const FlowConfig& cfg, int factor);

struct StepRecord
{
  int step = 0;
  double time = 0;
  double energy = 0;
  double mass = 0;
  double rho_min = 0;
  double rho_max = 0;
  int iters = 0;
  double lambda_mean = 0;
  double wall_ms = 0;
  bool converged = true;
  double constraint_residual = 0;
};

struct Trajectory
{
  std::vector<StepRecord> records; // K + 1 entries, the first at t = 0
  std::uint64_t seed = 0;
  Vector final_u;
  Vector final_p;
  std::vector<std::string> warnings;

  long total_iterations() const;
  double total_wall_ms() const;
};

/// Called with (step, time, rho) at t = 0, at every dump step and at the end.
using FieldObserver = std::function<void(int, double, const ScalarField&)>;

Trajectory run_flow(const FlowConfig& cfg, const FieldObserver& observer = {});

/// Sets the OpenMP thread count when built with OpenMP; otherwise a no-op.
void set_thread_count(int n);

} // namespace vptpd
