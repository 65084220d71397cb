#include <doctest.h>

#include <numbers>

#include "oracles.hpp"
#include "vptpd/driver.hpp"

using namespace vptpd;

namespace {

FlowConfig uniform_entropy(int steps)
{
  FlowConfig cfg;
  cfg.grid = GridSpec({10}, {0}, {1});
  cfg.energy.internal.kind = InternalKind::Entropy;
  cfg.tau = 0.05;
  cfg.steps = steps;
  cfg.rho0 = ScalarField::Constant(10, 0.7);
  return cfg;
}

FlowConfig bump(int steps)
{
  FlowConfig cfg = uniform_entropy(steps);
  for (Index c = 0; c < 10; ++c) { cfg.rho0[c] = 0.5 + std::exp(-20 * std::pow(cfg.grid.center(0, c) - 0.3, 2)); }
  return cfg;
}

} // namespace

TEST_SUITE("driver")
{
  TEST_CASE("preset catalogue")
  {
    const auto names = preset_names();
    CHECK(names == std::vector<std::string>{"saturation1d", "keller_segel_1d", "cahn_hilliard_2d",
                                            "aggregation_drift_2d", "wetting_3d", "fracture_3d"});
    for (const auto& n : names) {
      const auto cfg = preset(n);
      CHECK(cfg.recipe.preset == n);
      CHECK_NOTHROW(cfg.validate());
    }
    try {
      preset("heat");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      for (const auto& n : names) { CHECK(msg.find(n) != std::string::npos); }
    }
  }

  TEST_CASE("preset parameters")
  {
    const auto sat = preset("saturation1d");
    CHECK(sat.grid.cells(0) == 400);
    CHECK(sat.tau == 0.01);
    CHECK(sat.steps == 1500);
    CHECK(mass(sat.rho0, sat.grid) == doctest::Approx(3.32));
    CHECK(sat.mobility.kind() == MobilityKind::ConcaveQuadratic);

    const auto ch = preset("cahn_hilliard_2d");
    CHECK(ch.energy.dirichlet_eps == 0.018);
    CHECK(ch.tau == 0.001);
    CHECK(ch.grid.cells(0) == 128);
    CHECK(ch.rho0.minCoeff() >= -0.5);
    CHECK(ch.rho0.maxCoeff() <= -0.3);

    PresetOptions lg;
    lg.fracture_potential = InternalKind::Logarithmic;
    const auto fr = preset("fracture_3d", lg);
    CHECK(fr.energy.internal.theta == 0.3);
    CHECK(fr.energy.internal.theta_c == 1.0);
    CHECK(fr.steps == 6000);
    CHECK(preset("fracture_3d").steps == 2000);
    PresetOptions bad;
    bad.fracture_potential = InternalKind::Entropy;
    CHECK_THROWS_AS(preset("fracture_3d", bad), ConfigError);

    PresetOptions heavy;
    heavy.ks_mass = 15;
    const auto ks = preset("keller_segel_1d", heavy);
    // two unit-mass bumps scaled by C, plus the background
    CHECK(mass(ks.rho0, ks.grid) == doctest::Approx(2 * 15 / 2.0 + 30e-8).epsilon(1e-6));

    PresetOptions angle;
    angle.contact_angle = std::numbers::pi / 3;
    const auto wet = preset("wetting_3d", angle);
    CHECK(wet.energy.wall->contact_angle == doctest::Approx(std::numbers::pi / 3));
    CHECK(wet.tau == 0.1);
    CHECK(wet.params.iu_floor == 1.0);
    CHECK(preset("cahn_hilliard_2d").params.iu_floor == 1.0);
    CHECK(preset("saturation1d").params.iu_floor == 0);
  }

  TEST_CASE("scaled configs")
  {
    auto ch = preset("cahn_hilliard_2d");
    ch.params.tol = 3e-6;
    const auto small = scaled(ch, 4);
    CHECK(small.grid.cells(0) == 32);
    CHECK(small.grid.cells(1) == 32);
    CHECK(small.steps == 2500);
    CHECK(small.tau == ch.tau);
    CHECK(small.params.tol == 3e-6);
    CHECK(small.grid.lower(0) == 0);
    CHECK(small.grid.upper(1) == 1);
    CHECK(scaled(preset("saturation1d"), 3).grid.cells(0) == 134);
    CHECK_THROWS_AS(scaled(ch, 64), ConfigError);
    CHECK_THROWS_AS(scaled(ch, 0), ConfigError);
    CHECK_THROWS_AS(scaled(uniform_entropy(1), 2), ConfigError);
  }

  TEST_CASE("seeded initial data is reproducible")
  {
    PresetOptions a, b;
    a.seed = b.seed = 7;
    CHECK(preset("cahn_hilliard_2d", a).rho0 == preset("cahn_hilliard_2d", b).rho0);
    b.seed = 8;
    CHECK(preset("cahn_hilliard_2d", a).rho0 != preset("cahn_hilliard_2d", b).rho0);
    CHECK(preset("cahn_hilliard_2d", a).seed() == 7);
  }

  TEST_CASE("config validation")
  {
    auto cfg = uniform_entropy(1);
    CHECK_NOTHROW(cfg.validate());
    cfg.tau = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = uniform_entropy(1);
    cfg.rho0.resize(3);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = uniform_entropy(1);
    cfg.rho0[0] = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = uniform_entropy(1);
    cfg.regularization = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("one step equals a single JKO solve")
  {
    const auto cfg = bump(1);
    const auto traj = run_flow(cfg);
    REQUIRE(traj.records.size() == 2);
    const JkoProblem prob{cfg.grid, cfg.mobility, cfg.energy, cfg.action()};
    const auto res = solve_jko_step(prob, stack_state(cfg.rho0, FluxField::Zero(10, 1)), Vector::Zero(10), cfg.params);
    CHECK(traj.final_u == res.u);
    CHECK(traj.final_p == res.p);
    CHECK(traj.records[1].iters == res.stats.iterations);
    CHECK(traj.records[1].time == doctest::Approx(cfg.tau));
    CHECK(traj.records[0].iters == 0);
    CHECK(traj.records[0].energy == doctest::Approx(energy_value(cfg.energy, cfg.rho0, cfg.grid)));
  }

  TEST_CASE("equilibrium stays put")
  {
    const auto traj = run_flow(uniform_entropy(3));
    REQUIRE(traj.records.size() == 4);
    for (const auto& r : traj.records) {
      CHECK(r.rho_min == doctest::Approx(0.7).epsilon(1e-10));
      CHECK(r.rho_max == doctest::Approx(0.7).epsilon(1e-10));
      CHECK(r.energy == doctest::Approx(traj.records[0].energy).epsilon(1e-12));
    }
    CHECK(traj.warnings.empty());
  }

  TEST_CASE("trajectory invariants on a relaxing bump")
  {
    auto cfg = bump(6);
    cfg.dump_every = 2;
    std::vector<int> seen;
    const auto traj = run_flow(cfg, [&](int k, double t, const ScalarField& rho) {
      seen.push_back(k);
      CHECK(t == doctest::Approx(k * cfg.tau));
      CHECK(rho.size() == 10);
    });
    CHECK(seen == std::vector<int>{0, 2, 4, 6});
    REQUIRE(traj.records.size() == 7);
    for (std::size_t k = 1; k < traj.records.size(); ++k) {
      const auto& r = traj.records[k];
      CHECK(r.step == static_cast<int>(k));
      CHECK(r.converged);
      CHECK(std::abs(r.mass - traj.records[0].mass) <= 1e-5 * cfg.grid.volume());
      CHECK(r.energy <= traj.records[k - 1].energy + 2 * cfg.params.TOL * (1 + std::abs(traj.records[k - 1].energy)));
      CHECK(r.constraint_residual < cfg.params.tol);
    }
    CHECK(traj.total_iterations() > 0);
    CHECK(traj.warnings.empty());

    std::vector<int> ends;
    cfg.dump_every = 0;
    run_flow(cfg, [&](int k, double, const ScalarField&) { ends.push_back(k); });
    CHECK(ends == std::vector<int>{0, 6});
  }

  TEST_CASE("runs are deterministic")
  {
    const auto cfg = scaled(preset("cahn_hilliard_2d"), 4);
    auto short_cfg = cfg;
    short_cfg.steps = 2;
    const auto a = run_flow(short_cfg);
    const auto b = run_flow(short_cfg);
    CHECK(a.final_u == b.final_u);
    CHECK(a.seed == b.seed);
    for (std::size_t k = 0; k < a.records.size(); ++k) { CHECK(a.records[k].iters == b.records[k].iters); }
  }

  TEST_CASE("nonconvergence warns, strict mode throws")
  {
    auto cfg = bump(2);
    cfg.params.iter_max = 2;
    const auto traj = run_flow(cfg);
    CHECK(traj.warnings.size() >= 2);
    CHECK_FALSE(traj.records[1].converged);
    cfg.strict = true;
    CHECK_THROWS_AS(run_flow(cfg), ConvergenceError);
  }

  TEST_CASE("solver selection")
  {
    auto cfg = bump(1);
    cfg.solver = SolverKind::PrePdJko;
    const auto b = run_flow(cfg);
    cfg.solver = SolverKind::Vptpd;
    const auto v = run_flow(cfg);
    CHECK(b.records[1].converged);
    CHECK(oracle::rel_err(rho_block(b.final_u, cfg.grid), rho_block(v.final_u, cfg.grid)) < 1e-3);
  }
}
