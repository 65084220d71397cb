#include <chrono>
#include <ctime>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vptpd/driver.hpp"
#include "vptpd/errors.hpp"
#include "vptpd/io.hpp"

#ifndef VPTPD_VERSION
#define VPTPD_VERSION "unknown"
#endif

using namespace vptpd;
using nlohmann::json;

namespace {

struct CommonArgs
{
  std::string preset;
  std::string config;
  std::optional<int> scale;
  std::string solver;
  std::string out = "vptpd_out";
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool strict = false;
  std::optional<double> tol, TOL, tau;
  std::optional<int> steps;
  std::vector<std::string> options;
};

void add_common(CLI::App* cmd, CommonArgs& a)
{
  cmd->add_option("--preset", a.preset, "Preset name (see `presets`)");
  cmd->add_option("--config", a.config, "JSON config file; flags take precedence")->check(CLI::ExistingFile);
  cmd->add_option("--scale", a.scale, "Coarsen grid and step count by this factor")->check(CLI::PositiveNumber);
  cmd->add_option("--out", a.out, "Output directory");
  cmd->add_option("--seed", a.seed, "Seed for randomized initial data");
  cmd->add_option("--threads", a.threads, "Worker threads (0: runtime default)");
  cmd->add_flag("--strict", a.strict, "Abort on nonconvergence or energy increase");
  cmd->add_option("--tol", a.tol, "Tolerance on the constraint residual e1");
  cmd->add_option("--TOL", a.TOL, "Tolerance on the relative changes e2..e5");
  cmd->add_option("--tau", a.tau, "JKO time step");
  cmd->add_option("--steps", a.steps, "Number of JKO steps");
  cmd->add_option("--option", a.options,
                  "Preset option key=value (ks_mass, contact_angle, fracture_potential)");
}

json merged_config(const CommonArgs& a)
{
  json j = a.config.empty() ? json::object() : read_json_file(a.config);
  if (!a.preset.empty()) { j["preset"] = a.preset; }
  if (!j.contains("preset")) { throw ConfigError("need --preset or a config with a 'preset' entry"); }
  if (a.scale) { j["scale"] = *a.scale; }
  if (!a.solver.empty()) { j["solver"] = a.solver; }
  if (a.strict) { j["strict"] = true; }
  if (a.tau) { j["tau"] = *a.tau; }
  if (a.steps) { j["steps"] = *a.steps; }
  if (a.seed) { j["options"]["seed"] = *a.seed; }
  if (a.tol) { j["solver_params"]["tol"] = *a.tol; }
  if (a.TOL) { j["solver_params"]["TOL"] = *a.TOL; }
  for (const auto& kv : a.options) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) { throw ConfigError("--option expects key=value, got '" + kv + "'"); }
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    if (key == "fracture_potential") {
      j["options"][key] = value;
    } else {
      try {
        j["options"][key] = std::stod(value);
      } catch (const std::exception&) {
        throw ConfigError("--option " + key + ": not a number");
      }
    }
  }
  return j;
}

std::string utc_now()
{
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunOutcome
{
  Trajectory traj;
  std::vector<std::string> dumps;
};

RunOutcome run_with_dumps(const FlowConfig& cfg, const fs::path& out, bool dump_fields)
{
  RunOutcome r;
  FieldObserver obs;
  if (dump_fields) {
    obs = [&](int step, double time, const ScalarField& rho) {
      const fs::path bin = write_field_dump(out, step, time, rho, cfg.grid);
      r.dumps.push_back(fs::relative(bin, out).string());
      if (cfg.grid.dim() == 1) {
        write_profile_csv(out / "profiles" / ("step_" + std::to_string(step) + ".csv"), rho, cfg.grid);
      }
    };
  }
  r.traj = run_flow(cfg, obs);
  return r;
}

int cmd_run(const CommonArgs& a)
{
  set_thread_count(a.threads);
  const FlowConfig cfg = config_from_json(merged_config(a));
  const fs::path out = a.out;
  fs::create_directories(out);

  json manifest;
  manifest["version"] = VPTPD_VERSION;
  manifest["command"] = "run";
  manifest["config"] = config_to_json(cfg);
  manifest["seed"] = cfg.seed();
  manifest["started_at"] = utc_now();
  manifest["status"] = "running";
  manifest["diagnostics"] = "diagnostics.csv";
  manifest["dumps"] = json::array();
  write_json_file(out / "manifest.json", manifest);

  const auto finalize = [&](const std::string& status, const RunOutcome* r) {
    manifest["status"] = status;
    manifest["finished_at"] = utc_now();
    if (r) {
      manifest["dumps"] = r->dumps;
      manifest["warnings"] = r->traj.warnings;
      manifest["total_iterations"] = r->traj.total_iterations();
      manifest["wall_ms"] = r->traj.total_wall_ms();
    }
    write_json_file(out / "manifest.json", manifest);
  };

  RunOutcome r;
  try {
    r = run_with_dumps(cfg, out, true);
  } catch (const std::exception& e) {
    finalize(std::string("failed: ") + e.what(), nullptr);
    throw;
  }
  write_diagnostics_csv(out / "diagnostics.csv", r.traj);
  finalize("ok", &r);
  for (const auto& w : r.traj.warnings) { std::cerr << "warning: " << w << '\n'; }
  std::cout << "preset " << cfg.recipe.preset << ", solver " << to_string(cfg.solver) << ": " << cfg.steps
            << " steps, " << r.traj.total_iterations() << " inner iterations, "
            << r.traj.total_wall_ms() / 1000 << " s; output in " << out.string() << '\n';
  return 0;
}

int cmd_compare(const CommonArgs& a)
{
  set_thread_count(a.threads);
  const json base = merged_config(a);
  const fs::path out = a.out;
  fs::create_directories(out);

  json manifest;
  manifest["version"] = VPTPD_VERSION;
  manifest["command"] = "compare";
  manifest["started_at"] = utc_now();
  manifest["status"] = "running";
  manifest["comparison"] = "comparison.csv";
  write_json_file(out / "manifest.json", manifest);

  std::vector<ComparisonRow> rows;
  for (SolverKind kind : {SolverKind::Vptpd, SolverKind::VptpdAdaptive, SolverKind::PrePdJko}) {
    json j = base;
    j["solver"] = to_string(kind);
    const FlowConfig cfg = config_from_json(j);
    if (!manifest.contains("config")) {
      manifest["config"] = config_to_json(cfg);
      manifest["seed"] = cfg.seed();
    }
    const Trajectory traj = run_flow(cfg);
    write_diagnostics_csv(out / ("diagnostics_" + to_string(kind) + ".csv"), traj);
    ComparisonRow row;
    row.solver = to_string(kind);
    row.total_iterations = traj.total_iterations();
    row.wall_ms = traj.total_wall_ms();
    for (std::size_t k = 1; k < traj.records.size(); ++k) { row.per_step_iterations.push_back(traj.records[k].iters); }
    for (const auto& w : traj.warnings) { std::cerr << "warning (" << row.solver << "): " << w << '\n'; }
    std::cout << row.solver << ": " << row.total_iterations << " iterations, " << row.wall_ms / 1000 << " s\n";
    rows.push_back(std::move(row));
  }
  write_comparison_csv(out / "comparison.csv", rows);
  manifest["status"] = "ok";
  manifest["finished_at"] = utc_now();
  write_json_file(out / "manifest.json", manifest);
  return 0;
}

int cmd_presets()
{
  for (const auto& name : preset_names()) {
    const FlowConfig cfg = preset(name);
    std::cout << name << "  dim=" << cfg.grid.dim() << " cells=";
    for (int a = 0; a < cfg.grid.dim(); ++a) { std::cout << (a ? "x" : "") << cfg.grid.cells(a); }
    std::cout << " tau=" << cfg.tau << " steps=" << cfg.steps << '\n';
  }
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Variable-preconditioned primal-dual solver for dynamic JKO gradient flows"};
  app.require_subcommand(1);
  app.set_version_flag("--version", VPTPD_VERSION);

  CommonArgs run_args;
  CLI::App* run = app.add_subcommand("run", "Run one flow and write diagnostics and field dumps");
  add_common(run, run_args);
  run->add_option("--solver", run_args.solver, "vptpd | vptpd_s | prepdjko")
    ->check(CLI::IsMember({"vptpd", "vptpd_s", "prepdjko"}));

  CommonArgs cmp_args;
  CLI::App* compare = app.add_subcommand("compare", "Run all three solvers on the same instance");
  add_common(compare, cmp_args);

  CLI::App* presets = app.add_subcommand("presets", "List the built-in presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) { return cmd_run(run_args); }
    if (compare->parsed()) { return cmd_compare(cmp_args); }
    if (presets->parsed()) { return cmd_presets(); }
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
