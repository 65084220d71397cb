#include "vptpd/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vptpd/errors.hpp"

namespace vptpd {

namespace {

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out)
{
  if (path.has_parent_path()) { fs::create_directories(path.parent_path()); }
  std::ofstream os(path, mode);
  if (!os) { throw std::runtime_error("cannot open " + path.string() + " for writing"); }
  return os;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in)
{
  std::ifstream is(path, mode);
  if (!is) { throw std::runtime_error("cannot open " + path.string()); }
  return is;
}

std::string g17(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep)
{
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) { out.push_back(cell); }
  if (!line.empty() && line.back() == sep) { out.emplace_back(); }
  return out;
}

std::uint64_t to_little_endian(std::uint64_t v)
{
  if constexpr (std::endian::native == std::endian::little) { return v; }
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) { r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i)); }
  return r;
}

} // namespace

void write_diagnostics_csv(const fs::path& path, const Trajectory& traj)
{
  auto os = open_out(path);
  os << kDiagnosticsHeader << '\n';
  for (const auto& r : traj.records) {
    os << g17(r.time) << ',' << g17(r.energy) << ',' << g17(r.mass) << ',' << g17(r.rho_min) << ','
       << g17(r.rho_max) << ',' << r.iters << ',' << g17(r.lambda_mean) << ',' << g17(r.wall_ms) << '\n';
  }
}

std::vector<StepRecord> read_diagnostics_csv(const fs::path& path)
{
  auto is = open_in(path);
  std::string line;
  if (!std::getline(is, line) || line != kDiagnosticsHeader) {
    throw ConfigError(path.string() + ": missing diagnostics header");
  }
  std::vector<StepRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) { continue; }
    const auto c = split(line, ',');
    if (c.size() != 8) { throw ConfigError(path.string() + ": expected 8 columns"); }
    StepRecord r;
    r.step = static_cast<int>(out.size());
    r.time = std::stod(c[0]);
    r.energy = std::stod(c[1]);
    r.mass = std::stod(c[2]);
    r.rho_min = std::stod(c[3]);
    r.rho_max = std::stod(c[4]);
    r.iters = std::stoi(c[5]);
    r.lambda_mean = std::stod(c[6]);
    r.wall_ms = std::stod(c[7]);
    out.push_back(r);
  }
  return out;
}

void write_comparison_csv(const fs::path& path, const std::vector<ComparisonRow>& rows)
{
  auto os = open_out(path);
  os << kComparisonHeader << '\n';
  for (const auto& r : rows) {
    os << r.solver << ',' << r.total_iterations << ',' << g17(r.wall_ms) << ',';
    for (std::size_t i = 0; i < r.per_step_iterations.size(); ++i) {
      if (i) { os << ';'; }
      os << r.per_step_iterations[i];
    }
    os << '\n';
  }
}

std::vector<ComparisonRow> read_comparison_csv(const fs::path& path)
{
  auto is = open_in(path);
  std::string line;
  if (!std::getline(is, line) || line != kComparisonHeader) {
    throw ConfigError(path.string() + ": missing comparison header");
  }
  std::vector<ComparisonRow> out;
  while (std::getline(is, line)) {
    if (line.empty()) { continue; }
    const auto c = split(line, ',');
    if (c.size() != 4) { throw ConfigError(path.string() + ": expected 4 columns"); }
    ComparisonRow r;
    r.solver = c[0];
    r.total_iterations = std::stol(c[1]);
    r.wall_ms = std::stod(c[2]);
    for (const auto& s : split(c[3], ';')) {
      if (!s.empty()) { r.per_step_iterations.push_back(std::stoi(s)); }
    }
    out.push_back(std::move(r));
  }
  return out;
}

fs::path write_field_dump(const fs::path& dir, int step, double time, const ScalarField& values, const GridSpec& g,
                          const std::string& variable)
{
  check_shape(values.size() == g.size(), "write_field_dump: field size must equal N");
  const fs::path base = dir / "fields" / ("step_" + std::to_string(step));
  fs::path bin = base;
  bin += ".bin";
  fs::path meta = base;
  meta += ".json";
  {
    auto os = open_out(bin, std::ios::out | std::ios::binary);
    for (Index i = 0; i < values.size(); ++i) {
      const std::uint64_t w = to_little_endian(std::bit_cast<std::uint64_t>(values[i]));
      os.write(reinterpret_cast<const char*>(&w), sizeof w);
    }
  }
  nlohmann::json j;
  std::vector<Index> shape;
  std::vector<double> lo, hi;
  for (int a = 0; a < g.dim(); ++a) {
    shape.push_back(g.cells(a));
    lo.push_back(g.lower(a));
    hi.push_back(g.upper(a));
  }
  j["shape"] = shape;
  j["lower"] = lo;
  j["upper"] = hi;
  j["time"] = time;
  j["step"] = step;
  j["variable"] = variable;
  j["dtype"] = "float64";
  j["byte_order"] = "little";
  j["layout"] = "axis0_fastest";
  write_json_file(meta, j);
  return bin;
}

FieldDump read_field_dump(const fs::path& bin_path)
{
  fs::path meta = bin_path;
  meta.replace_extension(".json");
  const nlohmann::json j = read_json_file(meta);
  FieldDump d;
  d.shape = j.at("shape").get<std::vector<Index>>();
  d.lower = j.at("lower").get<std::vector<double>>();
  d.upper = j.at("upper").get<std::vector<double>>();
  d.time = j.at("time").get<double>();
  d.variable = j.at("variable").get<std::string>();
  Index n = 1;
  for (Index s : d.shape) { n *= s; }
  auto is = open_in(bin_path, std::ios::in | std::ios::binary);
  d.values.resize(n);
  for (Index i = 0; i < n; ++i) {
    std::uint64_t w = 0;
    if (!is.read(reinterpret_cast<char*>(&w), sizeof w)) {
      throw ConfigError(bin_path.string() + ": truncated field dump");
    }
    d.values[i] = std::bit_cast<double>(to_little_endian(w));
  }
  return d;
}

void write_profile_csv(const fs::path& path, const ScalarField& rho, const GridSpec& g)
{
  check_shape(g.dim() == 1 && rho.size() == g.size(), "write_profile_csv: needs a 1D field");
  auto os = open_out(path);
  os << "x,rho\n";
  for (Index i = 0; i < rho.size(); ++i) { os << g17(g.center(0, i)) << ',' << g17(rho[i]) << '\n'; }
}

nlohmann::json read_json_file(const fs::path& path)
{
  auto is = open_in(path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const nlohmann::json& j)
{
  auto os = open_out(path);
  os << j.dump(2) << '\n';
}

nlohmann::json solver_params_to_json(const SolverParams& p)
{
  return {
    {"lambda0", p.lambda0},       {"sigma0", p.sigma0},         {"kappa1", p.kappa1},
    {"kappa2", p.kappa2},         {"tol", p.tol},               {"TOL", p.TOL},
    {"iter_max", p.iter_max},     {"adaptive", p.adaptive},     {"lambda_max", p.lambda_max},
    {"lambda_min", p.lambda_min}, {"gamma_plus", p.gamma_plus}, {"gamma_minus", p.gamma_minus},
    {"theta_max", p.theta_max},   {"lambda_baseline", p.lambda_baseline},
    {"iu_floor", p.iu_floor},
  };
}

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where)
{
  if (!j.is_object()) { throw ConfigError(where + " must be an object"); }
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) { known = known || k == key; }
    if (!known) { throw ConfigError("unknown key '" + k + "' in " + where); }
  }
}

void apply_solver_params(SolverParams& p, const nlohmann::json& j)
{
  reject_unknown(j,
                 {"lambda0", "sigma0", "kappa1", "kappa2", "tol", "TOL", "iter_max", "adaptive", "lambda_max",
                  "lambda_min", "gamma_plus", "gamma_minus", "theta_max", "lambda_baseline",
                  "iu_floor"},
                 "solver_params");
  if (j.contains("lambda0")) { p.with_lambda0(j["lambda0"].get<double>()); }
  const auto set = [&](const char* key, auto& field) {
    if (j.contains(key)) { field = j[key].get<std::decay_t<decltype(field)>>(); }
  };
  set("sigma0", p.sigma0);
  set("kappa1", p.kappa1);
  set("kappa2", p.kappa2);
  set("tol", p.tol);
  set("TOL", p.TOL);
  set("iter_max", p.iter_max);
  set("adaptive", p.adaptive);
  set("lambda_max", p.lambda_max);
  set("lambda_min", p.lambda_min);
  set("gamma_plus", p.gamma_plus);
  set("gamma_minus", p.gamma_minus);
  set("theta_max", p.theta_max);
  set("lambda_baseline", p.lambda_baseline);
  set("iu_floor", p.iu_floor);
}

} // namespace

FlowConfig config_from_json(const nlohmann::json& j)
{
  try {
    reject_unknown(j,
                   {"preset", "options", "cells", "scale", "tau", "steps", "solver", "r", "dump_every", "strict",
                    "solver_params"},
                   "config");
    if (!j.contains("preset")) { throw ConfigError("config needs a 'preset' entry"); }
    Recipe recipe;
    recipe.preset = j["preset"].get<std::string>();
    if (j.contains("options")) {
      const auto& o = j["options"];
      reject_unknown(o, {"ks_mass", "contact_angle", "fracture_potential", "seed"}, "options");
      if (o.contains("ks_mass")) { recipe.options.ks_mass = o["ks_mass"].get<double>(); }
      if (o.contains("contact_angle")) { recipe.options.contact_angle = o["contact_angle"].get<double>(); }
      if (o.contains("fracture_potential")) {
        recipe.options.fracture_potential = internal_kind_from_string(o["fracture_potential"].get<std::string>());
      }
      if (o.contains("seed")) { recipe.options.seed = o["seed"].get<std::uint64_t>(); }
    }
    if (j.contains("cells")) { recipe.cells = j["cells"].get<std::vector<Index>>(); }

    FlowConfig cfg = build_preset(recipe);
    if (j.contains("scale")) {
      const int factor = j["scale"].get<int>();
      if (factor != 1) { cfg = scaled(cfg, factor); }
    }
    if (j.contains("tau")) { cfg.tau = j["tau"].get<double>(); }
    if (j.contains("steps")) { cfg.steps = j["steps"].get<int>(); }
    if (j.contains("solver")) { cfg.solver = solver_kind_from_string(j["solver"].get<std::string>()); }
    if (j.contains("r")) { cfg.regularization = j["r"].get<double>(); }
    if (j.contains("dump_every")) { cfg.dump_every = j["dump_every"].get<int>(); }
    if (j.contains("strict")) { cfg.strict = j["strict"].get<bool>(); }
    if (j.contains("solver_params")) { apply_solver_params(cfg.params, j["solver_params"]); }
    cfg.params.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

nlohmann::json config_to_json(const FlowConfig& cfg)
{
  nlohmann::json j;
  j["preset"] = cfg.recipe.preset;
  j["options"] = {
    {"ks_mass", cfg.recipe.options.ks_mass},
    {"contact_angle", cfg.recipe.options.contact_angle},
    {"fracture_potential", to_string(cfg.recipe.options.fracture_potential)},
    {"seed", cfg.recipe.options.seed},
  };
  std::vector<Index> cells;
  for (int a = 0; a < cfg.grid.dim(); ++a) { cells.push_back(cfg.grid.cells(a)); }
  j["cells"] = cells;
  j["tau"] = cfg.tau;
  j["steps"] = cfg.steps;
  j["solver"] = to_string(cfg.solver);
  j["r"] = cfg.regularization;
  j["dump_every"] = cfg.dump_every;
  j["strict"] = cfg.strict;
  j["solver_params"] = solver_params_to_json(cfg.params);
  return j;
}

} // namespace vptpd
