#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vptpd/driver.hpp"

namespace vptpd {

namespace fs = std::filesystem;

/// Column header of diagnostics.csv.
inline constexpr const char* kDiagnosticsHeader = "time,energy,mass,rho_min,rho_max,iters,lambda_mean,wall_ms";

void write_diagnostics_csv(const fs::path& path, const Trajectory& traj);
/// Parses a diagnostics CSV back into records (step numbers are the row index).
std::vector<StepRecord> read_diagnostics_csv(const fs::path& path);

struct ComparisonRow
{
  std::string solver;
  long total_iterations = 0;
  double wall_ms = 0;
  std::vector<int> per_step_iterations;
};

inline constexpr const char* kComparisonHeader = "solver,total_iterations,wall_ms,per_step_iterations";

/// per_step_iterations is written as a ';'-separated list in a single column.
void write_comparison_csv(const fs::path& path, const std::vector<ComparisonRow>& rows);
std::vector<ComparisonRow> read_comparison_csv(const fs::path& path);

struct FieldDump
{
  ScalarField values;
  std::vector<Index> shape; // cells per axis, axis 0 first
  std::vector<double> lower, upper;
  double time = 0;
  std::string variable;
};

/// Writes `<dir>/fields/step_<k>.bin` (little-endian float64, axis 0 fastest)
/// and the matching .json descriptor. Returns the .bin path.
fs::path write_field_dump(const fs::path& dir, int step, double time, const ScalarField& values, const GridSpec& g,
                          const std::string& variable = "rho");
FieldDump read_field_dump(const fs::path& bin_path);

/// Two columns x,rho for a 1D field.
void write_profile_csv(const fs::path& path, const ScalarField& rho, const GridSpec& g);

/// JSON config: {"preset", "options", "cells", "scale", "tau", "steps", "solver", "r",
/// "dump_every", "strict", "solver_params": {...}}. Unknown keys are rejected.
FlowConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const FlowConfig& cfg);
nlohmann::json solver_params_to_json(const SolverParams& p);

nlohmann::json read_json_file(const fs::path& path);
void write_json_file(const fs::path& path, const nlohmann::json& j);

} // namespace vptpd
