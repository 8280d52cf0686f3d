#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cutstokes/verification.hpp"

namespace cutstokes {

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Flat JSON configuration. Keys (defaults in parentheses):
//   motion ("channel2d"), case ("channel2d"), degree (1), bdf_order (1),
//   h (0.25) or nx + ny, dt (0.2), t_final (2), gamma_D (500), gamma_g (1e-3),
//   gamma_p (1e-3), ghost ("jump"), bdf2_start ("bdf1_bootstrap"),
//   pressure_gauge ("auto"), c_delta (1), rel_tol (1e-10), blowup_factor (10),
//   output_dir ("out"), dump_vtk (false), vtk_every (1), dump_matrix (false)
// Study keys: h_list, dt_list, dt_over_h (coupled sweep dt = dt_over_h * h).
struct RunConfig {
  std::string motion = "channel2d";
  std::string case_name = "channel2d";
  int degree = 1;
  int bdf_order = 1;
  double h = 0.25;
  int nx = 0;
  int ny = 0;
  double dt = 0.2;
  double t_final = 2.0;
  double gamma_D = 500.0;
  double gamma_g = 1e-3;
  double gamma_p = 1e-3;
  std::string ghost = "jump";
  std::string bdf2_start = "bdf1_bootstrap";
  std::string pressure_gauge = "auto";
  double c_delta = 1.0;
  double rel_tol = 1e-10;
  double blowup_factor = 10.0;
  std::string output_dir = "out";
  bool dump_vtk = false;
  int vtk_every = 1;
  bool dump_matrix = false;
  std::vector<double> h_list;
  std::vector<double> dt_list;
  std::optional<double> dt_over_h;

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// One-line resolved configuration for CSV comment lines.
  std::string summary() const;
};

RunConfig load_config(const std::filesystem::path& path);

struct RunResult {
  bool completed = false;
  std::string error_kind;
  std::string error_message;
  int steps = 0;
  double max_residual = 0.0;
  std::optional<ErrorNorms> errors;
  StabilityReport stability;
  std::vector<StepDiagnostics> diagnostics;

  bool ok(double rel_tol) const {
    return completed && !stability.blow_up && max_residual <= rel_tol;
  }
};

BackgroundMesh make_mesh(const RunConfig& config, const DomainMotion& motion);
SchemeParameters make_parameters(const RunConfig& config, bool analytic);

/// initialize -> step loop -> error norms -> stability monitor. Errors are
/// captured in the result, never thrown. With write_outputs the artifacts
/// go to config.output_dir.
RunResult execute(const RunConfig& config, bool write_outputs = true);

struct StudyResult {
  std::vector<double> h;
  std::vector<double> dt;
  bool coupled = false;
  // runs[i][j] for h[i], dt[j] (coupled: j == i only)
  std::vector<std::vector<std::optional<RunResult>>> runs;
  std::vector<EocTable> tables;  // one per norm
  bool all_ok = false;
};

/// Worker count from CUTSTOKES_WORKERS (default 1).
int study_workers();

StudyResult run_study(const RunConfig& config, bool write_outputs = true);

/// Writes `contents` to `path` through a temporary file and a rename.
void write_atomically(const std::filesystem::path& path, const std::string& contents);

/// Legacy VTK frame of the background mesh with vertex velocity and pressure.
void write_vtk_frame(std::ostream& out, const BackgroundMesh& mesh, const DofMap& dofs,
                     const TimeLevel& level, const std::vector<int>& cell_location);

/// Invariant suite behind the `selftest` verb; prints one line per check.
bool run_selftest(std::ostream& out);

}  // namespace cutstokes
