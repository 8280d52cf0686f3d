#include <iostream>

#include <CLI11.hpp>

#include "cutstokes/driver.hpp"
#include "cutstokes/linsolve.hpp"

using namespace cutstokes;

namespace {

int run_verb(const std::string& path) {
  RunConfig config;
  try {
    config = load_config(path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    std::cout << nlohmann::json{{"error", {{"kind", "config"}, {"message", e.what()}}}}.dump()
              << '\n';
    return 2;
  }
  const RunResult r = execute(config);
  if (!r.completed) {
    std::cerr << "error (" << r.error_kind << "): " << r.error_message << '\n';
    return 1;
  }
  std::cout << "steps " << r.steps << ", max residual " << r.max_residual << ", solver "
            << solver_backend() << '\n';
  if (r.errors) {
    for (int k = 0; k < kNorms; ++k) {
      std::cout << norm_name(k) << ' ';
      if (r.errors->normalizable(k))
        std::cout << r.errors->normalized(k) << '\n';
      else
        std::cout << r.errors->error[k] << " (absolute, exact norm is zero)\n";
    }
  }
  std::cout << "stability: max Q/B " << r.stability.max_ratio << ", growth rate "
            << r.stability.growth_rate << (r.stability.blow_up ? ", BLOW-UP" : "") << '\n';
  std::cout << "outputs in " << config.output_dir << '\n';
  return r.ok(config.rel_tol) ? 0 : 3;
}

int study_verb(const std::string& path) {
  RunConfig config;
  try {
    config = load_config(path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  const StudyResult s = run_study(config);
  for (std::size_t i = 0; i < s.h.size(); ++i)
    for (std::size_t j = 0; j < s.dt.size(); ++j) {
      if (!s.runs[i][j]) continue;
      const RunResult& r = *s.runs[i][j];
      std::cout << "h=" << s.h[i] << " dt=" << s.dt[j] << ": "
                << (r.completed ? "ok" : r.error_kind + " " + r.error_message) << '\n';
    }
  for (const auto& t : s.tables) {
    std::cout << t.norm;
    if (t.coupled) {
      for (double e : t.pairwise_h) std::cout << " " << e;
    } else {
      for (const auto& f : t.rows)
        std::cout << " eoc_dt=" << (f.indeterminate ? std::string("indeterminate")
                                                    : std::to_string(f.order));
    }
    std::cout << '\n';
  }
  std::cout << "tables in " << config.output_dir << '\n';
  return s.all_ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unfitted finite element solver for Stokes flow on moving domains"};
  app.require_subcommand(1);
  std::string run_config, study_config;
  auto* run = app.add_subcommand("run", "single run from a JSON config");
  run->add_option("config", run_config, "config file")->required()->check(CLI::ExistingFile);
  auto* study = app.add_subcommand("study", "convergence study from a JSON config");
  study->add_option("config", study_config, "config file")->required()->check(CLI::ExistingFile);
  auto* self = app.add_subcommand("selftest", "run the invariant suite");
  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return run_verb(run_config);
    if (*study) return study_verb(study_config);
    if (*self) return run_selftest(std::cout) ? 0 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
