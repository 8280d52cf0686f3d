#include "cutstokes/driver.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include "cutstokes/linsolve.hpp"

namespace cutstokes {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type (got " +
                      j.at(key).dump() + ")");
  }
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "motion",     "case",          "degree",        "bdf_order",   "h",
      "nx",         "ny",            "dt",            "t_final",     "gamma_D",
      "gamma_g",    "gamma_p",       "ghost",         "bdf2_start",  "pressure_gauge",
      "c_delta",    "rel_tol",       "blowup_factor", "output_dir",  "dump_vtk",
      "vtk_every",  "dump_matrix",   "h_list",        "dt_list",     "dt_over_h"};
  return keys;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known_keys().contains(key)) throw ConfigError("unknown config key '" + key + "'");
  RunConfig c;
  read_field(j, "motion", c.motion);
  read_field(j, "case", c.case_name);
  read_field(j, "degree", c.degree);
  read_field(j, "bdf_order", c.bdf_order);
  read_field(j, "h", c.h);
  read_field(j, "nx", c.nx);
  read_field(j, "ny", c.ny);
  read_field(j, "dt", c.dt);
  read_field(j, "t_final", c.t_final);
  read_field(j, "gamma_D", c.gamma_D);
  read_field(j, "gamma_g", c.gamma_g);
  read_field(j, "gamma_p", c.gamma_p);
  read_field(j, "ghost", c.ghost);
  read_field(j, "bdf2_start", c.bdf2_start);
  read_field(j, "pressure_gauge", c.pressure_gauge);
  read_field(j, "c_delta", c.c_delta);
  read_field(j, "rel_tol", c.rel_tol);
  read_field(j, "blowup_factor", c.blowup_factor);
  read_field(j, "output_dir", c.output_dir);
  read_field(j, "dump_vtk", c.dump_vtk);
  read_field(j, "vtk_every", c.vtk_every);
  read_field(j, "dump_matrix", c.dump_matrix);
  read_field(j, "h_list", c.h_list);
  read_field(j, "dt_list", c.dt_list);
  if (j.contains("dt_over_h") && !j.at("dt_over_h").is_null()) {
    double v = 0.0;
    read_field(j, "dt_over_h", v);
    c.dt_over_h = v;
  }
  c.validate();
  return c;
}

json RunConfig::to_json() const {
  json j = {{"motion", motion},
            {"case", case_name},
            {"degree", degree},
            {"bdf_order", bdf_order},
            {"h", h},
            {"nx", nx},
            {"ny", ny},
            {"dt", dt},
            {"t_final", t_final},
            {"gamma_D", gamma_D},
            {"gamma_g", gamma_g},
            {"gamma_p", gamma_p},
            {"ghost", ghost},
            {"bdf2_start", bdf2_start},
            {"pressure_gauge", pressure_gauge},
            {"c_delta", c_delta},
            {"rel_tol", rel_tol},
            {"blowup_factor", blowup_factor},
            {"output_dir", output_dir},
            {"dump_vtk", dump_vtk},
            {"vtk_every", vtk_every},
            {"dump_matrix", dump_matrix},
            {"h_list", h_list},
            {"dt_list", dt_list}};
  j["dt_over_h"] = dt_over_h ? json(*dt_over_h) : json(nullptr);
  return j;
}

std::string RunConfig::summary() const { return "config " + to_json().dump(); }

void RunConfig::validate() const {
  const auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("config field '" + field + "' " + why);
  };
  if (motion != "channel2d" && motion != "stationary_box2d")
    fail("motion", "must be channel2d or stationary_box2d, got '" + motion + "'");
  if (case_name != "channel2d" && case_name != "zero" && case_name != "decay" &&
      case_name != "none")
    fail("case", "must be channel2d, zero, decay or none, got '" + case_name + "'");
  if (case_name == "channel2d" && motion != "channel2d")
    fail("case", "channel2d requires motion channel2d");
  if (degree != 1 && degree != 2) fail("degree", "must be 1 or 2, got " + std::to_string(degree));
  if (bdf_order != 1 && bdf_order != 2)
    fail("bdf_order", "must be 1 or 2, got " + std::to_string(bdf_order));
  if ((nx > 0) != (ny > 0)) fail(nx > 0 ? "ny" : "nx", "must be given together with the other");
  if (nx < 0 || ny < 0) fail("nx", "must be positive");
  if (nx == 0 && !(h > 0.0)) fail("h", "must be positive");
  if (!(dt > 0.0)) fail("dt", "must be positive");
  if (!(t_final > 0.0)) fail("t_final", "must be positive");
  if (!(gamma_D > 0.0)) fail("gamma_D", "must be positive");
  if (!(gamma_g >= 0.0)) fail("gamma_g", "must be nonnegative");
  if (!(gamma_p >= 0.0)) fail("gamma_p", "must be nonnegative");
  try {
    parse_ghost_variant(ghost);
  } catch (const Error& e) {
    fail("ghost", e.what());
  }
  try {
    parse_bdf2_start(bdf2_start);
  } catch (const Error& e) {
    fail("bdf2_start", e.what());
  }
  if (bdf_order == 2 && bdf2_start == "analytic_prev" && case_name != "channel2d" &&
      case_name != "zero")
    fail("bdf2_start", "analytic_prev needs a manufactured case, got '" + case_name + "'");
  if (pressure_gauge != "auto") {
    try {
      parse_pressure_gauge(pressure_gauge);
    } catch (const Error& e) {
      fail("pressure_gauge", e.what());
    }
  }
  if (!(c_delta >= 1.0)) fail("c_delta", "must be >= 1");
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) fail("rel_tol", "must lie in (0, 1)");
  if (!(blowup_factor > 0.0)) fail("blowup_factor", "must be positive");
  if (output_dir.empty()) fail("output_dir", "must not be empty");
  if (vtk_every < 1) fail("vtk_every", "must be >= 1");
  for (double v : h_list)
    if (!(v > 0.0)) fail("h_list", "entries must be positive");
  for (double v : dt_list)
    if (!(v > 0.0)) fail("dt_list", "entries must be positive");
  if (dt_over_h && !(*dt_over_h > 0.0)) fail("dt_over_h", "must be positive");
  if (dt_over_h && !dt_list.empty())
    fail("dt_list", "cannot be combined with dt_over_h (coupled sweep)");
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return RunConfig::from_json(j);
}

BackgroundMesh make_mesh(const RunConfig& config, const DomainMotion& motion) {
  const Box box = motion.background_box(config.h);
  if (config.nx > 0) return build_background(box, config.nx, config.ny);
  const auto n = cells_for_size(box, config.h);
  return build_background(box, n[0], n[1]);
}

SchemeParameters make_parameters(const RunConfig& config, bool analytic) {
  SchemeParameters p;
  p.degree = config.degree;
  p.bdf_order = config.bdf_order;
  p.dt = config.dt;
  p.gamma_D = config.gamma_D;
  p.gamma_g = config.gamma_g;
  p.gamma_p = config.gamma_p;
  p.ghost = parse_ghost_variant(config.ghost);
  p.bdf2_start = parse_bdf2_start(config.bdf2_start);
  p.c_delta = config.c_delta;
  p.rel_tol = config.rel_tol;
  if (config.pressure_gauge != "auto") p.gauge = parse_pressure_gauge(config.pressure_gauge);
  p.keep_history = analytic;
  return p;
}

void write_atomically(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << contents;
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, path);
}

void write_vtk_frame(std::ostream& out, const BackgroundMesh& mesh, const DofMap& dofs,
                     const TimeLevel& level, const std::vector<int>& cell_location) {
  write_vtk(out, mesh, &cell_location, "location");
  const int nb = dofs.n_dofs();
  out << "POINT_DATA " << mesh.n_vertices() << '\n';
  out << "VECTORS velocity double\n";
  out.precision(12);
  for (int v = 0; v < mesh.n_vertices(); ++v)
    out << level.coefficients[v] << ' ' << level.coefficients[nb + v] << " 0\n";
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (int v = 0; v < mesh.n_vertices(); ++v) out << level.coefficients[2 * nb + v] << '\n';
}

namespace {

std::string errors_csv(const RunConfig& config, const ErrorNorms& e) {
  std::ostringstream s;
  s << "# " << config.summary() << '\n';
  s << "quantity";
  for (int k = 0; k < kNorms; ++k) s << ',' << norm_name(k);
  s << '\n';
  s << "error";
  for (int k = 0; k < kNorms; ++k) s << ',' << fmt(e.error[k]);
  s << "\nexact";
  for (int k = 0; k < kNorms; ++k) s << ',' << fmt(e.exact[k]);
  s << "\nnormalized";
  for (int k = 0; k < kNorms; ++k) s << ',' << (e.normalizable(k) ? fmt(e.normalized(k)) : "nan");
  s << '\n';
  return s.str();
}

std::string error_series_csv(const RunConfig& config, const ErrorNorms& e) {
  std::array<double, kNorms> max{};
  for (const auto& row : e.series)
    for (int k = 0; k < kNorms; ++k) max[k] = std::max(max[k], row[k]);
  std::ostringstream s;
  s << "# " << config.summary() << '\n';
  s << "t";
  for (int k = 0; k < kNorms; ++k) s << ',' << norm_name(k);
  for (int k = 0; k < kNorms; ++k) s << ',' << norm_name(k) << "_over_max";
  s << '\n';
  for (std::size_t i = 0; i < e.series.size(); ++i) {
    s << fmt(e.times[i]);
    for (int k = 0; k < kNorms; ++k) s << ',' << fmt(e.series[i][k]);
    for (int k = 0; k < kNorms; ++k)
      s << ',' << (max[k] > 0.0 ? fmt(e.series[i][k] / max[k]) : "0");
    s << '\n';
  }
  return s.str();
}

std::string stability_csv(const RunConfig& config, const RunResult& r) {
  std::ostringstream s;
  s << "# " << config.summary() << '\n';
  s << "# growth_rate=" << fmt(r.stability.growth_rate)
    << " max_ratio=" << fmt(r.stability.max_ratio)
    << " max_detrended=" << fmt(r.stability.max_detrended)
    << " blow_up=" << (r.stability.blow_up ? 1 : 0) << '\n';
  s << "step,t,monitored,bound\n";
  for (std::size_t i = 0; i < r.stability.monitored.size(); ++i)
    s << r.diagnostics[i].n << ',' << fmt(r.diagnostics[i].t) << ','
      << fmt(r.stability.monitored[i]) << ',' << fmt(r.stability.bound[i]) << '\n';
  return s.str();
}

void write_outputs(const RunConfig& config, const RunResult& r) {
  const fs::path dir = config.output_dir;
  std::ostringstream diag;
  diag << "# " << config.summary() << '\n';
  write_diagnostics_header(diag);
  for (const auto& d : r.diagnostics) write_diagnostics_row(diag, d);
  write_atomically(dir / "diagnostics.csv", diag.str());
  if (r.errors) {
    write_atomically(dir / "errors.csv", errors_csv(config, *r.errors));
    write_atomically(dir / "error_series.csv", error_series_csv(config, *r.errors));
  }
  if (r.completed) write_atomically(dir / "stability.csv", stability_csv(config, r));
  json record = {{"completed", r.completed},
                 {"steps", r.steps},
                 {"max_residual", r.max_residual},
                 {"blow_up", r.stability.blow_up},
                 {"solver", solver_backend()},
                 {"config", config.to_json()}};
  if (!r.completed) record["error"] = {{"kind", r.error_kind}, {"message", r.error_message}};
  write_atomically(dir / (r.completed ? "summary.json" : "error.json"), record.dump(2) + "\n");
}

}  // namespace

RunResult execute(const RunConfig& config, bool write) {
  RunResult r;
  try {
    config.validate();
    const ManufacturedCase c = make_case(config.case_name, config.motion);
    const Problem problem = make_problem(c);
    const BackgroundMesh mesh = make_mesh(config, problem.motion);
    const SchemeParameters params = make_parameters(config, c.analytic);
    const TimeStepper stepper(mesh, problem, params);
    TimeState state = stepper.initialize();
    const fs::path dir = config.output_dir;
    if (write && config.dump_matrix) {
      const int s = std::min<int>(params.bdf_order, static_cast<int>(state.levels.size()));
      const std::vector<double> alpha = bdf_coefficients(s);
      const StepSystem first = stepper.assemble(
          1, params.dt, alpha, std::span<const TimeLevel>(state.levels.data(), s));
      std::ostringstream mtx;
      write_matrix_market(mtx, first.system.matrix);
      write_atomically(dir / "matrix_step1.mtx", mtx.str());
    }
    const auto frame = [&](const TimeLevel& level) {
      const ActiveSlabMesh slab =
          classify_active(mesh, stepper.dofs(), problem.motion, level.t, 0.0, level.n);
      std::vector<int> location;
      for (CellLocation l : slab.location) location.push_back(static_cast<int>(l));
      std::ostringstream vtk;
      write_vtk_frame(vtk, mesh, stepper.dofs(), level, location);
      std::ostringstream name;
      name << "frame_" << std::setw(5) << std::setfill('0') << level.n << ".vtk";
      write_atomically(dir / name.str(), vtk.str());
    };
    if (write && config.dump_vtk) frame(state.levels[0]);
    while (state.t < config.t_final - 0.5 * params.dt) {
      stepper.step(state);
      r.diagnostics = state.diagnostics;
      r.steps = state.n;
      r.max_residual = std::max(r.max_residual, state.diagnostics.back().residual);
      if (write && config.dump_vtk && state.n % config.vtk_every == 0) frame(state.levels[0]);
    }
    if (c.analytic) r.errors = error_norms(stepper, state.history, c);
    r.stability = stability_monitor(state, params.dt, params.gamma_p, config.blowup_factor);
    r.completed = true;
  } catch (const ConfigError& e) {
    r.error_kind = "config";
    r.error_message = e.what();
  } catch (const ContainmentError& e) {
    r.error_kind = "containment";
    r.error_message = e.what();
  } catch (const SolverError& e) {
    r.error_kind = "solver";
    r.error_message = e.what();
  } catch (const EmptyDomainError& e) {
    r.error_kind = "empty_domain";
    r.error_message = e.what();
  } catch (const std::exception& e) {
    r.error_kind = "runtime";
    r.error_message = e.what();
  }
  if (write) write_outputs(config, r);
  return r;
}

int study_workers() {
  const char* env = std::getenv("CUTSTOKES_WORKERS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n > 0 ? n : 1;
}

namespace {

std::string run_dir_name(double h, double dt) {
  std::ostringstream s;
  s << "run_h" << h << "_dt" << dt;
  return s.str();
}

std::string gnuplot_script(const StudyResult& study) {
  std::ostringstream s;
  s << "# errors over time, each normalised by its maximum in time\n";
  s << "set datafile separator ','\n";
  s << "set terminal pngcairo size 1200,800\n";
  s << "set xlabel 't'\nset ylabel 'error / max_t error'\nset key outside right\n";
  for (int k = 0; k < kNorms; ++k) {
    s << "set output 'errors_over_time_" << norm_name(k) << ".png'\n";
    s << "set title '" << norm_name(k) << "'\n";
    s << "plot ";
    bool first = true;
    for (std::size_t i = 0; i < study.h.size(); ++i)
      for (std::size_t j = 0; j < study.dt.size(); ++j) {
        if (study.coupled && i != j) continue;
        if (!first) s << ", \\\n     ";
        first = false;
        s << "'" << run_dir_name(study.h[i], study.dt[j]) << "/error_series.csv' using 1:"
          << 2 + kNorms + k << " with linespoints title 'h=" << study.h[i]
          << " dt=" << study.dt[j] << "'";
      }
    s << "\n";
  }
  return s.str();
}

}  // namespace

StudyResult run_study(const RunConfig& config, bool write) {
  config.validate();
  StudyResult study;
  study.h = config.h_list.empty() ? std::vector<double>{config.h} : config.h_list;
  study.coupled = config.dt_over_h.has_value();
  if (study.coupled) {
    for (double h : study.h) study.dt.push_back(*config.dt_over_h * h);
  } else {
    study.dt = config.dt_list.empty() ? std::vector<double>{config.dt} : config.dt_list;
  }
  const std::size_t nh = study.h.size(), nd = study.dt.size();
  study.runs.assign(nh, std::vector<std::optional<RunResult>>(nd));
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t i = 0; i < nh; ++i)
    for (std::size_t j = 0; j < nd; ++j)
      if (!study.coupled || i == j) jobs.emplace_back(i, j);

  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      const auto [i, j] = jobs[k];
      RunConfig run = config;
      run.h = study.h[i];
      run.nx = run.ny = 0;
      run.dt = study.dt[j];
      run.output_dir = (fs::path(config.output_dir) / run_dir_name(run.h, run.dt)).string();
      study.runs[i][j] = execute(run, write);
    }
  };
  const int workers = std::min<int>(study_workers(), static_cast<int>(jobs.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  study.all_ok = true;
  for (const auto& [i, j] : jobs) {
    const RunResult& r = *study.runs[i][j];
    if (!r.ok(config.rel_tol)) study.all_ok = false;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int k = 0; k < kNorms; ++k) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Constant(nh, nd, nan);
    for (const auto& [i, j] : jobs) {
      const RunResult& r = *study.runs[i][j];
      if (r.completed && r.errors && r.errors->normalizable(k)) e(i, j) = r.errors->normalized(k);
    }
    study.tables.push_back(make_eoc_table(norm_name(k), study.h, study.dt, e, study.coupled));
  }
  if (write) {
    const fs::path dir = config.output_dir;
    for (const auto& table : study.tables) {
      std::ostringstream s;
      write_eoc_csv(s, table, config.summary());
      write_atomically(dir / ("eoc_" + table.norm + ".csv"), s.str());
    }
    std::ostringstream runs;
    runs << "# " << config.summary() << '\n';
    runs << "h,dt,status,steps,max_residual,blow_up";
    for (int k = 0; k < kNorms; ++k) runs << ',' << norm_name(k);
    runs << ",message\n";
    for (const auto& [i, j] : jobs) {
      const RunResult& r = *study.runs[i][j];
      runs << fmt(study.h[i]) << ',' << fmt(study.dt[j]) << ','
           << (r.completed ? "ok" : r.error_kind) << ',' << r.steps << ','
           << fmt(r.max_residual) << ',' << (r.stability.blow_up ? 1 : 0);
      for (int k = 0; k < kNorms; ++k)
        runs << ','
             << (r.errors && r.errors->normalizable(k) ? fmt(r.errors->normalized(k)) : "nan");
      std::string msg = r.error_message;
      for (char& ch : msg)
        if (ch == ',' || ch == '\n') ch = ';';
      runs << ',' << msg << '\n';
    }
    write_atomically(dir / "runs.csv", runs.str());
    write_atomically(dir / "errors_over_time.gp", gnuplot_script(study));
  }
  return study;
}

}  // namespace cutstokes
