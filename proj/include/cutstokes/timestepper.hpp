#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cutstokes/assembly.hpp"
#include "cutstokes/stabilization.hpp"

namespace cutstokes {

/// (alpha_0, ..., alpha_s) with D_t u^n = sum_i alpha_i u^{n-i} / dt.
std::vector<double> bdf_coefficients(int s);

enum class Bdf2Start { bdf1_bootstrap, analytic_prev };

Bdf2Start parse_bdf2_start(const std::string& name);
const char* to_string(Bdf2Start mode);

struct SchemeParameters {
  int degree = 1;     // m
  int bdf_order = 1;  // s
  double dt = 0.1;
  double gamma_D = 500.0;
  double gamma_g = 1e-3;
  double gamma_p = 1e-3;
  GhostVariant ghost = GhostVariant::jump;
  Bdf2Start bdf2_start = Bdf2Start::bdf1_bootstrap;
  double c_delta = 1.0;
  double rel_tol = 1e-10;
  // Unset: none when a do-nothing boundary exists, zero_mean otherwise.
  std::optional<PressureGauge> gauge;
  bool keep_history = false;
};

struct Problem {
  DomainMotion motion;
  VectorField forcing;           // may be empty (f = 0)
  VectorField initial_velocity;  // u(x, t) evaluated at t = 0 (and t = -dt)
  bool analytic = false;         // initial_velocity is an exact solution for all t
};

// Coefficients of one time level on the background numbering, layout
// [u_x | u_y | p], plus the velocity dofs that carry values.
struct TimeLevel {
  int n = 0;
  double t = 0.0;
  Eigen::VectorXd coefficients;
  std::vector<char> active;
};

struct StepDiagnostics {
  int n = 0;
  double t = 0.0;
  int bdf_order = 1;
  double delta = 0.0;
  int cells_delta = 0;
  int cells_phys = 0;
  int ghost_faces = 0;
  int velocity_dofs = 0;
  int pressure_dofs = 0;
  int unknowns = 0;
  double area = 0.0;
  double velocity_l2 = 0.0;
  double triple_norm = 0.0;
  double cip_energy = 0.0;  // s_h(p, p)
  double forcing_l2 = 0.0;
  double dirichlet_energy = 0.0;  // (gamma_D / h) ||u^D||^2 on the Dirichlet boundary
  double residual = 0.0;
  int refinement_steps = 0;
};

void write_diagnostics_header(std::ostream& out);
void write_diagnostics_row(std::ostream& out, const StepDiagnostics& d);

struct TimeState {
  int n = 0;
  double t = 0.0;
  std::vector<TimeLevel> levels;  // newest first; levels[0] is u_h^n
  double initial_l2 = 0.0;        // ||u_h^0|| on Omega^0
  std::vector<StepDiagnostics> diagnostics;
  std::vector<TimeLevel> history;  // u_h^1, u_h^2, ... when keep_history
};

// Geometry and assembled operator of one step, kept for inspection.
struct StepSystem {
  ActiveSlabMesh slab;
  SlabQuadrature quad;
  AssembledSystem system;
};

class TimeStepper {
 public:
  TimeStepper(const BackgroundMesh& mesh, Problem problem, SchemeParameters params);

  const BackgroundMesh& mesh() const { return mesh_; }
  const DofMap& dofs() const { return dofs_; }
  const Problem& problem() const { return problem_; }
  const SchemeParameters& parameters() const { return params_; }
  double h() const { return mesh_.h_min; }

  /// u_h^0, and for analytic_prev with s = 2 also u_h^{-1}, as L2 projections
  /// over the enlarged domains of their time levels.
  TimeState initialize() const;

  /// Advances by one step. The first step of a BDF(2) run started with
  /// bdf1_bootstrap uses BDF(1).
  void step(TimeState& state) const;

  /// Steps until t reaches t_final (within dt/2).
  void run(TimeState& state, double t_final) const;

  /// Slab, quadrature and full system at time t. With empty alpha the time
  /// terms are omitted (stationary problem).
  StepSystem assemble(int n, double t, std::span<const double> alpha,
                      std::span<const TimeLevel> previous) const;

  /// L2 projection of u(., t) over the enlarged domain at t.
  TimeLevel project(const VectorField& u, int n, double t) const;

  PressureGauge gauge() const;

 private:
  const BackgroundMesh& mesh_;
  DofMap dofs_;
  Problem problem_;
  SchemeParameters params_;
};

/// Copy of a motion whose pieces are shifted outwards by delta.
DomainMotion enlarged_motion(const DomainMotion& motion, double delta);

struct StabilityReport {
  // Q_n = ||u_h^n||^2 + sum_{k<=n} dt (|||u_h^k|||^2 + gamma_p s_h(p_h^k, p_h^k))
  std::vector<double> monitored;
  // B_n = ||u_h^0||^2 + t_n max_k (||f(t_k)||^2 + (gamma_D / h) ||u^D(t_k)||^2)
  std::vector<double> bound;
  double max_monitored = 0.0;
  double max_ratio = 0.0;      // max_n Q_n / B_n
  double growth_rate = 0.0;    // c >= 0 of the least-squares fit Q_n / B_n ~ a e^{c t_n}
  double max_detrended = 0.0;  // max_n Q_n / (B_n e^{c t_n}); infinite if Q or B is not finite
  double factor = 10.0;
  bool blow_up = false;
};

StabilityReport stability_monitor(const TimeState& state, double dt, double gamma_p,
                                  double factor = 10.0);

}  // namespace cutstokes
