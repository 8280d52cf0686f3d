#include "cutstokes/timestepper.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "cutstokes/linsolve.hpp"

namespace cutstokes {

std::vector<double> bdf_coefficients(int s) {
  if (s == 1) return {1.0, -1.0};
  if (s == 2) return {1.5, -2.0, 0.5};
  throw Error("bdf_coefficients: order must be 1 or 2, got " + std::to_string(s));
}

Bdf2Start parse_bdf2_start(const std::string& name) {
  if (name == "bdf1_bootstrap") return Bdf2Start::bdf1_bootstrap;
  if (name == "analytic_prev") return Bdf2Start::analytic_prev;
  throw Error("unknown BDF(2) start '" + name + "' (expected bdf1_bootstrap or analytic_prev)");
}

const char* to_string(Bdf2Start mode) {
  return mode == Bdf2Start::bdf1_bootstrap ? "bdf1_bootstrap" : "analytic_prev";
}

void write_diagnostics_header(std::ostream& out) {
  out << "step,t,bdf_order,delta,cells_delta,cells_phys,ghost_faces,velocity_dofs,pressure_dofs,"
         "unknowns,area,velocity_l2,triple_norm,cip_energy,forcing_l2,dirichlet_energy,residual,"
         "refinement_steps\n";
}

void write_diagnostics_row(std::ostream& out, const StepDiagnostics& d) {
  const auto old = out.precision(17);
  out << d.n << ',' << d.t << ',' << d.bdf_order << ',' << d.delta << ',' << d.cells_delta << ','
      << d.cells_phys << ',' << d.ghost_faces << ',' << d.velocity_dofs << ',' << d.pressure_dofs
      << ',' << d.unknowns << ',' << d.area << ',' << d.velocity_l2 << ',' << d.triple_norm << ','
      << d.cip_energy << ',' << d.forcing_l2 << ',' << d.dirichlet_energy << ',' << d.residual << ',' << d.refinement_steps
      << '\n';
  out.precision(old);
}

DomainMotion enlarged_motion(const DomainMotion& motion, double delta) {
  DomainMotion out = motion;
  for (auto& piece : out.pieces) {
    piece.levelset = [ls = piece.levelset, delta](const Point& x, double t) {
      return ls(x, t) - delta;
    };
  }
  return out;
}

namespace {

double velocity_norm(const BackgroundMesh& mesh, const DofMap& dofs, const SlabQuadrature& quad,
                     const Eigen::VectorXd& coefficients) {
  const LagrangeBasis basis(dofs.degree());
  const int nb = dofs.n_dofs();
  double sum = 0.0;
  for (const auto& cq : quad.cells) {
    const CellMap map(mesh.cell_points(cq.cell));
    const auto cd = dofs.cell_dofs(cq.cell);
    for (const auto& qp : cq.volume) {
      const LocalVector phi = basis.values(map, qp.x);
      Vec2 u = Vec2::Zero();
      for (int i = 0; i < basis.size(); ++i)
        for (int c = 0; c < 2; ++c) u[c] += coefficients[c * nb + cd[i]] * phi[i];
      sum += qp.weight * u.squaredNorm();
    }
  }
  return std::sqrt(sum);
}

double field_norm(const SlabQuadrature& quad, const VectorField& f, double t) {
  if (!f) return 0.0;
  double sum = 0.0;
  for (const auto& cq : quad.cells)
    for (const auto& qp : cq.volume) sum += qp.weight * f(qp.x, t).squaredNorm();
  return std::sqrt(sum);
}

double dirichlet_data_norm(const SlabQuadrature& quad, const VectorField& g, double t) {
  if (!g) return 0.0;
  double sum = 0.0;
  for (const auto& cq : quad.cells)
    for (const auto& sp : cq.surface)
      if (sp.tag == BoundaryTag::dirichlet) sum += sp.weight * g(sp.x, t).squaredNorm();
  return std::sqrt(sum);
}

}  // namespace

TimeStepper::TimeStepper(const BackgroundMesh& mesh, Problem problem, SchemeParameters params)
    : mesh_(mesh), dofs_(mesh, params.degree), problem_(std::move(problem)), params_(params) {
  if (params_.bdf_order != 1 && params_.bdf_order != 2)
    throw Error("TimeStepper: bdf_order must be 1 or 2");
  if (!(params_.dt > 0.0)) throw Error("TimeStepper: dt must be positive");
  if (!(params_.gamma_D > 0.0)) throw Error("TimeStepper: gamma_D must be positive");
  if (params_.gamma_g < 0.0 || params_.gamma_p < 0.0)
    throw Error("TimeStepper: stabilization parameters must be nonnegative");
}

PressureGauge TimeStepper::gauge() const {
  if (params_.gauge) return *params_.gauge;
  return problem_.motion.has_do_nothing() ? PressureGauge::none : PressureGauge::zero_mean;
}

StepSystem TimeStepper::assemble(int n, double t, std::span<const double> alpha,
                                 std::span<const TimeLevel> previous) const {
  const double delta =
      strip_width(problem_.motion, params_.bdf_order, params_.dt, params_.c_delta).delta;
  const int m = params_.degree;
  const double h = mesh_.h_min;
  StepSystem out{classify_active(mesh_, dofs_, problem_.motion, t, delta, n), {}, {}};
  out.quad = build_quadrature(mesh_, out.slab, problem_.motion, 2 * m, 2 * m + 1);
  AssembledSystem& sys = out.system;
  sys.layout = make_layout(dofs_, out.slab);
  const SlabView view{mesh_, dofs_, out.slab, sys.layout};

  sys.stokes = assemble_stokes(view, out.quad);
  NitscheTerms nitsche =
      assemble_nitsche(view, out.quad, problem_.motion, params_.gamma_D, h, t);
  sys.nitsche_consistency = std::move(nitsche.consistency);
  sys.nitsche_penalty = std::move(nitsche.penalty);
  sys.ghost = assemble_ghost_penalty(view, params_.ghost, 1.0, h);
  sys.cip = assemble_cip(view, 1.0, h);
  sys.mass = assemble_mass(view, out.quad);
  sys.gamma_g = params_.gamma_g;
  sys.gamma_p = params_.gamma_p;
  sys.matrix = sys.stokes + sys.nitsche_consistency + sys.nitsche_penalty +
               params_.gamma_g * sys.ghost + params_.gamma_p * sys.cip;
  sys.rhs = assemble_forcing(view, out.quad, problem_.forcing, t) + nitsche.rhs;
  if (!alpha.empty()) {
    std::vector<PreviousLevel> prev;
    for (const auto& level : previous) prev.push_back({&level.coefficients, &level.active});
    TimeTerms tt = assemble_time_terms(view, out.quad, alpha, params_.dt, prev);
    sys.time_matrix = std::move(tt.matrix);
    sys.matrix += sys.time_matrix;
    sys.rhs += tt.rhs;
  } else {
    sys.time_matrix = SparseMatrix(sys.layout.size(), sys.layout.size());
  }
  apply_pressure_gauge(sys, view, out.quad, problem_.motion, gauge());
  return out;
}

TimeLevel TimeStepper::project(const VectorField& u, int n, double t) const {
  const double delta =
      strip_width(problem_.motion, params_.bdf_order, params_.dt, params_.c_delta).delta;
  const DomainMotion enlarged = enlarged_motion(problem_.motion, delta);
  const ActiveSlabMesh slab = classify_active(mesh_, dofs_, enlarged, t, 0.0, n);
  const int m = params_.degree;
  const SlabQuadrature quad = build_quadrature(mesh_, slab, enlarged, 2 * m + 2, 2 * m + 1);
  const SystemLayout layout = make_layout(dofs_, slab);
  Projection p = l2_project({mesh_, dofs_, slab, layout}, quad, u, t, params_.rel_tol);
  return TimeLevel{n, t, std::move(p.coefficients), std::move(p.active)};
}

TimeState TimeStepper::initialize() const {
  if (!problem_.initial_velocity) throw Error("initialize: no initial velocity configured");
  TimeState state;
  state.levels.push_back(project(problem_.initial_velocity, 0, 0.0));
  if (params_.bdf_order == 2 && params_.bdf2_start == Bdf2Start::analytic_prev) {
    if (!problem_.analytic)
      throw Error(
          "initialize: bdf2_start analytic_prev needs a manufactured solution; use "
          "bdf1_bootstrap");
    state.levels.push_back(project(problem_.initial_velocity, -1, -params_.dt));
  }
  const ActiveSlabMesh slab0 = classify_active(mesh_, dofs_, problem_.motion, 0.0, 0.0, 0);
  const SlabQuadrature quad0 =
      build_quadrature(mesh_, slab0, problem_.motion, 2 * params_.degree, 2 * params_.degree + 1);
  state.initial_l2 = velocity_norm(mesh_, dofs_, quad0, state.levels[0].coefficients);
  return state;
}

void TimeStepper::step(TimeState& state) const {
  const int n = state.n + 1;
  const double t = n * params_.dt;
  const int s = std::min<int>(params_.bdf_order, static_cast<int>(state.levels.size()));
  const std::vector<double> alpha = bdf_coefficients(s);
  StepSystem ss = assemble(n, t, alpha, std::span<const TimeLevel>(state.levels.data(), s));
  const AssembledSystem& sys = ss.system;
  const SolveResult res = solve(sys.matrix, sys.rhs, params_.rel_tol);

  TimeLevel level{n, t, sys.layout.scatter(res.x), std::vector<char>(dofs_.n_dofs(), 0)};
  for (int d : sys.layout.velocity_dofs) level.active[d] = 1;

  StepDiagnostics d;
  d.n = n;
  d.t = t;
  d.bdf_order = s;
  d.delta = ss.slab.delta;
  d.cells_delta = static_cast<int>(ss.slab.cells_delta.size());
  d.cells_phys = static_cast<int>(ss.slab.cells_phys.size());
  d.ghost_faces = static_cast<int>(ss.slab.faces_ghost.size());
  d.velocity_dofs = sys.layout.n_velocity();
  d.pressure_dofs = sys.layout.n_pressure();
  d.unknowns = sys.layout.size();
  d.area = domain_area(ss.quad);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(sys.mass.rows());
  u.head(2 * sys.layout.n_velocity()) = res.x.head(2 * sys.layout.n_velocity());
  d.velocity_l2 = std::sqrt(std::max(0.0, u.dot(sys.mass * u)));
  d.triple_norm = triple_norm(sys, res.x);
  d.cip_energy = cip_energy(sys, res.x);
  d.forcing_l2 = field_norm(ss.quad, problem_.forcing, t);
  const double g = dirichlet_data_norm(ss.quad, problem_.motion.dirichlet_data, t);
  d.dirichlet_energy = params_.gamma_D / mesh_.h_min * g * g;
  d.residual = res.residual;
  d.refinement_steps = res.refinement_steps;
  state.diagnostics.push_back(d);

  if (params_.keep_history) state.history.push_back(level);
  state.levels.insert(state.levels.begin(), std::move(level));
  if (static_cast<int>(state.levels.size()) > params_.bdf_order)
    state.levels.resize(params_.bdf_order);
  state.n = n;
  state.t = t;
}

void TimeStepper::run(TimeState& state, double t_final) const {
  while (state.t < t_final - 0.5 * params_.dt) step(state);
}

StabilityReport stability_monitor(const TimeState& state, double dt, double gamma_p,
                                  double factor) {
  StabilityReport r;
  r.factor = factor;
  const double u0 = state.initial_l2 * state.initial_l2;
  double accumulated = 0.0;
  double data_max = 0.0;
  bool finite = std::isfinite(u0);
  std::vector<double> ratio;
  for (const auto& d : state.diagnostics) {
    accumulated += dt * (d.triple_norm * d.triple_norm + gamma_p * d.cip_energy);
    data_max = std::max(data_max, d.forcing_l2 * d.forcing_l2 + d.dirichlet_energy);
    const double q = d.velocity_l2 * d.velocity_l2 + accumulated;
    const double b = u0 + d.t * data_max;
    finite = finite && std::isfinite(q) && std::isfinite(b);
    r.monitored.push_back(q);
    r.bound.push_back(b);
    r.max_monitored = std::max(r.max_monitored, q);
    const double rho = b > 0.0 ? q / b : (q > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    ratio.push_back(rho);
    r.max_ratio = std::max(r.max_ratio, rho);
  }
  // least-squares fit of log(Q/B) = a + c t over the finite, positive ratios
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < ratio.size(); ++i) {
    if (!(ratio[i] > 0.0) || !std::isfinite(ratio[i])) continue;
    const double t = state.diagnostics[i].t, y = std::log(ratio[i]);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++count;
  }
  if (count >= 2) {
    const double denom = count * stt - st * st;
    if (denom > 0.0) r.growth_rate = std::max(0.0, (count * sty - st * sy) / denom);
  }
  for (std::size_t i = 0; i < ratio.size(); ++i)
    r.max_detrended =
        std::max(r.max_detrended, ratio[i] * std::exp(-r.growth_rate * state.diagnostics[i].t));
  if (!finite) r.max_detrended = std::numeric_limits<double>::infinity();
  r.blow_up = !(r.max_detrended <= factor);
  return r;
}

}  // namespace cutstokes
