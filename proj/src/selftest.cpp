#include <cmath>
#include <ostream>
#include <random>

#include "cutstokes/driver.hpp"
#include "cutstokes/linsolve.hpp"

namespace cutstokes {

namespace {

struct Reporter {
  std::ostream& out;
  bool all = true;

  void check(const std::string& name, bool ok, const std::string& detail) {
    out << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
    all = all && ok;
  }
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

double max_abs(const SparseMatrix& m) {
  double v = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) v = std::max(v, std::abs(it.value()));
  return v;
}

// |A - A^T| on the velocity block and |A_up + A_pu^T| on the coupling.
std::pair<double, double> block_defects(const SparseMatrix& a, const SystemLayout& l) {
  const int nu = 2 * l.n_velocity(), np = l.n_pressure();
  const SparseMatrix auu = block(a, 0, nu, 0, nu);
  const SparseMatrix aup = block(a, 0, nu, nu, np);
  const SparseMatrix apu = block(a, nu, np, 0, nu);
  const SparseMatrix sym = auu - SparseMatrix(auu.transpose());
  const SparseMatrix skew = aup + SparseMatrix(apu.transpose());
  return {max_abs(sym), max_abs(skew)};
}

void slab_checks(Reporter& r, int degree) {
  const std::string tag = "P" + std::to_string(degree);
  const ManufacturedCase c = channel2d_case();
  const Problem problem = make_problem(c);
  const double h = 0.25;
  const BackgroundMesh mesh = build_background(problem.motion.background_box(h), 18, 9);
  SchemeParameters params;
  params.degree = degree;
  params.dt = 0.2;
  const TimeStepper stepper(mesh, problem, params);
  const StepSystem ss = stepper.assemble(1, 0.3, {}, {});
  const AssembledSystem& sys = ss.system;
  const SystemLayout& l = sys.layout;

  const auto [sym, skew] = block_defects(sys.stokes + sys.nitsche_consistency, l);
  const double scale = max_abs(sys.stokes);
  r.check(tag + " block symmetry", sym <= 1e-12 * scale && skew <= 1e-12 * scale,
          "velocity asym " + num(sym) + ", coupling skew defect " + num(skew));

  // global polynomials of degree <= m: every stabilization form vanishes
  Eigen::VectorXd bg = Eigen::VectorXd::Zero(3 * stepper.dofs().n_dofs());
  const int nb = stepper.dofs().n_dofs();
  for (int d = 0; d < nb; ++d) {
    const Point& x = stepper.dofs().support_point(d);
    const double q = degree == 2 ? x.x() * x.y() - 0.5 * x.y() * x.y() : 0.0;
    bg[d] = 1.0 + 2.0 * x.x() - x.y() + q;
    bg[nb + d] = -0.5 + x.y() + 0.3 * x.x() - q;
    bg[2 * nb + d] = 0.7 - x.x() + 1.5 * x.y() + q;
  }
  const SlabView view{mesh, stepper.dofs(), ss.slab, l};
  double worst = std::abs(cip_energy(view, bg, h));
  for (GhostVariant v : {GhostVariant::jump, GhostVariant::projection, GhostVariant::direct})
    worst = std::max(worst, std::abs(ghost_energy(view, v, bg, h)));
  r.check(tag + " stabilization consistency", worst <= 1e-12,
          "max |S(u,u)| on polynomials " + num(worst));

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const SparseMatrix a = sys.stokes + sys.nitsche_consistency + sys.nitsche_penalty +
                         sys.gamma_g * sys.ghost + sys.gamma_p * sys.cip;
  double slack = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd y(l.size());
    for (int i = 0; i < y.size(); ++i) y[i] = uni(rng);
    const double lhs = y.dot(a * y);
    const double tn = triple_norm(sys, y);
    const double rhs = 0.5 * (tn * tn + sys.gamma_p * cip_energy(sys, y));
    slack = std::min(slack, lhs - rhs);
  }
  r.check(tag + " coercivity", slack >= -1e-10, "min slack over 100 states " + num(slack));
}

}  // namespace

bool run_selftest(std::ostream& out) {
  Reporter r{out};
  try {
    const Triangle ref{Point(0, 0), Point(1, 0), Point(0, 1)};
    const ClipResult clip = clip_simplex(ref, Eigen::Vector3d(-0.5, 0.5, -0.5));
    const double len = clip.interface ? clip.interface->length() : -1.0;
    r.check("clip reference triangle",
            std::abs(clip.area() - 0.375) <= 1e-12 && std::abs(len - 0.5) <= 1e-12,
            "area " + num(clip.area()) + ", interface " + num(len));

    const auto a = bdf_coefficients(2);
    const double dt = 0.1, tn = 0.7;
    const double d2 =
        (a[0] * tn * tn + a[1] * (tn - dt) * (tn - dt) + a[2] * (tn - 2 * dt) * (tn - 2 * dt)) /
        dt;
    r.check("bdf2 on t^2", std::abs(d2 - 2 * tn) <= 1e-12, "D t^2 = " + num(d2));

    std::vector<double> tau{0.4, 0.2, 0.1, 0.05}, g;
    for (double t : tau) g.push_back(1e-3 + 0.5 * t * t);
    const PowerFit fit = fit_power_law(tau, g);
    r.check("eoc fit round trip", !fit.indeterminate && std::abs(fit.order - 2.0) <= 1e-6,
            "eoc " + num(fit.order) + ", g_inf " + num(fit.offset));

    SparseMatrix m(2, 2);
    m.insert(0, 0) = 2;
    m.insert(0, 1) = 1;
    m.insert(1, 0) = 1;
    m.insert(1, 1) = 3;
    const SolveResult s = solve(m, Eigen::Vector2d(3, 4));
    r.check("solver 2x2", (s.x - Eigen::Vector2d(1, 1)).norm() <= 1e-12,
            "residual " + num(s.residual));

    slab_checks(r, 1);
    slab_checks(r, 2);

    RunConfig cfg;
    cfg.motion = "stationary_box2d";
    cfg.case_name = "decay";
    cfg.h = 0.1;
    cfg.dt = 0.05;
    cfg.t_final = 0.25;
    const RunResult run = execute(cfg, false);
    bool decreasing = run.completed;
    for (std::size_t i = 1; i < run.diagnostics.size(); ++i)
      decreasing = decreasing &&
                   run.diagnostics[i].velocity_l2 < run.diagnostics[i - 1].velocity_l2;
    r.check("energy decay on stationary box", decreasing,
            run.completed ? std::to_string(run.steps) + " steps" : run.error_message);
    r.check("solver residual contract", run.max_residual <= 1e-10,
            "max residual " + num(run.max_residual));
  } catch (const std::exception& e) {
    r.check("selftest", false, e.what());
  }
  return r.all;
}

}  // namespace cutstokes
