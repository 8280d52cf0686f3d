#include "cutstokes/verification.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

namespace cutstokes {

namespace {

struct ChannelFields {
  template <class T>
  static std::array<T, 2> velocity(T x, T y, T t) {
    using std::sin;
    (void)x;
    const T g = 1.0 - sin(t) / 10.0;
    return {sin(t) * (g * g - y * y), T(0.0 * y)};
  }
  template <class T>
  static T pressure(T x, T y, T t) {
    using std::sin;
    (void)y;
    return sin(t) * (8.0 - 2.0 * x);
  }
};

struct ZeroFields {
  template <class T>
  static std::array<T, 2> velocity(T x, T, T) {
    return {T(0.0 * x), T(0.0 * x)};
  }
  template <class T>
  static T pressure(T x, T, T) {
    return T(0.0 * x);
  }
};

constexpr double kPi = 3.14159265358979323846;

}  // namespace

ManufacturedCase channel2d_case() {
  return make_manufactured<ChannelFields>("channel2d", "channel2d");
}

ManufacturedCase zero_case(const std::string& motion) {
  return make_manufactured<ZeroFields>("zero", motion);
}

ManufacturedCase decay_case(const std::string& motion) {
  ManufacturedCase c = make_manufactured<ZeroFields>("decay", motion);
  c.analytic = false;
  c.velocity = [](const Point& x, double) {
    return Vec2(std::cos(0.5 * kPi * x.y()), std::sin(0.25 * kPi * x.x()));
  };
  return c;
}

ManufacturedCase none_case(const std::string& motion) {
  ManufacturedCase c = make_manufactured<ZeroFields>("none", motion);
  c.analytic = false;
  return c;
}

ManufacturedCase make_case(const std::string& name, const std::string& motion) {
  if (name == "channel2d") {
    if (motion != "channel2d") throw Error("case channel2d requires motion channel2d");
    return channel2d_case();
  }
  if (name == "zero") return zero_case(motion);
  if (name == "decay") return decay_case(motion);
  if (name == "none") return none_case(motion);
  throw Error("unknown case '" + name + "' (expected channel2d, zero, decay or none)");
}

Problem make_problem(const ManufacturedCase& c) {
  Problem p;
  p.motion = make_motion(c.motion, c.analytic ? c.velocity : VectorField{});
  if (c.analytic) p.forcing = c.forcing;
  p.initial_velocity = c.velocity;
  p.analytic = c.analytic;
  return p;
}

const char* norm_name(int norm) {
  static const char* names[kNorms] = {"velocity_L2L2", "velocity_L2H1", "pressure_L2L2",
                                      "pressure_L2H1"};
  return names[norm];
}

double ErrorNorms::normalized(int norm) const {
  if (!(exact[norm] > 0.0))
    throw Error(std::string("error_norms: exact solution has zero ") + norm_name(norm) +
                " norm, cannot normalize");
  return error[norm] / exact[norm];
}

ErrorNorms error_norms(const TimeStepper& stepper, std::span<const TimeLevel> history,
                       const ManufacturedCase& c) {
  const BackgroundMesh& mesh = stepper.mesh();
  const DofMap& dofs = stepper.dofs();
  const DomainMotion& motion = stepper.problem().motion;
  const int m = dofs.degree();
  const double dt = stepper.parameters().dt;
  const LagrangeBasis basis(m);
  const int nb = dofs.n_dofs();
  ErrorNorms out;
  std::array<double, kNorms> err{}, ex{};
  for (const TimeLevel& level : history) {
    const ActiveSlabMesh slab = classify_active(mesh, dofs, motion, level.t, 0.0, level.n);
    const SlabQuadrature quad = build_quadrature(mesh, slab, motion, 2 * m + 2, 2 * m + 1);
    std::array<double, kNorms> e{}, x{};
    for (const auto& cq : quad.cells) {
      const CellMap map(mesh.cell_points(cq.cell));
      const auto cd = dofs.cell_dofs(cq.cell);
      Eigen::Matrix<double, Eigen::Dynamic, 3, 0, kMaxLocalDofs, 3> local(basis.size(), 3);
      for (int i = 0; i < basis.size(); ++i)
        for (int k = 0; k < 3; ++k) local(i, k) = level.coefficients[k * nb + cd[i]];
      for (const auto& qp : cq.volume) {
        const LocalVector phi = basis.values(map, qp.x);
        const LocalGradients grad = basis.gradients(map, qp.x);
        const Eigen::Vector3d vh = local.transpose() * phi;
        const Eigen::Matrix<double, 3, 2> gh = local.transpose() * grad;
        const Vec2 u = c.velocity(qp.x, level.t);
        const Eigen::Matrix2d gu = c.velocity_gradient(qp.x, level.t);
        const double p = c.pressure(qp.x, level.t);
        const Vec2 gp = c.pressure_gradient(qp.x, level.t);
        const double w = qp.weight;
        e[velocity_l2] += w * (u - vh.head<2>()).squaredNorm();
        e[velocity_h1] += w * (gu - gh.topRows<2>()).squaredNorm();
        e[pressure_l2] += w * (p - vh[2]) * (p - vh[2]);
        e[pressure_h1] += w * (gp - gh.row(2).transpose()).squaredNorm();
        x[velocity_l2] += w * u.squaredNorm();
        x[velocity_h1] += w * gu.squaredNorm();
        x[pressure_l2] += w * p * p;
        x[pressure_h1] += w * gp.squaredNorm();
      }
    }
    std::array<double, kNorms> step{};
    for (int k = 0; k < kNorms; ++k) {
      err[k] += dt * e[k];
      ex[k] += dt * x[k];
      step[k] = std::sqrt(e[k]);
    }
    out.times.push_back(level.t);
    out.series.push_back(step);
  }
  for (int k = 0; k < kNorms; ++k) {
    out.error[k] = std::sqrt(err[k]);
    out.exact[k] = std::sqrt(ex[k]);
  }
  return out;
}

std::vector<double> pairwise_eoc(std::span<const double> tau, std::span<const double> g) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < tau.size() && i + 1 < g.size(); ++i)
    out.push_back(std::log(g[i] / g[i + 1]) / std::log(tau[i] / tau[i + 1]));
  return out;
}

PowerFit fit_power_law(std::span<const double> tau, std::span<const double> g) {
  PowerFit fit;
  const int n = static_cast<int>(std::min(tau.size(), g.size()));
  if (n < 3) {
    fit.note = "fewer than three points";
    return fit;
  }
  double tau_max = 0.0, g_max = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(tau[i]) || !std::isfinite(g[i]) || !(tau[i] > 0.0) || g[i] < 0.0) {
      fit.note = "non-finite or nonpositive data";
      return fit;
    }
    tau_max = std::max(tau_max, tau[i]);
    g_max = std::max(g_max, g[i]);
  }
  if (!(g_max > 0.0)) {
    fit.note = "all values zero";
    return fit;
  }
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = tau[i] / tau_max;
    y[i] = g[i] / g_max;
  }

  // For fixed p the model is linear in (a, c).
  const auto linear_part = [&](double p) {
    Eigen::MatrixXd a(n, 2);
    for (int i = 0; i < n; ++i) a.row(i) << 1.0, std::pow(x[i], p);
    return Eigen::Vector2d(a.colPivHouseholderQr().solve(y));
  };
  double p0 = std::numeric_limits<double>::quiet_NaN();
  {
    std::vector<double> pw = pairwise_eoc(std::span<const double>(x.data(), n),
                                          std::span<const double>(y.data(), n));
    std::erase_if(pw, [](double v) { return !std::isfinite(v); });
    if (!pw.empty()) {
      std::sort(pw.begin(), pw.end());
      p0 = pw[pw.size() / 2];
    }
  }
  if (!(p0 > 0.05) || p0 > 20.0) p0 = 1.0;
  Eigen::Vector3d theta;
  theta << linear_part(p0), p0;

  const auto residual = [&](const Eigen::Vector3d& th) {
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) r[i] = th[0] + th[1] * std::pow(x[i], th[2]) - y[i];
    return r;
  };
  const auto jacobian = [&](const Eigen::Vector3d& th) {
    Eigen::MatrixXd j(n, 3);
    for (int i = 0; i < n; ++i) {
      const double xp = std::pow(x[i], th[2]);
      j.row(i) << 1.0, xp, th[1] * xp * std::log(x[i]);
    }
    return j;
  };

  double lambda = 1e-3;
  Eigen::VectorXd r = residual(theta);
  double cost = r.squaredNorm();
  for (fit.iterations = 0; fit.iterations < 500; ++fit.iterations) {
    const Eigen::MatrixXd j = jacobian(theta);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd jtr = j.transpose() * r;
    if (jtr.norm() <= 1e-15 * (1.0 + cost)) {
      fit.converged = true;
      break;
    }
    bool accepted = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-30);
      const Eigen::Vector3d step = lhs.colPivHouseholderQr().solve(-jtr);
      Eigen::Vector3d trial = theta + step;
      if (!(trial[2] > 0.0) || trial[2] > 20.0) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd rt = residual(trial);
      const double ct = rt.squaredNorm();
      if (std::isfinite(ct) && ct <= cost) {
        const double change = step.norm() / (1.0 + theta.norm());
        theta = trial;
        r = rt;
        const double old = cost;
        cost = ct;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (change < 1e-13 || old - ct <= 1e-30) fit.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // no descent direction left: a minimum up to round-off
      fit.converged = cost <= 1e-20 || lambda > 1e20;
      break;
    }
    if (fit.converged) break;
  }

  fit.order = theta[2];
  fit.offset = theta[0] * g_max;
  fit.scale = theta[1] * g_max * std::pow(tau_max, -theta[2]);
  if (n > 3) {
    const Eigen::MatrixXd j = jacobian(theta);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const double sigma2 = cost / (n - 3);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    if (lu.isInvertible()) fit.order_stderr = std::sqrt(std::max(0.0, sigma2 * lu.inverse()(2, 2)));
  }
  if (!fit.converged) {
    fit.note = "fit did not converge";
  } else if (!(theta[1] > 0.0)) {
    fit.note = "no decay";
  } else if (std::isfinite(fit.order_stderr) && fit.order_stderr > 0.2 * std::abs(fit.order)) {
    fit.note = "standard error above 20%";
  } else if (n > 3 && !std::isfinite(fit.order_stderr)) {
    fit.note = "singular normal equations";
  } else {
    fit.indeterminate = false;
  }
  return fit;
}

EocTable make_eoc_table(std::string norm, std::vector<double> h, std::vector<double> dt,
                        Eigen::MatrixXd errors, bool coupled) {
  EocTable t;
  t.norm = std::move(norm);
  t.coupled = coupled;
  t.h = std::move(h);
  t.dt = std::move(dt);
  t.errors = std::move(errors);
  const auto finite_pairs = [](const std::vector<double>& tau, const std::vector<double>& g,
                               std::vector<double>& tt, std::vector<double>& gg) {
    tt.clear();
    gg.clear();
    for (std::size_t i = 0; i < tau.size(); ++i)
      if (std::isfinite(g[i])) {
        tt.push_back(tau[i]);
        gg.push_back(g[i]);
      }
  };
  std::vector<double> tt, gg;
  if (coupled) {
    std::vector<double> diag(t.h.size());
    for (std::size_t i = 0; i < t.h.size(); ++i) diag[i] = t.errors(i, i);
    finite_pairs(t.h, diag, tt, gg);
    t.diagonal = fit_power_law(tt, gg);
    t.pairwise_h = pairwise_eoc(t.h, diag);
    return t;
  }
  for (std::size_t i = 0; i < t.h.size(); ++i) {
    std::vector<double> row(t.dt.size());
    for (std::size_t j = 0; j < t.dt.size(); ++j) row[j] = t.errors(i, j);
    finite_pairs(t.dt, row, tt, gg);
    t.rows.push_back(fit_power_law(tt, gg));
    t.pairwise_rows.push_back(pairwise_eoc(t.dt, row));
  }
  for (std::size_t j = 0; j < t.dt.size(); ++j) {
    std::vector<double> col(t.h.size());
    for (std::size_t i = 0; i < t.h.size(); ++i) col[i] = t.errors(i, j);
    finite_pairs(t.h, col, tt, gg);
    t.cols.push_back(fit_power_law(tt, gg));
    t.pairwise_cols.push_back(pairwise_eoc(t.h, col));
  }
  return t;
}

namespace {

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

std::string fit_cells(const PowerFit& f) {
  if (f.note == "fewer than three points") return "n/a,n/a,n/a,n/a";
  const std::string status = f.indeterminate ? "indeterminate" : "ok";
  return number(f.offset) + "," + number(f.order) + "," + number(f.order_stderr) + "," + status;
}

}  // namespace

void write_eoc_csv(std::ostream& out, const EocTable& t, const std::string& comment) {
  out << "# " << comment << '\n';
  out << "# norm: " << t.norm << '\n';
  if (t.coupled) {
    out << "h,dt,error,pairwise_eoc_h\n";
    for (std::size_t i = 0; i < t.h.size(); ++i) {
      out << number(t.h[i]) << ',' << number(t.dt[i]) << ',' << number(t.errors(i, i)) << ',';
      out << (i == 0 ? "" : number(t.pairwise_h[i - 1])) << '\n';
    }
    out << "fit,g_inf,eoc_h,eoc_h_stderr,status\n";
    out << "h," << fit_cells(t.diagonal) << '\n';
    return;
  }
  out << "h";
  for (double d : t.dt) out << ",dt=" << number(d);
  out << ",g_h,eoc_dt,eoc_dt_stderr,eoc_dt_status\n";
  for (std::size_t i = 0; i < t.h.size(); ++i) {
    out << number(t.h[i]);
    for (std::size_t j = 0; j < t.dt.size(); ++j) out << ',' << number(t.errors(i, j));
    out << ',' << fit_cells(t.rows[i]) << '\n';
  }
  const auto fit_row = [&](const char* label, auto field) {
    out << label;
    for (const auto& f : t.cols)
      out << ',' << (f.note == "fewer than three points" ? "n/a" : field(f));
    out << '\n';
  };
  fit_row("g_dt", [](const PowerFit& f) { return number(f.offset); });
  fit_row("eoc_h", [](const PowerFit& f) { return number(f.order); });
  fit_row("eoc_h_stderr", [](const PowerFit& f) { return number(f.order_stderr); });
  fit_row("eoc_h_status",
          [](const PowerFit& f) { return std::string(f.indeterminate ? "indeterminate" : "ok"); });
  for (std::size_t i = 0; i < t.h.size(); ++i) {
    out << "pairwise_eoc_dt@h=" << number(t.h[i]);
    for (double v : t.pairwise_rows[i]) out << ',' << number(v);
    out << '\n';
  }
  for (std::size_t j = 0; j < t.dt.size(); ++j) {
    out << "pairwise_eoc_h@dt=" << number(t.dt[j]);
    for (double v : t.pairwise_cols[j]) out << ',' << number(v);
    out << '\n';
  }
}

}  // namespace cutstokes
