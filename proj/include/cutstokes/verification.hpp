#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/AutoDiff>

#include "cutstokes/timestepper.hpp"

namespace cutstokes {

// Value, gradient in (x, y, t) and Hessian in (x, y, t) of a scalar field.
struct Jet {
  double value = 0.0;
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
  Eigen::Matrix3d hessian = Eigen::Matrix3d::Zero();
};

namespace detail {

using Inner = Eigen::AutoDiffScalar<Eigen::Vector3d>;
using Outer = Eigen::AutoDiffScalar<Eigen::Matrix<Inner, 3, 1>>;

inline std::array<Outer, 3> seed(const Point& x, double t) {
  const double v[3] = {x.x(), x.y(), t};
  std::array<Outer, 3> s;
  for (int i = 0; i < 3; ++i) {
    s[i].value() = Inner(v[i], 3, i);
    s[i].derivatives() = Eigen::Matrix<Inner, 3, 1>::Zero();
    s[i].derivatives()(i) = Inner(1.0, Eigen::Vector3d::Zero());
  }
  return s;
}

inline Jet jet(const Outer& r) {
  Jet j;
  j.value = r.value().value();
  j.gradient = r.value().derivatives();
  for (int a = 0; a < 3; ++a) j.hessian.row(a) = r.derivatives()(a).derivatives().transpose();
  return j;
}

}  // namespace detail

// Analytic (u, p) together with everything derived from them. `forcing` is
// produced by automatic differentiation of the fields, never typed in.
struct ManufacturedCase {
  std::string name;
  std::string motion;
  bool analytic = true;  // false: only the initial velocity is meaningful
  VectorField velocity;
  ScalarField pressure;
  std::function<Eigen::Matrix2d(const Point&, double)> velocity_gradient;  // (i, j) = d_j u_i
  std::function<Vec2(const Point&, double)> pressure_gradient;
  ScalarField divergence;
  VectorField forcing;  // d_t u - Lap u + grad p
};

/// Builds a case from a type providing
///   template <class T> static std::array<T, 2> velocity(T x, T y, T t);
///   template <class T> static T pressure(T x, T y, T t);
template <class Fields>
ManufacturedCase make_manufactured(std::string name, std::string motion) {
  using detail::Outer;
  const auto velocity_jets = [](const Point& x, double t) {
    const auto s = detail::seed(x, t);
    const auto u = Fields::template velocity<Outer>(s[0], s[1], s[2]);
    return std::array<Jet, 2>{detail::jet(u[0]), detail::jet(u[1])};
  };
  const auto pressure_jet = [](const Point& x, double t) {
    const auto s = detail::seed(x, t);
    return detail::jet(Fields::template pressure<Outer>(s[0], s[1], s[2]));
  };
  ManufacturedCase c;
  c.name = std::move(name);
  c.motion = std::move(motion);
  c.velocity = [](const Point& x, double t) {
    const auto u = Fields::template velocity<double>(x.x(), x.y(), t);
    return Vec2(u[0], u[1]);
  };
  c.pressure = [](const Point& x, double t) {
    return Fields::template pressure<double>(x.x(), x.y(), t);
  };
  c.velocity_gradient = [velocity_jets](const Point& x, double t) {
    const auto j = velocity_jets(x, t);
    Eigen::Matrix2d g;
    for (int i = 0; i < 2; ++i) g.row(i) = j[i].gradient.template head<2>().transpose();
    return g;
  };
  c.pressure_gradient = [pressure_jet](const Point& x, double t) {
    return Vec2(pressure_jet(x, t).gradient.template head<2>());
  };
  c.divergence = [velocity_jets](const Point& x, double t) {
    const auto j = velocity_jets(x, t);
    return j[0].gradient[0] + j[1].gradient[1];
  };
  c.forcing = [velocity_jets, pressure_jet](const Point& x, double t) {
    const auto j = velocity_jets(x, t);
    const Jet p = pressure_jet(x, t);
    Vec2 f;
    for (int i = 0; i < 2; ++i)
      f[i] = j[i].gradient[2] - (j[i].hessian(0, 0) + j[i].hessian(1, 1)) + p.gradient[i];
    return f;
  };
  return c;
}

/// u = (sin t (g^2 - y^2), 0), p = sin t (8 - 2x), g(t) = 1 - sin(t)/10.
ManufacturedCase channel2d_case();

/// u = 0, p = 0 on the named motion.
ManufacturedCase zero_case(const std::string& motion);

/// f = 0, u^D = 0, nonzero initial velocity (not an exact solution).
ManufacturedCase decay_case(const std::string& motion);

/// No manufactured solution: u^0 = 0, f = 0, u^D = 0.
ManufacturedCase none_case(const std::string& motion);

/// Known case names: channel2d, zero, decay, none.
ManufacturedCase make_case(const std::string& name, const std::string& motion);

/// Problem for the time stepper: motion with u^D = u, forcing, initial state.
Problem make_problem(const ManufacturedCase& c);

enum Norm { velocity_l2 = 0, velocity_h1 = 1, pressure_l2 = 2, pressure_h1 = 3 };
inline constexpr int kNorms = 4;
const char* norm_name(int norm);

struct ErrorNorms {
  // (sum_n dt ||e(t_n)||^2)^{1/2} and the same functional of the exact solution
  std::array<double, kNorms> error{};
  std::array<double, kNorms> exact{};
  // per time level: ||e(t_n)|| in each norm
  std::vector<double> times;
  std::vector<std::array<double, kNorms>> series;

  /// error / exact; throws if the exact norm vanishes.
  double normalized(int norm) const;
  bool normalizable(int norm) const { return exact[norm] > 0.0; }
};

/// Space-time errors over the stored history (u_h^1 ... u_h^N), using cut
/// quadrature of degree 2m+2 on Omega(t_n).
ErrorNorms error_norms(const TimeStepper& stepper, std::span<const TimeLevel> history,
                       const ManufacturedCase& c);

// ---- convergence orders ----

struct PowerFit {
  double offset = std::numeric_limits<double>::quiet_NaN();  // g_inf
  double scale = std::numeric_limits<double>::quiet_NaN();   // c
  double order = std::numeric_limits<double>::quiet_NaN();   // eoc
  double order_stderr = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
  bool indeterminate = true;
  std::string note;
};

/// Least-squares fit of g = g_inf + c tau^p by damped Gauss-Newton. Needs at
/// least three points; failures are reported through `indeterminate`.
PowerFit fit_power_law(std::span<const double> tau, std::span<const double> g);

/// log(g_i / g_{i+1}) / log(tau_i / tau_{i+1}) for consecutive entries.
std::vector<double> pairwise_eoc(std::span<const double> tau, std::span<const double> g);

// Errors of one norm over an (h, dt) grid. In a coupled study dt[i] belongs to
// h[i] and only the diagonal is filled.
struct EocTable {
  std::string norm;
  bool coupled = false;
  std::vector<double> h;
  std::vector<double> dt;
  Eigen::MatrixXd errors;      // rows h, columns dt; NaN marks a failed run
  std::vector<PowerFit> rows;  // fit over dt per h row
  std::vector<PowerFit> cols;  // fit over h per dt column
  PowerFit diagonal;           // coupled: fit over h along the diagonal
  std::vector<double> pairwise_h;                 // coupled: along the diagonal
  std::vector<std::vector<double>> pairwise_rows;  // over dt, per h row
  std::vector<std::vector<double>> pairwise_cols;  // over h, per dt column
};

EocTable make_eoc_table(std::string norm, std::vector<double> h, std::vector<double> dt,
                        Eigen::MatrixXd errors, bool coupled);

void write_eoc_csv(std::ostream& out, const EocTable& table, const std::string& comment);

}  // namespace cutstokes
