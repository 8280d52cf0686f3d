#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "cutstokes/cut_quadrature.hpp"

namespace oracle {

// a x + b y + c <= 0
struct HalfPlane {
  double a, b, c;
};

// Linear function through three vertex values, as a half plane {phi <= 0}.
inline HalfPlane from_vertex_values(const cutstokes::Triangle& t, const Eigen::Vector3d& phi) {
  Eigen::Matrix3d m;
  for (int k = 0; k < 3; ++k) m.row(k) << t[k].x(), t[k].y(), 1.0;
  const Eigen::Vector3d abc = m.fullPivLu().solve(phi);
  return {abc[0], abc[1], abc[2]};
}

// The triangle itself as three half planes.
inline std::vector<HalfPlane> triangle_planes(const cutstokes::Triangle& t) {
  std::vector<HalfPlane> planes;
  for (int k = 0; k < 3; ++k) {
    const auto& p = t[(k + 1) % 3];
    const auto& q = t[(k + 2) % 3];
    double a = q.y() - p.y(), b = p.x() - q.x();
    double c = -(a * p.x() + b * p.y());
    if (a * t[k].x() + b * t[k].y() + c > 0) a = -a, b = -b, c = -c;
    planes.push_back({a, b, c});
  }
  return planes;
}

// Integral of x^i y^j over the polygon {all planes <= 0} inside [x0, x1],
// sampled on n vertical slices at their midpoints. Each slice is integrated
// exactly in y, so the only error is the midpoint rule in x, O(n^-2).
inline double slice_integral(const std::vector<HalfPlane>& planes, double x0, double x1, int i,
                             int j, long n = 1000000) {
  const double dx = (x1 - x0) / static_cast<double>(n);
  double sum = 0.0;
  for (long s = 0; s < n; ++s) {
    const double x = x0 + (static_cast<double>(s) + 0.5) * dx;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool empty = false;
    for (const auto& p : planes) {
      const double r = -(p.a * x + p.c);
      if (p.b > 0) hi = std::min(hi, r / p.b);
      else if (p.b < 0) lo = std::max(lo, r / p.b);
      else if (r < 0) empty = true;
    }
    if (empty || !(hi > lo)) continue;
    sum += std::pow(x, i) * (std::pow(hi, j + 1) - std::pow(lo, j + 1)) / (j + 1);
  }
  return sum * dx;
}

inline double slice_integral(const cutstokes::Triangle& t,
                             const std::vector<Eigen::Vector3d>& phis, int i, int j,
                             long n = 1000000) {
  std::vector<HalfPlane> planes = triangle_planes(t);
  for (const auto& phi : phis) planes.push_back(from_vertex_values(t, phi));
  double x0 = t[0].x(), x1 = t[0].x();
  for (const auto& p : t) x0 = std::min(x0, p.x()), x1 = std::max(x1, p.x());
  return slice_integral(planes, x0, x1, i, j, n);
}

}  // namespace oracle
