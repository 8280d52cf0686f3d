#include "cutstokes/cut_quadrature.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace cutstokes {

namespace {

constexpr int kMaxDegree = 24;

double signed_area(const Triangle& t) {
  const Vec2 a = t[1] - t[0];
  const Vec2 b = t[2] - t[0];
  return 0.5 * (a.x() * b.y() - a.y() * b.x());
}

// Affine map data of a triangle: lambda_{1,2} = J^{-1} (x - p0).
struct Affine {
  Point origin;
  Eigen::Matrix2d inverse;

  explicit Affine(const Triangle& t) : origin(t[0]) {
    Eigen::Matrix2d jac;
    jac.col(0) = t[1] - t[0];
    jac.col(1) = t[2] - t[0];
    inverse = jac.inverse();
  }

  Eigen::Vector3d barycentric(const Point& x) const {
    const Eigen::Vector2d l = inverse * (x - origin);
    return {1.0 - l.x() - l.y(), l.x(), l.y()};
  }

  Vec2 gradient(const Eigen::Vector3d& values) const {
    return inverse.transpose() * Eigen::Vector2d(values[1] - values[0], values[2] - values[0]);
  }
};

struct LabeledVertex {
  Point x;
  int label;  // piece index of the edge leaving this vertex, -1 for a cell edge
};

using Polygon = std::vector<LabeledVertex>;

Polygon clip(const Polygon& poly, const std::vector<double>& values, int piece) {
  Polygon out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    const double fa = values[i];
    const double fb = values[(i + 1) % n];
    if (fa <= 0.0) {
      if (fb <= 0.0) {
        out.push_back(a);
      } else if (fa == 0.0) {
        out.push_back({a.x, piece});
      } else {
        out.push_back(a);
        out.push_back({a.x + fa / (fa - fb) * (b.x - a.x), piece});
      }
    } else if (fb < 0.0) {
      out.push_back({a.x + fa / (fa - fb) * (b.x - a.x), a.label});
    }
  }
  return out;
}

double polygon_area(const Polygon& poly) {
  double area = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point& p = poly[i].x;
    const Point& q = poly[(i + 1) % poly.size()].x;
    area += p.x() * q.y() - p.y() * q.x();
  }
  return 0.5 * area;
}

}  // namespace

LineRule gauss_legendre(int n) {
  if (n < 1) throw Error("gauss_legendre: need at least one point");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = jacobi(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  LineRule rule;
  for (int i = 0; i < n; ++i) {
    const double v0 = eig.eigenvectors()(0, i);
    rule.points.push_back(0.5 * (eig.eigenvalues()(i) + 1.0));
    rule.weights.push_back(v0 * v0);  // 2 v0^2 on [-1,1], halved on [0,1]
  }
  return rule;
}

const LineRule& line_rule(int degree) {
  static const std::vector<LineRule> rules = [] {
    std::vector<LineRule> r;
    for (int d = 0; d <= kMaxDegree + 1; ++d) r.push_back(gauss_legendre(d / 2 + 1));
    return r;
  }();
  if (degree < 0 || degree > kMaxDegree + 1) throw Error("line_rule: unsupported degree");
  return rules[degree];
}

const TriangleRule& triangle_rule(int degree) {
  // Duffy collapse x = u, y = v (1 - u) adds a factor (1 - u), so the rule in
  // u must be exact to degree + 1.
  static const std::vector<TriangleRule> rules = [] {
    std::vector<TriangleRule> r;
    for (int d = 0; d <= kMaxDegree; ++d) {
      const LineRule& g = line_rule(d + 1);
      TriangleRule t;
      for (std::size_t i = 0; i < g.points.size(); ++i) {
        for (std::size_t j = 0; j < g.points.size(); ++j) {
          const double u = g.points[i];
          const double v = g.points[j];
          t.points.emplace_back(u, v * (1.0 - u));
          t.weights.push_back(g.weights[i] * g.weights[j] * (1.0 - u));
        }
      }
      r.push_back(std::move(t));
    }
    return r;
  }();
  if (degree < 0 || degree > kMaxDegree) throw Error("triangle_rule: unsupported degree");
  return rules[degree];
}

double ClipResult::area() const {
  double a = 0.0;
  for (const auto& t : inside) a += std::abs(signed_area(t));
  return a;
}

CutCell cut_cell(const Triangle& cell, const std::vector<Eigen::Vector3d>& piece_values,
                 double tol) {
  const Affine affine(cell);
  std::vector<Eigen::Vector3d> snapped = piece_values;
  for (auto& v : snapped)
    for (int k = 0; k < 3; ++k)
      if (std::abs(v[k]) <= tol) v[k] = 0.0;

  // Orient counterclockwise so that fan triangles and normals are consistent.
  Polygon poly{{cell[0], -1}, {cell[1], -1}, {cell[2], -1}};
  if (signed_area(cell) < 0.0) std::swap(poly[1], poly[2]);

  auto value_at = [&](int piece, const Point& x) {
    const Eigen::Vector3d lambda = affine.barycentric(x);
    double v = lambda.dot(snapped[piece]);
    return std::abs(v) <= tol ? 0.0 : v;
  };

  std::vector<double> values;
  for (int piece = 0; piece < static_cast<int>(snapped.size()) && poly.size() >= 3; ++piece) {
    const auto& pv = snapped[piece];
    if (pv.maxCoeff() <= 0.0) continue;  // whole cell inside this half plane
    values.resize(poly.size());
    for (std::size_t i = 0; i < poly.size(); ++i) values[i] = value_at(piece, poly[i].x);
    poly = clip(poly, values, piece);
  }

  CutCell result;
  if (poly.size() < 3) return result;
  // Remove zero-length edges left by clipping through vertices.
  Polygon clean;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& next = poly[(i + 1) % poly.size()];
    if ((next.x - poly[i].x).norm() > tol) clean.push_back(poly[i]);
  }
  if (clean.size() < 3) return result;
  result.area = polygon_area(clean);
  if (!(result.area > tol * tol)) {
    result.area = 0.0;
    return result;
  }

  for (std::size_t i = 1; i + 1 < clean.size(); ++i)
    result.inside.push_back({clean[0].x, clean[i].x, clean[i + 1].x});

  for (std::size_t i = 0; i < clean.size(); ++i) {
    const Point& a = clean[i].x;
    const Point& b = clean[(i + 1) % clean.size()].x;
    int label = clean[i].label;
    if (label < 0) {
      for (int piece = 0; piece < static_cast<int>(snapped.size()); ++piece) {
        if (value_at(piece, a) == 0.0 && value_at(piece, b) == 0.0) {
          label = piece;
          break;
        }
      }
    }
    if (label < 0) continue;
    const Vec2 grad = affine.gradient(snapped[label]);
    result.facets.push_back({Segment{a, b}, label, grad.normalized()});
  }
  return result;
}

ClipResult clip_simplex(const Triangle& cell, const Eigen::Vector3d& phi) {
  const double scale = std::max({(cell[1] - cell[0]).norm(), (cell[2] - cell[1]).norm(),
                                 (cell[0] - cell[2]).norm()});
  const CutCell cut = cut_cell(cell, {phi}, 1e-12 * scale);
  ClipResult r;
  r.inside = cut.inside;
  if (!cut.facets.empty()) r.interface = cut.facets.front().segment;
  return r;
}

void append_triangle_rule(const Triangle& t, int degree, std::vector<QuadraturePoint>& out) {
  const TriangleRule& rule = triangle_rule(degree);
  const double jac = 2.0 * std::abs(signed_area(t));
  const Vec2 e1 = t[1] - t[0];
  const Vec2 e2 = t[2] - t[0];
  for (std::size_t q = 0; q < rule.weights.size(); ++q) {
    const auto& r = rule.points[q];
    out.push_back({t[0] + r.x() * e1 + r.y() * e2, rule.weights[q] * jac});
  }
}

CellQuadrature cell_rule(int cell, const Triangle& points, const CutCell* cut,
                         const std::vector<BoundaryPiece>& pieces, int volume_degree,
                         int surface_degree) {
  if (volume_degree < 1 || surface_degree < 1) throw Error("cell_rule: degree must be >= 1");
  CellQuadrature q;
  q.cell = cell;
  if (!cut) {
    append_triangle_rule(points, volume_degree, q.volume);
    return q;
  }
  for (const auto& t : cut->inside) append_triangle_rule(t, volume_degree, q.volume);
  const LineRule& line = line_rule(surface_degree);
  for (const auto& f : cut->facets) {
    const double len = f.segment.length();
    const BoundaryTag tag = pieces.empty() ? BoundaryTag::dirichlet : pieces[f.piece].tag;
    for (std::size_t i = 0; i < line.points.size(); ++i) {
      const Point x = f.segment.a + line.points[i] * (f.segment.b - f.segment.a);
      q.surface.push_back({x, line.weights[i] * len, f.normal, f.piece, tag});
    }
  }
  return q;
}

}  // namespace cutstokes
