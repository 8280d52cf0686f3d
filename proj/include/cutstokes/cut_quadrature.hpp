#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "cutstokes/geometry.hpp"

namespace cutstokes {

using Triangle = std::array<Point, 3>;

struct Segment {
  Point a;
  Point b;
  double length() const { return (b - a).norm(); }
};

// Gauss-Legendre rule on [0, 1].
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
};

// Rule on the reference triangle (0,0), (1,0), (0,1); weights sum to 1/2.
struct TriangleRule {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [0,1] (exact to degree 2n-1).
LineRule gauss_legendre(int n);
/// Cached Gauss rule on [0,1] exact for polynomials of the given degree.
const LineRule& line_rule(int degree);
/// Cached collapsed-Gauss rule on the reference triangle, exact to `degree`.
const TriangleRule& triangle_rule(int degree);

struct QuadraturePoint {
  Point x;
  double weight;
};

struct SurfacePoint {
  Point x;
  double weight;
  Vec2 normal;  // unit, pointing out of the domain
  int piece;    // index into DomainMotion::pieces
  BoundaryTag tag;
};

struct ClipResult {
  std::vector<Triangle> inside;
  std::optional<Segment> interface;
  double area() const;
};

/// Clips a triangle against the linear interpolant of vertex values phi and
/// returns {phi < 0} as a fan of at most three triangles plus the zero segment.
ClipResult clip_simplex(const Triangle& cell, const Eigen::Vector3d& phi);

struct CutFacet {
  Segment segment;
  int piece;
  Vec2 normal;
};

// K intersected with all half planes {phi_i <= 0}, phi_i linear on K.
struct CutCell {
  std::vector<Triangle> inside;
  std::vector<CutFacet> facets;
  double area = 0.0;
};

/// Multi-level-set clip: `piece_values[i]` holds the vertex values of piece i.
/// Values with magnitude <= tol are snapped to zero. A polygon edge that lies
/// on the zero line of a piece becomes a facet of that piece, whether it was
/// produced by clipping or is an edge of the cell itself.
CutCell cut_cell(const Triangle& cell, const std::vector<Eigen::Vector3d>& piece_values,
                 double tol);

struct CellQuadrature {
  int cell = -1;
  std::vector<QuadraturePoint> volume;
  std::vector<SurfacePoint> surface;
};

/// Maps a reference rule onto a physical triangle.
void append_triangle_rule(const Triangle& t, int degree, std::vector<QuadraturePoint>& out);

/// Full-cell rule (cut == nullptr) or rule over K cut by the pieces.
CellQuadrature cell_rule(int cell, const Triangle& points, const CutCell* cut,
                         const std::vector<BoundaryPiece>& pieces, int volume_degree,
                         int surface_degree);

}  // namespace cutstokes
