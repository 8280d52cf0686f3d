#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cutstokes/mesh.hpp"

namespace cutstokes {

inline constexpr int kMaxLocalDofs = 6;

using LocalVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxLocalDofs, 1>;
using LocalGradients = Eigen::Matrix<double, Eigen::Dynamic, 2, 0, kMaxLocalDofs, 2>;
using LocalMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxLocalDofs, kMaxLocalDofs>;

// Affine geometry of one triangle. Barycentric coordinates extend affinely
// beyond the cell, which gives the canonical polynomial extension used by
// the ghost penalties.
class CellMap {
 public:
  explicit CellMap(const std::array<Point, 3>& vertices);

  Eigen::Vector3d barycentric(const Point& x) const;
  const Eigen::Matrix<double, 3, 2>& grad_lambda() const { return grad_lambda_; }
  double area() const { return area_; }
  const std::array<Point, 3>& vertices() const { return vertices_; }

 private:
  std::array<Point, 3> vertices_;
  Eigen::Matrix<double, 3, 2> grad_lambda_;
  double area_;
};

// Lagrange P1/P2 shape functions on a triangle. Local numbering: vertices
// 0..2, then (P2) edge midpoints opposite vertex 0..2.
class LagrangeBasis {
 public:
  explicit LagrangeBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return degree_ == 1 ? 3 : 6; }

  LocalVector values(const CellMap& cell, const Point& x) const;
  LocalGradients gradients(const CellMap& cell, const Point& x) const;
  // Constant per cell (zero for P1).
  std::array<Eigen::Matrix2d, kMaxLocalDofs> hessians(const CellMap& cell) const;

 private:
  int degree_;
};

// Scalar DOF numbering on the background mesh: vertex dofs carry the vertex
// id, edge dofs (P2) carry n_vertices + edge id. Ids never change with the
// active set, so coefficient vectors from earlier steps stay addressable.
class DofMap {
 public:
  DofMap(const BackgroundMesh& mesh, int degree);

  int degree() const { return degree_; }
  int n_dofs() const { return n_dofs_; }
  int dofs_per_cell() const { return per_cell_; }
  std::span<const int> cell_dofs(int cell) const {
    return {cell_dofs_.data() + static_cast<std::size_t>(cell) * per_cell_,
            static_cast<std::size_t>(per_cell_)};
  }
  const Point& support_point(int dof) const { return support_[dof]; }

 private:
  int degree_;
  int per_cell_;
  int n_dofs_;
  std::vector<int> cell_dofs_;
  std::vector<Point> support_;
};

}  // namespace cutstokes
