#include "cutstokes/fe.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace cutstokes {

CellMap::CellMap(const std::array<Point, 3>& vertices) : vertices_(vertices) {
  Eigen::Matrix2d jac;
  jac.col(0) = vertices[1] - vertices[0];
  jac.col(1) = vertices[2] - vertices[0];
  const double det = jac.determinant();
  area_ = 0.5 * std::abs(det);
  const Eigen::Matrix2d inv_t = jac.inverse().transpose();
  grad_lambda_.row(1) = inv_t.col(0).transpose();
  grad_lambda_.row(2) = inv_t.col(1).transpose();
  grad_lambda_.row(0) = -(grad_lambda_.row(1) + grad_lambda_.row(2));
}

Eigen::Vector3d CellMap::barycentric(const Point& x) const {
  const Vec2 d = x - vertices_[0];
  const double l1 = grad_lambda_.row(1).dot(d);
  const double l2 = grad_lambda_.row(2).dot(d);
  return {1.0 - l1 - l2, l1, l2};
}

LagrangeBasis::LagrangeBasis(int degree) : degree_(degree) {
  if (degree != 1 && degree != 2) throw Error("LagrangeBasis: degree must be 1 or 2");
}

LocalVector LagrangeBasis::values(const CellMap& cell, const Point& x) const {
  const Eigen::Vector3d l = cell.barycentric(x);
  LocalVector v(size());
  if (degree_ == 1) {
    v << l[0], l[1], l[2];
    return v;
  }
  for (int i = 0; i < 3; ++i) v[i] = l[i] * (2.0 * l[i] - 1.0);
  for (int k = 0; k < 3; ++k) v[3 + k] = 4.0 * l[(k + 1) % 3] * l[(k + 2) % 3];
  return v;
}

LocalGradients LagrangeBasis::gradients(const CellMap& cell, const Point& x) const {
  const auto& g = cell.grad_lambda();
  LocalGradients grads(size(), 2);
  if (degree_ == 1) {
    grads = g;
    return grads;
  }
  const Eigen::Vector3d l = cell.barycentric(x);
  for (int i = 0; i < 3; ++i) grads.row(i) = (4.0 * l[i] - 1.0) * g.row(i);
  for (int k = 0; k < 3; ++k) {
    const int a = (k + 1) % 3, b = (k + 2) % 3;
    grads.row(3 + k) = 4.0 * (l[a] * g.row(b) + l[b] * g.row(a));
  }
  return grads;
}

std::array<Eigen::Matrix2d, kMaxLocalDofs> LagrangeBasis::hessians(const CellMap& cell) const {
  std::array<Eigen::Matrix2d, kMaxLocalDofs> h;
  for (auto& m : h) m.setZero();
  if (degree_ == 1) return h;
  const auto& g = cell.grad_lambda();
  for (int i = 0; i < 3; ++i) h[i] = 4.0 * g.row(i).transpose() * g.row(i);
  for (int k = 0; k < 3; ++k) {
    const int a = (k + 1) % 3, b = (k + 2) % 3;
    h[3 + k] = 4.0 * (g.row(a).transpose() * g.row(b) + g.row(b).transpose() * g.row(a));
  }
  return h;
}

DofMap::DofMap(const BackgroundMesh& mesh, int degree)
    : degree_(degree), per_cell_(degree == 1 ? 3 : 6) {
  if (degree != 1 && degree != 2) throw Error("DofMap: degree must be 1 or 2");
  const int nv = mesh.n_vertices();
  const int ne = static_cast<int>(mesh.edges.size());
  n_dofs_ = degree == 1 ? nv : nv + ne;
  cell_dofs_.resize(static_cast<std::size_t>(mesh.n_cells()) * per_cell_);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    int* d = cell_dofs_.data() + static_cast<std::size_t>(c) * per_cell_;
    for (int i = 0; i < 3; ++i) d[i] = mesh.cells[c][i];
    if (degree == 2)
      for (int k = 0; k < 3; ++k) d[3 + k] = nv + mesh.cell_edges[c][k];
  }
  support_ = mesh.vertices;
  if (degree == 2) {
    for (const auto& e : mesh.edges)
      support_.push_back(0.5 * (mesh.vertices[e.vertices[0]] + mesh.vertices[e.vertices[1]]));
  }
}

}  // namespace cutstokes
