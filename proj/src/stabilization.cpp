#include "cutstokes/stabilization.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace cutstokes {

GhostVariant parse_ghost_variant(const std::string& name) {
  if (name == "jump") return GhostVariant::jump;
  if (name == "projection") return GhostVariant::projection;
  if (name == "direct") return GhostVariant::direct;
  throw Error("unknown ghost variant '" + name + "' (expected jump, projection or direct)");
}

const char* to_string(GhostVariant variant) {
  switch (variant) {
    case GhostVariant::jump: return "jump";
    case GhostVariant::projection: return "projection";
    case GhostVariant::direct: return "direct";
  }
  return "?";
}

Vec2 face_normal(const BackgroundMesh& mesh, int face) {
  const Edge& e = mesh.edges[face];
  const Point& a = mesh.vertices[e.vertices[0]];
  const Point& b = mesh.vertices[e.vertices[1]];
  Vec2 n(b.y() - a.y(), a.x() - b.x());
  n.normalize();
  const auto& c0 = mesh.cells[e.cells[0]];
  const Point centroid = (mesh.vertices[c0[0]] + mesh.vertices[c0[1]] + mesh.vertices[c0[2]]) / 3.0;
  if (n.dot(centroid - a) > 0.0) n = -n;
  return n;
}

namespace {

using PatchVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2 * kMaxLocalDofs, 1>;
using PatchMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2 * kMaxLocalDofs, 2 * kMaxLocalDofs>;

struct FacePatch {
  std::array<int, 2> cells;
  std::array<CellMap, 2> maps;
  std::array<std::span<const int>, 2> dofs;
  Segment segment;
  Vec2 normal;
};

FacePatch make_patch(const SlabView& view, int face) {
  const Edge& e = view.mesh.edges[face];
  return FacePatch{{e.cells[0], e.cells[1]},
                   {CellMap(view.mesh.cell_points(e.cells[0])),
                    CellMap(view.mesh.cell_points(e.cells[1]))},
                   {view.dofs.cell_dofs(e.cells[0]), view.dofs.cell_dofs(e.cells[1])},
                   {view.mesh.vertices[e.vertices[0]], view.mesh.vertices[e.vertices[1]]},
                   face_normal(view.mesh, face)};
}

// int_e sum_k w_k [d_n^k u][d_n^k v] on the local patch numbering
// [cell 0 dofs | cell 1 dofs].
PatchMatrix jump_matrix(const FacePatch& p, const LagrangeBasis& basis, int max_order,
                        const double* weights) {
  const int n = basis.size();
  PatchMatrix m = PatchMatrix::Zero(2 * n, 2 * n);
  const LineRule& rule = line_rule(2 * basis.degree());
  const double len = p.segment.length();
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const Point x = p.segment.a + rule.points[q] * (p.segment.b - p.segment.a);
    PatchVector j(2 * n);
    j.head(n) = basis.gradients(p.maps[0], x) * p.normal;
    j.tail(n) = -(basis.gradients(p.maps[1], x) * p.normal);
    m.noalias() += weights[0] * rule.weights[q] * len * j * j.transpose();
  }
  if (max_order >= 2 && basis.degree() >= 2) {
    // second normal derivatives are constant on each cell
    const auto h0 = basis.hessians(p.maps[0]);
    const auto h1 = basis.hessians(p.maps[1]);
    PatchVector j(2 * n);
    for (int i = 0; i < n; ++i) {
      j[i] = p.normal.dot(h0[i] * p.normal);
      j[n + i] = -p.normal.dot(h1[i] * p.normal);
    }
    m.noalias() += weights[1] * len * j * j.transpose();
  }
  return m;
}

PatchMatrix direct_matrix(const FacePatch& p, const LagrangeBasis& basis) {
  const int n = basis.size();
  PatchMatrix m = PatchMatrix::Zero(2 * n, 2 * n);
  std::vector<QuadraturePoint> pts;
  for (int c = 0; c < 2; ++c) append_triangle_rule(p.maps[c].vertices(), 2 * basis.degree(), pts);
  for (const auto& qp : pts) {
    PatchVector d(2 * n);
    d.head(n) = basis.values(p.maps[0], qp.x);
    d.tail(n) = -basis.values(p.maps[1], qp.x);
    m.noalias() += qp.weight * d * d.transpose();
  }
  return m;
}

Eigen::VectorXd monomials(int degree, const Point& x, const Point& center, double scale) {
  const Vec2 y = (x - center) / scale;
  Eigen::VectorXd v((degree + 1) * (degree + 2) / 2);
  int k = 0;
  for (int total = 0; total <= degree; ++total)
    for (int a = total; a >= 0; --a) v[k++] = std::pow(y.x(), a) * std::pow(y.y(), total - a);
  return v;
}

PatchMatrix projection_matrix(const FacePatch& p, const LagrangeBasis& basis) {
  const int n = basis.size();
  const int nm = (basis.degree() + 1) * (basis.degree() + 2) / 2;
  const Point center = 0.5 * (p.segment.a + p.segment.b);
  const double scale = p.segment.length();
  PatchMatrix mass = PatchMatrix::Zero(2 * n, 2 * n);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nm, nm);
  Eigen::MatrixXd mixed = Eigen::MatrixXd::Zero(nm, 2 * n);
  for (int c = 0; c < 2; ++c) {
    std::vector<QuadraturePoint> pts;
    append_triangle_rule(p.maps[c].vertices(), 2 * basis.degree(), pts);
    for (const auto& qp : pts) {
      const LocalVector phi = basis.values(p.maps[c], qp.x);
      const Eigen::VectorXd mono = monomials(basis.degree(), qp.x, center, scale);
      mass.block(c * n, c * n, n, n).noalias() += qp.weight * phi * phi.transpose();
      gram.noalias() += qp.weight * mono * mono.transpose();
      mixed.block(0, c * n, nm, n).noalias() += qp.weight * mono * phi.transpose();
    }
  }
  const Eigen::MatrixXd coupling = mixed.transpose() * gram.ldlt().solve(mixed);
  PatchMatrix m = mass - coupling;
  return 0.5 * (m + m.transpose());
}

void scatter_patch(const FacePatch& p, const PatchMatrix& m, double scale,
                   const std::function<int(int)>& row_of, int n_components, int stride,
                   Triplets& out) {
  const int n = static_cast<int>(p.dofs[0].size());
  for (int c = 0; c < n_components; ++c)
    for (int i = 0; i < 2 * n; ++i) {
      const int ri = row_of(p.dofs[i / n][i % n]) + c * stride;
      for (int j = 0; j < 2 * n; ++j) {
        const int rj = row_of(p.dofs[j / n][j % n]) + c * stride;
        out.emplace_back(ri, rj, scale * m(i, j));
      }
    }
}

}  // namespace

SparseMatrix assemble_ghost_penalty(const SlabView& view, GhostVariant variant, double gamma_g,
                                    double h) {
  const LagrangeBasis basis(view.dofs.degree());
  const auto& L = view.layout;
  const auto row_of = [&L](int dof) { return L.u(0, dof); };
  const int m = basis.degree();
  const double jump_weights[2] = {h, h * h * h};
  Triplets t;
  for (int f : view.slab.faces_ghost) {
    const FacePatch p = make_patch(view, f);
    switch (variant) {
      case GhostVariant::jump:
        scatter_patch(p, jump_matrix(p, basis, m, jump_weights), gamma_g, row_of, 2,
                      L.n_velocity(), t);
        break;
      case GhostVariant::projection:
        scatter_patch(p, projection_matrix(p, basis), gamma_g / (h * h), row_of, 2,
                      L.n_velocity(), t);
        break;
      case GhostVariant::direct:
        scatter_patch(p, direct_matrix(p, basis), gamma_g / (h * h), row_of, 2, L.n_velocity(),
                      t);
        break;
    }
  }
  SparseMatrix out(L.size(), L.size());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

SparseMatrix assemble_cip(const SlabView& view, double gamma_p, double h) {
  const LagrangeBasis basis(view.dofs.degree());
  const auto& L = view.layout;
  const auto row_of = [&L](int dof) { return L.p(dof); };
  const double weights[2] = {h * h * h, h * h * h * h * h};
  std::vector<char> cut(view.mesh.edges.size(), 0);
  for (int f : view.slab.faces_cut) cut[f] = 1;
  Triplets t;
  for (int f : view.slab.faces_cip) {
    const FacePatch p = make_patch(view, f);
    const int order = cut[f] ? basis.degree() : 1;
    scatter_patch(p, jump_matrix(p, basis, order, weights), gamma_p, row_of, 1, 0, t);
  }
  SparseMatrix out(L.size(), L.size());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

namespace {

LocalVector local_values(const Eigen::VectorXd& coefficients, int offset,
                         std::span<const int> dofs) {
  LocalVector v(dofs.size());
  for (std::size_t i = 0; i < dofs.size(); ++i) v[i] = coefficients[offset + dofs[i]];
  return v;
}

// Sum over k of weights[k-1] int_e [d_n^k u]^2 for one scalar field.
double jump_energy(const FacePatch& p, const LagrangeBasis& basis, int max_order,
                   const double* weights, const LocalVector& u0, const LocalVector& u1) {
  const LineRule& rule = line_rule(2 * basis.degree());
  const double len = p.segment.length();
  double e = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const Point x = p.segment.a + rule.points[q] * (p.segment.b - p.segment.a);
    const Vec2 g0 = basis.gradients(p.maps[0], x).transpose() * u0;
    const Vec2 g1 = basis.gradients(p.maps[1], x).transpose() * u1;
    const double j = (g0 - g1).dot(p.normal);
    e += weights[0] * rule.weights[q] * len * j * j;
  }
  if (max_order >= 2 && basis.degree() >= 2) {
    const auto h0 = basis.hessians(p.maps[0]);
    const auto h1 = basis.hessians(p.maps[1]);
    Eigen::Matrix2d d = Eigen::Matrix2d::Zero();
    for (int i = 0; i < basis.size(); ++i) d += u0[i] * h0[i] - u1[i] * h1[i];
    const double j = p.normal.dot(d * p.normal);
    e += weights[1] * len * j * j;
  }
  return e;
}

double direct_energy(const FacePatch& p, const LagrangeBasis& basis, const LocalVector& u0,
                     const LocalVector& u1) {
  std::vector<QuadraturePoint> pts;
  for (int c = 0; c < 2; ++c) append_triangle_rule(p.maps[c].vertices(), 2 * basis.degree(), pts);
  double e = 0.0;
  for (const auto& qp : pts) {
    const double d = basis.values(p.maps[0], qp.x).dot(u0) - basis.values(p.maps[1], qp.x).dot(u1);
    e += qp.weight * d * d;
  }
  return e;
}

double projection_energy(const FacePatch& p, const LagrangeBasis& basis, const LocalVector& u0,
                         const LocalVector& u1) {
  const int nm = (basis.degree() + 1) * (basis.degree() + 2) / 2;
  const Point center = 0.5 * (p.segment.a + p.segment.b);
  const double scale = p.segment.length();
  std::array<std::vector<QuadraturePoint>, 2> pts;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nm, nm);
  Eigen::VectorXd load = Eigen::VectorXd::Zero(nm);
  for (int c = 0; c < 2; ++c) {
    append_triangle_rule(p.maps[c].vertices(), 2 * basis.degree(), pts[c]);
    const LocalVector& u = c == 0 ? u0 : u1;
    for (const auto& qp : pts[c]) {
      const Eigen::VectorXd mono = monomials(basis.degree(), qp.x, center, scale);
      gram.noalias() += qp.weight * mono * mono.transpose();
      load += qp.weight * basis.values(p.maps[c], qp.x).dot(u) * mono;
    }
  }
  const Eigen::VectorXd alpha = gram.ldlt().solve(load);
  double e = 0.0;
  for (int c = 0; c < 2; ++c) {
    const LocalVector& u = c == 0 ? u0 : u1;
    for (const auto& qp : pts[c]) {
      const double r = basis.values(p.maps[c], qp.x).dot(u) -
                       monomials(basis.degree(), qp.x, center, scale).dot(alpha);
      e += qp.weight * r * r;
    }
  }
  return e;
}

}  // namespace

double ghost_energy(const SlabView& view, GhostVariant variant,
                    const Eigen::VectorXd& coefficients, double h) {
  const LagrangeBasis basis(view.dofs.degree());
  const int nb = view.dofs.n_dofs();
  const double weights[2] = {h, h * h * h};
  double e = 0.0;
  for (int f : view.slab.faces_ghost) {
    const FacePatch p = make_patch(view, f);
    for (int c = 0; c < 2; ++c) {
      const LocalVector u0 = local_values(coefficients, c * nb, p.dofs[0]);
      const LocalVector u1 = local_values(coefficients, c * nb, p.dofs[1]);
      switch (variant) {
        case GhostVariant::jump:
          e += jump_energy(p, basis, basis.degree(), weights, u0, u1);
          break;
        case GhostVariant::projection:
          e += projection_energy(p, basis, u0, u1) / (h * h);
          break;
        case GhostVariant::direct:
          e += direct_energy(p, basis, u0, u1) / (h * h);
          break;
      }
    }
  }
  return e;
}

double cip_energy(const SlabView& view, const Eigen::VectorXd& coefficients, double h) {
  const LagrangeBasis basis(view.dofs.degree());
  const int nb = view.dofs.n_dofs();
  const double weights[2] = {h * h * h, h * h * h * h * h};
  std::vector<char> cut(view.mesh.edges.size(), 0);
  for (int f : view.slab.faces_cut) cut[f] = 1;
  double e = 0.0;
  for (int f : view.slab.faces_cip) {
    const FacePatch p = make_patch(view, f);
    const LocalVector p0 = local_values(coefficients, 2 * nb, p.dofs[0]);
    const LocalVector p1 = local_values(coefficients, 2 * nb, p.dofs[1]);
    e += jump_energy(p, basis, cut[f] ? basis.degree() : 1, weights, p0, p1);
  }
  return e;
}

namespace {

Eigen::VectorXd velocity_part(const AssembledSystem& system, const Eigen::VectorXd& x) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(system.stokes.rows());
  const int nv = 2 * system.layout.n_velocity();
  u.head(nv) = x.head(nv);
  return u;
}

}  // namespace

double triple_norm(const AssembledSystem& system, const Eigen::VectorXd& x) {
  const Eigen::VectorXd u = velocity_part(system, x);
  const double value = u.dot(system.stokes * u) + system.gamma_g * u.dot(system.ghost * u) +
                       u.dot(system.nitsche_penalty * u);
  return std::sqrt(std::max(value, 0.0));
}

double cip_energy(const AssembledSystem& system, const Eigen::VectorXd& x) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(system.cip.rows());
  const int off = system.layout.pressure_offset();
  p.segment(off, system.layout.n_pressure()) = x.segment(off, system.layout.n_pressure());
  return p.dot(system.cip * p);
}

double triple_norm(const SlabView& view, const SlabQuadrature& quad,
                   const Eigen::VectorXd& coefficients, double gamma_D, double gamma_g,
                   GhostVariant variant, double h) {
  const LagrangeBasis basis(view.dofs.degree());
  const int nb = view.dofs.n_dofs();
  double grad = 0.0, boundary = 0.0;
  for (const auto& cq : quad.cells) {
    const CellMap map(view.mesh.cell_points(cq.cell));
    const auto dofs = view.dofs.cell_dofs(cq.cell);
    Eigen::Matrix<double, Eigen::Dynamic, 2, 0, kMaxLocalDofs, 2> local(basis.size(), 2);
    for (int i = 0; i < basis.size(); ++i)
      for (int c = 0; c < 2; ++c) local(i, c) = coefficients[c * nb + dofs[i]];
    for (const auto& qp : cq.volume) {
      const Eigen::Matrix2d g = local.transpose() * basis.gradients(map, qp.x);
      grad += qp.weight * g.squaredNorm();
    }
    for (const auto& sp : cq.surface) {
      if (sp.tag != BoundaryTag::dirichlet) continue;
      const Vec2 u = local.transpose() * basis.values(map, sp.x);
      boundary += sp.weight * u.squaredNorm();
    }
  }
  const double value =
      grad + gamma_g * ghost_energy(view, variant, coefficients, h) + gamma_D / h * boundary;
  return std::sqrt(std::max(value, 0.0));
}

}  // namespace cutstokes
