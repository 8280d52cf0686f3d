#include "cutstokes/active_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cutstokes {

namespace {

bool pokes_in(const Triangle& tri, const std::vector<Eigen::Vector3d>& values, double shift,
              double tol) {
  std::vector<Eigen::Vector3d> shifted = values;
  for (auto& v : shifted) v.array() -= shift;
  return cut_cell(tri, shifted, tol).area > 0.0;
}

void mark_dofs(const DofMap& dofs, const std::vector<int>& cells, std::vector<int>& out) {
  std::vector<char> mark(dofs.n_dofs(), 0);
  for (int c : cells)
    for (int d : dofs.cell_dofs(c)) mark[d] = 1;
  out.clear();
  for (int d = 0; d < dofs.n_dofs(); ++d)
    if (mark[d]) out.push_back(d);
}

}  // namespace

ActiveSlabMesh classify_active(const BackgroundMesh& mesh, const DofMap& dofs,
                               const DomainMotion& motion, double t, double delta,
                               int step_index) {
  if (delta < 0.0) throw Error("classify_active: delta must be nonnegative");
  const double tol = 1e-12 * mesh.h_min;
  const std::size_t n_pieces = motion.pieces.size();

  std::vector<std::vector<double>> vertex_values(n_pieces);
  for (std::size_t i = 0; i < n_pieces; ++i) {
    vertex_values[i].resize(mesh.vertices.size());
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
      vertex_values[i][v] = motion.pieces[i].levelset(mesh.vertices[v], t);
  }

  ActiveSlabMesh slab;
  slab.step_index = step_index;
  slab.time = t;
  slab.delta = delta;
  slab.location.assign(mesh.cells.size(), CellLocation::outside);
  slab.cut_index.assign(mesh.cells.size(), -1);

  std::vector<Eigen::Vector3d> values(n_pieces);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& cv = mesh.cells[c];
    Eigen::Vector3d combined = Eigen::Vector3d::Constant(-std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n_pieces; ++i) {
      for (int k = 0; k < 3; ++k) {
        double v = vertex_values[i][cv[k]];
        if (std::abs(v) <= tol) v = 0.0;
        values[i][k] = v;
      }
      combined = combined.cwiseMax(values[i]);
    }
    const double cmin = combined.minCoeff();
    const double cmax = combined.maxCoeff();
    const bool any_zero = (combined.array() == 0.0).any();
    const Triangle tri = mesh.cell_points(c);

    bool phys = cmin <= 0.0;
    bool cut = any_zero || (cmin < 0.0 && cmax > 0.0);
    if (!phys && pokes_in(tri, values, 0.0, tol)) {
      phys = true;
      cut = true;
    }
    if (phys) {
      if (cut) {
        slab.location[c] = CellLocation::cut;
        slab.cut_index[c] = static_cast<int>(slab.cuts.size());
        slab.cuts.push_back(cut_cell(tri, values, tol));
      } else {
        slab.location[c] = CellLocation::interior;
      }
      continue;
    }
    if (cmin - delta <= tol || (delta > 0.0 && pokes_in(tri, values, delta, tol)))
      slab.location[c] = CellLocation::strip;
  }

  for (int c = 0; c < mesh.n_cells(); ++c) {
    if (slab.in_delta(c)) slab.cells_delta.push_back(c);
    if (slab.in_phys(c)) slab.cells_phys.push_back(c);
  }
  if (slab.cells_phys.empty())
    throw EmptyDomainError("classify_active: no background cell meets the physical domain at t = " +
                           std::to_string(t));

  for (int f : mesh.faces) {
    const auto& cells = mesh.edges[f].cells;
    if (!slab.in_delta(cells[0]) || !slab.in_delta(cells[1])) continue;
    const CellLocation a = slab.location[cells[0]];
    const CellLocation b = slab.location[cells[1]];
    if (a == CellLocation::cut || b == CellLocation::cut) {
      slab.faces_cut.push_back(f);
      slab.faces_ghost.push_back(f);
      if (slab.in_phys(cells[0]) && slab.in_phys(cells[1])) slab.faces_cip.push_back(f);
    } else if (a == CellLocation::interior && b == CellLocation::interior) {
      slab.faces_int.push_back(f);
      slab.faces_cip.push_back(f);
    } else {
      slab.faces_ext.push_back(f);
      slab.faces_ghost.push_back(f);
    }
  }

  mark_dofs(dofs, slab.cells_delta, slab.velocity_dofs);
  mark_dofs(dofs, slab.cells_phys, slab.pressure_dofs);
  return slab;
}

SlabQuadrature build_quadrature(const BackgroundMesh& mesh, const ActiveSlabMesh& slab,
                                const DomainMotion& motion, int volume_degree,
                                int surface_degree) {
  SlabQuadrature q;
  q.volume_degree = volume_degree;
  q.surface_degree = surface_degree;
  q.cells.reserve(slab.cells_phys.size());
  for (int c : slab.cells_phys) {
    const int idx = slab.cut_index[c];
    q.cells.push_back(cell_rule(c, mesh.cell_points(c), idx >= 0 ? &slab.cuts[idx] : nullptr,
                                motion.pieces, volume_degree, surface_degree));
  }
  return q;
}

double domain_area(const SlabQuadrature& quad) {
  double a = 0.0;
  for (const auto& c : quad.cells)
    for (const auto& p : c.volume) a += p.weight;
  return a;
}

double boundary_length(const SlabQuadrature& quad, bool dirichlet_only) {
  double l = 0.0;
  for (const auto& c : quad.cells)
    for (const auto& p : c.surface)
      if (!dirichlet_only || p.tag == BoundaryTag::dirichlet) l += p.weight;
  return l;
}

}  // namespace cutstokes
