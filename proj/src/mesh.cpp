#include "cutstokes/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <unordered_map>

namespace cutstokes {

std::array<Point, 3> BackgroundMesh::cell_points(int cell) const {
  const auto& c = cells[cell];
  return {vertices[c[0]], vertices[c[1]], vertices[c[2]]};
}

double BackgroundMesh::cell_area(int cell) const {
  const auto p = cell_points(cell);
  const Vec2 a = p[1] - p[0];
  const Vec2 b = p[2] - p[0];
  return 0.5 * std::abs(a.x() * b.y() - a.y() * b.x());
}

BackgroundMesh build_background(const Box& box, int nx, int ny) {
  if (nx < 1 || ny < 1) throw Error("build_background: cell counts must be >= 1");
  const Vec2 extent = box.upper - box.lower;
  if (!(extent.x() > 0.0) || !(extent.y() > 0.0))
    throw Error("build_background: degenerate box");

  BackgroundMesh mesh;
  mesh.box = box;
  mesh.nx = nx;
  mesh.ny = ny;
  const double hx = extent.x() / nx;
  const double hy = extent.y() / ny;

  mesh.vertices.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    // Snap the last row/column onto the box so that the ends are exact.
    const double y = j == ny ? box.upper.y() : box.lower.y() + j * hy;
    for (int i = 0; i <= nx; ++i) {
      const double x = i == nx ? box.upper.x() : box.lower.x() + i * hx;
      mesh.vertices.emplace_back(x, y);
    }
  }

  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  mesh.cells.reserve(2 * static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j);
      const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      mesh.cells.push_back({v00, v10, v11});
      mesh.cells.push_back({v00, v11, v01});
    }
  }

  std::unordered_map<long long, int> edge_ids;
  edge_ids.reserve(mesh.cells.size() * 2);
  const long long nv = mesh.n_vertices();
  mesh.cell_edges.resize(mesh.cells.size());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    for (int k = 0; k < 3; ++k) {
      int a = mesh.cells[c][(k + 1) % 3];
      int b = mesh.cells[c][(k + 2) % 3];
      if (a > b) std::swap(a, b);
      const long long key = a * nv + b;
      auto [it, inserted] = edge_ids.try_emplace(key, static_cast<int>(mesh.edges.size()));
      if (inserted) {
        mesh.edges.push_back(Edge{{a, b}, {c, -1}});
      } else {
        mesh.edges[it->second].cells[1] = c;
      }
      mesh.cell_edges[c][k] = it->second;
    }
  }
  for (int e = 0; e < static_cast<int>(mesh.edges.size()); ++e)
    if (mesh.edges[e].interior()) mesh.faces.push_back(e);

  mesh.h_min = std::numeric_limits<double>::infinity();
  mesh.h_max = 0.0;
  for (const auto& e : mesh.edges) {
    const double len = (mesh.vertices[e.vertices[1]] - mesh.vertices[e.vertices[0]]).norm();
    mesh.h_min = std::min(mesh.h_min, len);
    mesh.h_max = std::max(mesh.h_max, len);
  }
  return mesh;
}

std::array<int, 2> cells_for_size(const Box& box, double h) {
  if (!(h > 0.0)) throw Error("cells_for_size: h must be positive");
  const Vec2 extent = box.upper - box.lower;
  // The small slack keeps exact ratios such as 4.5 / 0.125 from rounding up.
  auto count = [h](double len) {
    return std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
  };
  return {count(extent.x()), count(extent.y())};
}

void write_vtk(std::ostream& out, const BackgroundMesh& mesh, const std::vector<int>* cell_data,
               const char* cell_data_name) {
  out << "# vtk DataFile Version 3.0\ncutstokes mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.n_vertices() << " double\n";
  out.precision(17);
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << " 0\n";
  out << "CELLS " << mesh.n_cells() << ' ' << 4 * mesh.n_cells() << '\n';
  for (const auto& c : mesh.cells) out << "3 " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
  out << "CELL_TYPES " << mesh.n_cells() << '\n';
  for (int c = 0; c < mesh.n_cells(); ++c) out << "5\n";
  if (cell_data) {
    out << "CELL_DATA " << mesh.n_cells() << "\nSCALARS " << cell_data_name
        << " int 1\nLOOKUP_TABLE default\n";
    for (int v : *cell_data) out << v << '\n';
  }
}

}  // namespace cutstokes
