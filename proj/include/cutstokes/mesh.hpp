#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "cutstokes/geometry.hpp"

namespace cutstokes {

struct Edge {
  std::array<int, 2> vertices;
  // cells[1] == -1 on the boundary of the background box.
  std::array<int, 2> cells{-1, -1};
  bool interior() const { return cells[1] >= 0; }
};

// Conforming triangulation of an axis-aligned box. Every grid quad is split
// along the same diagonal; all ids are assigned in a fixed traversal order.
struct BackgroundMesh {
  Box box;
  int nx = 0;
  int ny = 0;
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> cells;
  // Local edge k of a cell is opposite local vertex k.
  std::vector<std::array<int, 3>> cell_edges;
  std::vector<Edge> edges;
  // Interior edges, i.e. faces with two adjacent cells.
  std::vector<int> faces;
  double h_min = 0.0;
  double h_max = 0.0;

  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_vertices() const { return static_cast<int>(vertices.size()); }
  std::array<Point, 3> cell_points(int cell) const;
  double cell_area(int cell) const;
};

BackgroundMesh build_background(const Box& box, int nx, int ny);

// Cell counts giving cells of edge length at most h in each direction.
std::array<int, 2> cells_for_size(const Box& box, double h);

// Legacy VTK (ASCII, UNSTRUCTURED_GRID). Optional cell scalar, e.g. a cell
// classification, is written as CELL_DATA.
void write_vtk(std::ostream& out, const BackgroundMesh& mesh,
               const std::vector<int>* cell_data = nullptr,
               const char* cell_data_name = "cell_data");

}  // namespace cutstokes
