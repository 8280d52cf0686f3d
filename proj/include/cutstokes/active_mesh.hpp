#pragma once

#include <cstdint>
#include <vector>

#include "cutstokes/cut_quadrature.hpp"
#include "cutstokes/fe.hpp"
#include "cutstokes/mesh.hpp"

namespace cutstokes {

class EmptyDomainError : public Error {
 public:
  using Error::Error;
};

enum class CellLocation : std::uint8_t {
  outside,   // not in the velocity mesh
  strip,     // meets the enlarged domain only
  cut,       // meets the boundary of the physical domain
  interior,  // strictly inside the physical domain
};

struct ActiveSlabMesh {
  int step_index = 0;
  double time = 0.0;
  double delta = 0.0;

  std::vector<CellLocation> location;  // per background cell
  std::vector<int> cells_delta;
  std::vector<int> cells_phys;

  std::vector<int> faces_int;
  std::vector<int> faces_cut;
  std::vector<int> faces_ext;
  std::vector<int> faces_ghost;  // faces_cut U faces_ext
  // Pressure stabilization faces: faces_int plus cut faces whose two cells
  // both meet the physical domain.
  std::vector<int> faces_cip;

  std::vector<int> velocity_dofs;  // scalar background dofs of cells_delta
  std::vector<int> pressure_dofs;  // scalar background dofs of cells_phys

  // Exact clips of the physical cells that are cut, keyed like cells_phys.
  std::vector<CutCell> cuts;
  std::vector<int> cut_index;  // background cell -> index into cuts, or -1

  bool in_delta(int cell) const { return location[cell] != CellLocation::outside; }
  bool in_phys(int cell) const {
    return location[cell] == CellLocation::cut || location[cell] == CellLocation::interior;
  }
};

/// Classifies the background cells at time t against Omega(t) and its
/// delta-enlargement. A vertex value of exactly zero (within 1e-12 h) counts
/// as inside and marks the cell as cut.
ActiveSlabMesh classify_active(const BackgroundMesh& mesh, const DofMap& dofs,
                               const DomainMotion& motion, double t, double delta,
                               int step_index = 0);

// Per-cell rules for every cell of cells_phys, in the same order.
struct SlabQuadrature {
  int volume_degree = 0;
  int surface_degree = 0;
  std::vector<CellQuadrature> cells;
};

SlabQuadrature build_quadrature(const BackgroundMesh& mesh, const ActiveSlabMesh& slab,
                                const DomainMotion& motion, int volume_degree,
                                int surface_degree);

/// Measure of Omega^n and of its Dirichlet/do-nothing boundary parts.
double domain_area(const SlabQuadrature& quad);
double boundary_length(const SlabQuadrature& quad, bool dirichlet_only = false);

}  // namespace cutstokes
