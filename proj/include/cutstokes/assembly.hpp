#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "cutstokes/active_mesh.hpp"
#include "cutstokes/fe.hpp"

namespace cutstokes {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplets = std::vector<Eigen::Triplet<double>>;

// Compressed unknown ordering of one step: all active x-velocity dofs, then
// all y-velocity dofs, then pressure dofs, then (optionally) one multiplier
// for the zero-mean pressure constraint. Within a block, dofs are sorted by
// background id.
//
// Background coefficient vectors have length 3 * n_background and the same
// block order [u_x | u_y | p] over all background scalar dofs.
struct SystemLayout {
  int n_background = 0;
  std::vector<int> velocity_dofs;
  std::vector<int> pressure_dofs;
  std::vector<int> velocity_index;  // background dof -> block position or -1
  std::vector<int> pressure_index;
  bool mean_constraint = false;

  int n_velocity() const { return static_cast<int>(velocity_dofs.size()); }
  int n_pressure() const { return static_cast<int>(pressure_dofs.size()); }
  int u(int comp, int dof) const { return comp * n_velocity() + velocity_index[dof]; }
  int p(int dof) const { return 2 * n_velocity() + pressure_index[dof]; }
  int pressure_offset() const { return 2 * n_velocity(); }
  int multiplier() const { return 2 * n_velocity() + n_pressure(); }
  int size() const { return multiplier() + (mean_constraint ? 1 : 0); }

  Eigen::VectorXd gather(const Eigen::VectorXd& background) const;
  Eigen::VectorXd scatter(const Eigen::VectorXd& compressed) const;
};

SystemLayout make_layout(const DofMap& dofs, const ActiveSlabMesh& slab);

// Everything an element loop over one step needs to know about the spaces.
struct SlabView {
  const BackgroundMesh& mesh;
  const DofMap& dofs;
  const ActiveSlabMesh& slab;
  const SystemLayout& layout;
};

/// (grad u, grad v) - (p, div v) + (div u, q) over the physical domain.
SparseMatrix assemble_stokes(const SlabView& view, const SlabQuadrature& quad);

struct NitscheTerms {
  SparseMatrix consistency;  // -(d_n u - p n, v) - (u, d_n v + q n)
  SparseMatrix penalty;      // (gamma_D / h) (u, v)
  Eigen::VectorXd rhs;       // -(g, d_n v + q n) + (gamma_D / h) (g, v)
};

/// Nitsche terms on the Dirichlet-tagged boundary; do-nothing parts add nothing.
NitscheTerms assemble_nitsche(const SlabView& view, const SlabQuadrature& quad,
                              const DomainMotion& motion, double gamma_D, double h, double t);

/// Velocity mass matrix (u, v) over the physical domain, both components.
SparseMatrix assemble_mass(const SlabView& view, const SlabQuadrature& quad);

/// (f, v) over the physical domain.
Eigen::VectorXd assemble_forcing(const SlabView& view, const SlabQuadrature& quad,
                                 const VectorField& f, double t);

// Coefficients of an earlier time level on the background numbering, plus
// the velocity dofs that were active at that level.
struct PreviousLevel {
  const Eigen::VectorXd* coefficients = nullptr;
  const std::vector<char>* active = nullptr;
};

class ContainmentError : public Error {
 public:
  using Error::Error;
};

struct TimeTerms {
  SparseMatrix matrix;  // (alpha_0 / dt) (u, v)
  Eigen::VectorXd rhs;  // -sum_i (alpha_i / dt) (u^{n-i}, v)
};

/// BDF time-derivative terms. alpha holds (alpha_0, ..., alpha_s); previous[i]
/// is level n-1-i. Throws ContainmentError if a physical quadrature point
/// lies in a cell whose dofs were not all active at a required level.
TimeTerms assemble_time_terms(const SlabView& view, const SlabQuadrature& quad,
                              std::span<const double> alpha, double dt,
                              std::span<const PreviousLevel> previous);

struct Projection {
  Eigen::VectorXd coefficients;  // background layout, pressure part zero
  std::vector<char> active;      // velocity dofs carrying values
  double residual = 0.0;
};

/// L2(Omega)-projection of an analytic velocity onto the velocity space of the
/// slab. Dofs whose support misses Omega in measure are left at zero.
Projection l2_project(const SlabView& view, const SlabQuadrature& quad, const VectorField& u,
                      double t, double rel_tol = 1e-10);

enum class PressureGauge { none, zero_mean };

PressureGauge parse_pressure_gauge(const std::string& name);
const char* to_string(PressureGauge gauge);

struct AssembledSystem {
  SystemLayout layout;
  SparseMatrix matrix;
  Eigen::VectorXd rhs;

  // Unscaled parts, kept for diagnostics and invariant checks.
  SparseMatrix stokes;
  SparseMatrix nitsche_consistency;
  SparseMatrix nitsche_penalty;  // already contains gamma_D / h
  SparseMatrix ghost;            // g_h, without gamma_g
  SparseMatrix cip;              // s_h, without gamma_p
  SparseMatrix mass;             // (u, v) on Omega
  SparseMatrix time_matrix;      // alpha_0 / dt * mass
  double gamma_g = 0.0;
  double gamma_p = 0.0;
};

/// Appends the zero-mean constraint (one multiplier row/column) or checks
/// that mode none is admissible, i.e. that some boundary part is do-nothing.
void apply_pressure_gauge(AssembledSystem& system, const SlabView& view,
                          const SlabQuadrature& quad, const DomainMotion& motion,
                          PressureGauge mode);

/// Resizes a square matrix, keeping entries.
SparseMatrix padded(const SparseMatrix& m, int size);

/// Sub-block [rows) x [cols) as a dense-free sparse copy.
SparseMatrix block(const SparseMatrix& m, int row0, int rows, int col0, int cols);

/// MatrixMarket coordinate (real general) dump.
void write_matrix_market(std::ostream& out, const SparseMatrix& m);

}  // namespace cutstokes
