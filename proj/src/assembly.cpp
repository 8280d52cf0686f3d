#include "cutstokes/assembly.hpp"

#include <ostream>

#include "cutstokes/linsolve.hpp"

namespace cutstokes {

Eigen::VectorXd SystemLayout::gather(const Eigen::VectorXd& background) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(size());
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < n_velocity(); ++i)
      x[c * n_velocity() + i] = background[c * n_background + velocity_dofs[i]];
  for (int i = 0; i < n_pressure(); ++i)
    x[pressure_offset() + i] = background[2 * n_background + pressure_dofs[i]];
  return x;
}

Eigen::VectorXd SystemLayout::scatter(const Eigen::VectorXd& compressed) const {
  Eigen::VectorXd bg = Eigen::VectorXd::Zero(3 * n_background);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < n_velocity(); ++i)
      bg[c * n_background + velocity_dofs[i]] = compressed[c * n_velocity() + i];
  for (int i = 0; i < n_pressure(); ++i)
    bg[2 * n_background + pressure_dofs[i]] = compressed[pressure_offset() + i];
  return bg;
}

SystemLayout make_layout(const DofMap& dofs, const ActiveSlabMesh& slab) {
  SystemLayout l;
  l.n_background = dofs.n_dofs();
  l.velocity_dofs = slab.velocity_dofs;
  l.pressure_dofs = slab.pressure_dofs;
  l.velocity_index.assign(dofs.n_dofs(), -1);
  l.pressure_index.assign(dofs.n_dofs(), -1);
  for (int i = 0; i < l.n_velocity(); ++i) l.velocity_index[l.velocity_dofs[i]] = i;
  for (int i = 0; i < l.n_pressure(); ++i) l.pressure_index[l.pressure_dofs[i]] = i;
  return l;
}

namespace {

SparseMatrix from_triplets(int n, const Triplets& t) {
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

SparseMatrix assemble_stokes(const SlabView& view, const SlabQuadrature& quad) {
  const LagrangeBasis basis(view.dofs.degree());
  const int n = basis.size();
  const auto& L = view.layout;
  Triplets t;
  t.reserve(quad.cells.size() * n * n * 6);
  for (const auto& cq : quad.cells) {
    if (cq.volume.empty()) continue;
    const CellMap map(view.mesh.cell_points(cq.cell));
    const auto dofs = view.dofs.cell_dofs(cq.cell);
    LocalMatrix lap = LocalMatrix::Zero(n, n);
    // div_c(i, j) = int d_c phi_i psi_j
    LocalMatrix div_x = LocalMatrix::Zero(n, n), div_y = LocalMatrix::Zero(n, n);
    for (const auto& qp : cq.volume) {
      const LocalVector phi = basis.values(map, qp.x);
      const LocalGradients grad = basis.gradients(map, qp.x);
      lap.noalias() += qp.weight * grad * grad.transpose();
      div_x.noalias() += qp.weight * grad.col(0) * phi.transpose();
      div_y.noalias() += qp.weight * grad.col(1) * phi.transpose();
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int c = 0; c < 2; ++c) {
          const LocalMatrix& div = c == 0 ? div_x : div_y;
          t.emplace_back(L.u(c, dofs[i]), L.u(c, dofs[j]), lap(i, j));
          t.emplace_back(L.u(c, dofs[i]), L.p(dofs[j]), -div(i, j));
          t.emplace_back(L.p(dofs[i]), L.u(c, dofs[j]), div(j, i));
        }
      }
    }
  }
  return from_triplets(L.size(), t);
}

NitscheTerms assemble_nitsche(const SlabView& view, const SlabQuadrature& quad,
                              const DomainMotion& motion, double gamma_D, double h, double t) {
  if (!(gamma_D > 0.0)) throw Error("assemble_nitsche: gamma_D must be positive");
  const LagrangeBasis basis(view.dofs.degree());
  const int n = basis.size();
  const auto& L = view.layout;
  const double penalty = gamma_D / h;
  Triplets cons, pen;
  NitscheTerms out;
  out.rhs = Eigen::VectorXd::Zero(L.size());
  for (const auto& cq : quad.cells) {
    if (cq.surface.empty()) continue;
    const CellMap map(view.mesh.cell_points(cq.cell));
    const auto dofs = view.dofs.cell_dofs(cq.cell);
    LocalMatrix a = LocalMatrix::Zero(n, n), m = LocalMatrix::Zero(n, n);
    // pn_c(i, j) = int phi_i psi_j n_c
    LocalMatrix pn_x = LocalMatrix::Zero(n, n), pn_y = LocalMatrix::Zero(n, n);
    bool any = false;
    for (const auto& sp : cq.surface) {
      if (sp.tag != BoundaryTag::dirichlet) continue;
      any = true;
      const LocalVector phi = basis.values(map, sp.x);
      const LocalVector dn = basis.gradients(map, sp.x) * sp.normal;
      a.noalias() -= sp.weight * (phi * dn.transpose() + dn * phi.transpose());
      m.noalias() += sp.weight * phi * phi.transpose();
      pn_x.noalias() += sp.weight * sp.normal.x() * phi * phi.transpose();
      pn_y.noalias() += sp.weight * sp.normal.y() * phi * phi.transpose();
      const Vec2 g = motion.dirichlet_data(sp.x, t);
      for (int i = 0; i < n; ++i) {
        for (int c = 0; c < 2; ++c)
          out.rhs[L.u(c, dofs[i])] += sp.weight * g[c] * (penalty * phi[i] - dn[i]);
        out.rhs[L.p(dofs[i])] -= sp.weight * g.dot(sp.normal) * phi[i];
      }
    }
    if (!any) continue;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int c = 0; c < 2; ++c) {
          const LocalMatrix& pn = c == 0 ? pn_x : pn_y;
          cons.emplace_back(L.u(c, dofs[i]), L.u(c, dofs[j]), a(i, j));
          pen.emplace_back(L.u(c, dofs[i]), L.u(c, dofs[j]), penalty * m(i, j));
          cons.emplace_back(L.u(c, dofs[i]), L.p(dofs[j]), pn(i, j));
          cons.emplace_back(L.p(dofs[i]), L.u(c, dofs[j]), -pn(j, i));
        }
      }
    }
  }
  out.consistency = from_triplets(L.size(), cons);
  out.penalty = from_triplets(L.size(), pen);
  return out;
}

SparseMatrix assemble_mass(const SlabView& view, const SlabQuadrature& quad) {
  const LagrangeBasis basis(view.dofs.degree());
  const int n = basis.size();
  const auto& L = view.layout;
  Triplets t;
  t.reserve(quad.cells.size() * n * n * 2);
  for (const auto& cq : quad.cells) {
    if (cq.volume.empty()) continue;
    const CellMap map(view.mesh.cell_points(cq.cell));
    const auto dofs = view.dofs.cell_dofs(cq.cell);
    LocalMatrix m = LocalMatrix::Zero(n, n);
    for (const auto& qp : cq.volume) {
      const LocalVector phi = basis.values(map, qp.x);
      m.noalias() += qp.weight * phi * phi.transpose();
    }
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t.emplace_back(L.u(c, dofs[i]), L.u(c, dofs[j]), m(i, j));
  }
  return from_triplets(L.size(), t);
}

Eigen::VectorXd assemble_forcing(const SlabView& view, const SlabQuadrature& quad,
                                 const VectorField& f, double t) {
  const LagrangeBasis basis(view.dofs.degree());
  const auto& L = view.layout;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(L.size());
  if (!f) return rhs;
  for (const auto& cq : quad.cells) {
    const CellMap map(view.mesh.cell_points(cq.cell));
    const auto dofs = view.dofs.cell_dofs(cq.cell);
    for (const auto& qp : cq.volume) {
      const LocalVector phi = basis.values(map, qp.x);
      const Vec2 fx = f(qp.x, t);
      for (int i = 0; i < basis.size(); ++i)
        for (int c = 0; c < 2; ++c) rhs[L.u(c, dofs[i])] += qp.weight * fx[c] * phi[i];
    }
  }
  return rhs;
}

TimeTerms assemble_time_terms(const SlabView& view, const SlabQuadrature& quad,
                              std::span<const double> alpha, double dt,
                              std::span<const PreviousLevel> previous) {
  if (alpha.size() != previous.size() + 1)
    throw Error("assemble_time_terms: need one previous level per BDF coefficient");
  if (!(dt > 0.0)) throw Error("assemble_time_terms: dt must be positive");
  const LagrangeBasis basis(view.dofs.degree());
  const int n = basis.size();
  const auto& L = view.layout;
  const int nb = L.n_background;
  TimeTerms out;
  out.rhs = Eigen::VectorXd::Zero(L.size());
  Triplets t;
  t.reserve(quad.cells.size() * n * n * 2);
  for (const auto& cq : quad.cells) {
    if (cq.volume.empty()) continue;
    const CellMap map(view.mesh.cell_points(cq.cell));
    const auto dofs = view.dofs.cell_dofs(cq.cell);
    for (std::size_t k = 0; k < previous.size(); ++k) {
      const auto& active = *previous[k].active;
      for (int d : dofs)
        if (!active[d])
          throw ContainmentError("time level n-" + std::to_string(k + 1) +
                                 " has no value on cell " + std::to_string(cq.cell) +
                                 " of the physical domain at step " +
                                 std::to_string(view.slab.step_index));
    }
    LocalMatrix m = LocalMatrix::Zero(n, n);
    for (const auto& qp : cq.volume) {
      const LocalVector phi = basis.values(map, qp.x);
      m.noalias() += qp.weight * phi * phi.transpose();
    }
    for (int c = 0; c < 2; ++c) {
      LocalVector history = LocalVector::Zero(n);
      for (std::size_t k = 0; k < previous.size(); ++k) {
        const auto& coeff = *previous[k].coefficients;
        for (int j = 0; j < n; ++j) history[j] += alpha[k + 1] * coeff[c * nb + dofs[j]];
      }
      const LocalVector r = -(m * history) / dt;
      for (int i = 0; i < n; ++i) {
        out.rhs[L.u(c, dofs[i])] += r[i];
        for (int j = 0; j < n; ++j)
          t.emplace_back(L.u(c, dofs[i]), L.u(c, dofs[j]), alpha[0] / dt * m(i, j));
      }
    }
  }
  out.matrix = from_triplets(L.size(), t);
  return out;
}

Projection l2_project(const SlabView& view, const SlabQuadrature& quad, const VectorField& u,
                      double t, double rel_tol) {
  const LagrangeBasis basis(view.dofs.degree());
  const int n = basis.size();
  const int nb = view.dofs.n_dofs();
  std::vector<double> diag(nb, 0.0);
  Triplets trip;
  std::vector<Eigen::Vector2d> load(nb, Eigen::Vector2d::Zero());
  for (const auto& cq : quad.cells) {
    if (cq.volume.empty()) continue;
    const CellMap map(view.mesh.cell_points(cq.cell));
    const auto dofs = view.dofs.cell_dofs(cq.cell);
    LocalMatrix m = LocalMatrix::Zero(n, n);
    for (const auto& qp : cq.volume) {
      const LocalVector phi = basis.values(map, qp.x);
      m.noalias() += qp.weight * phi * phi.transpose();
      const Vec2 ux = u(qp.x, t);
      for (int i = 0; i < n; ++i) load[dofs[i]] += qp.weight * phi[i] * ux;
    }
    for (int i = 0; i < n; ++i) {
      diag[dofs[i]] += m(i, i);
      for (int j = 0; j < n; ++j) trip.emplace_back(dofs[i], dofs[j], m(i, j));
    }
  }
  std::vector<int> index(nb, -1);
  std::vector<int> kept;
  for (int d = 0; d < nb; ++d)
    if (diag[d] > 0.0) {
      index[d] = static_cast<int>(kept.size());
      kept.push_back(d);
    }
  if (kept.empty()) throw Error("l2_project: empty physical domain");
  Triplets reduced;
  reduced.reserve(trip.size());
  for (const auto& e : trip)
    reduced.emplace_back(index[e.row()], index[e.col()], e.value());
  const int nk = static_cast<int>(kept.size());
  SparseMatrix mass(nk, nk);
  mass.setFromTriplets(reduced.begin(), reduced.end());

  Projection out;
  out.coefficients = Eigen::VectorXd::Zero(3 * nb);
  out.active.assign(nb, 0);
  const SparseSolver solver(mass);
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd b(nk);
    for (int i = 0; i < nk; ++i) b[i] = load[kept[i]][c];
    const SolveResult r = solver.solve(b, rel_tol);
    out.residual = std::max(out.residual, r.residual);
    for (int i = 0; i < nk; ++i) out.coefficients[c * nb + kept[i]] = r.x[i];
  }
  for (int d : kept) out.active[d] = 1;
  return out;
}

PressureGauge parse_pressure_gauge(const std::string& name) {
  if (name == "none") return PressureGauge::none;
  if (name == "zero_mean") return PressureGauge::zero_mean;
  throw Error("unknown pressure gauge '" + name + "' (expected none or zero_mean)");
}

const char* to_string(PressureGauge gauge) {
  return gauge == PressureGauge::none ? "none" : "zero_mean";
}

SparseMatrix padded(const SparseMatrix& m, int size) {
  SparseMatrix out = m;
  out.conservativeResize(size, size);
  return out;
}

void apply_pressure_gauge(AssembledSystem& system, const SlabView& view,
                          const SlabQuadrature& quad, const DomainMotion& motion,
                          PressureGauge mode) {
  if (mode == PressureGauge::none) {
    if (!motion.has_do_nothing())
      throw Error(
          "pressure gauge 'none' is singular: every boundary part of '" + motion.name +
          "' is Dirichlet, so the pressure is only determined up to a constant; use zero_mean");
    return;
  }
  if (system.layout.mean_constraint) return;
  const LagrangeBasis basis(view.dofs.degree());
  const int n0 = system.layout.size();
  system.layout.mean_constraint = true;
  const int mult = n0;
  Triplets t;
  for (const auto& cq : quad.cells) {
    const CellMap map(view.mesh.cell_points(cq.cell));
    const auto dofs = view.dofs.cell_dofs(cq.cell);
    for (const auto& qp : cq.volume) {
      const LocalVector phi = basis.values(map, qp.x);
      for (int i = 0; i < basis.size(); ++i) {
        const int row = system.layout.p(dofs[i]);
        t.emplace_back(mult, row, qp.weight * phi[i]);
        t.emplace_back(row, mult, qp.weight * phi[i]);
      }
    }
  }
  SparseMatrix constraint(n0 + 1, n0 + 1);
  constraint.setFromTriplets(t.begin(), t.end());
  system.matrix = padded(system.matrix, n0 + 1) + constraint;
  system.rhs.conservativeResize(n0 + 1);
  system.rhs[n0] = 0.0;
}

SparseMatrix block(const SparseMatrix& m, int row0, int rows, int col0, int cols) {
  return m.block(row0, col0, rows, cols);
}

void write_matrix_market(std::ostream& out, const SparseMatrix& m) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  out.precision(17);
  for (int r = 0; r < m.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

}  // namespace cutstokes
