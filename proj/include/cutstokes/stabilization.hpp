#pragma once

#include <string>

#include "cutstokes/assembly.hpp"

namespace cutstokes {

enum class GhostVariant { jump, projection, direct };

GhostVariant parse_ghost_variant(const std::string& name);
const char* to_string(GhostVariant variant);

/// gamma_g g_h over faces_ghost, applied to each velocity component.
///   jump:       sum_k h^{2k-1} ([d_n^k u], [d_n^k v])_e,  k = 1..m
///   projection: h^{-2} (u - pi_w u, v)_w, pi_w the L2 projection onto P_m(w)
///   direct:     h^{-2} (u_1 - u_2, v_1 - v_2)_w, u_i the polynomial of cell i
/// with w the two-cell patch of face e.
SparseMatrix assemble_ghost_penalty(const SlabView& view, GhostVariant variant, double gamma_g,
                                    double h);

/// gamma_p s_h on the pressure block: h^3 ([d_n p], [d_n q]) on faces_int and
/// sum_k h^{2k+1} ([d_n^k p], [d_n^k q]) on the cut faces of faces_cip.
SparseMatrix assemble_cip(const SlabView& view, double gamma_p, double h);

/// g_h(u, u) without gamma_g, evaluated face by face from the field itself
/// (jumps, extension differences, projection residuals at quadrature points)
/// rather than through the assembled matrix. Summed over both components of
/// the background coefficient vector.
double ghost_energy(const SlabView& view, GhostVariant variant,
                    const Eigen::VectorXd& coefficients, double h);

/// s_h(p, p) without gamma_p, evaluated the same way.
double cip_energy(const SlabView& view, const Eigen::VectorXd& coefficients, double h);

// Unit normal of an interior face, pointing from cells[0] into cells[1].
Vec2 face_normal(const BackgroundMesh& mesh, int face);

/// |||u|||^2 = ||grad u||^2 + gamma_g g_h(u,u) + (gamma_D/h) ||u||^2 on the
/// Dirichlet boundary, from already assembled parts. `x` is a compressed
/// state; only its velocity entries are read.
double triple_norm(const AssembledSystem& system, const Eigen::VectorXd& x);

/// Same quantity evaluated directly from background coefficients by
/// quadrature (gradient and boundary terms) plus the ghost form.
double triple_norm(const SlabView& view, const SlabQuadrature& quad,
                   const Eigen::VectorXd& coefficients, double gamma_D, double gamma_g,
                   GhostVariant variant, double h);

/// s_h(p, p) without gamma_p.
double cip_energy(const AssembledSystem& system, const Eigen::VectorXd& x);

}  // namespace cutstokes
