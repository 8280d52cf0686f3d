#include "cutstokes/linsolve.hpp"

#include <algorithm>
#include <mutex>
#include <string>

#include <Eigen/SparseLU>
#ifdef CUTSTOKES_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

namespace cutstokes {

namespace {

constexpr int kMaxRefinements = 8;

std::mutex stats_mutex;
SolverStats stats;

void record(double residual) {
  std::lock_guard<std::mutex> lock(stats_mutex);
  ++stats.solves;
  stats.max_residual = std::max(stats.max_residual, residual);
}

}  // namespace

SolverStats solver_stats() {
  std::lock_guard<std::mutex> lock(stats_mutex);
  return stats;
}

void reset_solver_stats() {
  std::lock_guard<std::mutex> lock(stats_mutex);
  stats = SolverStats{};
}

struct SparseSolver::Impl {
  Eigen::SparseMatrix<double> matrix;  // column major copy, needed by SparseLU
#ifdef CUTSTOKES_HAVE_UMFPACK
  Eigen::UmfPackLU<Eigen::SparseMatrix<double>> lu;
#else
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
#endif
};

const char* solver_backend() {
#ifdef CUTSTOKES_HAVE_UMFPACK
  return "umfpack";
#else
  return "eigen_sparselu";
#endif
}

SparseSolver::SparseSolver(const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix)
    : impl_(std::make_unique<Impl>()) {
  if (matrix.rows() != matrix.cols()) throw SolverError("solve: matrix is not square");
  impl_->matrix = matrix;
  impl_->matrix.makeCompressed();
#ifdef CUTSTOKES_HAVE_UMFPACK
  // the sparsity pattern of the assembled systems is symmetric
  impl_->lu.umfpackControl()(UMFPACK_STRATEGY) = UMFPACK_STRATEGY_SYMMETRIC;
#endif
  impl_->lu.compute(impl_->matrix);
  if (impl_->lu.info() != Eigen::Success)
    throw SolverError("solve: sparse LU factorization of a " +
                      std::to_string(matrix.rows()) + " x " + std::to_string(matrix.cols()) +
                      " matrix failed (numerically singular)");
}

SparseSolver::~SparseSolver() = default;
SparseSolver::SparseSolver(SparseSolver&&) noexcept = default;
SparseSolver& SparseSolver::operator=(SparseSolver&&) noexcept = default;

SolveResult SparseSolver::solve(const Eigen::VectorXd& b, double rel_tol) const {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw SolverError("solve: rel_tol must lie in (0, 1)");
  if (b.size() != impl_->matrix.rows()) throw SolverError("solve: size mismatch");
  SolveResult result;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    result.x = Eigen::VectorXd::Zero(b.size());
    record(0.0);
    return result;
  }
  result.x = impl_->lu.solve(b);
  Eigen::VectorXd r = b - impl_->matrix * result.x;
  result.residual = r.norm() / bnorm;
  while (!(result.residual <= rel_tol) && result.refinement_steps < kMaxRefinements) {
    result.x += impl_->lu.solve(r);
    r = b - impl_->matrix * result.x;
    result.residual = r.norm() / bnorm;
    ++result.refinement_steps;
  }
  if (!(result.residual <= rel_tol))
    throw SolverError("solve: relative residual " + std::to_string(result.residual) +
                      " above tolerance after " + std::to_string(result.refinement_steps) +
                      " refinement steps");
  record(result.residual);
  return result;
}

SolveResult solve(const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix,
                  const Eigen::VectorXd& b, double rel_tol) {
  return SparseSolver(matrix).solve(b, rel_tol);
}

}  // namespace cutstokes
