#pragma once

#include <memory>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "cutstokes/geometry.hpp"

namespace cutstokes {

class SolverError : public Error {
 public:
  using Error::Error;
};

struct SolveResult {
  Eigen::VectorXd x;
  double residual = 0.0;  // ||A x - b|| / ||b||, or 0 when b == 0
  int refinement_steps = 0;
};

// Sparse LU factorization with iterative refinement. The residual contract
// ||A x - b|| <= rel_tol ||b|| is checked on every solve; a violation is an
// error, not a warning.
class SparseSolver {
 public:
  explicit SparseSolver(const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix);
  ~SparseSolver();
  SparseSolver(SparseSolver&&) noexcept;
  SparseSolver& operator=(SparseSolver&&) noexcept;

  SolveResult solve(const Eigen::VectorXd& b, double rel_tol = 1e-10) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Name of the factorization in use ("umfpack" or "eigen_sparselu").
const char* solver_backend();

// Process-wide record of every completed solve, shared by all threads.
struct SolverStats {
  long solves = 0;
  double max_residual = 0.0;
};

SolverStats solver_stats();
void reset_solver_stats();

SolveResult solve(const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix,
                  const Eigen::VectorXd& b, double rel_tol = 1e-10);

}  // namespace cutstokes
