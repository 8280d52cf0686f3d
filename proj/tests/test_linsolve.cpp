#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "cutstokes/linsolve.hpp"

using namespace cutstokes;
using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

namespace {

Sparse random_system(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, 4.0 + uni(rng));
    t.emplace_back(i, (i + 1) % n, uni(rng));
    t.emplace_back((i + 3) % n, i, uni(rng));
  }
  Sparse a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

}  // namespace

TEST_CASE("small system solved exactly") {
  Sparse a(2, 2);
  a.insert(0, 0) = 2;
  a.insert(0, 1) = 1;
  a.insert(1, 0) = 1;
  a.insert(1, 1) = 3;
  const SolveResult r = solve(a, Eigen::Vector2d(3, 4));
  CHECK((r.x - Eigen::Vector2d(1, 1)).norm() <= 1e-14);
  CHECK(r.residual <= 1e-15);
}

TEST_CASE("saddle point system with a zero block") {
  // [1 0 1; 0 1 1; 1 1 0] x = (1, 2, 3)
  Sparse a(3, 3);
  a.insert(0, 0) = 1;
  a.insert(0, 2) = 1;
  a.insert(1, 1) = 1;
  a.insert(1, 2) = 1;
  a.insert(2, 0) = 1;
  a.insert(2, 1) = 1;
  const Eigen::Vector3d b(1, 2, 3);
  const SolveResult r = solve(a, b);
  const Eigen::Vector3d x = Eigen::MatrixXd(a).fullPivLu().solve(b);
  CHECK((r.x - x).norm() <= 1e-13);
}

TEST_CASE("solution is invariant under a symmetric permutation") {
  const int n = 200;
  const Sparse a = random_system(n, 3);
  Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(n, -1.0, 2.0);
  Eigen::VectorXi perm(n);
  for (int i = 0; i < n; ++i) perm[i] = (7 * i + 3) % n;
  const Eigen::PermutationMatrix<Eigen::Dynamic> p(perm);
  const Sparse pa = (p * a * p.transpose()).eval();
  const SolveResult r = solve(a, b);
  const SolveResult rp = solve(pa, p * b);
  CHECK((p.transpose() * rp.x - r.x).norm() <= 1e-12 * r.x.norm());
  CHECK(r.residual <= 1e-10);
  CHECK(rp.residual <= 1e-10);
}

TEST_CASE("factorization is reused across right hand sides") {
  const Sparse a = random_system(50, 5);
  const SparseSolver solver(a);
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd b = Eigen::VectorXd::Random(50);
    const SolveResult r = solver.solve(b);
    CHECK((a * r.x - b).norm() <= 1e-10 * b.norm());
  }
}

TEST_CASE("zero right hand side gives zero with zero residual") {
  const SolveResult r = solve(random_system(10, 1), Eigen::VectorXd::Zero(10));
  CHECK(r.x.norm() == 0.0);
  CHECK(r.residual == 0.0);
}

TEST_CASE("invalid input is rejected") {
  Sparse singular(2, 2);
  singular.insert(0, 0) = 1;
  singular.insert(1, 0) = 1;
  CHECK_THROWS_AS(solve(singular, Eigen::Vector2d(1, 1)), SolverError);
  CHECK_THROWS_AS(solve(Sparse(2, 3), Eigen::Vector2d(1, 1)), SolverError);
  const Sparse a = random_system(4, 2);
  CHECK_THROWS_AS(solve(a, Eigen::Vector3d(1, 1, 1)), SolverError);
  CHECK_THROWS_AS(solve(a, Eigen::Vector4d(1, 1, 1, 1), 0.0), SolverError);
  CHECK_THROWS_AS(solve(a, Eigen::Vector4d(1, 1, 1, 1), 1.5), SolverError);
}

TEST_CASE("solver statistics record every solve") {
  reset_solver_stats();
  const Sparse a = random_system(30, 9);
  for (int k = 0; k < 4; ++k) solve(a, Eigen::VectorXd::Ones(30));
  const SolverStats s = solver_stats();
  CHECK(s.solves == 4);
  CHECK(s.max_residual <= 1e-10);
  CHECK(std::string(solver_backend()).size() > 0);
}
