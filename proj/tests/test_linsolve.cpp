#include <catch2/catch_amalgamated.hpp>

#include <cdarcy/linsolve.hpp>

#include <random>
#include <vector>

using namespace cdarcy;

namespace {

Eigen::SparseMatrix<double> tridiag(int n, double diag, double off) {
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < n; ++i) {
    trips.emplace_back(i, i, diag);
    if (i + 1 < n) {
      trips.emplace_back(i, i + 1, off);
      trips.emplace_back(i + 1, i, off);
    }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

}  // namespace

TEST_CASE("DirectSolver refactorizes with a reused symbolic analysis") {
  const int n = 200;
  DirectSolver solver;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) b[i] = unif(rng);

  // Same sparsity pattern, different values: the second factorization must
  // reflect the new matrix, not the first.
  const auto A1 = tridiag(n, 4.0, -1.0);
  solver.factorize(A1);
  const Eigen::VectorXd x1 = solver.solve(b);
  CHECK((A1 * x1 - b).norm() <= 1e-12 * b.norm());

  const auto A2 = tridiag(n, 10.0, -2.5);
  solver.factorize(A2);
  const Eigen::VectorXd x2 = solver.solve(b);
  CHECK((A2 * x2 - b).norm() <= 1e-12 * b.norm());
  CHECK((x1 - x2).norm() > 1e-6);  // genuinely different systems
}

TEST_CASE("zero rhs short-circuits to the zero solution") {
  const auto A = tridiag(10, 2.0, -1.0);
  DirectSolver solver;
  solver.factorize(A);
  const Eigen::VectorXd x = solver.solve(Eigen::VectorXd::Zero(10));
  CHECK(x.norm() == 0.0);
}

TEST_CASE("exactly singular matrices raise SingularSystem") {
  Eigen::SparseMatrix<double> A(2, 2);
  std::vector<Eigen::Triplet<double>> trips = {
      {0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}};
  A.setFromTriplets(trips.begin(), trips.end());
  DirectSolver solver;
  CHECK_THROWS_AS(solver.factorize(A), SingularSystem);
}

TEST_CASE("indefinite saddle-point blocks are handled") {
  // [[K B],[B^T 0]] with K SPD: LU must not require definiteness.
  const int n = 30;
  const auto K = tridiag(n, 3.0, -1.0);
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < K.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()),
                         static_cast<int>(it.col()), it.value());
  for (int i = 0; i < n; ++i) {
    trips.emplace_back(i, n, 1.0);
    trips.emplace_back(n, i, 1.0);
  }
  Eigen::SparseMatrix<double> A(n + 1, n + 1);
  A.setFromTriplets(trips.begin(), trips.end());

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd b(n + 1);
  for (int i = 0; i <= n; ++i) b[i] = unif(rng);

  const Eigen::VectorXd x = solve_saddle(A, b);
  CHECK((A * x - b).norm() <= 1e-12 * b.norm());
}
