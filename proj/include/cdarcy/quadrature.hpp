/// @file quadrature.hpp
/// @brief Gauss quadrature on the reference triangle and tetrahedron via
///        conical products of 1D Gauss-Jacobi rules (computed at runtime
///        with Golub-Welsch, no hard-coded tables).
#pragma once

#include <cdarcy/core.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace cdarcy {

/// 1D rule on [0,1].
struct Quad1D {
  std::vector<double> points;
  std::vector<double> weights;
};

/// Gauss rule with n points for the weight (1-x)^alpha on [0,1]:
///   integral_0^1 f(x) (1-x)^alpha dx  ~=  sum_i w_i f(x_i),
/// exact for polynomials f of degree <= 2n-1. Nodes/weights are obtained by
/// the Golub-Welsch eigenvalue method applied to the Jacobi(alpha, 0)
/// recurrence on [-1,1], then mapped to [0,1].
inline Quad1D gauss_jacobi_01(int n, int alpha) {
  const double a = static_cast<double>(alpha);
  const double b = 0.0;

  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    double diag;
    if (k == 0) {
      diag = (b - a) / (a + b + 2.0);
    } else {
      const double s = 2.0 * k + a + b;
      diag = (b * b - a * a) / (s * (s + 2.0));
    }
    J(k, k) = diag;
    if (k >= 1) {
      const double s = 2.0 * k + a + b;
      const double num = 4.0 * k * (k + a) * (k + b) * (k + a + b);
      const double den = s * s * (s + 1.0) * (s - 1.0);
      const double off = std::sqrt(num / den);
      J(k, k - 1) = off;
      J(k - 1, k) = off;
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  const Eigen::VectorXd x = es.eigenvalues();
  const Eigen::MatrixXd V = es.eigenvectors();

  // Total mass of (1-x)^a (1+x)^b on [-1,1] with b = 0.
  const double mu0 = std::pow(2.0, a + b + 1.0) / (a + 1.0);

  Quad1D rule;
  rule.points.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double wi = mu0 * V(0, i) * V(0, i);
    // Map [-1,1] -> [0,1]; (1-x)^a dx picks up a factor 2^(a+1).
    rule.points[static_cast<std::size_t>(i)] = 0.5 * (1.0 + x(i));
    rule.weights[static_cast<std::size_t>(i)] = wi / std::pow(2.0, a + 1.0);
  }
  return rule;
}

/// Quadrature rule on a reference simplex (triangle for dim = 2 with
/// vertices (0,0),(1,0),(0,1); tetrahedron for dim = 3 with the unit
/// corner simplex). Weights sum to the reference volume.
template <int dim>
struct SimplexRule {
  using Point = Eigen::Matrix<double, dim, 1>;
  std::vector<Point> points;
  std::vector<double> weights;
  int degree = 0;  ///< total polynomial degree integrated exactly
};

/// Conical-product rule on the reference triangle, exact for total degree
/// <= `degree`.
inline SimplexRule<2> triangle_rule(int degree) {
  const int n = (degree + 2) / 2;  // ceil((degree+1)/2)
  const Quad1D r1 = gauss_jacobi_01(n, 1);
  const Quad1D r0 = gauss_jacobi_01(n, 0);

  SimplexRule<2> rule;
  rule.degree = 2 * n - 1;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double x = r1.points[static_cast<std::size_t>(i)];
      const double y = r0.points[static_cast<std::size_t>(j)] * (1.0 - x);
      rule.points.push_back({x, y});
      rule.weights.push_back(r1.weights[static_cast<std::size_t>(i)] *
                             r0.weights[static_cast<std::size_t>(j)]);
    }
  }
  return rule;
}

/// Conical-product rule on the reference tetrahedron, exact for total degree
/// <= `degree`.
inline SimplexRule<3> tetrahedron_rule(int degree) {
  const int n = (degree + 2) / 2;
  const Quad1D r2 = gauss_jacobi_01(n, 2);
  const Quad1D r1 = gauss_jacobi_01(n, 1);
  const Quad1D r0 = gauss_jacobi_01(n, 0);

  SimplexRule<3> rule;
  rule.degree = 2 * n - 1;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const double t1 = r2.points[static_cast<std::size_t>(i)];
        const double t2 = r1.points[static_cast<std::size_t>(j)];
        const double t3 = r0.points[static_cast<std::size_t>(k)];
        const double x = t1;
        const double y = t2 * (1.0 - t1);
        const double z = t3 * (1.0 - t1) * (1.0 - t2);
        rule.points.push_back({x, y, z});
        rule.weights.push_back(r2.weights[static_cast<std::size_t>(i)] *
                               r1.weights[static_cast<std::size_t>(j)] *
                               r0.weights[static_cast<std::size_t>(k)]);
      }
    }
  }
  return rule;
}

}  // namespace cdarcy
