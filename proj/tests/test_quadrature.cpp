/// @file test_quadrature.cpp
/// @brief Quadrature oracles: exact monomial integrals on [0,1] with Jacobi
///        weights, and on the reference triangle/tetrahedron,
///          int x^p y^q        = p! q! / (p+q+2)!      (triangle)
///          int x^p y^q z^s    = p! q! s! / (p+q+s+3)! (tetrahedron).
#include <catch2/catch_amalgamated.hpp>

#include <cdarcy/quadrature.hpp>

#include <cmath>

using namespace cdarcy;

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// int_0^1 x^k (1-x)^alpha dx = k! alpha! / (k+alpha+1)!  (Beta function).
double beta_integral(int k, int alpha) {
  return factorial(k) * factorial(alpha) / factorial(k + alpha + 1);
}

double tri_monomial(int p, int q) {
  return factorial(p) * factorial(q) / factorial(p + q + 2);
}

double tet_monomial(int p, int q, int s) {
  return factorial(p) * factorial(q) * factorial(s) / factorial(p + q + s + 3);
}

}  // namespace

TEST_CASE("1D Gauss-Jacobi rules integrate monomials exactly") {
  for (int alpha : {0, 1, 2}) {
    for (int n = 1; n <= 6; ++n) {
      const Quad1D rule = gauss_jacobi_01(n, alpha);
      REQUIRE(rule.points.size() == static_cast<std::size_t>(n));
      for (std::size_t i = 0; i < rule.points.size(); ++i) {
        CHECK(rule.points[i] > 0.0);
        CHECK(rule.points[i] < 1.0);
        CHECK(rule.weights[i] > 0.0);
      }
      for (int k = 0; k <= 2 * n - 1; ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < rule.points.size(); ++i)
          sum += rule.weights[i] * std::pow(rule.points[i], k);
        const double exact = beta_integral(k, alpha);
        CHECK(sum == Catch::Approx(exact).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("triangle rule: weights sum to area, monomials exact") {
  for (int degree : {2, 3, 4, 5, 7}) {
    const auto rule = triangle_rule(degree);
    double total = 0.0;
    for (std::size_t i = 0; i < rule.weights.size(); ++i) {
      total += rule.weights[i];
      CHECK(rule.weights[i] > 0.0);
      const auto& p = rule.points[i];
      CHECK(p.x() >= 0.0);
      CHECK(p.y() >= 0.0);
      CHECK(p.x() + p.y() <= 1.0);
    }
    CHECK(total == Catch::Approx(0.5).epsilon(1e-14));
    REQUIRE(rule.degree >= degree);

    for (int p = 0; p <= degree; ++p) {
      for (int q = 0; p + q <= degree; ++q) {
        double sum = 0.0;
        for (std::size_t i = 0; i < rule.points.size(); ++i)
          sum += rule.weights[i] * std::pow(rule.points[i].x(), p) *
                 std::pow(rule.points[i].y(), q);
        CHECK(sum == Catch::Approx(tri_monomial(p, q)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("tetrahedron rule: weights sum to volume, monomials exact") {
  for (int degree : {2, 4, 5}) {
    const auto rule = tetrahedron_rule(degree);
    double total = 0.0;
    for (std::size_t i = 0; i < rule.weights.size(); ++i) {
      total += rule.weights[i];
      CHECK(rule.weights[i] > 0.0);
      const auto& p = rule.points[i];
      CHECK(p.x() >= 0.0);
      CHECK(p.y() >= 0.0);
      CHECK(p.z() >= 0.0);
      CHECK(p.x() + p.y() + p.z() <= 1.0 + 1e-15);
    }
    CHECK(total == Catch::Approx(1.0 / 6.0).epsilon(1e-14));

    for (int p = 0; p <= degree; ++p) {
      for (int q = 0; p + q <= degree; ++q) {
        for (int s = 0; p + q + s <= degree; ++s) {
          double sum = 0.0;
          for (std::size_t i = 0; i < rule.points.size(); ++i)
            sum += rule.weights[i] * std::pow(rule.points[i].x(), p) *
                   std::pow(rule.points[i].y(), q) *
                   std::pow(rule.points[i].z(), s);
          CHECK(sum == Catch::Approx(tet_monomial(p, q, s)).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("default degree-4 rules have the expected conical-product sizes") {
  CHECK(triangle_rule(4).points.size() == 9);    // 3x3
  CHECK(tetrahedron_rule(4).points.size() == 27);  // 3x3x3
}
