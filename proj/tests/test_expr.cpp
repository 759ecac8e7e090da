/// @file test_expr.cpp
/// @brief Parser tests: precedence, associativity, error positions, and the
///        parse -> print -> parse round trip.
#include <catch2/catch_amalgamated.hpp>

#include <cdarcy/expr.hpp>

#include <cmath>

using namespace cdarcy;

TEST_CASE("basic arithmetic and the default forcing term") {
  auto e = parse_expr("x2*(0.5-x2)");
  CHECK(e.eval(0.3, 0.1) == Catch::Approx(0.04).epsilon(1e-15));
  CHECK(e.eval(0.0, 0.25) == Catch::Approx(0.0625).epsilon(1e-15));

  CHECK(parse_expr("0").eval(1.0, 2.0) == 0.0);
  CHECK(parse_expr("1+2*3").eval(0, 0) == Catch::Approx(7.0));
  CHECK(parse_expr("(1+2)*3").eval(0, 0) == Catch::Approx(9.0));
  CHECK(parse_expr("6/3/2").eval(0, 0) == Catch::Approx(1.0));
  CHECK(parse_expr("1-2-3").eval(0, 0) == Catch::Approx(-4.0));
}

TEST_CASE("power is right-associative and binds tighter than unary minus") {
  CHECK(parse_expr("2^3^2").eval(0, 0) == Catch::Approx(512.0));
  CHECK(parse_expr("-2^2").eval(0, 0) == Catch::Approx(-4.0));
  CHECK(parse_expr("(-2)^2").eval(0, 0) == Catch::Approx(4.0));
  CHECK(parse_expr("2^-1").eval(0, 0) == Catch::Approx(0.5));
  CHECK(parse_expr("2*x1^2").eval(3, 0) == Catch::Approx(18.0));
}

TEST_CASE("functions") {
  CHECK(parse_expr("sin(0)").eval(0, 0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(parse_expr("cos(0)").eval(0, 0) == Catch::Approx(1.0));
  CHECK(parse_expr("exp(1)").eval(0, 0) == Catch::Approx(std::exp(1.0)));
  CHECK(parse_expr("sqrt(x1^2+x2^2)").eval(3, 4) == Catch::Approx(5.0));
  CHECK_THROWS_AS(parse_expr("sqrt(-1)").eval(0, 0), Error);
}

TEST_CASE("syntax errors carry line, column and expectation") {
  try {
    parse_expr("1+");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& err) {
    CHECK(err.line == 1);
    CHECK(err.col == 3);
    CHECK_FALSE(err.expected.empty());
  }

  try {
    parse_expr("x3+1");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& err) {
    CHECK(err.line == 1);
    CHECK(err.col == 1);
  }

  try {
    parse_expr("1+\n2*(4");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& err) {
    CHECK(err.line == 2);
    CHECK(err.col == 5);
  }

  CHECK_THROWS_AS(parse_expr(""), SyntaxError);
  CHECK_THROWS_AS(parse_expr("sin 3"), SyntaxError);
  CHECK_THROWS_AS(parse_expr("(1+2"), SyntaxError);
  CHECK_THROWS_AS(parse_expr("1 2"), SyntaxError);
}

TEST_CASE("parse -> print -> parse is idempotent") {
  const char* samples[] = {
      "x2*(0.5-x2)",
      "2^3^2",
      "-x1^2+3*x2",
      "sin(x1)*cos(x2)-exp(-x1*x2)",
      "sqrt(x1^2+x2^2)/(1+x1)",
      "1-2-3",
      "6/3/2",
      "-(x1+x2)",
      "2^-1",
  };
  for (const char* s : samples) {
    auto e1 = parse_expr(s);
    const std::string p1 = e1.print();
    auto e2 = parse_expr(p1);
    const std::string p2 = e2.print();
    CHECK(p1 == p2);
    // Printed form evaluates identically to the original.
    for (double x1 : {0.0, 0.3, 1.7}) {
      for (double x2 : {0.1, 0.45}) {
        CHECK(e1.eval(x1, x2) == Catch::Approx(e2.eval(x1, x2)).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("whitespace and multi-line input are accepted") {
  auto e = parse_expr("  x1 \n + \t 2 * x2 ");
  CHECK(e.eval(1.0, 2.0) == Catch::Approx(5.0));
}
