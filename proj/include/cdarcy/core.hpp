/// @file core.hpp
/// @brief Shared basics: error taxonomy, small vector aliases, hashing and
///        locale-independent number formatting used across the library.
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdarcy {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;

// ===========================================================================
// Error taxonomy
//
// Every failure mode that callers are expected to handle has its own type so
// tests and the CLI can react to the class of failure, not message strings.
// ===========================================================================

/// Root of all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Requested mesh resolution cannot resolve the geometry (e.g. hole too
/// close to the cell boundary for the target edge length).
class InfeasibleResolution : public Error {
public:
  using Error::Error;
};

/// The requested period does not tile the rectangle.
class NonTilingEps : public Error {
public:
  using Error::Error;
};

/// Internal consistency check of the prism-splitting rule failed.
class NonConformingSplit : public Error {
public:
  using Error::Error;
};

/// A structured input file could not be parsed; carries the 1-based line.
class ParseError : public Error {
public:
  ParseError(const std::string& msg, long line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line(line) {}
  long line;
};

/// Mesh file contains an element type outside the supported subset.
class UnsupportedElementType : public Error {
public:
  explicit UnsupportedElementType(int type)
      : Error("unsupported element type " + std::to_string(type)),
        element_type(type) {}
  int element_type;
};

/// A function space was used with a mesh it was not built on.
class SpaceMeshMismatch : public Error {
public:
  using Error::Error;
};

/// Direct factorization reported a singular (or numerically singular) matrix.
class SingularSystem : public Error {
public:
  using Error::Error;
};

/// A linear solve did not reach the requested residual tolerance.
class ToleranceNotReached : public Error {
public:
  ToleranceNotReached(const std::string& msg, double achieved)
      : Error(msg), achieved(achieved) {}
  double achieved;
};

/// Inner (cell) Newton iteration failed to converge.
class NewtonDiverged : public Error {
public:
  NewtonDiverged(int iters, double last_residual)
      : Error("cell Newton diverged after " + std::to_string(iters) +
              " iterations, last residual " + std::to_string(last_residual)),
        iters(iters), last_residual(last_residual) {}
  int iters;
  double last_residual;
};

/// Outer (pressure) Newton iteration failed to converge; keeps the history.
class OuterNewtonDiverged : public Error {
public:
  OuterNewtonDiverged(std::vector<double> hist)
      : Error("outer Newton diverged after " + std::to_string(hist.size()) +
              " iterations"),
        history(std::move(hist)) {}
  std::vector<double> history;
};

/// Interpolation request outside the tabulated radius range.
class OutOfTableRange : public Error {
public:
  OutOfTableRange(double x1, double x2, double max_radius)
      : Error("xi=(" + std::to_string(x1) + "," + std::to_string(x2) +
              ") outside tabulated radius " + std::to_string(max_radius)),
        xi1(x1), xi2(x2), max_radius(max_radius) {}
  double xi1, xi2, max_radius;
};

/// Expression parser error with source position and expectation.
class SyntaxError : public Error {
public:
  SyntaxError(int line, int col, const std::string& expected)
      : Error("syntax error at " + std::to_string(line) + ":" +
              std::to_string(col) + ", expected " + expected),
        line(line), col(col), expected(expected) {}
  int line;
  int col;
  std::string expected;
};

/// Configuration file or override is invalid.
class ConfigError : public Error {
public:
  using Error::Error;
};

// ===========================================================================
// Hashing
// ===========================================================================

/// Incremental FNV-1a (64 bit); used to fingerprint meshes and configs.
class Fnv1a {
public:
  void add_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ull;
    }
  }
  void add(double v) { add_bytes(&v, sizeof v); }
  void add(std::int64_t v) { add_bytes(&v, sizeof v); }
  void add(const std::string& s) { add_bytes(s.data(), s.size()); }
  std::uint64_t value() const { return state_; }

  /// Hex digest, fixed 16 characters.
  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = state_;
    for (int i = 15; i >= 0; --i) {
      out[static_cast<std::size_t>(i)] = digits[v & 0xf];
      v >>= 4;
    }
    return out;
  }

private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

// ===========================================================================
// Locale-independent number formatting
// ===========================================================================

/// Shortest representation that round-trips the exact double value.
inline std::string format_full(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Fixed 9 significant digits (general format), locale independent.
inline std::string format_sig9(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v,
                           std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

}  // namespace cdarcy
