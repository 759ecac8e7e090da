/// @file carreau.hpp
/// @brief Carreau viscosity law, its exact directional derivative, and the
///        pointwise stress kernel used by the nonlinear cell solver.
#pragma once

#include <cdarcy/core.hpp>

#include <cmath>
#include <functional>
#include <string>

namespace cdarcy {

// ===========================================================================
// Parameters
// ===========================================================================

/// Parameters of the Carreau viscosity model
///   eta(D) = (eta0 - etaInf) * (1 + lambda*|D|^2)^(r/2 - 1) + etaInf.
/// r < 2 is shear thinning, r = 2 Newtonian, r > 2 shear thickening.
struct CarreauParams {
  double r = 1.3;       ///< flow index, must satisfy r > 1
  double lambda = 1.0;  ///< time constant, > 0
  double mu = 1.0;      ///< viscosity scale multiplying the stress divergence
  double eta0 = 1.0;    ///< zero-shear viscosity
  double etaInf = 0.0;  ///< infinite-shear viscosity, 0 <= etaInf < eta0

  /// Throws ConfigError for invalid parameters. etaInf == 0 is accepted
  /// (every experiment here uses it) but flagged through `warning` since the
  /// r <= 2 existence theory asks for strict positivity.
  void validate(std::function<void(const std::string&)> warning = {}) const {
    if (!(r > 1.0)) throw ConfigError("carreau.r must satisfy r > 1");
    if (!(lambda > 0.0)) throw ConfigError("carreau.lambda must be positive");
    if (!(mu > 0.0)) throw ConfigError("carreau.mu must be positive");
    if (!(eta0 > etaInf))
      throw ConfigError("carreau.eta0 must exceed carreau.etaInf");
    if (!(etaInf >= 0.0)) throw ConfigError("carreau.etaInf must be >= 0");
    if (etaInf == 0.0 && warning)
      warning("carreau.etaInf = 0: accepted, but the law is degenerate at "
              "infinite shear");
  }

  bool newtonian() const { return r == 2.0; }
};

// ===========================================================================
// Symmetric 3x3 tensors
// ===========================================================================

/// Symmetric 3x3 tensor stored as its 6 independent entries.
/// Frobenius norm: |S|^2 = sum_ij S_ij^2 (off-diagonals counted twice).
struct SymTensor3 {
  double xx = 0, yy = 0, zz = 0, xy = 0, xz = 0, yz = 0;

  static SymTensor3 zero() { return {}; }

  /// Symmetric part of a velocity gradient G_ij = dv_i/dx_j.
  static SymTensor3 sym_grad(const Eigen::Matrix3d& G) {
    SymTensor3 s;
    s.xx = G(0, 0);
    s.yy = G(1, 1);
    s.zz = G(2, 2);
    s.xy = 0.5 * (G(0, 1) + G(1, 0));
    s.xz = 0.5 * (G(0, 2) + G(2, 0));
    s.yz = 0.5 * (G(1, 2) + G(2, 1));
    return s;
  }

  /// Full contraction a : b = sum_ij a_ij b_ij.
  double dot(const SymTensor3& o) const {
    return xx * o.xx + yy * o.yy + zz * o.zz +
           2.0 * (xy * o.xy + xz * o.xz + yz * o.yz);
  }

  double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }

  SymTensor3 operator+(const SymTensor3& o) const {
    return {xx + o.xx, yy + o.yy, zz + o.zz, xy + o.xy, xz + o.xz, yz + o.yz};
  }
  SymTensor3 operator-(const SymTensor3& o) const {
    return {xx - o.xx, yy - o.yy, zz - o.zz, xy - o.xy, xz - o.xz, yz - o.yz};
  }
  SymTensor3 operator*(double a) const {
    return {a * xx, a * yy, a * zz, a * xy, a * xz, a * yz};
  }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d m;
    m << xx, xy, xz, xy, yy, yz, xz, yz, zz;
    return m;
  }
};

inline SymTensor3 operator*(double a, const SymTensor3& s) { return s * a; }

// ===========================================================================
// The law and its tangent
// ===========================================================================

/// eta(D) = (eta0 - etaInf) * (1 + lambda*|D|^2)^(r/2-1) + etaInf.
inline double viscosity(const CarreauParams& p, const SymTensor3& D) {
  const double q = 1.0 + p.lambda * D.norm2();
  return (p.eta0 - p.etaInf) * std::pow(q, 0.5 * p.r - 1.0) + p.etaInf;
}

/// Scalar factor s(D) of the viscosity derivative: <eta'(D), H> = s(D)*(D:H),
///   s(D) = lambda*(r-2)*(eta0-etaInf)*(1 + lambda*|D|^2)^(r/2-2).
/// Exposed separately so assembly loops can hoist it out of the basis loop.
inline double viscosity_derivative_factor(const CarreauParams& p,
                                          const SymTensor3& D) {
  const double q = 1.0 + p.lambda * D.norm2();
  return p.lambda * (p.r - 2.0) * (p.eta0 - p.etaInf) *
         std::pow(q, 0.5 * p.r - 2.0);
}

/// Directional derivative <eta'(D), H>
///   = lambda*(r-2)*(eta0-etaInf)*(1 + lambda*|D|^2)^(r/2-2) * (D:H).
/// Bilinear in H; identically zero in the Newtonian case r = 2.
inline double viscosity_derivative(const CarreauParams& p, const SymTensor3& D,
                                   const SymTensor3& H) {
  return viscosity_derivative_factor(p, D) * D.dot(H);
}

/// Stress kernel S(D) = eta(D) * D (the factor mu is applied by the caller).
inline SymTensor3 stress_kernel(const CarreauParams& p, const SymTensor3& D) {
  return viscosity(p, D) * D;
}

/// Exact Gateaux derivative of the stress kernel:
///   DS(D)[H] = eta(D) * H + <eta'(D), H> * D.
inline SymTensor3 stress_kernel_derivative(const CarreauParams& p,
                                           const SymTensor3& D,
                                           const SymTensor3& H) {
  return viscosity(p, D) * H + viscosity_derivative(p, D, H) * D;
}

}  // namespace cdarcy
