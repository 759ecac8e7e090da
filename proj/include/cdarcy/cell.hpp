/// @file cell.hpp
/// @brief Nonlinear Carreau–Stokes cell solver on the half cell: damped
///        Newton iteration with exact tangent, linearized solves for the
///        permeability Jacobian, and the Newtonian permeability tensor.
///
/// Discretization: Taylor–Hood P2 velocity / P1 pressure on tetrahedra.
/// Velocity has w = 0 on Bottom and Obstacle, periodic lateral faces, and a
/// symmetry plane on top. The default variant eliminates the third velocity
/// component entirely (the symmetric half-cell solution has none); the
/// in-plane divergence then determines the pressure only up to arbitrary
/// functions of the vertical coordinate, so one Lagrange border column per
/// extrusion level pins those modes (and makes the pressure mean zero). The
/// optional free variant keeps all three components, imposes w3 = 0 only on
/// the symmetry plane, and needs a single mean-zero border.
#pragma once

#include <cdarcy/carreau.hpp>
#include <cdarcy/fem.hpp>
#include <cdarcy/linsolve.hpp>
#include <cdarcy/mesh.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace cdarcy {

struct CellOptions {
  bool constrain_w3 = true;  ///< eliminate the third velocity component
  int quad_degree = 4;
  double lin_tol = 1e-12;    ///< relative residual for inner linear solves
  std::function<void(int, double)> log;  ///< Newton iteration log sink
};

struct CellSolution {
  Eigen::VectorXd w;   ///< full velocity coefficients (components*scalar dofs)
  Eigen::VectorXd pi;  ///< full P1 pressure coefficients, zero mean
  Vec2 V = Vec2::Zero();  ///< 2 * integral of w' over the half cell
  int newton_iters = 0;
  double residual = 0.0;
  int components = 2;
};

/// Deterministic work counters (reported instead of wall-clock times so run
/// artifacts stay byte-identical).
struct CellStats {
  std::int64_t stokes_factorizations = 0;
  std::int64_t jacobian_factorizations = 0;
  std::int64_t linear_solves = 0;
  std::int64_t newton_iterations = 0;
};

class CellWorkspace {
public:
  explicit CellWorkspace(const TetMesh& mesh, CellOptions opts = {})
      : mesh_(&mesh),
        opts_(std::move(opts)),
        vspace_(mesh, Family::P2),
        pspace_(mesh, Family::P1),
        rule_(tetrahedron_rule(opts_.quad_degree)),
        vcache_(vspace_, rule_),
        pcache_(pspace_, rule_),
        nc_(opts_.constrain_w3 ? 2 : 3),
        vc_(nc_ * vspace_.size()),
        pc_(pspace_.size()) {
    check_tags();
    build_levels();
    build_constraints();
    build_system();
  }

  int components() const { return nc_; }
  const TetMesh& mesh() const { return *mesh_; }
  const Space3D& velocity_space() const { return vspace_; }
  const Space3D& pressure_space() const { return pspace_; }
  const CellStats& stats() const { return stats_; }
  double fluid_volume() const { return fluid_volume_; }
  int n_velocity_unknowns() const { return nu_; }
  int n_pressure_unknowns() const { return np_; }
  int n_borders() const { return nb_; }

  /// Damped Newton solve of the nonlinear cell problem
  ///   mu * int eta_r(D[w]) D[w]:D[phi] - int pi div phi = int xi . phi',
  ///   div w = 0,
  /// starting from the Newtonian (eta0) Stokes solution unless a warm start
  /// is supplied. Stops when the l2 norm of the constrained residual falls
  /// below max(tol_abs, tol_rel * initial residual).
  CellSolution solve_cell(const CarreauParams& params, const Vec2& xi,
                          double tol_abs = 1e-10, double tol_rel = 1e-8,
                          int max_iters = 50,
                          const CellSolution* warm = nullptr) {
    params.validate();
    Eigen::VectorXd X(n_total_);
    if (warm != nullptr && warm->components == nc_) {
      X.head(nu_) = vc_.restrict_full(warm->w);
      X.segment(nu_, np_) = pc_.restrict_full(warm->pi);
      X.tail(nb_).setZero();
    } else {
      X = stokes_solve(params.mu * params.eta0, rhs_for(xi));
    }

    Eigen::VectorXd R = residual_of(params, xi, X);
    const double r0 = R.norm();
    const double threshold = std::max(tol_abs, tol_rel * r0);
    if (opts_.log) opts_.log(0, r0);

    int iters = 0;
    double rnorm = r0;
    while (rnorm > threshold) {
      if (iters >= max_iters) throw NewtonDiverged(iters, rnorm);
      factorize_tangent(params, X);
      const Eigen::VectorXd delta = newton_solver_.solve(-R, opts_.lin_tol);
      ++stats_.linear_solves;

      double alpha = 1.0;
      Eigen::VectorXd X_trial, R_trial;
      double r_trial = rnorm;
      bool accepted = false;
      for (int halving = 0; halving <= 30; ++halving) {
        X_trial = X + alpha * delta;
        R_trial = residual_of(params, xi, X_trial);
        r_trial = R_trial.norm();
        if (r_trial < rnorm) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) throw NewtonDiverged(iters + 1, rnorm);
      X.swap(X_trial);
      R.swap(R_trial);
      rnorm = r_trial;
      ++iters;
      ++stats_.newton_iterations;
      if (opts_.log) opts_.log(iters, rnorm);
    }

    return make_solution(X, iters, rnorm);
  }

  /// Single linear solve of the cell problem linearized at `base`:
  ///   mu * int {eta_r(D[w])D[h] + <eta'_r(D[w]),D[h]> D[w]} : D[phi]
  ///     - int pi_h div phi = int dxi . phi',  div h = 0.
  /// Returns the full velocity coefficients of h.
  Eigen::VectorXd solve_linearized(const CarreauParams& params,
                                   const CellSolution& base, const Vec2& dxi) {
    factorize_tangent_full(params, base.w);
    Eigen::VectorXd h =
        newton_solver_.solve(rhs_for(dxi), opts_.lin_tol);
    ++stats_.linear_solves;
    return expand_velocity(h.head(nu_));
  }

  /// 2x2 Jacobian A of the permeability map at `base`: column j is
  /// 2 * int h_j' for the unit direction dxi = e_j.
  Mat2 permeability_jacobian(const CarreauParams& params,
                             const CellSolution& base) {
    factorize_tangent_full(params, base.w);
    Mat2 A;
    for (int j = 0; j < 2; ++j) {
      const Vec2 e = (j == 0) ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0);
      const Eigen::VectorXd h = newton_solver_.solve(rhs_for(e), opts_.lin_tol);
      ++stats_.linear_solves;
      A.col(j) = flux_reduced(h.head(nu_));
    }
    return A;
  }

  /// Newtonian permeability tensor: entries A_ij = 2 * int (w^j)_i where w^j
  /// solves int D[w]:D[phi] - int pi div phi = int e_j . phi', div w = 0.
  /// With this normalization the r = 2 Carreau path satisfies
  /// U(xi) = A xi / (mu * eta0).
  Mat2 permeability_tensor() {
    if (!tensor_) {
      Mat2 A;
      for (int j = 0; j < 2; ++j) {
        const Vec2 e = (j == 0) ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0);
        const Eigen::VectorXd x = stokes_solve(1.0, rhs_for(e));
        A.col(j) = flux_reduced(x.head(nu_));
      }
      tensor_ = A;
    }
    return *tensor_;
  }

  /// Unit-coefficient Stokes solution (w, pi) for direction i in {1, 2},
  /// full coefficients. The pressure is shifted to zero mean.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> stokes_cell(int direction) {
    const Vec2 e = (direction == 1) ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0);
    const Eigen::VectorXd x = stokes_solve(1.0, rhs_for(e));
    Eigen::VectorXd pi = pc_.expand(x.segment(nu_, np_));
    pi.array() -= integrate(pspace_, pcache_, pi) / fluid_volume_;
    return {expand_velocity(x.head(nu_)), pi};
  }

  /// 2 * integral of the first two velocity components over the half cell.
  Vec2 flux_of(const Eigen::VectorXd& w_full) const {
    Vec2 V = Vec2::Zero();
    const int ns = vspace_.size();
    const int ne = static_cast<int>(mesh_->tets.size());
    for (int e = 0; e < ne; ++e) {
      const auto& dofs = vspace_.element_dofs(e);
      for (int q = 0; q < vcache_.n_qp; ++q) {
        const double w = vcache_.weight(e, q);
        double v0 = 0.0, v1 = 0.0;
        for (int i = 0; i < 10; ++i) {
          const double N = vcache_.value(q, i);
          v0 += N * w_full[dofs[static_cast<std::size_t>(i)]];
          v1 += N * w_full[ns + dofs[static_cast<std::size_t>(i)]];
        }
        V.x() += w * v0;
        V.y() += w * v1;
      }
    }
    return 2.0 * V;
  }

  /// l2 norm of the discrete divergence functional B^T u of a solution.
  double divergence_norm(const CellSolution& s) const {
    return (Bt_ * vc_.restrict_full(s.w)).norm();
  }

  double pressure_integral(const Eigen::VectorXd& pi_full) const {
    return integrate(pspace_, pcache_, pi_full);
  }

  /// max |w3| / max |w| over coefficients (0 in the constrained variant).
  double w3_ratio(const CellSolution& s) const {
    if (s.components == 2) return 0.0;
    const int ns = vspace_.size();
    const double w3 = s.w.segment(2 * ns, ns).cwiseAbs().maxCoeff();
    const double all = s.w.cwiseAbs().maxCoeff();
    return (all == 0.0) ? 0.0 : w3 / all;
  }

private:
  const TetMesh* mesh_;
  CellOptions opts_;
  Space3D vspace_;
  Space3D pspace_;
  SimplexRule<3> rule_;
  ElementCache3D vcache_;
  ElementCache3D pcache_;
  int nc_;
  Constraints vc_;
  Constraints pc_;

  int nu_ = 0, np_ = 0, nb_ = 0, n_total_ = 0;
  double fluid_volume_ = 0.0;
  std::vector<int> levels_;  ///< vertex -> extrusion level
  int n_levels_ = 0;

  SpMat J_;                        ///< bordered saddle pattern (value buffer)
  Eigen::VectorXd template_vals_;  ///< constant blocks (B, borders)
  Eigen::VectorXd k1_vals_;        ///< coefficient-1 D:D velocity block
  std::vector<int> slots_;         ///< element-local -> nnz offset (-1 fixed)
  std::vector<int> vrows_;         ///< element-local -> reduced row (-1 fixed)
  SpMat B_;                        ///< nu x np pressure-gradient block
  SpMat Bt_;                       ///< np x nu divergence block
  Eigen::MatrixXd C_;              ///< np x nb border columns
  Eigen::VectorXd f1_, f2_;        ///< unit-direction load vectors (reduced)

  DirectSolver newton_solver_;
  DirectSolver stokes_solver_;
  double stokes_coeff_ = -1.0;  ///< viscosity coefficient of cached Stokes LU
  std::optional<Mat2> tensor_;
  CellStats stats_;

  void check_tags() const {
    bool bottom = false, top = false, obstacle = false;
    for (const auto& [f, tag] : mesh_->boundary_faces) {
      (void)f;
      if (tag == FaceTag::Bottom) bottom = true;
      if (tag == FaceTag::SymmetryTop) top = true;
      if (tag == FaceTag::Obstacle) obstacle = true;
    }
    if (!bottom || !top || !obstacle)
      throw ConfigError("cell mesh is missing required boundary tags");
    if (mesh_->periodic_map.empty())
      throw ConfigError("cell mesh has no periodic vertex pairing");
  }

  void build_levels() {
    std::vector<double> zs;
    zs.reserve(mesh_->vertices.size());
    for (const auto& v : mesh_->vertices) zs.push_back(v.z());
    std::sort(zs.begin(), zs.end());
    std::vector<double> uniq;
    for (double z : zs)
      if (uniq.empty() || z - uniq.back() > 1e-12) uniq.push_back(z);
    n_levels_ = static_cast<int>(uniq.size());
    levels_.resize(mesh_->vertices.size());
    for (std::size_t v = 0; v < mesh_->vertices.size(); ++v) {
      const auto it = std::lower_bound(uniq.begin(), uniq.end(),
                                       mesh_->vertices[v].z() - 1e-13);
      levels_[v] = static_cast<int>(it - uniq.begin());
    }
  }

  void build_constraints() {
    const int ns = vspace_.size();
    const auto vpairs = vspace_.periodic_scalar_pairs();
    for (int c = 0; c < nc_; ++c)
      for (const auto& [a, b] : vpairs) vc_.merge(c * ns + a, c * ns + b);
    const auto walls =
        vspace_.tagged_dofs({FaceTag::Bottom, FaceTag::Obstacle});
    for (int c = 0; c < nc_; ++c)
      for (int d : walls) vc_.fix(c * ns + d, 0.0);
    if (nc_ == 3)
      for (int d : vspace_.tagged_dofs({FaceTag::SymmetryTop}))
        vc_.fix(2 * ns + d, 0.0);
    vc_.finalize();

    for (const auto& [a, b] : pspace_.periodic_scalar_pairs()) pc_.merge(a, b);
    pc_.finalize();

    nu_ = vc_.size_reduced();
    np_ = pc_.size_reduced();
    nb_ = (nc_ == 2) ? n_levels_ : 1;
    n_total_ = nu_ + np_ + nb_;
  }

  int vel_reduced(int comp, int scalar_dof) const {
    return vc_.resolve(comp * vspace_.size() + scalar_dof).first;
  }

  void build_system() {
    const int ne = static_cast<int>(mesh_->tets.size());
    const int L = nc_ * 10;
    const int nq = vcache_.n_qp;
    fluid_volume_ = measure(pcache_);

    std::vector<Triplet> trips;       // full bordered pattern
    std::vector<Triplet> b_trips;     // B block alone
    C_ = Eigen::MatrixXd::Zero(np_, nb_);
    Eigen::VectorXd f1 = Eigen::VectorXd::Zero(nu_);
    Eigen::VectorXd f2 = Eigen::VectorXd::Zero(nu_);
    vrows_.assign(static_cast<std::size_t>(ne) * static_cast<std::size_t>(L),
                  -1);

    std::vector<double> localB(static_cast<std::size_t>(L) * 4);
    std::vector<double> localC(4 * static_cast<std::size_t>(nb_));
    std::array<double, 10> localF{};  // scalar load integrals int N_i

    for (int e = 0; e < ne; ++e) {
      const auto& vd = vspace_.element_dofs(e);
      const auto& tet = mesh_->tets[static_cast<std::size_t>(e)];
      std::fill(localB.begin(), localB.end(), 0.0);
      std::fill(localC.begin(), localC.end(), 0.0);
      localF.fill(0.0);

      for (int q = 0; q < nq; ++q) {
        const double w = vcache_.weight(e, q);
        for (int i = 0; i < 10; ++i) {
          const Vec3& g = vcache_.grad(e, q, i);
          localF[static_cast<std::size_t>(i)] += w * vcache_.value(q, i);
          // B: -int q div(phi e_c) = -int q (grad N_i)_c
          for (int c = 0; c < nc_; ++c)
            for (int j = 0; j < 4; ++j)
              localB[static_cast<std::size_t>((c * 10 + i) * 4 + j)] -=
                  w * pcache_.value(q, j) * g[c];
        }
        // pressure-mass against the border modes
        for (int j = 0; j < 4; ++j) {
          const double Nj = pcache_.value(q, j);
          for (int m = 0; m < 4; ++m) {
            const double Nm = pcache_.value(q, m);
            const int lev = levels_[static_cast<std::size_t>(
                tet[static_cast<std::size_t>(m)])];
            const int col = (nc_ == 2) ? lev : 0;
            localC[static_cast<std::size_t>(j * nb_ + col)] += w * Nj * Nm;
          }
        }
      }

      // scatter
      for (int i = 0; i < 10; ++i) {
        const int sd = vd[static_cast<std::size_t>(i)];
        for (int c = 0; c < nc_; ++c) {
          const int a = c * 10 + i;
          const int ra = vel_reduced(c, sd);
          vrows_[static_cast<std::size_t>(e) * static_cast<std::size_t>(L) +
                 static_cast<std::size_t>(a)] = ra;
          if (ra < 0) continue;
          if (c == 0) f1[ra] += localF[static_cast<std::size_t>(i)];
          if (c == 1) f2[ra] += localF[static_cast<std::size_t>(i)];
          for (int j = 0; j < 4; ++j) {
            const int rp =
                pc_.resolve(tet[static_cast<std::size_t>(j)]).first;
            const double val = localB[static_cast<std::size_t>(a * 4 + j)];
            b_trips.emplace_back(ra, rp, val);
            trips.emplace_back(ra, nu_ + rp, val);
            trips.emplace_back(nu_ + rp, ra, val);
          }
        }
      }
      for (int j = 0; j < 4; ++j) {
        const int rp = pc_.resolve(tet[static_cast<std::size_t>(j)]).first;
        for (int col = 0; col < nb_; ++col)
          C_(rp, col) += localC[static_cast<std::size_t>(j * nb_ + col)];
      }
      // velocity-block pattern placeholders
      for (int a = 0; a < L; ++a) {
        const int ra = vrows_[static_cast<std::size_t>(e) *
                                  static_cast<std::size_t>(L) +
                              static_cast<std::size_t>(a)];
        if (ra < 0) continue;
        for (int b = 0; b < L; ++b) {
          const int rb = vrows_[static_cast<std::size_t>(e) *
                                    static_cast<std::size_t>(L) +
                                static_cast<std::size_t>(b)];
          if (rb >= 0) trips.emplace_back(ra, rb, 0.0);
        }
      }
    }

    f1_ = std::move(f1);
    f2_ = std::move(f2);

    // border columns in the bordered pattern
    for (int rp = 0; rp < np_; ++rp)
      for (int col = 0; col < nb_; ++col)
        if (C_(rp, col) != 0.0) {
          trips.emplace_back(nu_ + rp, nu_ + np_ + col, C_(rp, col));
          trips.emplace_back(nu_ + np_ + col, nu_ + rp, C_(rp, col));
        }

    J_.resize(n_total_, n_total_);
    J_.setFromTriplets(trips.begin(), trips.end());
    J_.makeCompressed();
    template_vals_ =
        Eigen::Map<const Eigen::VectorXd>(J_.valuePtr(), J_.nonZeros());

    B_.resize(nu_, np_);
    B_.setFromTriplets(b_trips.begin(), b_trips.end());
    B_.makeCompressed();
    Bt_ = B_.transpose();

    // slot map and coefficient-1 D:D values
    slots_.assign(static_cast<std::size_t>(ne) * static_cast<std::size_t>(L) *
                      static_cast<std::size_t>(L),
                  -1);
    k1_vals_ = Eigen::VectorXd::Zero(J_.nonZeros());
    const int* outer = J_.outerIndexPtr();
    const int* inner = J_.innerIndexPtr();
    const auto find_slot = [&](int row, int col) {
      const int* begin = inner + outer[col];
      const int* end = inner + outer[col + 1];
      const int* it = std::lower_bound(begin, end, row);
      return static_cast<int>(it - inner);
    };

    std::vector<double> localK(static_cast<std::size_t>(L) *
                               static_cast<std::size_t>(L));
    for (int e = 0; e < ne; ++e) {
      std::fill(localK.begin(), localK.end(), 0.0);
      for (int q = 0; q < nq; ++q) {
        const double w = vcache_.weight(e, q);
        const Vec3* g = &vcache_.grad(e, q, 0);
        for (int i = 0; i < 10; ++i)
          for (int j = 0; j < 10; ++j) {
            const double gij = g[i].dot(g[j]);
            for (int c = 0; c < nc_; ++c)
              for (int d = 0; d < nc_; ++d) {
                const double val =
                    0.5 * ((c == d ? gij : 0.0) + g[j][c] * g[i][d]);
                localK[static_cast<std::size_t>((c * 10 + i) * L + d * 10 +
                                                j)] += w * val;
              }
          }
      }
      for (int a = 0; a < L; ++a) {
        const int ra = vrows_[static_cast<std::size_t>(e) *
                                  static_cast<std::size_t>(L) +
                              static_cast<std::size_t>(a)];
        if (ra < 0) continue;
        for (int b = 0; b < L; ++b) {
          const int rb = vrows_[static_cast<std::size_t>(e) *
                                    static_cast<std::size_t>(L) +
                                static_cast<std::size_t>(b)];
          if (rb < 0) continue;
          const int s = find_slot(ra, rb);
          slots_[(static_cast<std::size_t>(e) * static_cast<std::size_t>(L) +
                  static_cast<std::size_t>(a)) *
                     static_cast<std::size_t>(L) +
                 static_cast<std::size_t>(b)] = s;
          k1_vals_[s] += localK[static_cast<std::size_t>(a * L + b)];
        }
      }
    }
  }

  Eigen::VectorXd rhs_for(const Vec2& xi) const {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_total_);
    rhs.head(nu_) = xi.x() * f1_ + xi.y() * f2_;
    return rhs;
  }

  /// Velocity strain at a quadrature point from gathered coefficients.
  SymTensor3 strain_at(const double* uloc, const Vec3* g) const {
    Vec3 row0 = Vec3::Zero(), row1 = Vec3::Zero(), row2 = Vec3::Zero();
    for (int i = 0; i < 10; ++i) {
      row0 += uloc[i] * g[i];
      row1 += uloc[10 + i] * g[i];
      if (nc_ == 3) row2 += uloc[20 + i] * g[i];
    }
    SymTensor3 D;
    D.xx = row0.x();
    D.yy = row1.y();
    D.zz = row2.z();
    D.xy = 0.5 * (row0.y() + row1.x());
    D.xz = 0.5 * (row0.z() + row2.x());
    D.yz = 0.5 * (row1.z() + row2.y());
    return D;
  }

  void gather(const Eigen::VectorXd& w_full, int e, double* uloc) const {
    const int ns = vspace_.size();
    const auto& vd = vspace_.element_dofs(e);
    for (int c = 0; c < nc_; ++c)
      for (int i = 0; i < 10; ++i)
        uloc[c * 10 + i] = w_full[c * ns + vd[static_cast<std::size_t>(i)]];
  }

  /// Nonlinear momentum vector N(u): entries int S(D[u]) : D[phi_a].
  Eigen::VectorXd momentum_vector(const CarreauParams& params,
                                  const Eigen::VectorXd& w_full) const {
    Eigen::VectorXd N = Eigen::VectorXd::Zero(nu_);
    const int ne = static_cast<int>(mesh_->tets.size());
    const int L = nc_ * 10;
    std::array<double, 30> uloc{};
    std::array<double, 30> rloc{};
    for (int e = 0; e < ne; ++e) {
      gather(w_full, e, uloc.data());
      std::fill(rloc.begin(), rloc.begin() + L, 0.0);
      for (int q = 0; q < vcache_.n_qp; ++q) {
        const double wq = vcache_.weight(e, q);
        const Vec3* g = &vcache_.grad(e, q, 0);
        const SymTensor3 D = strain_at(uloc.data(), g);
        const Eigen::Matrix3d S = stress_kernel(params, D).matrix();
        for (int c = 0; c < nc_; ++c) {
          const Vec3 Sc = S.row(c);
          for (int i = 0; i < 10; ++i)
            rloc[static_cast<std::size_t>(c * 10 + i)] += wq * Sc.dot(g[i]);
        }
      }
      for (int a = 0; a < L; ++a) {
        const int ra = vrows_[static_cast<std::size_t>(e) *
                                  static_cast<std::size_t>(L) +
                              static_cast<std::size_t>(a)];
        if (ra >= 0) N[ra] += rloc[static_cast<std::size_t>(a)];
      }
    }
    return N;
  }

  /// Constrained nonlinear residual of the extended system at X =
  /// [u; p; lambda]:  [mu N(u) + B p - f(xi);  B^T u + C lambda;  C^T p].
  Eigen::VectorXd residual_of(const CarreauParams& params, const Vec2& xi,
                              const Eigen::VectorXd& X) const {
    const Eigen::VectorXd u_full = expand_velocity(X.head(nu_));
    Eigen::VectorXd R(n_total_);
    R.head(nu_) = params.mu * momentum_vector(params, u_full) +
                  B_ * X.segment(nu_, np_) - xi.x() * f1_ - xi.y() * f2_;
    R.segment(nu_, np_) = Bt_ * X.head(nu_) + C_ * X.tail(nb_);
    R.tail(nb_) = C_.transpose() * X.segment(nu_, np_);
    return R;
  }

  /// Writes template + tangent-at-u values into J_ and factorizes.
  void factorize_tangent(const CarreauParams& params, const Eigen::VectorXd& X) {
    assemble_tangent_values(params, expand_velocity(X.head(nu_)));
    newton_solver_.factorize(J_);
    ++stats_.jacobian_factorizations;
  }

  void factorize_tangent_full(const CarreauParams& params,
                              const Eigen::VectorXd& w_full) {
    assemble_tangent_values(params, w_full);
    newton_solver_.factorize(J_);
    ++stats_.jacobian_factorizations;
  }

  void assemble_tangent_values(const CarreauParams& params,
                               const Eigen::VectorXd& w_full) {
    Eigen::Map<Eigen::VectorXd> vals(J_.valuePtr(), J_.nonZeros());
    vals = template_vals_;
    const int ne = static_cast<int>(mesh_->tets.size());
    const int L = nc_ * 10;
    const double mu = params.mu;
    std::array<double, 30> uloc{};
    std::vector<double> localK(static_cast<std::size_t>(L) *
                               static_cast<std::size_t>(L));
    std::array<double, 30> DG{};
    for (int e = 0; e < ne; ++e) {
      gather(w_full, e, uloc.data());
      std::fill(localK.begin(), localK.end(), 0.0);
      for (int q = 0; q < vcache_.n_qp; ++q) {
        const double wq = vcache_.weight(e, q);
        const Vec3* g = &vcache_.grad(e, q, 0);
        const SymTensor3 D = strain_at(uloc.data(), g);
        const double eta = viscosity(params, D);
        const double sf = viscosity_derivative_factor(params, D);
        const Eigen::Matrix3d Dm = D.matrix();
        for (int c = 0; c < nc_; ++c) {
          const Vec3 Dc = Dm.row(c);
          for (int i = 0; i < 10; ++i)
            DG[static_cast<std::size_t>(c * 10 + i)] = Dc.dot(g[i]);
        }
        for (int i = 0; i < 10; ++i)
          for (int j = 0; j < 10; ++j) {
            const double gij = g[i].dot(g[j]);
            for (int c = 0; c < nc_; ++c)
              for (int d = 0; d < nc_; ++d) {
                const int a = c * 10 + i;
                const int b = d * 10 + j;
                const double val =
                    eta * 0.5 * ((c == d ? gij : 0.0) + g[j][c] * g[i][d]) +
                    sf * DG[static_cast<std::size_t>(b)] *
                        DG[static_cast<std::size_t>(a)];
                localK[static_cast<std::size_t>(a * L + b)] += wq * mu * val;
              }
          }
      }
      const std::size_t base =
          static_cast<std::size_t>(e) * static_cast<std::size_t>(L) *
          static_cast<std::size_t>(L);
      for (int a = 0; a < L; ++a)
        for (int b = 0; b < L; ++b) {
          const int s = slots_[base + static_cast<std::size_t>(a * L + b)];
          if (s >= 0) vals[s] += localK[static_cast<std::size_t>(a * L + b)];
        }
    }
  }

  /// Solves the Newtonian system with velocity block coeff * int D:D.
  Eigen::VectorXd stokes_solve(double coeff, const Eigen::VectorXd& rhs) {
    if (stokes_coeff_ != coeff) {
      Eigen::Map<Eigen::VectorXd> vals(J_.valuePtr(), J_.nonZeros());
      vals = template_vals_ + coeff * k1_vals_;
      stokes_solver_.factorize(J_);
      stokes_coeff_ = coeff;
      ++stats_.stokes_factorizations;
    }
    ++stats_.linear_solves;
    return stokes_solver_.solve(rhs, opts_.lin_tol);
  }

  Eigen::VectorXd expand_velocity(const Eigen::VectorXd& u_red) const {
    return vc_.expand(u_red);
  }

  Vec2 flux_reduced(const Eigen::VectorXd& u_red) const {
    return flux_of(expand_velocity(u_red));
  }

  CellSolution make_solution(const Eigen::VectorXd& X, int iters,
                             double rnorm) const {
    CellSolution s;
    s.components = nc_;
    s.w = expand_velocity(X.head(nu_));
    s.pi = pc_.expand(X.segment(nu_, np_));
    s.pi.array() -= integrate(pspace_, pcache_, s.pi) / fluid_volume_;
    s.V = flux_of(s.w);
    s.newton_iters = iters;
    s.residual = rnorm;
    return s;
  }
};

/// Spec-level problem bundle and convenience entry points (tests and tools
/// that solve many problems on one mesh should hold a CellWorkspace).
struct CellProblem {
  const TetMesh* mesh = nullptr;
  CarreauParams params;
  Vec2 xi = Vec2::Zero();
  CellOptions options;
};

inline CellSolution solve_cell(const CellProblem& pb, double tol_abs = 1e-10,
                               int max_iters = 50) {
  CellWorkspace ws(*pb.mesh, pb.options);
  return ws.solve_cell(pb.params, pb.xi, tol_abs, 1e-8, max_iters);
}

inline Mat2 permeability_tensor(const TetMesh& mesh, CellOptions opts = {}) {
  CellWorkspace ws(mesh, std::move(opts));
  return ws.permeability_tensor();
}

}  // namespace cdarcy
