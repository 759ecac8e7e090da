#pragma once

// Macroscopic Darcy solver on a 2D rectangle: an outer Newton iteration on
// the mean-zero pressure P (P2 on triangles) driven by the nonlinear
// permeability map U and its per-triangle Jacobian DU, plus the linear path
// with a constant tensor. The weak problem is
//
//   find P with zero mean such that  ∫ U(f' - grad P) · grad psi = 0
//
// for all P2 test functions psi, with the no-flux condition V'·n = 0 built
// in. U is supplied by a pluggable backend (cell solves or a precomputed
// table).

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cdarcy/carreau.hpp>
#include <cdarcy/core.hpp>
#include <cdarcy/fem.hpp>
#include <cdarcy/linsolve.hpp>
#include <cdarcy/mesh.hpp>
#include <cdarcy/permeability.hpp>
#include <cdarcy/quadrature.hpp>

namespace cdarcy {

// ===========================================================================
// Permeability backends
// ===========================================================================

/// Source of U(xi) and DU(xi) for the outer iteration.
class UBackend {
public:
  virtual ~UBackend() = default;
  virtual Vec2 U(const Vec2& xi) = 0;
  virtual Mat2 DU(const Vec2& xi) = 0;
  /// Hint that the given drives are about to be requested; backends may
  /// resolve them concurrently. Default: do nothing (lazy evaluation).
  virtual void prefetch(const std::vector<Vec2>& /*xis*/,
                        bool /*with_jacobian*/) {}
  virtual std::int64_t cache_hits() const { return 0; }
  virtual std::int64_t cache_misses() const { return 0; }
  /// Deterministic work counters behind the backend (zero when no solver).
  virtual CellStats work() const { return {}; }
};

/// Exact mode: every drive runs a cell solve through a memoizing evaluator.
class ExactUBackend : public UBackend {
public:
  explicit ExactUBackend(PermEvaluator& ev) : ev_(&ev) {}

  Vec2 U(const Vec2& xi) override { return ev_->eval_U(xi); }
  Mat2 DU(const Vec2& xi) override { return ev_->eval_DU(xi); }
  void prefetch(const std::vector<Vec2>& xis, bool with_jacobian) override {
    ev_->prefetch(xis, with_jacobian);
  }
  std::int64_t cache_hits() const override { return ev_->cache().hits(); }
  std::int64_t cache_misses() const override { return ev_->cache().misses(); }
  CellStats work() const override { return ev_->total_stats(); }

private:
  PermEvaluator* ev_;
};

/// Tabulated mode: bilinear interpolation in a precomputed polar table.
class TableUBackend : public UBackend {
public:
  explicit TableUBackend(const PermTable& table) : table_(&table) {}

  Vec2 U(const Vec2& xi) override { return interp_U(*table_, xi); }
  Mat2 DU(const Vec2& xi) override { return interp_DU(*table_, xi); }

private:
  const PermTable* table_;
};

// ===========================================================================
// Problem statement and results
// ===========================================================================

enum class DarcyMode { Exact, Tabulated };

/// Where the per-triangle Jacobian tensor A = DU(f' - grad P) is sampled.
enum class JacobianEval { Barycenter, VertexMean };

struct DarcyOptions {
  double tol_rel = 1e-8;  ///< stop when ||F|| <= tol_rel * ||F(P_0)||
  int max_outer = 25;
  int max_halvings = 10;  ///< step halvings per iteration before giving up
  JacobianEval jacobian_eval = JacobianEval::Barycenter;
  int quad_degree = 4;
  std::function<void(int, double)> log;  ///< (iteration, residual norm)
};

struct DarcyProblem {
  const TriMesh* omega = nullptr;
  std::function<Vec2(const Vec2&)> forcing;  ///< f'(x), evaluable on omega
  CarreauParams params;
  DarcyMode mode = DarcyMode::Exact;
  const TetMesh* cell_mesh = nullptr;  ///< Exact mode
  const PermTable* table = nullptr;    ///< Tabulated mode
  double eps = 0.1;  ///< scale separation; reporting only (Re = 1/(eps*mu))
  double cell_tol_abs = 1e-10;  ///< inner (cell) absolute tolerance
  int cell_max_inner = 50;      ///< inner (cell) Newton iteration cap
  double rel_round = 0.0;       ///< cache key rounding, 0 = exact bits
  int threads = 1;              ///< cap on concurrent cell solves
};

struct PressureField {
  Eigen::VectorXd P;       ///< P2 coefficients, zero mean
  std::vector<Vec2> V;     ///< filtration velocity per triangle (barycenter)
  std::vector<Vec2> xi;    ///< f' - grad P per triangle (barycenter)
  std::vector<double> residual_history;  ///< l2 norms, entry 0 = initial
  int iters = 0;
  std::int64_t cache_hits = 0;
  std::int64_t cache_misses = 0;
  std::vector<std::int64_t> misses_per_iter;  ///< one entry per outer step
  CellStats work;  ///< cell-solver counters accumulated over the run
};

/// The seven per-run output fields: velocity components and norm, drive
/// components and norm (all per triangle), pressure point values.
struct DarcyFields {
  std::vector<double> V1, V2, Vnorm;
  std::vector<double> xi1, xi2, xinorm;
  Eigen::VectorXd P_vertex;  ///< P at mesh vertices
};

// ===========================================================================
// Discretization workspace
// ===========================================================================

/// Precomputed geometry for residual/Jacobian assembly on a fixed omega
/// mesh and forcing: P2 space, quadrature cache, per-triangle basis
/// gradients at the vertices and barycenter (P2 gradients are affine per
/// triangle), and the P1-interpolated forcing samples.
class DarcyWorkspace {
public:
  DarcyWorkspace(const TriMesh& omega,
                 std::function<Vec2(const Vec2&)> forcing,
                 DarcyOptions opts = {})
      : mesh_(&omega),
        forcing_(std::move(forcing)),
        opts_(std::move(opts)),
        space_(omega, Family::P2),
        rule_(triangle_rule(opts_.quad_degree)),
        cache_(space_, rule_) {
    if (!forcing_) throw ConfigError("darcy forcing must be callable");
    const int ne = n_triangles();
    const int nl = space_.local_size();
    const int nq = static_cast<int>(rule_.points.size());

    // P1 interpolation weights of the three vertex samples at quadrature
    // points (barycentric coordinates of the rule points).
    p1_at_qp_.resize(static_cast<std::size_t>(nq) * 3);
    for (int q = 0; q < nq; ++q) {
      const Vec2& p = rule_.points[static_cast<std::size_t>(q)];
      p1_at_qp_[static_cast<std::size_t>(q) * 3 + 0] = 1.0 - p.x() - p.y();
      p1_at_qp_[static_cast<std::size_t>(q) * 3 + 1] = p.x();
      p1_at_qp_[static_cast<std::size_t>(q) * 3 + 2] = p.y();
    }

    // Physical P2 basis gradients at the three reference vertices and the
    // barycenter of every triangle, plus forcing samples there.
    static const Vec2 ref_pts[4] = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1),
                                    Vec2(1.0 / 3.0, 1.0 / 3.0)};
    Vec2 ref_grads[4][6];
    for (int k = 0; k < 4; ++k)
      shape_grad_tri(Family::P2, ref_pts[k], ref_grads[k]);

    grads_.resize(static_cast<std::size_t>(ne) * 4 *
                  static_cast<std::size_t>(nl));
    f_samples_.resize(static_cast<std::size_t>(ne) * 4);
    for (int e = 0; e < ne; ++e) {
      const auto& tri = omega.triangles[static_cast<std::size_t>(e)];
      const Vec2& p0 = omega.vertices[static_cast<std::size_t>(tri[0])];
      Eigen::Matrix2d J;
      J.col(0) = omega.vertices[static_cast<std::size_t>(tri[1])] - p0;
      J.col(1) = omega.vertices[static_cast<std::size_t>(tri[2])] - p0;
      const Eigen::Matrix2d JinvT = J.inverse().transpose();
      for (int k = 0; k < 4; ++k) {
        for (int i = 0; i < nl; ++i)
          grads_[grad_index(e, k, i)] = JinvT * ref_grads[k][i];
        f_samples_[static_cast<std::size_t>(e) * 4 +
                   static_cast<std::size_t>(k)] =
            forcing_(p0 + J * ref_pts[k]);
      }
    }

    // Zero-mean border: m_i = integral of psi_i over omega.
    border_ = Eigen::VectorXd::Zero(space_.size());
    for (int e = 0; e < ne; ++e) {
      const auto& dofs = space_.element_dofs(e);
      for (int q = 0; q < nq; ++q) {
        const double w = cache_.weight(e, q);
        for (int i = 0; i < nl; ++i)
          border_[dofs[static_cast<std::size_t>(i)]] += w * cache_.value(q, i);
      }
    }
  }

  int n_triangles() const {
    return static_cast<int>(mesh_->triangles.size());
  }
  const Space2D& space() const { return space_; }
  const ElementCache2D& quad_cache() const { return cache_; }
  const TriMesh& mesh() const { return *mesh_; }
  const DarcyOptions& options() const { return opts_; }
  /// P1 interpolation weight of vertex k at quadrature point q.
  double p1_weight(int q, int k) const {
    return p1_at_qp_[static_cast<std::size_t>(q) * 3 +
                     static_cast<std::size_t>(k)];
  }
  const Eigen::VectorXd& mean_border() const { return border_; }

  /// Drive xi' = f' - grad P at sample point k of triangle e (k = 0,1,2 the
  /// vertices, k = 3 the barycenter).
  Vec2 drive_at(int e, int k, const Eigen::VectorXd& P) const {
    const auto& dofs = space_.element_dofs(e);
    Vec2 g = Vec2::Zero();
    for (int i = 0; i < space_.local_size(); ++i)
      g += P[dofs[static_cast<std::size_t>(i)]] * grads_[grad_index(e, k, i)];
    return f_samples_[static_cast<std::size_t>(e) * 4 +
                      static_cast<std::size_t>(k)] -
           g;
  }

  /// All vertex drives (3 per triangle, triangle-major) for prefetching.
  std::vector<Vec2> vertex_drives(const Eigen::VectorXd& P) const {
    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(n_triangles()) * 3);
    for (int e = 0; e < n_triangles(); ++e)
      for (int k = 0; k < 3; ++k) out.push_back(drive_at(e, k, P));
    return out;
  }

  std::vector<Vec2> barycenter_drives(const Eigen::VectorXd& P) const {
    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(n_triangles()));
    for (int e = 0; e < n_triangles(); ++e) out.push_back(drive_at(e, 3, P));
    return out;
  }

  /// Residual F_i(P) = ∫ U_h(f' - grad P) · grad psi_i with U_h the P1
  /// interpolant of the three vertex values of U per triangle.
  Eigen::VectorXd assemble_residual(const Eigen::VectorXd& P, UBackend& u,
                                    bool jacobian_ready_hint = false) const {
    const std::vector<Vec2> drives = vertex_drives(P);
    u.prefetch(drives, jacobian_ready_hint);
    Eigen::VectorXd F = Eigen::VectorXd::Zero(space_.size());
    const int nl = space_.local_size();
    const int nq = static_cast<int>(rule_.points.size());
    for (int e = 0; e < n_triangles(); ++e) {
      Vec2 Uv[3];
      for (int k = 0; k < 3; ++k)
        Uv[k] = u.U(drives[static_cast<std::size_t>(e) * 3 +
                           static_cast<std::size_t>(k)]);
      const auto& dofs = space_.element_dofs(e);
      for (int q = 0; q < nq; ++q) {
        const Vec2 Uq = p1_at_qp_[static_cast<std::size_t>(q) * 3 + 0] * Uv[0] +
                        p1_at_qp_[static_cast<std::size_t>(q) * 3 + 1] * Uv[1] +
                        p1_at_qp_[static_cast<std::size_t>(q) * 3 + 2] * Uv[2];
        const double w = cache_.weight(e, q);
        for (int i = 0; i < nl; ++i)
          F[dofs[static_cast<std::size_t>(i)]] += w * Uq.dot(cache_.grad(e, q, i));
      }
    }
    return F;
  }

  /// Bordered Newton matrix [[K, m], [m^T, 0]] with K from the per-triangle
  /// tensor A = DU(xi') sampled per the configured rule.
  SpMat assemble_jacobian(const Eigen::VectorXd& P, UBackend& u) const {
    const bool vertex_mean = opts_.jacobian_eval == JacobianEval::VertexMean;
    std::vector<Vec2> drives =
        vertex_mean ? vertex_drives(P) : barycenter_drives(P);
    u.prefetch(drives, /*with_jacobian=*/true);

    const int n = space_.size();
    const int nl = space_.local_size();
    const int nq = static_cast<int>(rule_.points.size());
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(n_triangles()) *
                      static_cast<std::size_t>(nl * nl) +
                  2 * static_cast<std::size_t>(n));
    for (int e = 0; e < n_triangles(); ++e) {
      Mat2 A;
      if (vertex_mean) {
        A = (u.DU(drives[static_cast<std::size_t>(e) * 3 + 0]) +
             u.DU(drives[static_cast<std::size_t>(e) * 3 + 1]) +
             u.DU(drives[static_cast<std::size_t>(e) * 3 + 2])) /
            3.0;
      } else {
        A = u.DU(drives[static_cast<std::size_t>(e)]);
      }
      const auto& dofs = space_.element_dofs(e);
      for (int q = 0; q < nq; ++q) {
        const double w = cache_.weight(e, q);
        for (int i = 0; i < nl; ++i) {
          const Vec2 Agi = A * cache_.grad(e, q, i);
          for (int j = 0; j < nl; ++j)
            trips.emplace_back(dofs[static_cast<std::size_t>(i)],
                               dofs[static_cast<std::size_t>(j)],
                               w * cache_.grad(e, q, j).dot(Agi));
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      trips.emplace_back(i, n, border_[i]);
      trips.emplace_back(n, i, border_[i]);
    }
    SpMat Jb(n + 1, n + 1);
    Jb.setFromTriplets(trips.begin(), trips.end());
    Jb.makeCompressed();
    return Jb;
  }

  Eigen::VectorXd subtract_mean(Eigen::VectorXd P) const {
    const double mean = integrate(space_, cache_, P) / measure(cache_);
    P.array() -= mean;
    return P;
  }

  double pressure_mean(const Eigen::VectorXd& P) const {
    return integrate(space_, cache_, P) / measure(cache_);
  }

  double pressure_l2(const Eigen::VectorXd& P) const {
    return l2_norm(space_, cache_, P);
  }

  /// Outer Newton iteration; `u` supplies U and DU.
  PressureField newton_solve(UBackend& u) const {
    const bool vertex_mean = opts_.jacobian_eval == JacobianEval::VertexMean;
    PressureField out;
    out.P = Eigen::VectorXd::Zero(space_.size());

    const std::int64_t miss0 = u.cache_misses();
    const std::int64_t hit0 = u.cache_hits();
    Eigen::VectorXd F = assemble_residual(out.P, u, vertex_mean);
    double rnorm = F.norm();
    const double r0 = rnorm;
    out.residual_history.push_back(rnorm);
    if (opts_.log) opts_.log(0, rnorm);
    const double threshold = opts_.tol_rel * r0;

    DirectSolver solver;
    std::int64_t miss_mark = u.cache_misses();
    out.misses_per_iter.push_back(miss_mark - miss0);
    while (rnorm > threshold && rnorm > 0.0) {
      if (out.iters >= opts_.max_outer)
        throw OuterNewtonDiverged(out.residual_history);

      // The drive is f' - grad P, so dF/dP = -K with K the (positive)
      // assembled form; the correction solves K delta = +F, P <- P + delta.
      solver.factorize(assemble_jacobian(out.P, u));
      Eigen::VectorXd rhs(space_.size() + 1);
      rhs.head(space_.size()) = F;
      rhs[space_.size()] = 0.0;
      const Eigen::VectorXd delta =
          solver.solve(rhs).head(space_.size());

      double step = 1.0;
      bool accepted = false;
      for (int h = 0; h <= opts_.max_halvings; ++h) {
        const Eigen::VectorXd trial =
            subtract_mean(out.P + step * delta);
        const Eigen::VectorXd Ft = assemble_residual(trial, u, vertex_mean);
        const double rt = Ft.norm();
        if (rt < rnorm) {
          out.P = trial;
          F = Ft;
          rnorm = rt;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      ++out.iters;
      out.residual_history.push_back(rnorm);
      if (opts_.log) opts_.log(out.iters, rnorm);
      const std::int64_t miss_now = u.cache_misses();
      out.misses_per_iter.push_back(miss_now - miss_mark);
      miss_mark = miss_now;
      if (!accepted) throw OuterNewtonDiverged(out.residual_history);
    }

    // Filtration velocity and drive at the barycenters of the converged P.
    u.prefetch(barycenter_drives(out.P), false);
    out.V.resize(static_cast<std::size_t>(n_triangles()));
    out.xi.resize(static_cast<std::size_t>(n_triangles()));
    for (int e = 0; e < n_triangles(); ++e) {
      const Vec2 d = drive_at(e, 3, out.P);
      out.xi[static_cast<std::size_t>(e)] = d;
      out.V[static_cast<std::size_t>(e)] = u.U(d);
    }
    out.cache_hits = u.cache_hits() - hit0;
    out.cache_misses = u.cache_misses() - miss0;
    out.work = u.work();
    return out;
  }

private:
  std::size_t grad_index(int e, int k, int i) const {
    return (static_cast<std::size_t>(e) * 4 + static_cast<std::size_t>(k)) *
               static_cast<std::size_t>(space_.local_size()) +
           static_cast<std::size_t>(i);
  }

  const TriMesh* mesh_;
  std::function<Vec2(const Vec2&)> forcing_;
  DarcyOptions opts_;
  Space2D space_;
  SimplexRule<2> rule_;
  ElementCache2D cache_;
  std::vector<double> p1_at_qp_;  ///< [qp][vertex]
  std::vector<Vec2> grads_;       ///< [elem][sample 0..3][local basis]
  std::vector<Vec2> f_samples_;   ///< [elem][sample 0..3]
  Eigen::VectorXd border_;        ///< ∫ psi_i
};

// ===========================================================================
// Entry points
// ===========================================================================

/// Residual of the nonlinear Darcy weak form at the given pressure, with a
/// backend built from the problem's mode.
inline Eigen::VectorXd assemble_residual(const DarcyProblem& pb,
                                         const Eigen::VectorXd& P,
                                         DarcyOptions opts = {}) {
  if (!pb.omega) throw ConfigError("darcy problem needs a domain mesh");
  const double inner_rel = opts.tol_rel * 1e-2;
  DarcyWorkspace ws(*pb.omega, pb.forcing, std::move(opts));
  if (pb.mode == DarcyMode::Tabulated) {
    if (!pb.table) throw ConfigError("tabulated mode needs a table");
    TableUBackend backend(*pb.table);
    return ws.assemble_residual(P, backend);
  }
  if (!pb.cell_mesh) throw ConfigError("exact mode needs a cell mesh");
  PermEvaluator ev(*pb.cell_mesh, pb.params, CellOptions{}, pb.rel_round,
                   pb.cell_tol_abs, inner_rel, pb.cell_max_inner);
  ev.set_threads(pb.threads);
  ExactUBackend backend(ev);
  return ws.assemble_residual(P, backend);
}

/// Outer Newton iteration from P = 0. In Exact mode the inner (cell)
/// relative tolerance is held 100x tighter than the outer one.
inline PressureField newton_solve(const DarcyProblem& pb,
                                  DarcyOptions opts = {}) {
  if (!pb.omega) throw ConfigError("darcy problem needs a domain mesh");
  const double inner_rel = opts.tol_rel * 1e-2;
  DarcyWorkspace ws(*pb.omega, pb.forcing, std::move(opts));
  if (pb.mode == DarcyMode::Tabulated) {
    if (!pb.table) throw ConfigError("tabulated mode needs a table");
    TableUBackend backend(*pb.table);
    return ws.newton_solve(backend);
  }
  if (!pb.cell_mesh) throw ConfigError("exact mode needs a cell mesh");
  PermEvaluator ev(*pb.cell_mesh, pb.params, CellOptions{}, pb.rel_round,
                   pb.cell_tol_abs, inner_rel, pb.cell_max_inner);
  ev.set_threads(pb.threads);
  ExactUBackend backend(ev);
  return ws.newton_solve(backend);
}

/// Linear Darcy law with a constant SPD tensor A:
///   ∫ A (f' - grad P) · grad psi = 0,  V' = (1/(mu*eta0)) A (f' - grad P).
/// The forcing enters through its P1 interpolant, matching the quadrature
/// of the nonlinear path.
inline PressureField solve_linear_darcy(
    const TriMesh& omega, const std::function<Vec2(const Vec2&)>& forcing,
    const Mat2& A, double mu, double eta0, DarcyOptions opts = {}) {
  if (!(mu > 0.0) || !(eta0 > 0.0))
    throw ConfigError("mu and eta0 must be positive");
  {
    const double scale = A.norm();
    const Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (A + A.transpose()));
    if ((A - A.transpose()).norm() > 1e-10 * scale ||
        es.eigenvalues().minCoeff() <= 0.0)
      throw SingularSystem("permeability tensor must be SPD");
  }
  DarcyWorkspace ws(omega, forcing, std::move(opts));
  const Space2D& space = ws.space();
  const ElementCache2D& cache = ws.quad_cache();
  const int n = space.size();
  const int nl = space.local_size();
  const int nq = cache.n_qp;

  std::vector<Triplet> trips;
  Eigen::VectorXd rhs_ext = Eigen::VectorXd::Zero(n + 1);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  for (int e = 0; e < ws.n_triangles(); ++e) {
    const auto& dofs = space.element_dofs(e);
    // P1 interpolant of f' via the vertex samples (k = 0,1,2).
    Vec2 fv[3];
    for (int k = 0; k < 3; ++k) fv[k] = ws.drive_at(e, k, zero);
    for (int q = 0; q < nq; ++q) {
      const double w = cache.weight(e, q);
      const Vec2 fq = ws.p1_weight(q, 0) * fv[0] + ws.p1_weight(q, 1) * fv[1] +
                      ws.p1_weight(q, 2) * fv[2];
      const Vec2 Afq = A * fq;
      for (int i = 0; i < nl; ++i) {
        const Vec2& gi = cache.grad(e, q, i);
        rhs_ext[dofs[static_cast<std::size_t>(i)]] += w * Afq.dot(gi);
        const Vec2 Agi = A * gi;
        for (int j = 0; j < nl; ++j)
          trips.emplace_back(dofs[static_cast<std::size_t>(i)],
                             dofs[static_cast<std::size_t>(j)],
                             w * cache.grad(e, q, j).dot(Agi));
      }
    }
  }
  const Eigen::VectorXd& border = ws.mean_border();
  for (int i = 0; i < n; ++i) {
    trips.emplace_back(i, n, border[i]);
    trips.emplace_back(n, i, border[i]);
  }
  SpMat Kb(n + 1, n + 1);
  Kb.setFromTriplets(trips.begin(), trips.end());
  Kb.makeCompressed();

  DirectSolver solver;
  solver.factorize(Kb);
  const double r0 = rhs_ext.head(n).norm();
  PressureField out;
  out.P = ws.subtract_mean(solver.solve(rhs_ext).head(n));
  out.iters = 1;

  out.V.resize(static_cast<std::size_t>(ws.n_triangles()));
  out.xi.resize(static_cast<std::size_t>(ws.n_triangles()));
  for (int e = 0; e < ws.n_triangles(); ++e) {
    const Vec2 d = ws.drive_at(e, 3, out.P);
    out.xi[static_cast<std::size_t>(e)] = d;
    out.V[static_cast<std::size_t>(e)] = (1.0 / (mu * eta0)) * (A * d);
  }
  // Residual of the assembled system at the solution (headless check).
  Eigen::VectorXd ext(n + 1);
  ext.head(n) = out.P;
  ext[n] = 0.0;
  out.residual_history.push_back(r0);
  out.residual_history.push_back((rhs_ext - Kb * ext).head(n).norm());
  return out;
}

/// Per-triangle velocity/drive components and norms plus pressure point
/// values — the seven output fields of a Darcy run.
inline DarcyFields postprocess(const TriMesh& omega,
                               const PressureField& field) {
  const std::size_t ne = omega.triangles.size();
  if (field.V.size() != ne || field.xi.size() != ne)
    throw ConfigError("pressure field does not match the mesh");
  DarcyFields out;
  out.V1.resize(ne);
  out.V2.resize(ne);
  out.Vnorm.resize(ne);
  out.xi1.resize(ne);
  out.xi2.resize(ne);
  out.xinorm.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    out.V1[e] = field.V[e].x();
    out.V2[e] = field.V[e].y();
    out.Vnorm[e] = field.V[e].norm();
    out.xi1[e] = field.xi[e].x();
    out.xi2[e] = field.xi[e].y();
    out.xinorm[e] = field.xi[e].norm();
  }
  out.P_vertex = field.P.head(static_cast<Eigen::Index>(omega.vertices.size()));
  return out;
}

}  // namespace cdarcy
