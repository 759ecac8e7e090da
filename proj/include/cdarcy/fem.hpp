/// @file fem.hpp
/// @brief Finite-element infrastructure: P1/P2 reference elements on
///        triangles and tetrahedra, scalar dof maps with edge numbering,
///        periodic/Dirichlet constraint reduction, constrained sparse
///        assembly, and per-element quadrature caches.
#pragma once

#include <cdarcy/core.hpp>
#include <cdarcy/mesh.hpp>
#include <cdarcy/quadrature.hpp>

#include <Eigen/Sparse>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <vector>

namespace cdarcy {

enum class Family { P1, P2 };

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// ===========================================================================
// Reference shape functions
//
// Triangle: barycentric (l0, l1, l2) = (1-x-y, x, y); P2 local order
//   [v0 v1 v2 | e01 e02 e12].
// Tetrahedron: (l0..l3) = (1-x-y-z, x, y, z); P2 local order
//   [v0 v1 v2 v3 | e01 e02 e03 e12 e13 e23].
// ===========================================================================

inline constexpr int local_dof_count_tri(Family f) {
  return f == Family::P1 ? 3 : 6;
}
inline constexpr int local_dof_count_tet(Family f) {
  return f == Family::P1 ? 4 : 10;
}

constexpr std::array<std::array<int, 2>, 3> kTriEdges = {
    {{0, 1}, {0, 2}, {1, 2}}};
constexpr std::array<std::array<int, 2>, 6> kTetEdges = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

inline void shape_tri(Family f, const Vec2& p, double* N) {
  const double l[3] = {1.0 - p.x() - p.y(), p.x(), p.y()};
  if (f == Family::P1) {
    N[0] = l[0];
    N[1] = l[1];
    N[2] = l[2];
    return;
  }
  for (int i = 0; i < 3; ++i) N[i] = l[i] * (2.0 * l[i] - 1.0);
  for (int e = 0; e < 3; ++e)
    N[3 + e] = 4.0 * l[kTriEdges[static_cast<std::size_t>(e)][0]] *
               l[kTriEdges[static_cast<std::size_t>(e)][1]];
}

inline void shape_grad_tri(Family f, const Vec2& p, Vec2* G) {
  static const Vec2 dl[3] = {Vec2(-1, -1), Vec2(1, 0), Vec2(0, 1)};
  const double l[3] = {1.0 - p.x() - p.y(), p.x(), p.y()};
  if (f == Family::P1) {
    for (int i = 0; i < 3; ++i) G[i] = dl[i];
    return;
  }
  for (int i = 0; i < 3; ++i) G[i] = (4.0 * l[i] - 1.0) * dl[i];
  for (int e = 0; e < 3; ++e) {
    const int a = kTriEdges[static_cast<std::size_t>(e)][0];
    const int b = kTriEdges[static_cast<std::size_t>(e)][1];
    G[3 + e] = 4.0 * (l[a] * dl[b] + l[b] * dl[a]);
  }
}

inline void shape_tet(Family f, const Vec3& p, double* N) {
  const double l[4] = {1.0 - p.x() - p.y() - p.z(), p.x(), p.y(), p.z()};
  if (f == Family::P1) {
    for (int i = 0; i < 4; ++i) N[i] = l[i];
    return;
  }
  for (int i = 0; i < 4; ++i) N[i] = l[i] * (2.0 * l[i] - 1.0);
  for (int e = 0; e < 6; ++e)
    N[4 + e] = 4.0 * l[kTetEdges[static_cast<std::size_t>(e)][0]] *
               l[kTetEdges[static_cast<std::size_t>(e)][1]];
}

inline void shape_grad_tet(Family f, const Vec3& p, Vec3* G) {
  static const Vec3 dl[4] = {Vec3(-1, -1, -1), Vec3(1, 0, 0), Vec3(0, 1, 0),
                             Vec3(0, 0, 1)};
  const double l[4] = {1.0 - p.x() - p.y() - p.z(), p.x(), p.y(), p.z()};
  if (f == Family::P1) {
    for (int i = 0; i < 4; ++i) G[i] = dl[i];
    return;
  }
  for (int i = 0; i < 4; ++i) G[i] = (4.0 * l[i] - 1.0) * dl[i];
  for (int e = 0; e < 6; ++e) {
    const int a = kTetEdges[static_cast<std::size_t>(e)][0];
    const int b = kTetEdges[static_cast<std::size_t>(e)][1];
    G[4 + e] = 4.0 * (l[a] * dl[b] + l[b] * dl[a]);
  }
}

// ===========================================================================
// Scalar function spaces
// ===========================================================================

/// Scalar P1/P2 space on a TriMesh. Dofs: vertices, then (P2) mesh edges in
/// lexicographic order of their sorted vertex pairs (deterministic,
/// independent of traversal order).
class Space2D {
public:
  Space2D(const TriMesh& mesh, Family family) : mesh_(&mesh), family_(family) {
    if (family == Family::P2) {
      std::vector<std::array<int, 2>> all;
      for (const auto& t : mesh.triangles) {
        for (const auto& le : kTriEdges) {
          int a = t[static_cast<std::size_t>(le[0])];
          int b = t[static_cast<std::size_t>(le[1])];
          if (a > b) std::swap(a, b);
          all.push_back({a, b});
        }
      }
      std::sort(all.begin(), all.end());
      all.erase(std::unique(all.begin(), all.end()), all.end());
      edges_ = std::move(all);
      for (int e = 0; e < static_cast<int>(edges_.size()); ++e)
        edge_index_[edges_[static_cast<std::size_t>(e)]] = e;
    }
    const int nloc = local_dof_count_tri(family);
    element_dofs_.resize(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      const auto& tri = mesh.triangles[t];
      auto& dofs = element_dofs_[t];
      for (int i = 0; i < 3; ++i) dofs[static_cast<std::size_t>(i)] = tri[static_cast<std::size_t>(i)];
      if (family == Family::P2) {
        for (int e = 0; e < 3; ++e) {
          int a = tri[static_cast<std::size_t>(kTriEdges[static_cast<std::size_t>(e)][0])];
          int b = tri[static_cast<std::size_t>(kTriEdges[static_cast<std::size_t>(e)][1])];
          if (a > b) std::swap(a, b);
          dofs[static_cast<std::size_t>(3 + e)] =
              n_vertices() + edge_index_.at({a, b});
        }
      }
      (void)nloc;
    }
  }

  const TriMesh& mesh() const { return *mesh_; }
  Family family() const { return family_; }
  int n_vertices() const { return static_cast<int>(mesh_->vertices.size()); }
  int n_edges() const { return static_cast<int>(edges_.size()); }
  int size() const {
    return family_ == Family::P1 ? n_vertices() : n_vertices() + n_edges();
  }
  int local_size() const { return local_dof_count_tri(family_); }
  const std::array<int, 6>& element_dofs(int t) const {
    return element_dofs_[static_cast<std::size_t>(t)];
  }

  Vec2 dof_point(int dof) const {
    if (dof < n_vertices())
      return mesh_->vertices[static_cast<std::size_t>(dof)];
    const auto& e = edges_[static_cast<std::size_t>(dof - n_vertices())];
    return 0.5 * (mesh_->vertices[static_cast<std::size_t>(e[0])] +
                  mesh_->vertices[static_cast<std::size_t>(e[1])]);
  }

  /// Scalar dofs selected by a predicate on their geometric location.
  std::vector<int> dofs_where(const std::function<bool(const Vec2&)>& pred) const {
    std::vector<int> out;
    for (int d = 0; d < size(); ++d)
      if (pred(dof_point(d))) out.push_back(d);
    return out;
  }

private:
  const TriMesh* mesh_;
  Family family_;
  std::vector<std::array<int, 2>> edges_;
  std::map<std::array<int, 2>, int> edge_index_;
  std::vector<std::array<int, 6>> element_dofs_;
};

/// Scalar P1/P2 space on a TetMesh; same dof layout rules as Space2D.
class Space3D {
public:
  Space3D(const TetMesh& mesh, Family family) : mesh_(&mesh), family_(family) {
    if (family == Family::P2) {
      std::vector<std::array<int, 2>> all;
      for (const auto& t : mesh.tets) {
        for (const auto& le : kTetEdges) {
          int a = t[static_cast<std::size_t>(le[0])];
          int b = t[static_cast<std::size_t>(le[1])];
          if (a > b) std::swap(a, b);
          all.push_back({a, b});
        }
      }
      std::sort(all.begin(), all.end());
      all.erase(std::unique(all.begin(), all.end()), all.end());
      edges_ = std::move(all);
      for (int e = 0; e < static_cast<int>(edges_.size()); ++e)
        edge_index_[edges_[static_cast<std::size_t>(e)]] = e;
    }
    element_dofs_.resize(mesh.tets.size());
    for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
      const auto& tet = mesh.tets[t];
      auto& dofs = element_dofs_[t];
      for (int i = 0; i < 4; ++i) dofs[static_cast<std::size_t>(i)] = tet[static_cast<std::size_t>(i)];
      if (family == Family::P2) {
        for (int e = 0; e < 6; ++e) {
          int a = tet[static_cast<std::size_t>(kTetEdges[static_cast<std::size_t>(e)][0])];
          int b = tet[static_cast<std::size_t>(kTetEdges[static_cast<std::size_t>(e)][1])];
          if (a > b) std::swap(a, b);
          dofs[static_cast<std::size_t>(4 + e)] =
              n_vertices() + edge_index_.at({a, b});
        }
      }
    }
  }

  const TetMesh& mesh() const { return *mesh_; }
  Family family() const { return family_; }
  int n_vertices() const { return static_cast<int>(mesh_->vertices.size()); }
  int n_edges() const { return static_cast<int>(edges_.size()); }
  int size() const {
    return family_ == Family::P1 ? n_vertices() : n_vertices() + n_edges();
  }
  int local_size() const { return local_dof_count_tet(family_); }
  const std::array<int, 10>& element_dofs(int t) const {
    return element_dofs_[static_cast<std::size_t>(t)];
  }

  Vec3 dof_point(int dof) const {
    if (dof < n_vertices())
      return mesh_->vertices[static_cast<std::size_t>(dof)];
    const auto& e = edges_[static_cast<std::size_t>(dof - n_vertices())];
    return 0.5 * (mesh_->vertices[static_cast<std::size_t>(e[0])] +
                  mesh_->vertices[static_cast<std::size_t>(e[1])]);
  }

  int edge_dof(int va, int vb) const {
    if (va > vb) std::swap(va, vb);
    return n_vertices() + edge_index_.at({va, vb});
  }

  /// Scalar dofs lying on boundary faces with any of the given tags:
  /// the face vertices and (P2) the dofs of the face's three edges.
  std::vector<int> tagged_dofs(std::initializer_list<FaceTag> tags) const {
    std::vector<int> out;
    for (const auto& [f, tag] : mesh_->boundary_faces) {
      bool hit = false;
      for (FaceTag t : tags)
        if (tag == t) hit = true;
      if (!hit) continue;
      for (int v : f) out.push_back(v);
      if (family_ == Family::P2) {
        out.push_back(edge_dof(f[0], f[1]));
        out.push_back(edge_dof(f[0], f[2]));
        out.push_back(edge_dof(f[1], f[2]));
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Scalar periodic dof pairs: the mesh's vertex pairing plus (P2) the
  /// induced edge pairing on periodic faces.
  std::vector<std::pair<int, int>> periodic_scalar_pairs() const {
    std::vector<std::pair<int, int>> pairs;
    std::map<int, int> px, py;
    for (const auto& [u, v] : mesh_->periodic_map) {
      const Vec3 d = mesh_->vertices[static_cast<std::size_t>(v)] -
                     mesh_->vertices[static_cast<std::size_t>(u)];
      if (std::abs(d.x() - 1.0) < 0.5) px[u] = v;
      else py[u] = v;
      pairs.emplace_back(u, v);
    }
    if (family_ == Family::P2) {
      for (const auto& e : edges_) {
        for (const auto* m : {&px, &py}) {
          auto ia = m->find(e[0]);
          auto ib = m->find(e[1]);
          if (ia == m->end() || ib == m->end()) continue;
          int a = ia->second, b = ib->second;
          if (a > b) std::swap(a, b);
          auto it = edge_index_.find({a, b});
          if (it == edge_index_.end())
            throw NonConformingSplit(
                "periodic image of a boundary edge is not a mesh edge");
          pairs.emplace_back(n_vertices() + edge_index_.at(e),
                             n_vertices() + it->second);
        }
      }
    }
    return pairs;
  }

private:
  const TetMesh* mesh_;
  Family family_;
  std::vector<std::array<int, 2>> edges_;
  std::map<std::array<int, 2>, int> edge_index_;
  std::vector<std::array<int, 10>> element_dofs_;
};

// ===========================================================================
// Constraint reduction (periodic merge + Dirichlet elimination)
// ===========================================================================

/// Union-find based dof reduction. Merged dofs share one unknown; fixed
/// dofs are eliminated symmetrically (their values lifted to the rhs).
class Constraints {
public:
  explicit Constraints(int n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  void merge(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);
    parent_[static_cast<std::size_t>(b)] = a;
  }

  void fix(int dof, double value = 0.0) { fixed_.emplace_back(dof, value); }

  void finalize() {
    const int n = static_cast<int>(parent_.size());
    // Propagate fixes to roots (last write wins; values must agree).
    std::map<int, double> fixed_roots;
    for (const auto& [d, v] : fixed_) {
      const int r = find(d);
      auto it = fixed_roots.find(r);
      if (it != fixed_roots.end() && std::abs(it->second - v) > 1e-12)
        throw ConfigError("conflicting Dirichlet values on merged dofs");
      fixed_roots[r] = v;
    }
    reduced_.assign(static_cast<std::size_t>(n), -1);
    value_.assign(static_cast<std::size_t>(n), 0.0);
    n_reduced_ = 0;
    for (int d = 0; d < n; ++d) {
      const int r = find(d);
      if (r != d) continue;
      auto it = fixed_roots.find(r);
      if (it != fixed_roots.end()) {
        value_[static_cast<std::size_t>(r)] = it->second;
      } else {
        reduced_[static_cast<std::size_t>(r)] = n_reduced_++;
      }
    }
    finalized_ = true;
  }

  int size_full() const { return static_cast<int>(parent_.size()); }
  int size_reduced() const { return n_reduced_; }

  /// (reduced index, fixed value); reduced == -1 means eliminated.
  std::pair<int, double> resolve(int dof) const {
    const int r = find_const(dof);
    return {reduced_[static_cast<std::size_t>(r)],
            value_[static_cast<std::size_t>(r)]};
  }

  /// Reduced coefficients -> full coefficients (slaves copy their master,
  /// fixed dofs take their prescribed values).
  Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const {
    Eigen::VectorXd full(size_full());
    for (int d = 0; d < size_full(); ++d) {
      const auto [r, v] = resolve(d);
      full[d] = (r >= 0) ? reduced[r] : v;
    }
    return full;
  }

  /// Restriction of a full coefficient vector (masters' entries).
  Eigen::VectorXd restrict_full(const Eigen::VectorXd& full) const {
    Eigen::VectorXd red(n_reduced_);
    for (int d = 0; d < size_full(); ++d) {
      if (find_const(d) != d) continue;
      const int r = reduced_[static_cast<std::size_t>(d)];
      if (r >= 0) red[r] = full[d];
    }
    return red;
  }

private:
  mutable std::vector<int> parent_;
  std::vector<std::pair<int, double>> fixed_;
  std::vector<int> reduced_;
  std::vector<double> value_;
  int n_reduced_ = 0;
  bool finalized_ = false;

  int find(int v) {
    while (parent_[static_cast<std::size_t>(v)] != v)
      v = parent_[static_cast<std::size_t>(v)] =
          parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(v)])];
    return v;
  }
  int find_const(int v) const {
    while (parent_[static_cast<std::size_t>(v)] != v)
      v = parent_[static_cast<std::size_t>(v)];
    return v;
  }
};

// ===========================================================================
// Constrained assembly
// ===========================================================================

/// Accumulates element contributions in full dof indices and emits the
/// constrained sparse block. Fixed columns lift their Dirichlet value to the
/// rhs; fixed rows are dropped (symmetric elimination). Row and column
/// constraint sets may differ (rectangular coupling blocks).
class BlockBuilder {
public:
  BlockBuilder(const Constraints& rows, const Constraints& cols)
      : rows_(&rows), cols_(&cols),
        rhs_(Eigen::VectorXd::Zero(rows.size_reduced())) {}

  void add(int i_full, int j_full, double v) {
    const auto [ri, vi] = rows_->resolve(i_full);
    (void)vi;
    const auto [rj, vj] = cols_->resolve(j_full);
    if (ri < 0) return;
    if (rj < 0) {
      if (vj != 0.0) rhs_[ri] -= v * vj;
      return;
    }
    trips_.emplace_back(ri, rj, v);
  }

  void add_rhs(int i_full, double v) {
    const auto [ri, vi] = rows_->resolve(i_full);
    (void)vi;
    if (ri >= 0) rhs_[ri] += v;
  }

  SpMat matrix() const {
    SpMat A(rows_->size_reduced(), cols_->size_reduced());
    A.setFromTriplets(trips_.begin(), trips_.end());
    return A;
  }

  const Eigen::VectorXd& rhs() const { return rhs_; }

private:
  const Constraints* rows_;
  const Constraints* cols_;
  std::vector<Triplet> trips_;
  Eigen::VectorXd rhs_;
};

// ===========================================================================
// Element geometry caches
// ===========================================================================

/// Per-element, per-quadrature-point physical shape data for a 3D scalar
/// space: gradients mapped through the affine element, and w*|detJ|.
struct ElementCache3D {
  int n_local = 0;
  int n_qp = 0;
  std::vector<double> weights;   ///< element-major: [elem][qp]
  std::vector<Vec3> grads;       ///< [elem][qp][local]
  std::vector<double> values;    ///< reference values [qp][local] (shared)
  std::vector<Vec3> points;      ///< physical quadrature points [elem][qp]

  ElementCache3D(const Space3D& space, const SimplexRule<3>& rule) {
    const TetMesh& mesh = space.mesh();
    n_local = space.local_size();
    n_qp = static_cast<int>(rule.points.size());
    const std::size_t ne = mesh.tets.size();
    weights.resize(ne * static_cast<std::size_t>(n_qp));
    grads.resize(ne * static_cast<std::size_t>(n_qp) *
                 static_cast<std::size_t>(n_local));
    points.resize(ne * static_cast<std::size_t>(n_qp));
    values.resize(static_cast<std::size_t>(n_qp) *
                  static_cast<std::size_t>(n_local));

    std::vector<Vec3> ref_grads(static_cast<std::size_t>(n_qp) *
                                static_cast<std::size_t>(n_local));
    for (int q = 0; q < n_qp; ++q) {
      shape_tet(space.family(), rule.points[static_cast<std::size_t>(q)],
                &values[static_cast<std::size_t>(q * n_local)]);
      shape_grad_tet(space.family(), rule.points[static_cast<std::size_t>(q)],
                     &ref_grads[static_cast<std::size_t>(q * n_local)]);
    }

    for (std::size_t e = 0; e < ne; ++e) {
      const auto& tet = mesh.tets[e];
      const Vec3& p0 = mesh.vertices[static_cast<std::size_t>(tet[0])];
      Eigen::Matrix3d J;
      J.col(0) = mesh.vertices[static_cast<std::size_t>(tet[1])] - p0;
      J.col(1) = mesh.vertices[static_cast<std::size_t>(tet[2])] - p0;
      J.col(2) = mesh.vertices[static_cast<std::size_t>(tet[3])] - p0;
      const double detJ = J.determinant();
      const Eigen::Matrix3d JinvT = J.inverse().transpose();
      for (int q = 0; q < n_qp; ++q) {
        weights[e * static_cast<std::size_t>(n_qp) + static_cast<std::size_t>(q)] =
            rule.weights[static_cast<std::size_t>(q)] * std::abs(detJ);
        points[e * static_cast<std::size_t>(n_qp) + static_cast<std::size_t>(q)] =
            p0 + J * rule.points[static_cast<std::size_t>(q)];
        for (int i = 0; i < n_local; ++i) {
          grads[(e * static_cast<std::size_t>(n_qp) +
                 static_cast<std::size_t>(q)) *
                    static_cast<std::size_t>(n_local) +
                static_cast<std::size_t>(i)] =
              JinvT *
              ref_grads[static_cast<std::size_t>(q * n_local + i)];
        }
      }
    }
  }

  double weight(int e, int q) const {
    return weights[static_cast<std::size_t>(e) * static_cast<std::size_t>(n_qp) +
                   static_cast<std::size_t>(q)];
  }
  const Vec3& grad(int e, int q, int i) const {
    return grads[(static_cast<std::size_t>(e) * static_cast<std::size_t>(n_qp) +
                  static_cast<std::size_t>(q)) *
                     static_cast<std::size_t>(n_local) +
                 static_cast<std::size_t>(i)];
  }
  double value(int q, int i) const {
    return values[static_cast<std::size_t>(q) * static_cast<std::size_t>(n_local) +
                  static_cast<std::size_t>(i)];
  }
  const Vec3& point(int e, int q) const {
    return points[static_cast<std::size_t>(e) * static_cast<std::size_t>(n_qp) +
                  static_cast<std::size_t>(q)];
  }
};

/// 2D counterpart of ElementCache3D.
struct ElementCache2D {
  int n_local = 0;
  int n_qp = 0;
  std::vector<double> weights;
  std::vector<Vec2> grads;
  std::vector<double> values;
  std::vector<Vec2> points;

  ElementCache2D(const Space2D& space, const SimplexRule<2>& rule) {
    const TriMesh& mesh = space.mesh();
    n_local = space.local_size();
    n_qp = static_cast<int>(rule.points.size());
    const std::size_t ne = mesh.triangles.size();
    weights.resize(ne * static_cast<std::size_t>(n_qp));
    grads.resize(ne * static_cast<std::size_t>(n_qp) *
                 static_cast<std::size_t>(n_local));
    points.resize(ne * static_cast<std::size_t>(n_qp));
    values.resize(static_cast<std::size_t>(n_qp) *
                  static_cast<std::size_t>(n_local));

    std::vector<Vec2> ref_grads(static_cast<std::size_t>(n_qp) *
                                static_cast<std::size_t>(n_local));
    for (int q = 0; q < n_qp; ++q) {
      shape_tri(space.family(), rule.points[static_cast<std::size_t>(q)],
                &values[static_cast<std::size_t>(q * n_local)]);
      shape_grad_tri(space.family(), rule.points[static_cast<std::size_t>(q)],
                     &ref_grads[static_cast<std::size_t>(q * n_local)]);
    }

    for (std::size_t e = 0; e < ne; ++e) {
      const auto& tri = mesh.triangles[e];
      const Vec2& p0 = mesh.vertices[static_cast<std::size_t>(tri[0])];
      Eigen::Matrix2d J;
      J.col(0) = mesh.vertices[static_cast<std::size_t>(tri[1])] - p0;
      J.col(1) = mesh.vertices[static_cast<std::size_t>(tri[2])] - p0;
      const double detJ = J.determinant();
      const Eigen::Matrix2d JinvT = J.inverse().transpose();
      for (int q = 0; q < n_qp; ++q) {
        weights[e * static_cast<std::size_t>(n_qp) + static_cast<std::size_t>(q)] =
            rule.weights[static_cast<std::size_t>(q)] * std::abs(detJ);
        points[e * static_cast<std::size_t>(n_qp) + static_cast<std::size_t>(q)] =
            p0 + J * rule.points[static_cast<std::size_t>(q)];
        for (int i = 0; i < n_local; ++i) {
          grads[(e * static_cast<std::size_t>(n_qp) +
                 static_cast<std::size_t>(q)) *
                    static_cast<std::size_t>(n_local) +
                static_cast<std::size_t>(i)] =
              JinvT *
              ref_grads[static_cast<std::size_t>(q * n_local + i)];
        }
      }
    }
  }

  double weight(int e, int q) const {
    return weights[static_cast<std::size_t>(e) * static_cast<std::size_t>(n_qp) +
                   static_cast<std::size_t>(q)];
  }
  const Vec2& grad(int e, int q, int i) const {
    return grads[(static_cast<std::size_t>(e) * static_cast<std::size_t>(n_qp) +
                  static_cast<std::size_t>(q)) *
                     static_cast<std::size_t>(n_local) +
                 static_cast<std::size_t>(i)];
  }
  double value(int q, int i) const {
    return values[static_cast<std::size_t>(q) * static_cast<std::size_t>(n_local) +
                  static_cast<std::size_t>(i)];
  }
  const Vec2& point(int e, int q) const {
    return points[static_cast<std::size_t>(e) * static_cast<std::size_t>(n_qp) +
                  static_cast<std::size_t>(q)];
  }
};

// ===========================================================================
// Utility assembly and integrals (unconstrained, full dof indexing)
// ===========================================================================

template <class SpaceT, class CacheT>
SpMat assemble_mass(const SpaceT& space, const CacheT& cache) {
  std::vector<Triplet> trips;
  const int nl = cache.n_local;
  const int n_elems =
      static_cast<int>(cache.weights.size()) / cache.n_qp;
  for (int e = 0; e < n_elems; ++e) {
    const auto& dofs = space.element_dofs(e);
    for (int q = 0; q < cache.n_qp; ++q) {
      const double w = cache.weight(e, q);
      for (int i = 0; i < nl; ++i)
        for (int j = 0; j < nl; ++j)
          trips.emplace_back(dofs[static_cast<std::size_t>(i)],
                             dofs[static_cast<std::size_t>(j)],
                             w * cache.value(q, i) * cache.value(q, j));
    }
  }
  SpMat M(space.size(), space.size());
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

template <class SpaceT, class CacheT>
SpMat assemble_stiffness(const SpaceT& space, const CacheT& cache) {
  std::vector<Triplet> trips;
  const int nl = cache.n_local;
  const int n_elems =
      static_cast<int>(cache.weights.size()) / cache.n_qp;
  for (int e = 0; e < n_elems; ++e) {
    const auto& dofs = space.element_dofs(e);
    for (int q = 0; q < cache.n_qp; ++q) {
      const double w = cache.weight(e, q);
      for (int i = 0; i < nl; ++i)
        for (int j = 0; j < nl; ++j)
          trips.emplace_back(
              dofs[static_cast<std::size_t>(i)], dofs[static_cast<std::size_t>(j)],
              w * cache.grad(e, q, i).dot(cache.grad(e, q, j)));
    }
  }
  SpMat K(space.size(), space.size());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

/// Integral of a discrete scalar field given by full coefficients.
template <class SpaceT, class CacheT>
double integrate(const SpaceT& space, const CacheT& cache,
                 const Eigen::VectorXd& coeffs) {
  double sum = 0.0;
  const int n_elems = static_cast<int>(cache.weights.size()) / cache.n_qp;
  for (int e = 0; e < n_elems; ++e) {
    const auto& dofs = space.element_dofs(e);
    for (int q = 0; q < cache.n_qp; ++q) {
      double v = 0.0;
      for (int i = 0; i < cache.n_local; ++i)
        v += cache.value(q, i) * coeffs[dofs[static_cast<std::size_t>(i)]];
      sum += cache.weight(e, q) * v;
    }
  }
  return sum;
}

/// Measure of the meshed domain (quadrature weights sum elementwise to the
/// element volumes).
template <class CacheT>
double measure(const CacheT& cache) {
  double sum = 0.0;
  for (double w : cache.weights) sum += w;
  return sum;
}

/// L2 norm of a discrete scalar field.
template <class SpaceT, class CacheT>
double l2_norm(const SpaceT& space, const CacheT& cache,
               const Eigen::VectorXd& coeffs) {
  double sum = 0.0;
  const int n_elems = static_cast<int>(cache.weights.size()) / cache.n_qp;
  for (int e = 0; e < n_elems; ++e) {
    const auto& dofs = space.element_dofs(e);
    for (int q = 0; q < cache.n_qp; ++q) {
      double v = 0.0;
      for (int i = 0; i < cache.n_local; ++i)
        v += cache.value(q, i) * coeffs[dofs[static_cast<std::size_t>(i)]];
      sum += cache.weight(e, q) * v * v;
    }
  }
  return std::sqrt(sum);
}

/// Subtracts the mean so the field integrates to zero; returns the shifted
/// coefficients (P1/P2 contain constants, so this is exact).
template <class SpaceT, class CacheT>
Eigen::VectorXd enforce_zero_mean(const SpaceT& space, const CacheT& cache,
                                  Eigen::VectorXd coeffs) {
  const double mean = integrate(space, cache, coeffs) / measure(cache);
  coeffs.array() -= mean;
  return coeffs;
}

}  // namespace cdarcy
