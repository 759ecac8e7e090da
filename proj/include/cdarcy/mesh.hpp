/// @file mesh.hpp
/// @brief Mesh types and generators: the periodic unit-cell cross section
///        with a centered inclusion, its extrusion to a half-cell
///        tetrahedral mesh, the structured rectangle mesh for the
///        macroscopic domain, and a tiled export mesh of the physical
///        perforated layer.
#pragma once

#include <cdarcy/core.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

namespace cdarcy {

// ===========================================================================
// Tags
// ===========================================================================

enum class EdgeTag {
  Outer,          ///< rectangle boundary of the macroscopic domain
  Hole,           ///< inclusion boundary of a cell cross section
  PeriodicLeft,   ///< x = -1/2
  PeriodicRight,  ///< x = +1/2
  PeriodicFront,  ///< y = -1/2
  PeriodicBack    ///< y = +1/2
};

enum class FaceTag {
  Bottom,         ///< z = 0 plate (no slip)
  SymmetryTop,    ///< z = 1/2 mirror plane (upper plate for full-height export)
  Obstacle,       ///< lateral surface of the inclusion (no slip)
  PeriodicLeft,   ///< x = -1/2
  PeriodicRight,  ///< x = +1/2
  PeriodicFront,  ///< y = -1/2
  PeriodicBack    ///< y = +1/2
};

// ===========================================================================
// Inclusion shapes
// ===========================================================================

/// Cross section of the solid inclusion centered in the unit cell
/// (-1/2,1/2)^2: a disk of radius R or an axis-aligned ellipse with
/// semi-axes (a, b).
struct InclusionShape {
  enum class Kind { Disk, Ellipse };
  Kind kind = Kind::Disk;
  double R = 0.25;  ///< disk radius
  double a = 0.35;  ///< ellipse semi-axis along x
  double b = 0.25 * 0.25 / 0.35;  ///< ellipse semi-axis along y

  static InclusionShape disk(double radius) {
    InclusionShape s;
    s.kind = Kind::Disk;
    s.R = radius;
    return s;
  }
  static InclusionShape ellipse(double ax, double ay) {
    InclusionShape s;
    s.kind = Kind::Ellipse;
    s.a = ax;
    s.b = ay;
    return s;
  }

  double semi_x() const { return kind == Kind::Disk ? R : a; }
  double semi_y() const { return kind == Kind::Disk ? R : b; }
  double area() const { return M_PI * semi_x() * semi_y(); }

  /// Perimeter by fine parametric sampling (exact enough for sizing).
  double perimeter() const {
    const int N = 4096;
    double len = 0.0;
    double px = semi_x(), py = 0.0;
    for (int i = 1; i <= N; ++i) {
      const double t = 2.0 * M_PI * i / N;
      const double x = semi_x() * std::cos(t);
      const double y = semi_y() * std::sin(t);
      len += std::hypot(x - px, y - py);
      px = x;
      py = y;
    }
    return len;
  }

  /// The inclusion must fit strictly inside the unit cell.
  void validate() const {
    const double sx = semi_x(), sy = semi_y();
    if (!(sx > 0.0) || !(sy > 0.0))
      throw InfeasibleResolution("inclusion semi-axes must be positive");
    if (sx >= 0.5 || sy >= 0.5)
      throw InfeasibleResolution(
          "inclusion does not fit inside the unit cell (semi-axis >= 1/2)");
  }
};

/// Axis-aligned rectangle.
struct Rect {
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 0.5;
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
};

// ===========================================================================
// Mesh containers
// ===========================================================================

struct TriMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::pair<std::array<int, 2>, EdgeTag>> boundary_edges;

  double triangle_area(int t) const {
    const auto& tri = triangles[static_cast<std::size_t>(t)];
    const Vec2 e1 = vertices[static_cast<std::size_t>(tri[1])] -
                    vertices[static_cast<std::size_t>(tri[0])];
    const Vec2 e2 = vertices[static_cast<std::size_t>(tri[2])] -
                    vertices[static_cast<std::size_t>(tri[0])];
    return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
  }

  double total_area() const {
    double A = 0.0;
    for (int t = 0; t < static_cast<int>(triangles.size()); ++t)
      A += triangle_area(t);
    return A;
  }

  /// Longest edge over twice the inradius; ~1.7 for equilateral triangles.
  double aspect_ratio(int t) const {
    const auto& tri = triangles[static_cast<std::size_t>(t)];
    const Vec2& p0 = vertices[static_cast<std::size_t>(tri[0])];
    const Vec2& p1 = vertices[static_cast<std::size_t>(tri[1])];
    const Vec2& p2 = vertices[static_cast<std::size_t>(tri[2])];
    const double l0 = (p1 - p0).norm();
    const double l1 = (p2 - p1).norm();
    const double l2 = (p0 - p2).norm();
    const double longest = std::max({l0, l1, l2});
    const double s = 0.5 * (l0 + l1 + l2);
    const double inradius = triangle_area(t) / s;
    return longest / (2.0 * inradius);
  }

  std::string hash() const {
    Fnv1a h;
    for (const auto& v : vertices) {
      h.add(v.x());
      h.add(v.y());
    }
    for (const auto& t : triangles)
      for (int i : t) h.add(static_cast<std::int64_t>(i));
    for (const auto& [e, tag] : boundary_edges) {
      h.add(static_cast<std::int64_t>(e[0]));
      h.add(static_cast<std::int64_t>(e[1]));
      h.add(static_cast<std::int64_t>(tag));
    }
    return h.hex();
  }
};

struct TetMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> tets;
  std::vector<std::pair<std::array<int, 3>, FaceTag>> boundary_faces;
  /// Periodic identification: (node on Left/Front, node on Right/Back),
  /// paired coordinates equal to 1e-12 after translating by (1,0,0)/(0,1,0).
  std::vector<std::pair<int, int>> periodic_map;

  double tet_volume(int t) const {
    const auto& tet = tets[static_cast<std::size_t>(t)];
    const Vec3& p0 = vertices[static_cast<std::size_t>(tet[0])];
    const Vec3 e1 = vertices[static_cast<std::size_t>(tet[1])] - p0;
    const Vec3 e2 = vertices[static_cast<std::size_t>(tet[2])] - p0;
    const Vec3 e3 = vertices[static_cast<std::size_t>(tet[3])] - p0;
    return e1.cross(e2).dot(e3) / 6.0;
  }

  double total_volume() const {
    double V = 0.0;
    for (int t = 0; t < static_cast<int>(tets.size()); ++t)
      V += tet_volume(t);
    return V;
  }

  std::string hash() const {
    Fnv1a h;
    for (const auto& v : vertices) {
      h.add(v.x());
      h.add(v.y());
      h.add(v.z());
    }
    for (const auto& t : tets)
      for (int i : t) h.add(static_cast<std::int64_t>(i));
    for (const auto& [f, tag] : boundary_faces) {
      for (int i : f) h.add(static_cast<std::int64_t>(i));
      h.add(static_cast<std::int64_t>(tag));
    }
    return h.hex();
  }
};

// ===========================================================================
// Cell cross-section generator
//
// Block-structured polar blend: the quarter annulus between the inclusion
// boundary and the square |x|,|y| <= 1/2 is gridded in (angle, radius),
// every quad is split into four triangles through its centroid
// (criss-cross), and the quarter is mirrored across both axes. Mirroring
// makes opposite outer sides bitwise translates of each other, which is what
// the periodic identification relies on.
// ===========================================================================

namespace detail {

struct QuarterGrid {
  int m = 0;                    ///< angular segments in the quarter
  int n = 0;                    ///< radial layers
  std::vector<Vec2> inner;      ///< m+1 points on the inclusion polygon
  std::vector<Vec2> outer;      ///< m+1 points on the outer square
};

/// Angular parameters for the quarter, with the parameter of the square
/// corner direction inserted exactly so the outer polyline contains the
/// corner (1/2, 1/2).
inline std::vector<double> quarter_params(const InclusionShape& shape, int m) {
  const double tc = std::atan2(shape.semi_x(), shape.semi_y());
  // Split m segments between [0, tc] and [tc, pi/2] proportionally.
  int m1 = static_cast<int>(std::lround(m * tc / (0.5 * M_PI)));
  m1 = std::clamp(m1, 1, m - 1);
  const int m2 = m - m1;
  std::vector<double> ts;
  ts.reserve(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m1; ++i)
    ts.push_back(tc * i / m1);
  for (int i = 1; i <= m2; ++i)
    ts.push_back(tc + (0.5 * M_PI - tc) * i / m2);
  return ts;
}

}  // namespace detail

/// Generates the 2D cross-section mesh of the fluid part of the unit cell
/// (-1/2,1/2)^2 minus the inclusion. The inclusion boundary is resolved by
/// at least max(16, ceil(perimeter/h)) segments; the polygon approximating
/// the inclusion is scaled radially so its area equals the exact inclusion
/// area (second-order cleanup of the inscribed-polygon deficit).
inline TriMesh generate_cell_mesh_2d(const InclusionShape& shape, double h) {
  shape.validate();
  if (!(h > 0.0) || h >= 0.25)
    throw InfeasibleResolution("cell mesh step h must lie in (0, 1/4)");

  const double perim = shape.perimeter();
  const int ring_segments =
      std::max(16L, static_cast<long>(std::ceil(perim / h)));
  const int m = std::max<int>(4, static_cast<int>((ring_segments + 3) / 4));

  const std::vector<double> ts = detail::quarter_params(shape, m);
  const double sx = shape.semi_x(), sy = shape.semi_y();

  detail::QuarterGrid grid;
  grid.m = m;
  grid.inner.resize(static_cast<std::size_t>(m) + 1);
  grid.outer.resize(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) {
    double x, y;
    if (i == 0) {
      x = sx;
      y = 0.0;
    } else if (i == m) {
      x = 0.0;
      y = sy;
    } else {
      x = sx * std::cos(ts[static_cast<std::size_t>(i)]);
      y = sy * std::sin(ts[static_cast<std::size_t>(i)]);
    }
    grid.inner[static_cast<std::size_t>(i)] = Vec2(x, y);

    // Outer point: exit of the ray through (x, y) from the quarter square.
    Vec2 out;
    if (i == 0) {
      out = Vec2(0.5, 0.0);
    } else if (i == m) {
      out = Vec2(0.0, 0.5);
    } else if (y <= x) {
      out = Vec2(0.5, 0.5 * y / x);
      if (std::abs(y - x) < 1e-14) out = Vec2(0.5, 0.5);
    } else {
      out = Vec2(0.5 * x / y, 0.5);
    }
    grid.outer[static_cast<std::size_t>(i)] = out;
  }

  // Exact corner when the corner parameter is on the grid (it always is,
  // quarter_params inserts it).
  for (int i = 0; i <= m; ++i) {
    Vec2& o = grid.outer[static_cast<std::size_t>(i)];
    if (std::abs(o.x() - 0.5) < 1e-12 && std::abs(o.y() - 0.5) < 1e-12)
      o = Vec2(0.5, 0.5);
  }

  // Scale the inclusion polygon so its area is exactly the inclusion area.
  {
    double poly4 = 0.0;  // 4x the quarter fan area around the origin
    for (int i = 0; i < m; ++i) {
      const Vec2& p = grid.inner[static_cast<std::size_t>(i)];
      const Vec2& q = grid.inner[static_cast<std::size_t>(i) + 1];
      poly4 += 2.0 * (p.x() * q.y() - q.x() * p.y());
    }
    const double scale = std::sqrt(shape.area() / poly4);
    for (auto& p : grid.inner) p *= scale;
    if (grid.inner[0].x() >= 0.5 - h * 1e-3)
      throw InfeasibleResolution("inclusion polygon touches the cell side");
  }

  // Radial layer count from the mean gap width.
  double gap = 0.0;
  for (int i = 0; i <= m; ++i)
    gap += (grid.outer[static_cast<std::size_t>(i)] -
            grid.inner[static_cast<std::size_t>(i)])
               .norm();
  gap /= (m + 1);
  if (gap < h * 0.25)
    throw InfeasibleResolution("gap between inclusion and cell side is "
                               "narrower than the requested resolution");
  const int n = std::max<int>(2, static_cast<int>(std::lround(gap / h)));
  grid.n = n;

  // --- quarter nodes: corners (i,j) then quad centroids --------------------
  std::vector<Vec2> qnodes;
  qnodes.reserve(static_cast<std::size_t>((m + 1) * (n + 1) + m * n));
  auto corner_id = [&](int i, int j) { return i * (n + 1) + j; };
  for (int i = 0; i <= m; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double t = static_cast<double>(j) / n;
      const Vec2 p = (1.0 - t) * grid.inner[static_cast<std::size_t>(i)] +
                     t * grid.outer[static_cast<std::size_t>(i)];
      qnodes.push_back(p);
    }
  }
  const int centroid_base = (m + 1) * (n + 1);
  auto centroid_id = [&](int i, int j) { return centroid_base + i * n + j; };
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec2 c = 0.25 * (qnodes[static_cast<std::size_t>(corner_id(i, j))] +
                             qnodes[static_cast<std::size_t>(corner_id(i + 1, j))] +
                             qnodes[static_cast<std::size_t>(corner_id(i + 1, j + 1))] +
                             qnodes[static_cast<std::size_t>(corner_id(i, j + 1))]);
      qnodes.push_back(c);
    }
  }

  // Quarter triangles (criss-cross, counterclockwise).
  std::vector<std::array<int, 3>> qtris;
  qtris.reserve(static_cast<std::size_t>(4 * m * n));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      // Counterclockwise corner cycle: (theta_i, r_j) -> (theta_i, r_j+1)
      // -> (theta_i+1, r_j+1) -> (theta_i+1, r_j).
      const int a = corner_id(i, j);
      const int b = corner_id(i, j + 1);
      const int c = corner_id(i + 1, j + 1);
      const int d = corner_id(i + 1, j);
      const int e = centroid_id(i, j);
      qtris.push_back({a, b, e});
      qtris.push_back({b, c, e});
      qtris.push_back({c, d, e});
      qtris.push_back({d, a, e});
    }
  }

  // --- mirror the quarter across both axes ---------------------------------
  TriMesh mesh;
  const int nq = static_cast<int>(qnodes.size());
  // global index for (sign combo, quarter node); axis nodes alias.
  std::array<std::vector<int>, 4> gid;  // combos: ++, -+, +-, --
  for (auto& v : gid) v.assign(static_cast<std::size_t>(nq), -1);
  auto combo_index = [](int sx, int sy) {
    return (sx < 0 ? 1 : 0) + (sy < 0 ? 2 : 0);
  };
  for (int ci = 0; ci < 4; ++ci) {
    const int sx = (ci & 1) ? -1 : 1;
    const int sy = (ci & 2) ? -1 : 1;
    for (int q = 0; q < nq; ++q) {
      const Vec2& p = qnodes[static_cast<std::size_t>(q)];
      const bool on_x_axis = p.y() == 0.0;
      const bool on_y_axis = p.x() == 0.0;
      int alias = ci;
      if (sx < 0 && on_y_axis) alias = combo_index(1, sy);
      if (sy < 0 && on_x_axis) alias = combo_index((alias & 1) ? -1 : 1, 1);
      if (alias != ci) {
        gid[static_cast<std::size_t>(ci)][static_cast<std::size_t>(q)] =
            gid[static_cast<std::size_t>(alias)][static_cast<std::size_t>(q)];
        continue;
      }
      gid[static_cast<std::size_t>(ci)][static_cast<std::size_t>(q)] =
          static_cast<int>(mesh.vertices.size());
      mesh.vertices.emplace_back(sx * p.x(), sy * p.y());
    }
  }

  for (int ci = 0; ci < 4; ++ci) {
    const int sx = (ci & 1) ? -1 : 1;
    const int sy = (ci & 2) ? -1 : 1;
    const bool flip = (sx * sy) < 0;
    for (const auto& t : qtris) {
      std::array<int, 3> g = {
          gid[static_cast<std::size_t>(ci)][static_cast<std::size_t>(t[0])],
          gid[static_cast<std::size_t>(ci)][static_cast<std::size_t>(t[1])],
          gid[static_cast<std::size_t>(ci)][static_cast<std::size_t>(t[2])]};
      if (flip) std::swap(g[1], g[2]);
      mesh.triangles.push_back(g);
    }
  }

  // --- boundary edges -------------------------------------------------------
  auto add_ring_edges = [&](int j, bool hole) {
    for (int ci = 0; ci < 4; ++ci) {
      for (int i = 0; i < m; ++i) {
        const int u =
            gid[static_cast<std::size_t>(ci)]
               [static_cast<std::size_t>(corner_id(i, j))];
        const int v =
            gid[static_cast<std::size_t>(ci)]
               [static_cast<std::size_t>(corner_id(i + 1, j))];
        EdgeTag tag;
        if (hole) {
          tag = EdgeTag::Hole;
        } else {
          const Vec2 mid = 0.5 * (mesh.vertices[static_cast<std::size_t>(u)] +
                                  mesh.vertices[static_cast<std::size_t>(v)]);
          if (std::abs(mid.x() - 0.5) < 1e-12) tag = EdgeTag::PeriodicRight;
          else if (std::abs(mid.x() + 0.5) < 1e-12) tag = EdgeTag::PeriodicLeft;
          else if (std::abs(mid.y() - 0.5) < 1e-12) tag = EdgeTag::PeriodicBack;
          else tag = EdgeTag::PeriodicFront;
        }
        mesh.boundary_edges.push_back({{u, v}, tag});
      }
    }
  };
  add_ring_edges(0, true);
  add_ring_edges(n, false);

  return mesh;
}

/// Structured triangulation of a rectangle: nx-by-ny grid, each square split
/// into two triangles along the same diagonal. All boundary edges are tagged
/// Outer.
inline TriMesh generate_domain_mesh(const Rect& rect, double h) {
  if (!(rect.width() > 0.0) || !(rect.height() > 0.0))
    throw InfeasibleResolution("degenerate rectangle");
  if (!(h > 0.0)) throw InfeasibleResolution("mesh step must be positive");
  const int nx = std::max<int>(1, static_cast<int>(std::lround(rect.width() / h)));
  const int ny = std::max<int>(1, static_cast<int>(std::lround(rect.height() / h)));

  TriMesh mesh;
  auto node = [&](int i, int j) { return i * (ny + 1) + j; };
  for (int i = 0; i <= nx; ++i) {
    for (int j = 0; j <= ny; ++j) {
      mesh.vertices.emplace_back(rect.xmin + rect.width() * i / nx,
                                 rect.ymin + rect.height() * j / ny);
    }
  }
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const int a = node(i, j), b = node(i + 1, j);
      const int c = node(i + 1, j + 1), d = node(i, j + 1);
      mesh.triangles.push_back({a, b, c});
      mesh.triangles.push_back({a, c, d});
    }
  }
  for (int i = 0; i < nx; ++i) {
    mesh.boundary_edges.push_back({{node(i, 0), node(i + 1, 0)}, EdgeTag::Outer});
    mesh.boundary_edges.push_back(
        {{node(i, ny), node(i + 1, ny)}, EdgeTag::Outer});
  }
  for (int j = 0; j < ny; ++j) {
    mesh.boundary_edges.push_back({{node(0, j), node(0, j + 1)}, EdgeTag::Outer});
    mesh.boundary_edges.push_back(
        {{node(nx, j), node(nx, j + 1)}, EdgeTag::Outer});
  }
  return mesh;
}

// ===========================================================================
// Periodic pairing and extrusion
// ===========================================================================

/// Vertex pairs (left, right) and (front, back) of a cell cross-section
/// mesh, matched by the non-periodic coordinate within 1e-12.
inline std::vector<std::pair<int, int>> periodic_vertex_pairs(
    const TriMesh& base) {
  auto side_vertices = [&](EdgeTag tag) {
    std::vector<int> out;
    for (const auto& [e, t] : base.boundary_edges) {
      if (t != tag) continue;
      out.push_back(e[0]);
      out.push_back(e[1]);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };

  auto match = [&](std::vector<int> lo, std::vector<int> hi, int coord) {
    const int other = 1 - coord;
    auto key = [&](int v) {
      return base.vertices[static_cast<std::size_t>(v)][other];
    };
    std::sort(lo.begin(), lo.end(),
              [&](int u, int v) { return key(u) < key(v); });
    std::sort(hi.begin(), hi.end(),
              [&](int u, int v) { return key(u) < key(v); });
    if (lo.size() != hi.size())
      throw NonConformingSplit("periodic side node counts differ");
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (std::abs(key(lo[i]) - key(hi[i])) > 1e-12)
        throw NonConformingSplit("periodic sides are not translates");
      pairs.emplace_back(lo[i], hi[i]);
    }
    return pairs;
  };

  std::vector<std::pair<int, int>> pairs =
      match(side_vertices(EdgeTag::PeriodicLeft),
            side_vertices(EdgeTag::PeriodicRight), 0);
  const auto fb = match(side_vertices(EdgeTag::PeriodicFront),
                        side_vertices(EdgeTag::PeriodicBack), 1);
  pairs.insert(pairs.end(), fb.begin(), fb.end());
  return pairs;
}

namespace detail {

/// Representative (smallest index in the periodic orbit) per vertex. The
/// prism-splitting rule orders vertices by these keys so that periodically
/// paired lateral faces receive matching diagonals.
inline std::vector<int> periodic_representatives(const TriMesh& base) {
  std::vector<int> parent(base.vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](int v) {
    while (parent[static_cast<std::size_t>(v)] != v)
      v = parent[static_cast<std::size_t>(v)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
    return v;
  };
  auto unite = [&](int u, int v) {
    u = find(u);
    v = find(v);
    if (u == v) return;
    if (u > v) std::swap(u, v);
    parent[static_cast<std::size_t>(v)] = u;  // keep the smallest as root
  };
  bool has_periodic = false;
  for (const auto& [e, tag] : base.boundary_edges) {
    (void)e;
    if (tag != EdgeTag::Outer && tag != EdgeTag::Hole) has_periodic = true;
  }
  if (has_periodic) {
    for (const auto& [u, v] : periodic_vertex_pairs(base)) unite(u, v);
  }
  std::vector<int> rep(base.vertices.size());
  for (int v = 0; v < static_cast<int>(base.vertices.size()); ++v)
    rep[static_cast<std::size_t>(v)] = find(v);
  return rep;
}

/// Core extrusion: layers at z = z0 + k*dz, k = 0..n_layers. Tags the bottom
/// plane Bottom, the top plane `top_tag`, Hole edges Obstacle and periodic
/// edges their face tags.
inline TetMesh extrude_layers(const TriMesh& base, int n_layers, double z0,
                              double dz, FaceTag top_tag) {
  if (n_layers < 2)
    throw ConfigError("extrusion requires n_layers >= 2");
  for (const auto& [e, tag] : base.boundary_edges) {
    (void)e;
    if (tag == EdgeTag::Outer)
      throw ConfigError("extrusion expects a cell cross-section mesh");
  }

  const int nv = static_cast<int>(base.vertices.size());
  const std::vector<int> rep = periodic_representatives(base);

  TetMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nv) * (n_layers + 1));
  for (int k = 0; k <= n_layers; ++k) {
    const double z = z0 + dz * k;
    for (int v = 0; v < nv; ++v) {
      const Vec2& p = base.vertices[static_cast<std::size_t>(v)];
      mesh.vertices.emplace_back(p.x(), p.y(), z);
    }
  }
  auto vid = [&](int v, int k) { return k * nv + v; };

  // Prisms split into 3 tets; vertices ordered by periodic-representative
  // key, diagonals running from the bottom copy of the smaller key to the
  // top copy of the larger key.
  for (const auto& tri : base.triangles) {
    std::array<int, 3> s = tri;
    std::sort(s.begin(), s.end(), [&](int u, int v) {
      return rep[static_cast<std::size_t>(u)] < rep[static_cast<std::size_t>(v)];
    });
    if (rep[static_cast<std::size_t>(s[0])] == rep[static_cast<std::size_t>(s[1])] ||
        rep[static_cast<std::size_t>(s[1])] == rep[static_cast<std::size_t>(s[2])])
      throw NonConformingSplit(
          "triangle has two vertices in one periodic orbit");
    for (int k = 0; k < n_layers; ++k) {
      const int b0 = vid(s[0], k), b1 = vid(s[1], k), b2 = vid(s[2], k);
      const int t0 = vid(s[0], k + 1), t1 = vid(s[1], k + 1),
                t2 = vid(s[2], k + 1);
      std::array<std::array<int, 4>, 3> split = {{{b0, b1, b2, t2},
                                                  {b0, b1, t1, t2},
                                                  {b0, t0, t1, t2}}};
      for (auto tet : split) {
        // Positive orientation; swapping two vertices flips the sign only.
        const Vec3& p0 = mesh.vertices[static_cast<std::size_t>(tet[0])];
        const Vec3 e1 = mesh.vertices[static_cast<std::size_t>(tet[1])] - p0;
        const Vec3 e2 = mesh.vertices[static_cast<std::size_t>(tet[2])] - p0;
        const Vec3 e3 = mesh.vertices[static_cast<std::size_t>(tet[3])] - p0;
        if (e1.cross(e2).dot(e3) < 0.0) std::swap(tet[2], tet[3]);
        mesh.tets.push_back(tet);
      }
    }
  }

  // Bottom and top caps.
  for (const auto& tri : base.triangles) {
    mesh.boundary_faces.push_back(
        {{vid(tri[0], 0), vid(tri[1], 0), vid(tri[2], 0)}, FaceTag::Bottom});
    mesh.boundary_faces.push_back({{vid(tri[0], n_layers), vid(tri[1], n_layers),
                                    vid(tri[2], n_layers)},
                                   top_tag});
  }

  // Lateral faces: each boundary-edge quad is split along the same diagonal
  // rule as the prisms that own it.
  for (const auto& [e, tag] : base.boundary_edges) {
    FaceTag ftag;
    switch (tag) {
      case EdgeTag::Hole: ftag = FaceTag::Obstacle; break;
      case EdgeTag::PeriodicLeft: ftag = FaceTag::PeriodicLeft; break;
      case EdgeTag::PeriodicRight: ftag = FaceTag::PeriodicRight; break;
      case EdgeTag::PeriodicFront: ftag = FaceTag::PeriodicFront; break;
      case EdgeTag::PeriodicBack: ftag = FaceTag::PeriodicBack; break;
      default: continue;
    }
    int u = e[0], v = e[1];
    if (rep[static_cast<std::size_t>(u)] > rep[static_cast<std::size_t>(v)])
      std::swap(u, v);
    for (int k = 0; k < n_layers; ++k) {
      // Diagonal from bottom(u) to top(v).
      mesh.boundary_faces.push_back(
          {{vid(u, k), vid(v, k), vid(v, k + 1)}, ftag});
      mesh.boundary_faces.push_back(
          {{vid(u, k), vid(v, k + 1), vid(u, k + 1)}, ftag});
    }
  }

  // Periodic node pairing, layer by layer.
  bool has_periodic = false;
  for (const auto& [e2, tag] : base.boundary_edges) {
    (void)e2;
    if (tag != EdgeTag::Outer && tag != EdgeTag::Hole) has_periodic = true;
  }
  if (has_periodic) {
    for (const auto& [u, v] : periodic_vertex_pairs(base))
      for (int k = 0; k <= n_layers; ++k)
        mesh.periodic_map.emplace_back(vid(u, k), vid(v, k));
  }

  return mesh;
}

}  // namespace detail

/// Extrudes a cell cross-section mesh to the lower half cell
/// Y'_f x (0, 1/2): layers at heights k/(2*n_layers), k = 0..n_layers; every
/// prism is split into exactly 3 tetrahedra by a globally consistent
/// diagonal rule, so the result has 3*T*n_layers tets.
inline TetMesh extrude_half_cell(const TriMesh& base, int n_layers) {
  return detail::extrude_layers(base, n_layers, 0.0, 0.5 / n_layers,
                                FaceTag::SymmetryTop);
}

/// Export-quality mesh of the physical perforated layer: the full-height
/// cell mesh scaled by eps and tiled over the rectangle. Not used for
/// solving; vertices on shared tile boundaries are duplicated.
inline TetMesh generate_perforated_layer(const Rect& rect, double eps,
                                         const InclusionShape& shape,
                                         double h_cell = 0.1,
                                         int n_layers = 4) {
  if (!(eps > 0.0)) throw NonTilingEps("eps must be positive");
  const double fx = rect.width() / eps;
  const double fy = rect.height() / eps;
  const long nx = std::lround(fx);
  const long ny = std::lround(fy);
  if (nx < 1 || ny < 1 || std::abs(fx - nx) > 1e-9 * std::max(1.0, fx) ||
      std::abs(fy - ny) > 1e-9 * std::max(1.0, fy))
    throw NonTilingEps("eps does not tile the rectangle");

  const TriMesh base = generate_cell_mesh_2d(shape, h_cell);
  // Full-height cell: z = 0..1 before scaling, same prism rule throughout.
  const TetMesh cell =
      detail::extrude_layers(base, 2 * n_layers, 0.0, 0.5 / n_layers,
                             FaceTag::SymmetryTop);

  TetMesh out;
  const int nv = static_cast<int>(cell.vertices.size());
  for (long j = 0; j < ny; ++j) {
    for (long i = 0; i < nx; ++i) {
      const double cx = rect.xmin + eps * (i + 0.5);
      const double cy = rect.ymin + eps * (j + 0.5);
      const int off = static_cast<int>(out.vertices.size());
      for (const auto& p : cell.vertices)
        out.vertices.emplace_back(cx + eps * p.x(), cy + eps * p.y(),
                                  eps * p.z());
      for (const auto& t : cell.tets)
        out.tets.push_back(
            {t[0] + off, t[1] + off, t[2] + off, t[3] + off});
      for (const auto& [f, tag] : cell.boundary_faces)
        out.boundary_faces.push_back(
            {{f[0] + off, f[1] + off, f[2] + off}, tag});
    }
  }
  (void)nv;
  return out;
}

// ===========================================================================
// Conformity checks (used by tests and the extrusion self-check)
// ===========================================================================

/// Every interior edge shared by exactly 2 triangles; boundary edges by 1.
inline bool is_conforming(const TriMesh& mesh) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      int u = t[static_cast<std::size_t>(k)];
      int v = t[static_cast<std::size_t>((k + 1) % 3)];
      if (u > v) std::swap(u, v);
      ++count[{u, v}];
    }
  }
  for (const auto& [e, c] : count) {
    (void)e;
    if (c != 1 && c != 2) return false;
  }
  return true;
}

/// Every interior face shared by exactly 2 tets; tagged boundary faces by 1.
inline bool is_conforming(const TetMesh& mesh) {
  std::map<std::array<int, 3>, int> count;
  auto key = [](std::array<int, 3> f) {
    std::sort(f.begin(), f.end());
    return f;
  };
  static const int faces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  for (const auto& t : mesh.tets) {
    for (const auto& f : faces)
      ++count[key({t[static_cast<std::size_t>(f[0])],
                   t[static_cast<std::size_t>(f[1])],
                   t[static_cast<std::size_t>(f[2])]})];
  }
  for (const auto& [f, c] : count) {
    (void)f;
    if (c != 1 && c != 2) return false;
  }
  // Tagged boundary faces must be exactly the faces counted once.
  std::size_t once = 0;
  for (const auto& [f, c] : count) {
    (void)f;
    if (c == 1) ++once;
  }
  if (once != mesh.boundary_faces.size()) return false;
  for (const auto& [f, tag] : mesh.boundary_faces) {
    (void)tag;
    auto it = count.find(key(f));
    if (it == count.end() || it->second != 1) return false;
  }
  return true;
}

}  // namespace cdarcy
