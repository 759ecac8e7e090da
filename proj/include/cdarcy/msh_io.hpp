/// @file msh_io.hpp
/// @brief Gmsh MSH ASCII v2.2 subset: $MeshFormat / $Nodes / $Elements with
///        element types 1 (line), 2 (triangle), 4 (tetrahedron).
///
/// Physical tags encode boundary/region tags:
///
///   2D meshes:  triangle region         100
///               Outer edge                1
///               Hole edge                 2
///               PeriodicLeft/Right    11/12
///               PeriodicFront/Back    13/14
///
///   3D meshes:  tetrahedron region      200
///               Bottom face              21
///               SymmetryTop face         22
///               Obstacle face            23
///               PeriodicLeft/Right    24/25
///               PeriodicFront/Back    26/27
///
/// Coordinates are written with shortest round-trip formatting, so
/// write -> read reproduces vertices and connectivity exactly.
#pragma once

#include <cdarcy/core.hpp>
#include <cdarcy/mesh.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <variant>

namespace cdarcy {

namespace msh {

inline int edge_tag_to_physical(EdgeTag t) {
  switch (t) {
    case EdgeTag::Outer: return 1;
    case EdgeTag::Hole: return 2;
    case EdgeTag::PeriodicLeft: return 11;
    case EdgeTag::PeriodicRight: return 12;
    case EdgeTag::PeriodicFront: return 13;
    case EdgeTag::PeriodicBack: return 14;
  }
  return 0;
}

inline EdgeTag physical_to_edge_tag(int p, long line) {
  switch (p) {
    case 1: return EdgeTag::Outer;
    case 2: return EdgeTag::Hole;
    case 11: return EdgeTag::PeriodicLeft;
    case 12: return EdgeTag::PeriodicRight;
    case 13: return EdgeTag::PeriodicFront;
    case 14: return EdgeTag::PeriodicBack;
  }
  throw ParseError("unknown edge physical tag " + std::to_string(p), line);
}

inline int face_tag_to_physical(FaceTag t) {
  switch (t) {
    case FaceTag::Bottom: return 21;
    case FaceTag::SymmetryTop: return 22;
    case FaceTag::Obstacle: return 23;
    case FaceTag::PeriodicLeft: return 24;
    case FaceTag::PeriodicRight: return 25;
    case FaceTag::PeriodicFront: return 26;
    case FaceTag::PeriodicBack: return 27;
  }
  return 0;
}

inline FaceTag physical_to_face_tag(int p, long line) {
  switch (p) {
    case 21: return FaceTag::Bottom;
    case 22: return FaceTag::SymmetryTop;
    case 23: return FaceTag::Obstacle;
    case 24: return FaceTag::PeriodicLeft;
    case 25: return FaceTag::PeriodicRight;
    case 26: return FaceTag::PeriodicFront;
    case 27: return FaceTag::PeriodicBack;
  }
  throw ParseError("unknown face physical tag " + std::to_string(p), line);
}

}  // namespace msh

// ===========================================================================
// Writers
// ===========================================================================

inline void write_msh(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
  out << "$Nodes\n" << mesh.vertices.size() << "\n";
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    out << (i + 1) << ' ' << format_full(mesh.vertices[i].x()) << ' '
        << format_full(mesh.vertices[i].y()) << " 0\n";
  }
  out << "$EndNodes\n";
  out << "$Elements\n"
      << (mesh.boundary_edges.size() + mesh.triangles.size()) << "\n";
  long id = 1;
  for (const auto& [e, tag] : mesh.boundary_edges) {
    const int p = msh::edge_tag_to_physical(tag);
    out << id++ << " 1 2 " << p << ' ' << p << ' ' << (e[0] + 1) << ' '
        << (e[1] + 1) << "\n";
  }
  for (const auto& t : mesh.triangles) {
    out << id++ << " 2 2 100 100 " << (t[0] + 1) << ' ' << (t[1] + 1) << ' '
        << (t[2] + 1) << "\n";
  }
  out << "$EndElements\n";
  if (!out) throw Error("write failed for " + path);
}

inline void write_msh(const TetMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
  out << "$Nodes\n" << mesh.vertices.size() << "\n";
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    out << (i + 1) << ' ' << format_full(mesh.vertices[i].x()) << ' '
        << format_full(mesh.vertices[i].y()) << ' '
        << format_full(mesh.vertices[i].z()) << "\n";
  }
  out << "$EndNodes\n";
  out << "$Elements\n"
      << (mesh.boundary_faces.size() + mesh.tets.size()) << "\n";
  long id = 1;
  for (const auto& [f, tag] : mesh.boundary_faces) {
    const int p = msh::face_tag_to_physical(tag);
    out << id++ << " 2 2 " << p << ' ' << p << ' ' << (f[0] + 1) << ' '
        << (f[1] + 1) << ' ' << (f[2] + 1) << "\n";
  }
  for (const auto& t : mesh.tets) {
    out << id++ << " 4 2 200 200 " << (t[0] + 1) << ' ' << (t[1] + 1) << ' '
        << (t[2] + 1) << ' ' << (t[3] + 1) << "\n";
  }
  out << "$EndElements\n";
  if (!out) throw Error("write failed for " + path);
}

// ===========================================================================
// Reader
// ===========================================================================

/// Rebuilds the periodic node pairing of a half-cell mesh from its tagged
/// periodic faces (the pairing itself is not stored in MSH files).
inline void rebuild_periodic_map(TetMesh& mesh) {
  mesh.periodic_map.clear();
  auto face_vertices = [&](FaceTag tag) {
    std::set<int> out;
    for (const auto& [f, t] : mesh.boundary_faces)
      if (t == tag) out.insert(f.begin(), f.end());
    return out;
  };
  auto match = [&](const std::set<int>& lo, const std::set<int>& hi, int axis) {
    std::vector<int> l(lo.begin(), lo.end()), h(hi.begin(), hi.end());
    if (l.size() != h.size())
      throw NonConformingSplit("periodic face node counts differ");
    auto key = [&](int v) {
      const Vec3& p = mesh.vertices[static_cast<std::size_t>(v)];
      return axis == 0 ? std::make_pair(p.y(), p.z())
                       : std::make_pair(p.x(), p.z());
    };
    auto by_key = [&](int u, int v) { return key(u) < key(v); };
    std::sort(l.begin(), l.end(), by_key);
    std::sort(h.begin(), h.end(), by_key);
    for (std::size_t i = 0; i < l.size(); ++i) {
      const auto ku = key(l[i]);
      const auto kv = key(h[i]);
      if (std::abs(ku.first - kv.first) > 1e-12 ||
          std::abs(ku.second - kv.second) > 1e-12)
        throw NonConformingSplit("periodic faces are not translates");
      mesh.periodic_map.emplace_back(l[i], h[i]);
    }
  };
  const auto left = face_vertices(FaceTag::PeriodicLeft);
  const auto right = face_vertices(FaceTag::PeriodicRight);
  if (!left.empty()) match(left, right, 0);
  const auto front = face_vertices(FaceTag::PeriodicFront);
  const auto back = face_vertices(FaceTag::PeriodicBack);
  if (!front.empty()) match(front, back, 1);
}

/// Reads an MSH v2.2 ASCII file; returns a TriMesh or a TetMesh depending on
/// the element types present. Throws ParseError (with line number) or
/// UnsupportedElementType.
inline std::variant<TriMesh, TetMesh> read_msh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);

  long lineno = 0;
  std::string line;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++lineno;
    return true;
  };
  auto require_line = [&](const char* what) {
    if (!next_line())
      throw ParseError(std::string("unexpected end of file, expected ") + what,
                       lineno + 1);
  };

  require_line("$MeshFormat");
  if (line != "$MeshFormat") throw ParseError("expected $MeshFormat", lineno);
  require_line("format version");
  {
    std::istringstream ss(line);
    double version = 0;
    int file_type = -1, data_size = 0;
    if (!(ss >> version >> file_type >> data_size))
      throw ParseError("bad $MeshFormat header", lineno);
    if (version < 2.0 || version >= 3.0 || file_type != 0)
      throw ParseError("unsupported MSH version (need ASCII 2.x)", lineno);
  }
  require_line("$EndMeshFormat");
  if (line != "$EndMeshFormat")
    throw ParseError("expected $EndMeshFormat", lineno);

  require_line("$Nodes");
  if (line != "$Nodes") throw ParseError("expected $Nodes", lineno);
  require_line("node count");
  long n_nodes = 0;
  try {
    n_nodes = std::stol(line);
  } catch (...) {
    throw ParseError("bad node count", lineno);
  }
  std::vector<Vec3> nodes(static_cast<std::size_t>(n_nodes));
  for (long i = 0; i < n_nodes; ++i) {
    require_line("node line");
    std::istringstream ss(line);
    long id;
    double x, y, z;
    if (!(ss >> id >> x >> y >> z) || id < 1 || id > n_nodes)
      throw ParseError("bad node line", lineno);
    nodes[static_cast<std::size_t>(id - 1)] = Vec3(x, y, z);
  }
  require_line("$EndNodes");
  if (line != "$EndNodes") throw ParseError("expected $EndNodes", lineno);

  require_line("$Elements");
  if (line != "$Elements") throw ParseError("expected $Elements", lineno);
  require_line("element count");
  long n_elems = 0;
  try {
    n_elems = std::stol(line);
  } catch (...) {
    throw ParseError("bad element count", lineno);
  }

  struct RawElem {
    int type;
    int physical;
    std::array<long, 4> nodes;
    long line;
  };
  std::vector<RawElem> elems;
  elems.reserve(static_cast<std::size_t>(n_elems));
  bool has_tet = false;
  for (long i = 0; i < n_elems; ++i) {
    require_line("element line");
    std::istringstream ss(line);
    long id;
    int type, ntags;
    if (!(ss >> id >> type >> ntags))
      throw ParseError("bad element line", lineno);
    int physical = 0;
    for (int k = 0; k < ntags; ++k) {
      int tag;
      if (!(ss >> tag)) throw ParseError("bad element tags", lineno);
      if (k == 0) physical = tag;
    }
    int n_nodes_elem;
    switch (type) {
      case 1: n_nodes_elem = 2; break;
      case 2: n_nodes_elem = 3; break;
      case 4: n_nodes_elem = 4; break;
      default: throw UnsupportedElementType(type);
    }
    RawElem e{type, physical, {0, 0, 0, 0}, lineno};
    for (int k = 0; k < n_nodes_elem; ++k) {
      long v;
      if (!(ss >> v) || v < 1 || v > n_nodes)
        throw ParseError("bad element node index", lineno);
      e.nodes[static_cast<std::size_t>(k)] = v - 1;
    }
    if (type == 4) has_tet = true;
    elems.push_back(e);
  }
  require_line("$EndElements");
  if (line != "$EndElements") throw ParseError("expected $EndElements", lineno);

  if (has_tet) {
    TetMesh mesh;
    mesh.vertices = std::move(nodes);
    for (const auto& e : elems) {
      if (e.type == 4) {
        mesh.tets.push_back({static_cast<int>(e.nodes[0]),
                             static_cast<int>(e.nodes[1]),
                             static_cast<int>(e.nodes[2]),
                             static_cast<int>(e.nodes[3])});
      } else if (e.type == 2) {
        mesh.boundary_faces.push_back(
            {{static_cast<int>(e.nodes[0]), static_cast<int>(e.nodes[1]),
              static_cast<int>(e.nodes[2])},
             msh::physical_to_face_tag(e.physical, e.line)});
      } else {
        throw ParseError("line elements are not valid in a volume mesh",
                         e.line);
      }
    }
    bool has_periodic_faces = false;
    for (const auto& [f, tag] : mesh.boundary_faces) {
      (void)f;
      if (tag != FaceTag::Bottom && tag != FaceTag::SymmetryTop &&
          tag != FaceTag::Obstacle)
        has_periodic_faces = true;
    }
    if (has_periodic_faces) rebuild_periodic_map(mesh);
    return mesh;
  }

  TriMesh mesh;
  mesh.vertices.reserve(nodes.size());
  for (const auto& p : nodes) mesh.vertices.emplace_back(p.x(), p.y());
  for (const auto& e : elems) {
    if (e.type == 2) {
      mesh.triangles.push_back({static_cast<int>(e.nodes[0]),
                                static_cast<int>(e.nodes[1]),
                                static_cast<int>(e.nodes[2])});
    } else {
      mesh.boundary_edges.push_back(
          {{static_cast<int>(e.nodes[0]), static_cast<int>(e.nodes[1])},
           msh::physical_to_edge_tag(e.physical, e.line)});
    }
  }
  if (mesh.triangles.empty())
    throw ParseError("mesh contains no triangles or tetrahedra", lineno);
  return mesh;
}

}  // namespace cdarcy
