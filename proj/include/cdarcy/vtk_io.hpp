/// @file vtk_io.hpp
/// @brief Legacy VTK ASCII writer (UNSTRUCTURED_GRID) for triangle and
///        tetrahedral meshes with point/cell data attached, plus a minimal
///        reader used to verify exact round trips.
#pragma once

#include <cdarcy/core.hpp>
#include <cdarcy/mesh.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace cdarcy {

/// A named field attached to mesh points or cells. `components` is 1
/// (scalar) or 2/3 (vector; 2-component data is zero-padded on write).
struct VtkField {
  std::string name;
  int components = 1;
  bool per_cell = false;
  std::vector<double> data;  ///< size = components * (#points or #cells)
};

namespace detail {

inline void write_vtk_header(std::ofstream& out, std::size_t n_points,
                             const std::vector<Vec3>& pts) {
  out << "# vtk DataFile Version 3.0\n";
  out << "cdarcy fields\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << n_points << " double\n";
  for (const auto& p : pts)
    out << format_full(p.x()) << ' ' << format_full(p.y()) << ' '
        << format_full(p.z()) << "\n";
}

inline void write_vtk_fields(std::ofstream& out,
                             const std::vector<VtkField>& fields,
                             std::size_t n_points, std::size_t n_cells) {
  auto emit = [&](bool per_cell, std::size_t count) {
    bool started = false;
    for (const auto& f : fields) {
      if (f.per_cell != per_cell) continue;
      if (f.data.size() != count * static_cast<std::size_t>(f.components))
        throw Error("field '" + f.name + "' has wrong size");
      if (!started) {
        out << (per_cell ? "CELL_DATA " : "POINT_DATA ") << count << "\n";
        started = true;
      }
      if (f.components == 1) {
        out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
        for (std::size_t i = 0; i < count; ++i)
          out << format_full(f.data[i]) << "\n";
      } else {
        out << "VECTORS " << f.name << " double\n";
        for (std::size_t i = 0; i < count; ++i) {
          const double x = f.data[i * static_cast<std::size_t>(f.components)];
          const double y =
              f.data[i * static_cast<std::size_t>(f.components) + 1];
          const double z =
              f.components > 2
                  ? f.data[i * static_cast<std::size_t>(f.components) + 2]
                  : 0.0;
          out << format_full(x) << ' ' << format_full(y) << ' '
              << format_full(z) << "\n";
        }
      }
    }
  };
  emit(false, n_points);
  emit(true, n_cells);
}

}  // namespace detail

inline void write_vtk(const TriMesh& mesh, const std::vector<VtkField>& fields,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  std::vector<Vec3> pts;
  pts.reserve(mesh.vertices.size());
  for (const auto& p : mesh.vertices) pts.emplace_back(p.x(), p.y(), 0.0);
  detail::write_vtk_header(out, pts.size(), pts);
  out << "CELLS " << mesh.triangles.size() << ' ' << 4 * mesh.triangles.size()
      << "\n";
  for (const auto& t : mesh.triangles)
    out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << "\n";
  out << "CELL_TYPES " << mesh.triangles.size() << "\n";
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) out << "5\n";
  detail::write_vtk_fields(out, fields, mesh.vertices.size(),
                           mesh.triangles.size());
  if (!out) throw Error("write failed for " + path);
}

inline void write_vtk(const TetMesh& mesh, const std::vector<VtkField>& fields,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  detail::write_vtk_header(out, mesh.vertices.size(), mesh.vertices);
  out << "CELLS " << mesh.tets.size() << ' ' << 5 * mesh.tets.size() << "\n";
  for (const auto& t : mesh.tets)
    out << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << "\n";
  out << "CELL_TYPES " << mesh.tets.size() << "\n";
  for (std::size_t i = 0; i < mesh.tets.size(); ++i) out << "10\n";
  detail::write_vtk_fields(out, fields, mesh.vertices.size(),
                           mesh.tets.size());
  if (!out) throw Error("write failed for " + path);
}

// ===========================================================================
// Minimal reader (round-trip verification)
// ===========================================================================

struct VtkContent {
  std::vector<Vec3> points;
  std::vector<std::vector<int>> cells;
  std::vector<int> cell_types;
  std::vector<VtkField> fields;  ///< vectors come back with 3 components
};

/// Reads back POINTS/CELLS/CELL_TYPES and any SCALARS/VECTORS data of a
/// legacy ASCII unstructured grid.
inline VtkContent read_vtk(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  VtkContent content;
  long lineno = 0;
  bool in_cell_data = false;
  std::size_t data_count = 0;
  std::string line;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++lineno;
    return true;
  };
  while (next()) {
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "POINTS") {
      std::size_t n;
      std::string type;
      if (!(ss >> n >> type)) throw ParseError("bad POINTS header", lineno);
      content.points.resize(n);
      std::size_t have = 0;
      while (have < n) {
        if (!next()) throw ParseError("unexpected end of POINTS", lineno);
        std::istringstream ps(line);
        double x, y, z;
        while (have < n && (ps >> x >> y >> z))
          content.points[have++] = Vec3(x, y, z);
      }
    } else if (word == "CELLS") {
      std::size_t n, total;
      if (!(ss >> n >> total)) throw ParseError("bad CELLS header", lineno);
      content.cells.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (!next()) throw ParseError("unexpected end of CELLS", lineno);
        std::istringstream cs(line);
        int count;
        if (!(cs >> count)) throw ParseError("bad cell line", lineno);
        content.cells[i].resize(static_cast<std::size_t>(count));
        for (int k = 0; k < count; ++k)
          if (!(cs >> content.cells[i][static_cast<std::size_t>(k)]))
            throw ParseError("bad cell line", lineno);
      }
    } else if (word == "CELL_TYPES") {
      std::size_t n;
      if (!(ss >> n)) throw ParseError("bad CELL_TYPES header", lineno);
      content.cell_types.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (!next()) throw ParseError("unexpected end of CELL_TYPES", lineno);
        content.cell_types[i] = std::stoi(line);
      }
    } else if (word == "POINT_DATA" || word == "CELL_DATA") {
      in_cell_data = (word == "CELL_DATA");
      if (!(ss >> data_count))
        throw ParseError("bad " + word + " header", lineno);
    } else if (word == "SCALARS" || word == "VECTORS") {
      VtkField f;
      std::string type;
      if (!(ss >> f.name >> type))
        throw ParseError("bad " + word + " header", lineno);
      f.per_cell = in_cell_data;
      f.components = (word == "VECTORS") ? 3 : 1;
      if (word == "SCALARS") {
        if (!next() || line.rfind("LOOKUP_TABLE", 0) != 0)
          throw ParseError("missing LOOKUP_TABLE after SCALARS", lineno);
      }
      const std::size_t want =
          data_count * static_cast<std::size_t>(f.components);
      while (f.data.size() < want) {
        if (!next()) throw ParseError("unexpected end of " + word, lineno);
        std::istringstream ds(line);
        double v;
        while (f.data.size() < want && (ds >> v)) f.data.push_back(v);
      }
      content.fields.push_back(std::move(f));
    }
  }
  if (content.points.empty()) throw ParseError("no POINTS section", lineno);
  return content;
}

}  // namespace cdarcy
