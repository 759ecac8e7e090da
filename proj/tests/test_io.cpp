/// @file test_io.cpp
/// @brief MSH and VTK round-trip tests: exact preservation of vertices,
///        connectivity and boundary tags, plus parser failure modes.
#include <catch2/catch_amalgamated.hpp>

#include <cdarcy/mesh.hpp>
#include <cdarcy/msh_io.hpp>
#include <cdarcy/vtk_io.hpp>

#include <cstdio>
#include <fstream>
#include <set>

using namespace cdarcy;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/cdarcy_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("MSH round trip preserves a TriMesh exactly") {
  const TriMesh mesh = generate_cell_mesh_2d(InclusionShape::disk(0.25), 0.08);
  TempFile f("tri.msh");
  write_msh(mesh, f.path);

  const auto loaded = read_msh(f.path);
  REQUIRE(std::holds_alternative<TriMesh>(loaded));
  const TriMesh& back = std::get<TriMesh>(loaded);

  REQUIRE(back.vertices.size() == mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    CHECK(back.vertices[i].x() == mesh.vertices[i].x());
    CHECK(back.vertices[i].y() == mesh.vertices[i].y());
  }
  REQUIRE(back.triangles == mesh.triangles);
  REQUIRE(back.boundary_edges == mesh.boundary_edges);
  CHECK(back.hash() == mesh.hash());
}

TEST_CASE("MSH round trip preserves a TetMesh exactly") {
  const TriMesh base = generate_cell_mesh_2d(InclusionShape::disk(0.25), 0.1);
  const TetMesh mesh = extrude_half_cell(base, 2);
  TempFile f("tet.msh");
  write_msh(mesh, f.path);

  const auto loaded = read_msh(f.path);
  REQUIRE(std::holds_alternative<TetMesh>(loaded));
  const TetMesh& back = std::get<TetMesh>(loaded);

  REQUIRE(back.vertices.size() == mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    CHECK(back.vertices[i].x() == mesh.vertices[i].x());
    CHECK(back.vertices[i].y() == mesh.vertices[i].y());
    CHECK(back.vertices[i].z() == mesh.vertices[i].z());
  }
  REQUIRE(back.tets == mesh.tets);
  REQUIRE(back.boundary_faces == mesh.boundary_faces);

  // The periodic map is reconstructed from tags; compare as sets.
  std::set<std::pair<int, int>> expected(mesh.periodic_map.begin(),
                                         mesh.periodic_map.end());
  std::set<std::pair<int, int>> actual(back.periodic_map.begin(),
                                       back.periodic_map.end());
  CHECK(expected == actual);
}

TEST_CASE("MSH reader rejects malformed input") {
  TempFile f("bad.msh");

  SECTION("empty file") {
    std::ofstream(f.path).close();
    CHECK_THROWS_AS(read_msh(f.path), ParseError);
  }

  SECTION("quad element type") {
    std::ofstream out(f.path);
    out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n"
        << "$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n"
        << "$Elements\n1\n1 3 2 1 1 1 2 3 4\n$EndElements\n";
    out.close();
    CHECK_THROWS_AS(read_msh(f.path), UnsupportedElementType);
  }

  SECTION("truncated nodes") {
    std::ofstream out(f.path);
    out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n5\n1 0 0 0\n";
    out.close();
    CHECK_THROWS_AS(read_msh(f.path), ParseError);
  }

  SECTION("binary format flag") {
    std::ofstream out(f.path);
    out << "$MeshFormat\n2.2 1 8\n$EndMeshFormat\n";
    out.close();
    CHECK_THROWS_AS(read_msh(f.path), ParseError);
  }

  SECTION("parse errors carry the line number") {
    std::ofstream out(f.path);
    out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\nnot-a-count\n";
    out.close();
    try {
      read_msh(f.path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line == 5);
    }
  }
}

TEST_CASE("VTK writer round-trips points and connectivity") {
  const TriMesh tri = generate_domain_mesh({0, 1, 0, 0.5}, 0.25);
  TempFile f2("tri.vtk");

  std::vector<VtkField> fields;
  VtkField scalar;
  scalar.name = "pressure";
  scalar.components = 1;
  scalar.per_cell = false;
  scalar.data.assign(tri.vertices.size(), 0.0);
  for (std::size_t i = 0; i < tri.vertices.size(); ++i)
    scalar.data[i] = tri.vertices[i].x() * 3.25 - tri.vertices[i].y();
  fields.push_back(scalar);
  VtkField cellvec;
  cellvec.name = "velocity";
  cellvec.components = 2;
  cellvec.per_cell = true;
  cellvec.data.assign(2 * tri.triangles.size(), 1.5);
  fields.push_back(cellvec);

  write_vtk(tri, fields, f2.path);
  const VtkContent back = read_vtk(f2.path);
  REQUIRE(back.points.size() == tri.vertices.size());
  for (std::size_t i = 0; i < tri.vertices.size(); ++i) {
    CHECK(back.points[i].x() == tri.vertices[i].x());
    CHECK(back.points[i].y() == tri.vertices[i].y());
    CHECK(back.points[i].z() == 0.0);
  }
  REQUIRE(back.cells.size() == tri.triangles.size());
  for (std::size_t i = 0; i < tri.triangles.size(); ++i) {
    REQUIRE(back.cells[i].size() == 3);
    CHECK(back.cells[i][0] == tri.triangles[i][0]);
    CHECK(back.cells[i][1] == tri.triangles[i][1]);
    CHECK(back.cells[i][2] == tri.triangles[i][2]);
    CHECK(back.cell_types[i] == 5);
  }

  const TetMesh tet =
      extrude_half_cell(generate_cell_mesh_2d(InclusionShape::disk(0.25), 0.12), 2);
  TempFile f3("tet.vtk");
  write_vtk(tet, {}, f3.path);
  const VtkContent tback = read_vtk(f3.path);
  REQUIRE(tback.points.size() == tet.vertices.size());
  for (std::size_t i = 0; i < tet.vertices.size(); ++i) {
    CHECK(tback.points[i].x() == tet.vertices[i].x());
    CHECK(tback.points[i].y() == tet.vertices[i].y());
    CHECK(tback.points[i].z() == tet.vertices[i].z());
  }
  REQUIRE(tback.cells.size() == tet.tets.size());
  for (std::size_t i = 0; i < tet.tets.size(); ++i) {
    REQUIRE(tback.cells[i].size() == 4);
    for (int k = 0; k < 4; ++k)
      CHECK(tback.cells[i][static_cast<std::size_t>(k)] ==
            tet.tets[i][static_cast<std::size_t>(k)]);
    CHECK(tback.cell_types[i] == 10);
  }
}

TEST_CASE("VTK writer validates field sizes") {
  const TriMesh tri = generate_domain_mesh({0, 1, 0, 0.5}, 0.25);
  VtkField bad;
  bad.name = "broken";
  bad.components = 1;
  bad.per_cell = false;
  bad.data.assign(3, 0.0);  // wrong size
  TempFile f("bad.vtk");
  CHECK_THROWS_AS(write_vtk(tri, {bad}, f.path), Error);
}
