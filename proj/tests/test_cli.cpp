/// @file test_cli.cpp
/// @brief End-to-end tests of the carreau-darcy executable: artifacts,
///        determinism, and the exit-code contract (2 config, 3 mesh,
///        4 solver, 5 tolerance).
#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "cdarcy_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

/// Runs the CLI with the given arguments, capturing stdout/stderr.
RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out = work_dir() / ("stdout" + std::to_string(counter));
  const fs::path err = work_dir() / ("stderr" + std::to_string(counter));
  ++counter;
  const std::string cmd = std::string(CDARCY_CLI_PATH) + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string tiny_cell(const std::string& dir) {
  return "--geometry.h_cell=0.2 --geometry.n_layers=2 --outputs.dir=" +
         (work_dir() / dir).string();
}

}  // namespace

TEST_CASE("cell with a zero drive emits the zero row") {
  const auto r = run_cli("cell --drive.xi1=0 --drive.xi2=0 " +
                         tiny_cell("cell0"));
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(slurp(work_dir() / "cell0" / "cell-table.csv") ==
        "xi1,xi2,V1,V2,normV\n0,0,0,0,0\n");
  CHECK(r.out.find("V = (0, 0)") != std::string::npos);
  CHECK(fs::exists(work_dir() / "cell0" / "run-manifest.json"));
}

TEST_CASE("identical configs give byte-identical CSV and JSON") {
  const std::string args = "cell " + tiny_cell("same");
  REQUIRE(run_cli(args).exit_code == 0);
  const std::string csv1 = slurp(work_dir() / "same" / "cell-table.csv");
  const std::string man1 = slurp(work_dir() / "same" / "run-manifest.json");
  REQUIRE(run_cli(args).exit_code == 0);
  CHECK(slurp(work_dir() / "same" / "cell-table.csv") == csv1);
  CHECK(slurp(work_dir() / "same" / "run-manifest.json") == man1);
  CHECK_FALSE(csv1.empty());

  // The CSV is also independent of the worker-thread cap.
  REQUIRE(run_cli(args + " --threads 2").exit_code == 0);
  CHECK(slurp(work_dir() / "same" / "cell-table.csv") == csv1);
}

TEST_CASE("jacobian emits the four DU columns") {
  const auto r = run_cli("jacobian " + tiny_cell("jac"));
  REQUIRE(r.exit_code == 0);
  const std::string csv = slurp(work_dir() / "jac" / "cell-table.csv");
  CHECK(csv.rfind("xi1,xi2,V1,V2,normV,A11,A12,A21,A22\n", 0) == 0);
  CHECK(r.out.find("DU = [[") != std::string::npos);
}

TEST_CASE("configuration problems exit with code 2") {
  CHECK(run_cli("cell --carreau.muu=1 " + tiny_cell("e1")).exit_code == 2);
  CHECK(run_cli("cell --carreau.r=0.5 " + tiny_cell("e2")).exit_code == 2);
  CHECK(run_cli("cell --forcing.f1=1+ " + tiny_cell("e3")).exit_code == 2);
  CHECK(run_cli("cell --config /nonexistent/cfg.json").exit_code == 2);
  CHECK(run_cli("cell not-an-override").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
  const auto r = run_cli("cell --carreau.muu=1");
  CHECK(r.err.find("carreau.muu") != std::string::npos);
}

TEST_CASE("mesh generation problems exit with code 3") {
  const auto r = run_cli("mesh --geometry.R=0.4999 --outputs.dir=" +
                         (work_dir() / "e4").string());
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("solver failures exit with code 4") {
  const auto r = run_cli(
      "cell --solver.max_inner=1 --carreau.mu=0.1 --carreau.lambda=1000 " +
      tiny_cell("e5"));
  CHECK(r.exit_code == 4);
  CHECK(r.err.find("diverged") != std::string::npos);
}

TEST_CASE("config file plus dotted overrides, overrides win") {
  const fs::path cfg = work_dir() / "cfg.json";
  {
    std::ofstream out(cfg);
    out << R"({"drive": {"xi1": 0.0, "xi2": 0.0}, "carreau": {"mu": 2.0}})";
  }
  const auto r = run_cli("cell --config " + cfg.string() +
                         " --drive.xi1=0 " + tiny_cell("cfgrun"));
  REQUIRE(r.exit_code == 0);
  const auto manifest = nlohmann::json::parse(
      slurp(work_dir() / "cfgrun" / "run-manifest.json"));
  CHECK(manifest.at("config").at("carreau").at("mu").get<double>() == 2.0);
  CHECK(manifest.at("config").at("drive").at("xi1").get<double>() == 0.0);
  CHECK(manifest.at("command") == "cell");
  CHECK(manifest.at("meshes").contains("cell"));
  CHECK(manifest.at("versions").contains("tool"));
}

TEST_CASE("mesh command writes MSH and VTK pairs") {
  const std::string dir = (work_dir() / "meshes").string();
  const auto r = run_cli("mesh --geometry.h_cell=0.2 --geometry.n_layers=2 "
                         "--outputs.dir=" +
                         dir);
  REQUIRE(r.exit_code == 0);
  for (const char* name : {"mesh-cell.msh", "mesh-cell.vtk",
                           "mesh-omega.msh", "mesh-omega.vtk",
                           "run-manifest.json"})
    CHECK(fs::exists(fs::path(dir) / name));
  CHECK(r.out.find("768 tets") != std::string::npos);
  CHECK(r.out.find("400 triangles") != std::string::npos);
}

TEST_CASE("tabulate writes the polar table and its node CSV") {
  const auto r = run_cli(
      "tabulate --solver.table_n_radii=3 --solver.table_n_angles=8 " +
      tiny_cell("tab"));
  REQUIRE(r.exit_code == 0);
  const auto table = nlohmann::json::parse(
      slurp(work_dir() / "tab" / "perm-table.json"));
  CHECK(table.at("entries").size() == 3 * 8);
  CHECK(table.at("validation").contains("max_rel_err"));
  std::istringstream csv(slurp(work_dir() / "tab" / "cell-table.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == 1 + 3 * 8);
}

TEST_CASE("darcy emits run report, fields, and manifest") {
  const std::string dir = (work_dir() / "darcy").string();
  const auto r = run_cli(
      "darcy --geometry.h_omega=0.25 --geometry.h_cell=0.2 "
      "--geometry.n_layers=2 --outputs.dir=" +
      dir);
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(r.err.find("iter 0 residual=") != std::string::npos);

  const auto report =
      nlohmann::json::parse(slurp(fs::path(dir) / "darcy-run.json"));
  const auto residuals = report.at("residuals").get<std::vector<double>>();
  REQUIRE(residuals.size() >= 2);
  for (std::size_t i = 1; i < residuals.size(); ++i)
    CHECK(residuals[i] < residuals[i - 1]);  // strictly decreasing
  CHECK(report.at("iters").get<int>() >= 1);
  CHECK(report.at("cache").at("misses").get<int>() > 0);
  CHECK(report.at("timings").contains("jacobian_factorizations"));

  const std::string vtk = slurp(fs::path(dir) / "fields.vtk");
  for (const char* field : {"SCALARS P", "SCALARS V1", "SCALARS normV",
                            "SCALARS xi1", "SCALARS normXi"})
    CHECK(vtk.find(field) != std::string::npos);
}

TEST_CASE("darcy-linear honors the forcing expression grammar") {
  // -2^2+4 must parse as -(2^2)+4 = 0: with zero forcing the solve returns
  // the zero pressure immediately.
  const std::string dir = (work_dir() / "prec").string();
  const auto r = run_cli(
      "darcy-linear --carreau.r=2 --forcing.f1=-2^2+4 --forcing.f2=0 "
      "--geometry.h_omega=0.25 --geometry.h_cell=0.2 "
      "--geometry.n_layers=2 --outputs.dir=" +
      dir);
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  const auto report =
      nlohmann::json::parse(slurp(fs::path(dir) / "darcy-run.json"));
  const auto residuals = report.at("residuals").get<std::vector<double>>();
  CHECK(residuals.front() == 0.0);
}

TEST_CASE("reproduce-tables gates its exit code on the tolerance") {
  const std::string base =
      "reproduce-tables --geometry.h_cell=0.2 --geometry.n_layers=2 ";
  const std::string dir = (work_dir() / "repro").string();
  const auto ok = run_cli(base + "--reproduce.tolerance=0.2 --outputs.dir=" +
                          dir);
  CAPTURE(ok.err);
  REQUIRE(ok.exit_code == 0);
  CHECK(ok.out.find("24 rows") != std::string::npos);

  const std::string csv = slurp(fs::path(dir) / "cell-table.csv");
  CHECK(csv.rfind("xi1,xi2,lambda,mu,V1,V2,normV,ref_normV,rel_dev,shape\n",
                  0) == 0);
  CHECK(csv.find("\n1,0,1,10,") != std::string::npos);
  CHECK(csv.find("disk") != std::string::npos);
  CHECK(csv.find("ellipse") != std::string::npos);
  std::istringstream lines(csv);
  std::string line;
  int count = -1;  // header
  while (std::getline(lines, line)) ++count;
  CHECK(count == 24);

  const auto fail = run_cli(base +
                            "--reproduce.tolerance=0.001 --outputs.dir=" +
                            (work_dir() / "repro5").string());
  CHECK(fail.exit_code == 5);
}
