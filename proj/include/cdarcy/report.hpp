#pragma once

// Run artifacts: CSV tables (9 significant digits, locale independent),
// JSON manifests and solve reports (full precision), and VTK field bundles.
// Artifacts carry deterministic work counters instead of wall-clock times,
// so identical configurations produce byte-identical files.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <cdarcy/cell.hpp>
#include <cdarcy/config.hpp>
#include <cdarcy/core.hpp>
#include <cdarcy/darcy.hpp>
#include <cdarcy/mesh.hpp>
#include <cdarcy/vtk_io.hpp>

#define CDARCY_VERSION "1.0.0"

namespace cdarcy {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Formats a double for CSV cells: 9 significant digits.
inline std::string csv_num(double v) { return format_sig9(v); }

inline std::string to_csv(const CsvTable& table) {
  std::string out;
  auto append_row = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  append_row(table.header);
  for (const auto& row : table.rows) append_row(row);
  return out;
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  out << content;
  if (!out) throw ConfigError("failed writing output file '" + path + "'");
}

/// Creates outputs.dir if needed and returns the joined path.
inline std::string output_path(const OutputConfig& outputs,
                               const std::string& filename) {
  std::filesystem::path dir(outputs.dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory '" + outputs.dir +
                      "': " + ec.message());
  return (dir / filename).string();
}

inline nlohmann::json stats_json(const CellStats& s) {
  return {{"stokes_factorizations", s.stokes_factorizations},
          {"jacobian_factorizations", s.jacobian_factorizations},
          {"linear_solves", s.linear_solves},
          {"newton_iterations", s.newton_iterations}};
}

/// Echo of the full configuration plus mesh hashes and component versions;
/// written by every subcommand. `meshes` maps a role name ("cell", "omega",
/// "table") to a hash string.
inline nlohmann::json run_manifest(const std::string& command,
                                   const RunConfig& cfg,
                                   const nlohmann::json& meshes) {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = cfg.to_json();
  j["meshes"] = meshes;
  j["versions"] = {
      {"tool", CDARCY_VERSION},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                   std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                   std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  return j;
}

/// Solve report for the darcy subcommands: configuration echo, residual
/// history, iteration/cache accounting, and work counters ("timings" are
/// deterministic operation counts, never wall-clock).
inline nlohmann::json darcy_run_report(const RunConfig& cfg,
                                       const PressureField& field) {
  nlohmann::json j;
  j["config"] = cfg.to_json();
  j["residuals"] = field.residual_history;
  j["iters"] = field.iters;
  j["cache"] = {{"hits", field.cache_hits},
                {"misses", field.cache_misses},
                {"misses_per_iter", field.misses_per_iter}};
  nlohmann::json timings = stats_json(field.work);
  timings["outer_iterations"] = field.iters;
  j["timings"] = timings;
  return j;
}

/// The seven per-run fields as a VTK bundle: pressure at mesh points, the
/// velocity/drive components and norms per cell.
inline std::vector<VtkField> darcy_vtk_fields(const DarcyFields& fields) {
  std::vector<VtkField> out;
  auto add = [&out](const char* name, bool per_cell,
                    const std::vector<double>& data) {
    VtkField f;
    f.name = name;
    f.components = 1;
    f.per_cell = per_cell;
    f.data = data;
    out.push_back(std::move(f));
  };
  std::vector<double> p(fields.P_vertex.data(),
                        fields.P_vertex.data() + fields.P_vertex.size());
  add("P", false, p);
  add("V1", true, fields.V1);
  add("V2", true, fields.V2);
  add("normV", true, fields.Vnorm);
  add("xi1", true, fields.xi1);
  add("xi2", true, fields.xi2);
  add("normXi", true, fields.xinorm);
  return out;
}

/// CSV with one row per evaluated drive, used by the cell/jacobian/tabulate
/// commands: drive, velocity, and (optionally) the Jacobian entries.
inline CsvTable cell_results_csv(const std::vector<Vec2>& xis,
                                 const std::vector<Vec2>& Vs,
                                 const std::vector<Mat2>* As = nullptr) {
  CsvTable t;
  t.header = {"xi1", "xi2", "V1", "V2", "normV"};
  if (As)
    for (const char* k : {"A11", "A12", "A21", "A22"})
      t.header.push_back(k);
  for (std::size_t i = 0; i < xis.size(); ++i) {
    std::vector<std::string> row = {csv_num(xis[i].x()), csv_num(xis[i].y()),
                                    csv_num(Vs[i].x()), csv_num(Vs[i].y()),
                                    csv_num(Vs[i].norm())};
    if (As) {
      const Mat2& A = (*As)[i];
      row.push_back(csv_num(A(0, 0)));
      row.push_back(csv_num(A(0, 1)));
      row.push_back(csv_num(A(1, 0)));
      row.push_back(csv_num(A(1, 1)));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace cdarcy
