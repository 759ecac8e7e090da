#pragma once

// Run configuration: one JSON document covering geometry, rheology, solver
// knobs, forcing expressions, and output paths, with dotted-path overrides
// (`--carreau.mu=0.1`). Defaults reproduce the disk Darcy experiment on
// omega = (0,1) x (0,1/2) with f' = (x2(0.5-x2), 0).

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include <cdarcy/carreau.hpp>
#include <cdarcy/core.hpp>
#include <cdarcy/darcy.hpp>
#include <cdarcy/expr.hpp>
#include <cdarcy/mesh.hpp>

namespace cdarcy {

struct GeometryConfig {
  std::string shape = "disk";  ///< disk | ellipse
  double R = 0.25;             ///< disk radius
  double a = 0.35;             ///< ellipse semi-axis (x)
  double b = 0.0625 / 0.35;    ///< ellipse semi-axis (y), default R^2/a
  double h_cell = 0.0;         ///< 0 = per-command default
  int n_layers = 0;            ///< 0 = per-command default
  double h_omega = 0.05;
  Rect rect{0.0, 1.0, 0.0, 0.5};
  double eps = 0.1;  ///< scale separation; Re = 1/(eps*mu), reporting only
};

struct DriveConfig {
  double xi1 = 1.0, xi2 = 0.0;  ///< drive for the cell/jacobian commands
};

struct SolverConfig {
  double cell_tol_abs = 1e-10;
  double cell_tol_rel = 1e-8;
  double outer_tol = 1e-8;  ///< relative to the iteration-0 residual
  int max_inner = 50;
  int max_outer = 25;
  int max_outer_halvings = 10;
  std::string jacobian_eval = "barycenter";  ///< barycenter | vertex-mean
  std::string mode = "exact";                ///< exact | tabulated
  double table_r_min = 1e-4;
  double table_r_max = 0.25;
  int table_n_radii = 16;
  int table_n_angles = 32;
  double rel_round = 0.0;  ///< cache key rounding, 0 = exact bits
  int threads = 1;
};

struct ForcingConfig {
  std::string f1 = "x2*(0.5-x2)";
  std::string f2 = "0";
};

struct OutputConfig {
  std::string dir = "out";
  std::string manifest = "run-manifest.json";
  std::string csv = "cell-table.csv";
  std::string table = "perm-table.json";
  std::string fields = "fields.vtk";
  std::string darcy_report = "darcy-run.json";
  std::string mesh_base = "mesh";  ///< writes <mesh_base>.msh / .vtk
};

struct ReproduceConfig {
  double tolerance = 0.05;  ///< max relative deviation from the references
};

struct RunConfig {
  GeometryConfig geometry;
  CarreauParams carreau;
  DriveConfig drive;
  SolverConfig solver;
  ForcingConfig forcing;
  OutputConfig outputs;
  ReproduceConfig reproduce;

  InclusionShape inclusion() const {
    return geometry.shape == "disk"
               ? InclusionShape::disk(geometry.R)
               : InclusionShape::ellipse(geometry.a, geometry.b);
  }

  double cell_h(double command_default) const {
    return geometry.h_cell > 0.0 ? geometry.h_cell : command_default;
  }
  int cell_layers(int command_default) const {
    return geometry.n_layers > 0 ? geometry.n_layers : command_default;
  }

  JacobianEval jacobian_eval() const {
    return solver.jacobian_eval == "vertex-mean" ? JacobianEval::VertexMean
                                                 : JacobianEval::Barycenter;
  }
  DarcyMode mode() const {
    return solver.mode == "tabulated" ? DarcyMode::Tabulated
                                      : DarcyMode::Exact;
  }

  /// Validates every field against the module preconditions; throws
  /// ConfigError naming the offending dotted path.
  void validate() const {
    if (geometry.shape != "disk" && geometry.shape != "ellipse")
      throw ConfigError("geometry.shape must be 'disk' or 'ellipse'");
    if (!(geometry.R > 0.0) || !(geometry.R < 0.5))
      throw ConfigError("geometry.R must lie in (0, 0.5)");
    if (!(geometry.a > 0.0) || !(geometry.a < 0.5) || !(geometry.b > 0.0) ||
        !(geometry.b < 0.5))
      throw ConfigError("geometry.a and geometry.b must lie in (0, 0.5)");
    if (geometry.h_cell != 0.0 &&
        (!(geometry.h_cell > 0.0) || !(geometry.h_cell < 0.25)))
      throw ConfigError("geometry.h_cell must lie in (0, 0.25), or 0 for the "
                        "per-command default");
    if (geometry.n_layers != 0 && geometry.n_layers < 2)
      throw ConfigError("geometry.n_layers must be >= 2, or 0 for the "
                        "per-command default");
    if (!(geometry.h_omega > 0.0))
      throw ConfigError("geometry.h_omega must be positive");
    if (!(geometry.rect.width() > 0.0) || !(geometry.rect.height() > 0.0))
      throw ConfigError("geometry.rect must have positive extent");
    if (!(geometry.eps > 0.0))
      throw ConfigError("geometry.eps must be positive");

    carreau.validate();

    if (!(solver.cell_tol_abs > 0.0) || !(solver.cell_tol_rel > 0.0) ||
        !(solver.outer_tol > 0.0))
      throw ConfigError("solver tolerances must be positive");
    if (solver.max_inner < 1 || solver.max_outer < 1 ||
        solver.max_outer_halvings < 1)
      throw ConfigError("solver iteration caps must be >= 1");
    if (solver.jacobian_eval != "barycenter" &&
        solver.jacobian_eval != "vertex-mean")
      throw ConfigError(
          "solver.jacobian_eval must be 'barycenter' or 'vertex-mean'");
    if (solver.mode != "exact" && solver.mode != "tabulated")
      throw ConfigError("solver.mode must be 'exact' or 'tabulated'");
    if (!(solver.table_r_min > 0.0) ||
        !(solver.table_r_max > solver.table_r_min))
      throw ConfigError("solver.table_r_min/table_r_max must satisfy "
                        "0 < r_min < r_max");
    if (solver.table_n_radii < 2)
      throw ConfigError("solver.table_n_radii must be >= 2");
    if (solver.table_n_angles < 8)
      throw ConfigError("solver.table_n_angles must be >= 8");
    if (!(solver.rel_round >= 0.0))
      throw ConfigError("solver.rel_round must be >= 0");
    if (solver.threads < 1) throw ConfigError("solver.threads must be >= 1");

    // Forcing must parse; SyntaxError carries position information.
    parse_expr(forcing.f1);
    parse_expr(forcing.f2);

    if (!(reproduce.tolerance > 0.0))
      throw ConfigError("reproduce.tolerance must be positive");
  }

  /// Forcing as an evaluable vector field.
  std::function<Vec2(const Vec2&)> forcing_function() const {
    auto e1 = std::make_shared<ForcingExpr>(parse_expr(forcing.f1));
    auto e2 = std::make_shared<ForcingExpr>(parse_expr(forcing.f2));
    return [e1, e2](const Vec2& x) {
      return Vec2(e1->eval(x.x(), x.y()), e2->eval(x.x(), x.y()));
    };
  }

  /// Full document with every field spelled out (deterministic echo).
  nlohmann::json to_json() const {
    nlohmann::json j;
    j["geometry"] = {{"shape", geometry.shape},
                     {"R", geometry.R},
                     {"a", geometry.a},
                     {"b", geometry.b},
                     {"h_cell", geometry.h_cell},
                     {"n_layers", geometry.n_layers},
                     {"h_omega", geometry.h_omega},
                     {"rect",
                      {{"xmin", geometry.rect.xmin},
                       {"xmax", geometry.rect.xmax},
                       {"ymin", geometry.rect.ymin},
                       {"ymax", geometry.rect.ymax}}},
                     {"eps", geometry.eps}};
    j["carreau"] = {{"r", carreau.r},
                    {"lambda", carreau.lambda},
                    {"mu", carreau.mu},
                    {"eta0", carreau.eta0},
                    {"etaInf", carreau.etaInf}};
    j["drive"] = {{"xi1", drive.xi1}, {"xi2", drive.xi2}};
    j["solver"] = {{"cell_tol_abs", solver.cell_tol_abs},
                   {"cell_tol_rel", solver.cell_tol_rel},
                   {"outer_tol", solver.outer_tol},
                   {"max_inner", solver.max_inner},
                   {"max_outer", solver.max_outer},
                   {"max_outer_halvings", solver.max_outer_halvings},
                   {"jacobian_eval", solver.jacobian_eval},
                   {"mode", solver.mode},
                   {"table_r_min", solver.table_r_min},
                   {"table_r_max", solver.table_r_max},
                   {"table_n_radii", solver.table_n_radii},
                   {"table_n_angles", solver.table_n_angles},
                   {"rel_round", solver.rel_round},
                   {"threads", solver.threads}};
    j["forcing"] = {{"f1", forcing.f1}, {"f2", forcing.f2}};
    j["outputs"] = {{"dir", outputs.dir},
                    {"manifest", outputs.manifest},
                    {"csv", outputs.csv},
                    {"table", outputs.table},
                    {"fields", outputs.fields},
                    {"darcy_report", outputs.darcy_report},
                    {"mesh_base", outputs.mesh_base}};
    j["reproduce"] = {{"tolerance", reproduce.tolerance}};
    return j;
  }

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path,
                        const std::vector<std::string>& overrides = {});
};

namespace detail {

/// Rejects keys that are not part of the schema (typos fail loudly).
inline void check_keys(const nlohmann::json& j, const std::string& where,
                       const std::set<std::string>& known) {
  if (!j.is_object())
    throw ConfigError("config section '" + where + "' must be an object");
  for (const auto& item : j.items())
    if (known.find(item.key()) == known.end())
      throw ConfigError("unknown config key '" + where + "." + item.key() +
                        "'");
}

template <class T>
void fetch(const nlohmann::json& j, const char* key, T& value,
           const std::string& where) {
  if (!j.contains(key)) return;
  try {
    value = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + where + "." + key +
                      "' has the wrong type");
  }
}

/// Expression fields also accept plain numbers (e.g. `--forcing.f2=0`).
inline void fetch_expr(const nlohmann::json& j, const char* key,
                       std::string& value, const std::string& where) {
  if (!j.contains(key)) return;
  const nlohmann::json& v = j.at(key);
  if (v.is_number()) {
    value = format_full(v.get<double>());
    return;
  }
  fetch(j, key, value, where);
}

}  // namespace detail

inline RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  detail::check_keys(j, "config",
                     {"geometry", "carreau", "drive", "solver", "forcing",
                      "outputs", "reproduce"});
  if (j.contains("geometry")) {
    const auto& g = j.at("geometry");
    detail::check_keys(g, "geometry",
                       {"shape", "R", "a", "b", "h_cell", "n_layers",
                        "h_omega", "rect", "eps"});
    detail::fetch(g, "shape", c.geometry.shape, "geometry");
    detail::fetch(g, "R", c.geometry.R, "geometry");
    detail::fetch(g, "a", c.geometry.a, "geometry");
    detail::fetch(g, "b", c.geometry.b, "geometry");
    detail::fetch(g, "h_cell", c.geometry.h_cell, "geometry");
    detail::fetch(g, "n_layers", c.geometry.n_layers, "geometry");
    detail::fetch(g, "h_omega", c.geometry.h_omega, "geometry");
    detail::fetch(g, "eps", c.geometry.eps, "geometry");
    if (g.contains("rect")) {
      const auto& r = g.at("rect");
      detail::check_keys(r, "geometry.rect", {"xmin", "xmax", "ymin", "ymax"});
      detail::fetch(r, "xmin", c.geometry.rect.xmin, "geometry.rect");
      detail::fetch(r, "xmax", c.geometry.rect.xmax, "geometry.rect");
      detail::fetch(r, "ymin", c.geometry.rect.ymin, "geometry.rect");
      detail::fetch(r, "ymax", c.geometry.rect.ymax, "geometry.rect");
    }
  }
  if (j.contains("carreau")) {
    const auto& p = j.at("carreau");
    detail::check_keys(p, "carreau", {"r", "lambda", "mu", "eta0", "etaInf"});
    detail::fetch(p, "r", c.carreau.r, "carreau");
    detail::fetch(p, "lambda", c.carreau.lambda, "carreau");
    detail::fetch(p, "mu", c.carreau.mu, "carreau");
    detail::fetch(p, "eta0", c.carreau.eta0, "carreau");
    detail::fetch(p, "etaInf", c.carreau.etaInf, "carreau");
  }
  if (j.contains("drive")) {
    const auto& d = j.at("drive");
    detail::check_keys(d, "drive", {"xi1", "xi2"});
    detail::fetch(d, "xi1", c.drive.xi1, "drive");
    detail::fetch(d, "xi2", c.drive.xi2, "drive");
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    detail::check_keys(
        s, "solver",
        {"cell_tol_abs", "cell_tol_rel", "outer_tol", "max_inner",
         "max_outer", "max_outer_halvings", "jacobian_eval", "mode",
         "table_r_min", "table_r_max", "table_n_radii", "table_n_angles",
         "rel_round", "threads"});
    detail::fetch(s, "cell_tol_abs", c.solver.cell_tol_abs, "solver");
    detail::fetch(s, "cell_tol_rel", c.solver.cell_tol_rel, "solver");
    detail::fetch(s, "outer_tol", c.solver.outer_tol, "solver");
    detail::fetch(s, "max_inner", c.solver.max_inner, "solver");
    detail::fetch(s, "max_outer", c.solver.max_outer, "solver");
    detail::fetch(s, "max_outer_halvings", c.solver.max_outer_halvings,
                  "solver");
    detail::fetch(s, "jacobian_eval", c.solver.jacobian_eval, "solver");
    detail::fetch(s, "mode", c.solver.mode, "solver");
    detail::fetch(s, "table_r_min", c.solver.table_r_min, "solver");
    detail::fetch(s, "table_r_max", c.solver.table_r_max, "solver");
    detail::fetch(s, "table_n_radii", c.solver.table_n_radii, "solver");
    detail::fetch(s, "table_n_angles", c.solver.table_n_angles, "solver");
    detail::fetch(s, "rel_round", c.solver.rel_round, "solver");
    detail::fetch(s, "threads", c.solver.threads, "solver");
  }
  if (j.contains("forcing")) {
    const auto& f = j.at("forcing");
    detail::check_keys(f, "forcing", {"f1", "f2"});
    detail::fetch_expr(f, "f1", c.forcing.f1, "forcing");
    detail::fetch_expr(f, "f2", c.forcing.f2, "forcing");
  }
  if (j.contains("outputs")) {
    const auto& o = j.at("outputs");
    detail::check_keys(o, "outputs",
                       {"dir", "manifest", "csv", "table", "fields",
                        "darcy_report", "mesh_base"});
    detail::fetch(o, "dir", c.outputs.dir, "outputs");
    detail::fetch(o, "manifest", c.outputs.manifest, "outputs");
    detail::fetch(o, "csv", c.outputs.csv, "outputs");
    detail::fetch(o, "table", c.outputs.table, "outputs");
    detail::fetch(o, "fields", c.outputs.fields, "outputs");
    detail::fetch(o, "darcy_report", c.outputs.darcy_report, "outputs");
    detail::fetch(o, "mesh_base", c.outputs.mesh_base, "outputs");
  }
  if (j.contains("reproduce")) {
    const auto& r = j.at("reproduce");
    detail::check_keys(r, "reproduce", {"tolerance"});
    detail::fetch(r, "tolerance", c.reproduce.tolerance, "reproduce");
  }
  c.validate();
  return c;
}

/// Applies one `path.to.key=value` assignment onto the JSON document. The
/// value is parsed as JSON when possible and taken as a string otherwise.
inline void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like 'section.key=value', got '" +
                      assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;  // unquoted strings like shape=ellipse
  }

  std::vector<std::string> keys;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    keys.push_back(path.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start));
    if (keys.back().empty())
      throw ConfigError("override path '" + path + "' has an empty segment");
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  nlohmann::json* node = &doc;
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) node = &(*node)[keys[i]];
  (*node)[keys.back()] = value;
}

inline RunConfig RunConfig::load(const std::string& path,
                                 const std::vector<std::string>& overrides) {
  nlohmann::json doc = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file '" + path + "' is not valid JSON: " +
                        e.what());
    }
  }
  for (const std::string& o : overrides) apply_override(doc, o);
  return from_json(doc);
}

}  // namespace cdarcy
