/// @file carreau_darcy_main.cpp
/// @brief carreau-darcy: nonlinear permeability cell solves and homogenized
///        Darcy runs on thin periodic porous media.
///
/// Usage: carreau-darcy <subcommand> --config path [--section.key=value ...]
/// Exit codes: 0 success, 1 unexpected error, 2 configuration, 3 meshing,
/// 4 solver failure, 5 reference tolerance exceeded.

#include <CLI11.hpp>

#include <cdarcy/config.hpp>
#include <cdarcy/darcy.hpp>
#include <cdarcy/mesh.hpp>
#include <cdarcy/msh_io.hpp>
#include <cdarcy/permeability.hpp>
#include <cdarcy/reference.hpp>
#include <cdarcy/report.hpp>
#include <cdarcy/vtk_io.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace cdarcy;

// Per-command mesh defaults when geometry.h_cell / n_layers are 0 ("auto"):
// the table commands favor accuracy, the Darcy commands favor many solves.
constexpr double kTableH = 0.075;
constexpr int kTableLayers = 7;
constexpr double kDarcyH = 0.2;
constexpr int kDarcyLayers = 2;

int classify(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr ||
      dynamic_cast<const SyntaxError*>(&e) != nullptr)
    return 2;
  if (dynamic_cast<const InfeasibleResolution*>(&e) != nullptr ||
      dynamic_cast<const NonTilingEps*>(&e) != nullptr ||
      dynamic_cast<const NonConformingSplit*>(&e) != nullptr ||
      dynamic_cast<const ParseError*>(&e) != nullptr ||
      dynamic_cast<const UnsupportedElementType*>(&e) != nullptr ||
      dynamic_cast<const SpaceMeshMismatch*>(&e) != nullptr)
    return 3;
  if (dynamic_cast<const SingularSystem*>(&e) != nullptr ||
      dynamic_cast<const ToleranceNotReached*>(&e) != nullptr ||
      dynamic_cast<const NewtonDiverged*>(&e) != nullptr ||
      dynamic_cast<const OuterNewtonDiverged*>(&e) != nullptr ||
      dynamic_cast<const OutOfTableRange*>(&e) != nullptr)
    return 4;
  return 1;
}

TetMesh build_cell_mesh(const RunConfig& cfg, double h_default,
                        int layers_default) {
  const TriMesh base =
      generate_cell_mesh_2d(cfg.inclusion(), cfg.cell_h(h_default));
  return extrude_half_cell(base, cfg.cell_layers(layers_default));
}

CellOptions cell_options(const RunConfig& cfg) {
  CellOptions opts;
  opts.lin_tol = std::min(opts.lin_tol, cfg.solver.cell_tol_abs);
  return opts;
}

std::unique_ptr<PermEvaluator> make_evaluator(const RunConfig& cfg,
                                              const TetMesh& mesh) {
  auto ev = std::make_unique<PermEvaluator>(
      mesh, cfg.carreau, cell_options(cfg), cfg.solver.rel_round,
      cfg.solver.cell_tol_abs, cfg.solver.cell_tol_rel, cfg.solver.max_inner);
  ev->set_threads(cfg.solver.threads);
  return ev;
}

std::vector<double> table_radii(const SolverConfig& s) {
  std::vector<double> radii(static_cast<std::size_t>(s.table_n_radii));
  const double ratio = s.table_r_max / s.table_r_min;
  for (int i = 0; i < s.table_n_radii; ++i)
    radii[static_cast<std::size_t>(i)] =
        s.table_r_min *
        std::pow(ratio, static_cast<double>(i) /
                            static_cast<double>(s.table_n_radii - 1));
  radii.back() = s.table_r_max;  // exact endpoint
  return radii;
}

void emit_manifest(const std::string& command, const RunConfig& cfg,
                   const nlohmann::json& meshes) {
  write_text_file(output_path(cfg.outputs, cfg.outputs.manifest),
                  json_text(run_manifest(command, cfg, meshes)));
}

int run_mesh(const RunConfig& cfg) {
  const TriMesh base =
      generate_cell_mesh_2d(cfg.inclusion(), cfg.cell_h(kTableH));
  const TetMesh cell = extrude_half_cell(base, cfg.cell_layers(kTableLayers));
  const TriMesh omega =
      generate_domain_mesh(cfg.geometry.rect, cfg.geometry.h_omega);

  const std::string cell_base = cfg.outputs.mesh_base + "-cell";
  const std::string omega_base = cfg.outputs.mesh_base + "-omega";
  write_msh(cell, output_path(cfg.outputs, cell_base + ".msh"));
  write_vtk(cell, {}, output_path(cfg.outputs, cell_base + ".vtk"));
  write_msh(omega, output_path(cfg.outputs, omega_base + ".msh"));
  write_vtk(omega, {}, output_path(cfg.outputs, omega_base + ".vtk"));
  emit_manifest("mesh", cfg,
                {{"cell", cell.hash()}, {"omega", omega.hash()}});

  std::printf("cell: %zu vertices, %zu tets (%zu base triangles x %d layers)\n",
              cell.vertices.size(), cell.tets.size(), base.triangles.size(),
              cfg.cell_layers(kTableLayers));
  std::printf("omega: %zu vertices, %zu triangles\n", omega.vertices.size(),
              omega.triangles.size());
  return 0;
}

int run_cell(const RunConfig& cfg, bool with_jacobian) {
  const TetMesh mesh = build_cell_mesh(cfg, kTableH, kTableLayers);
  auto ev = make_evaluator(cfg, mesh);
  const Vec2 xi(cfg.drive.xi1, cfg.drive.xi2);

  std::vector<Vec2> xis = {xi};
  std::vector<Vec2> Vs;
  std::vector<Mat2> As;
  if (with_jacobian) {
    const auto [V, A] = ev->eval_both(xi);
    Vs.push_back(V);
    As.push_back(A);
  } else {
    Vs.push_back(ev->eval_U(xi));
  }

  write_text_file(output_path(cfg.outputs, cfg.outputs.csv),
                  to_csv(cell_results_csv(xis, Vs,
                                          with_jacobian ? &As : nullptr)));
  emit_manifest(with_jacobian ? "jacobian" : "cell", cfg,
                {{"cell", mesh.hash()}});

  const auto entry = ev->cache().lookup(xi);
  std::printf("xi = (%s, %s)\n", format_sig9(xi.x()).c_str(),
              format_sig9(xi.y()).c_str());
  std::printf("V = (%s, %s), |V| = %s, inner iterations = %d\n",
              format_sig9(Vs[0].x()).c_str(), format_sig9(Vs[0].y()).c_str(),
              format_sig9(Vs[0].norm()).c_str(),
              entry ? entry->newton_iters : 0);
  if (with_jacobian)
    std::printf("DU = [[%s, %s], [%s, %s]]\n",
                format_sig9(As[0](0, 0)).c_str(),
                format_sig9(As[0](0, 1)).c_str(),
                format_sig9(As[0](1, 0)).c_str(),
                format_sig9(As[0](1, 1)).c_str());
  return 0;
}

int run_tabulate(const RunConfig& cfg) {
  const TetMesh mesh = build_cell_mesh(cfg, kTableH, kTableLayers);
  const PermTable table = tabulate(cfg.carreau, mesh,
                                   table_radii(cfg.solver),
                                   cfg.solver.table_n_angles,
                                   cell_options(cfg));
  save_table(table, output_path(cfg.outputs, cfg.outputs.table));

  std::vector<Vec2> xis, Vs;
  std::vector<Mat2> As;
  for (const PermNode& n : table.entries) {
    xis.emplace_back(n.r * std::cos(n.theta), n.r * std::sin(n.theta));
    Vs.push_back(n.V);
    As.push_back(n.A);
  }
  write_text_file(output_path(cfg.outputs, cfg.outputs.csv),
                  to_csv(cell_results_csv(xis, Vs, &As)));
  emit_manifest("tabulate", cfg, {{"cell", mesh.hash()}});

  std::printf("table: %zu radii x %d angles = %zu nodes\n",
              table.radii.size(), table.n_angles, table.entries.size());
  std::printf("validation max relative error = %s\n",
              format_sig9(table.max_rel_err).c_str());
  return 0;
}

void write_darcy_artifacts(const char* command, const RunConfig& cfg,
                           const TriMesh& omega, const PressureField& field,
                           nlohmann::json meshes) {
  const DarcyFields fields = postprocess(omega, field);
  write_text_file(output_path(cfg.outputs, cfg.outputs.darcy_report),
                  json_text(darcy_run_report(cfg, field)));
  write_vtk(omega, darcy_vtk_fields(fields),
            output_path(cfg.outputs, cfg.outputs.fields));
  meshes["omega"] = omega.hash();
  emit_manifest(command, cfg, meshes);

  std::printf("outer iterations = %d, final residual = %s\n", field.iters,
              format_sig9(field.residual_history.back()).c_str());
  std::printf("cell cache: %lld hits, %lld misses\n",
              static_cast<long long>(field.cache_hits),
              static_cast<long long>(field.cache_misses));
}

DarcyOptions darcy_options(const RunConfig& cfg) {
  DarcyOptions opts;
  opts.tol_rel = cfg.solver.outer_tol;
  opts.max_outer = cfg.solver.max_outer;
  opts.max_halvings = cfg.solver.max_outer_halvings;
  opts.jacobian_eval = cfg.jacobian_eval();
  opts.log = [](int k, double res) {
    std::fprintf(stderr, "iter %d residual=%s\n", k,
                 format_sig9(res).c_str());
  };
  return opts;
}

int run_darcy(const RunConfig& cfg) {
  const TriMesh omega =
      generate_domain_mesh(cfg.geometry.rect, cfg.geometry.h_omega);
  const TetMesh cell = build_cell_mesh(cfg, kDarcyH, kDarcyLayers);

  DarcyProblem pb;
  pb.omega = &omega;
  pb.forcing = cfg.forcing_function();
  pb.params = cfg.carreau;
  pb.mode = cfg.mode();
  pb.cell_mesh = &cell;
  pb.eps = cfg.geometry.eps;
  pb.cell_tol_abs = cfg.solver.cell_tol_abs;
  pb.cell_max_inner = cfg.solver.max_inner;
  pb.rel_round = cfg.solver.rel_round;
  pb.threads = cfg.solver.threads;

  PermTable table;
  if (pb.mode == DarcyMode::Tabulated) {
    table = tabulate(cfg.carreau, cell, table_radii(cfg.solver),
                     cfg.solver.table_n_angles, cell_options(cfg));
    save_table(table, output_path(cfg.outputs, cfg.outputs.table));
    std::fprintf(stderr, "table validation max relative error = %s\n",
                 format_sig9(table.max_rel_err).c_str());
    pb.table = &table;
  }

  const PressureField field = newton_solve(pb, darcy_options(cfg));
  write_darcy_artifacts("darcy", cfg, omega, field,
                        {{"cell", cell.hash()}});
  return 0;
}

int run_darcy_linear(const RunConfig& cfg) {
  const TriMesh omega =
      generate_domain_mesh(cfg.geometry.rect, cfg.geometry.h_omega);
  const TetMesh cell = build_cell_mesh(cfg, kDarcyH, kDarcyLayers);
  const Mat2 A = permeability_tensor(cell, cell_options(cfg));

  const PressureField field =
      solve_linear_darcy(omega, cfg.forcing_function(), A, cfg.carreau.mu,
                         cfg.carreau.eta0, darcy_options(cfg));
  std::printf("A = [[%s, %s], [%s, %s]]\n", format_sig9(A(0, 0)).c_str(),
              format_sig9(A(0, 1)).c_str(), format_sig9(A(1, 0)).c_str(),
              format_sig9(A(1, 1)).c_str());
  write_darcy_artifacts("darcy-linear", cfg, omega, field,
                        {{"cell", cell.hash()}});
  return 0;
}

int run_reproduce_tables(const RunConfig& cfg) {
  CsvTable out;
  out.header = {"xi1", "xi2", "lambda", "mu", "V1",
                "V2",  "normV", "ref_normV", "rel_dev", "shape"};

  nlohmann::json meshes;
  double worst = 0.0;
  std::string current_shape;
  TetMesh mesh;
  // Rows are grouped by (shape, lambda, mu), so one evaluator serves the two
  // drives of each parameter set and meshes are built once per shape.
  for (std::size_t i = 0; i < reference_rows().size();) {
    const ReferenceRow& head = reference_rows()[i];
    if (head.shape != current_shape) {
      current_shape = head.shape;
      RunConfig shaped = cfg;
      shaped.geometry.shape = head.shape;
      mesh = build_cell_mesh(shaped, kTableH, kTableLayers);
      meshes[head.shape] = mesh.hash();
    }
    RunConfig local = cfg;
    local.geometry.shape = head.shape;
    local.carreau.lambda = head.lambda;
    local.carreau.mu = head.mu;
    auto ev = make_evaluator(local, mesh);
    for (; i < reference_rows().size(); ++i) {
      const ReferenceRow& row = reference_rows()[i];
      if (row.shape != current_shape || row.lambda != head.lambda ||
          row.mu != head.mu)
        break;
      const Vec2 xi(row.xi1, row.xi2);
      const Vec2 V = ev->eval_U(xi);
      const double dev = (V.norm() - row.normV) / row.normV;
      worst = std::max(worst, std::abs(dev));
      out.rows.push_back({csv_num(row.xi1), csv_num(row.xi2),
                          csv_num(row.lambda), csv_num(row.mu),
                          csv_num(V.x()), csv_num(V.y()), csv_num(V.norm()),
                          csv_num(row.normV), csv_num(dev), row.shape});
      std::fprintf(stderr,
                   "%s xi=(%g, %g) lambda=%g mu=%g: |V|=%s ref=%s dev=%+.3f%%\n",
                   row.shape, row.xi1, row.xi2, row.lambda, row.mu,
                   format_sig9(V.norm()).c_str(),
                   format_sig9(row.normV).c_str(), 100.0 * dev);
    }
  }

  write_text_file(output_path(cfg.outputs, cfg.outputs.csv), to_csv(out));
  emit_manifest("reproduce-tables", cfg, meshes);
  std::printf("24 rows, max |relative deviation| = %.4f (tolerance %.4f)\n",
              worst, cfg.reproduce.tolerance);
  if (worst <= cfg.reproduce.tolerance) return 0;
  std::fprintf(stderr, "error: deviation exceeds tolerance\n");
  return 5;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear permeability cell solves and homogenized Darcy "
               "runs for thin periodic porous media"};
  app.require_subcommand(1);

  std::string config_path;
  int threads = 0;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"cell", "solve one cell problem at the configured drive"},
      {"jacobian", "cell solve plus the permeability Jacobian DU"},
      {"tabulate", "build a polar permeability table"},
      {"darcy", "outer Newton solve of the homogenized Darcy problem"},
      {"darcy-linear", "Newtonian Darcy solve with the permeability tensor"},
      {"mesh", "generate and write the meshes without solving"},
      {"reproduce-tables",
       "re-run the canonical disk/ellipse table and compare"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--threads", threads,
                    "cap on concurrent cell solves (overrides solver.threads)");
    sub->allow_extras();  // --section.key=value overrides
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  std::vector<std::string> overrides;
  for (const std::string& extra : sub->remaining()) {
    if (extra.rfind("--", 0) != 0 || extra.find('=') == std::string::npos) {
      std::fprintf(stderr,
                   "error: unrecognized argument '%s' (overrides look like "
                   "--section.key=value)\n",
                   extra.c_str());
      return 2;
    }
    overrides.push_back(extra.substr(2));
  }
  if (threads > 0) overrides.push_back("solver.threads=" +
                                       std::to_string(threads));

  try {
    const RunConfig cfg = RunConfig::load(config_path, overrides);
    const std::string& name = sub->get_name();
    if (name == "cell") return run_cell(cfg, false);
    if (name == "jacobian") return run_cell(cfg, true);
    if (name == "tabulate") return run_tabulate(cfg);
    if (name == "darcy") return run_darcy(cfg);
    if (name == "darcy-linear") return run_darcy_linear(cfg);
    if (name == "mesh") return run_mesh(cfg);
    return run_reproduce_tables(cfg);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return classify(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
