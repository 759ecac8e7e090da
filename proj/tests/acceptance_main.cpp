/// @file acceptance_main.cpp
/// End-to-end acceptance gate. Each numbered check prints exactly one
/// PASS/FAIL line with the measured figures and its pinned tolerance; the
/// binary exits 0 only if every check passes. Wall times are printed for
/// orientation but never gate a result: the pass/fail criteria are the
/// numeric tolerances fixed in this file.

#include <cdarcy/carreau.hpp>
#include <cdarcy/cell.hpp>
#include <cdarcy/config.hpp>
#include <cdarcy/darcy.hpp>
#include <cdarcy/expr.hpp>
#include <cdarcy/fem.hpp>
#include <cdarcy/mesh.hpp>
#include <cdarcy/msh_io.hpp>
#include <cdarcy/permeability.hpp>
#include <cdarcy/reference.hpp>
#include <cdarcy/report.hpp>
#include <cdarcy/vtk_io.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <variant>
#include <vector>

using namespace cdarcy;

namespace {

// ---------------------------------------------------------------------------
// Pinned tolerances. These are the acceptance thresholds; changing them is a
// contract change, not a tuning knob.
// ---------------------------------------------------------------------------
constexpr double kTableTol = 0.05;         // table rows, production resolution
constexpr double kTableTolRefined = 0.02;  // spot rows, refined resolution
constexpr double kCosCenter = 0.89;        // diagonal-drive alignment, ellipse
constexpr double kCosTol = 0.02;
constexpr double kNewtonianRel = 1e-8;   // r = 2 closed-form agreement
constexpr double kRescaleRel = 1e-10;    // mu-rescaling identity
constexpr double kJacFdRel = 1e-4;       // Jacobian vs central differences
constexpr double kJacSymRel = 1e-6;      // Jacobian symmetry
constexpr double kJacEigRel = 1e-10;     // eigenvalue floor, relative to |A|
constexpr double kDarcyPdiff = 0.01;     // low/high Reynolds pressure drift
constexpr double kDarcyRatioTol = 0.02;  // velocity scaling about 100
constexpr double kLinearRel = 1e-6;      // nonlinear r = 2 vs linear Darcy
constexpr double kDivTol = 1e-10;        // discrete divergence
constexpr double kMeanTol = 1e-12;       // pressure mean, relative to scale
constexpr double kW3Tol = 1e-8;          // vertical velocity, relative to |w|
constexpr double kTensorSymTol = 1e-3;   // A11 vs A22, disk

// Production cell resolution for the reference tables and the refined
// resolution used for the two spot checks (the largest uniform refinement
// that fits the build machine's memory).
constexpr double kTableH = 0.075;
constexpr int kTableLayers = 7;
constexpr double kRefinedH = 0.06;
constexpr int kRefinedLayers = 9;
// Small cell used where the checks are mesh-independent identities.
constexpr double kSmallH = 0.2;
constexpr int kSmallLayers = 2;

int g_failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void report(int id, bool pass, const std::string& detail, double secs) {
  if (!pass) ++g_failures;
  std::printf("[%2d] %s  %s  (%.0fs)\n", id, pass ? "PASS" : "FAIL",
              detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

CarreauParams make_params(double r, double lambda, double mu,
                          double eta0 = 1.0, double eta_inf = 0.0) {
  CarreauParams p;
  p.r = r;
  p.lambda = lambda;
  p.mu = mu;
  p.eta0 = eta0;
  p.etaInf = eta_inf;
  return p;
}

TetMesh build_cell(const InclusionShape& shape, double h, int layers) {
  return extrude_half_cell(generate_cell_mesh_2d(shape, h), layers);
}

Vec2 forcing_profile(const Vec2& x) {
  return Vec2(x.y() * (0.5 - x.y()), 0.0);
}

struct RowResult {
  double worst_norm_dev = 0.0;  // max relative |V| deviation over the rows
  double worst_row_secs = 0.0;
  double worst_cos_dev = 0.0;  // diagonal rows only
};

/// Solves every reference row for `shape` on one shared workspace and
/// returns the worst relative deviation of |V'| (plus the diagonal
/// alignment for the ellipse). Spot rows are checked by the caller.
RowResult run_reference_rows(const char* shape, const TetMesh& mesh,
                             std::vector<ReferenceRow>* rows_out = nullptr) {
  CellWorkspace ws(mesh);
  RowResult res;
  for (const ReferenceRow& row : reference_rows()) {
    if (std::string(row.shape) != shape) continue;
    const auto t0 = std::chrono::steady_clock::now();
    const CarreauParams params = make_params(1.3, row.lambda, row.mu);
    const CellSolution s = ws.solve_cell(params, Vec2(row.xi1, row.xi2));
    res.worst_row_secs = std::max(res.worst_row_secs, seconds_since(t0));
    const double dev = std::abs(s.V.norm() - row.normV) / row.normV;
    res.worst_norm_dev = std::max(res.worst_norm_dev, dev);
    if (row.xi2 != 0.0) {
      const double cosang = (s.V.x() + s.V.y()) / (std::sqrt(2.0) * s.V.norm());
      res.worst_cos_dev =
          std::max(res.worst_cos_dev, std::abs(cosang - kCosCenter));
    }
    if (rows_out != nullptr) {
      ReferenceRow got = row;
      got.V1 = s.V.x();
      got.V2 = s.V.y();
      got.normV = s.V.norm();
      rows_out->push_back(got);
    }
  }
  return res;
}

double spot_dev(const std::vector<ReferenceRow>& got, double lambda, double mu,
                double ref_v1) {
  for (const ReferenceRow& row : got)
    if (row.lambda == lambda && row.mu == mu && row.xi2 == 0.0)
      return std::abs(row.V1 - ref_v1) / std::abs(ref_v1);
  return 1.0;
}

// --------------------------------------------------------------------------
// 1. Disk reference table at production resolution plus two refined spots.
// --------------------------------------------------------------------------
void check_disk_table(Mat2* tensor_out) {
  const auto t0 = std::chrono::steady_clock::now();
  const InclusionShape disk = InclusionShape::disk(0.25);
  double worst = 0.0, worst_secs = 0.0, spot_mild = 1.0, spot_hard = 1.0;
  {
    const TetMesh mesh = build_cell(disk, kTableH, kTableLayers);
    std::vector<ReferenceRow> got;
    const RowResult res = run_reference_rows("disk", mesh, &got);
    worst = res.worst_norm_dev;
    worst_secs = res.worst_row_secs;
    spot_mild = spot_dev(got, 1.0, 10.0, 0.00251667);
    spot_hard = spot_dev(got, 1000.0, 0.1, 5192.89);
    CellWorkspace ws(mesh);
    *tensor_out = ws.permeability_tensor();
  }
  // Refined pass for the two spot rows (scoped so the large factorization
  // is freed before anything else allocates).
  double ref_mild = 1.0, ref_hard = 1.0;
  {
    const TetMesh fine = build_cell(disk, kRefinedH, kRefinedLayers);
    CellWorkspace ws(fine);
    const CellSolution mild =
        ws.solve_cell(make_params(1.3, 1.0, 10.0), Vec2(1.0, 0.0));
    ref_mild = std::abs(mild.V.x() - 0.00251667) / 0.00251667;
    const CellSolution hard =
        ws.solve_cell(make_params(1.3, 1000.0, 0.1), Vec2(1.0, 0.0));
    ref_hard = std::abs(hard.V.x() - 5192.89) / 5192.89;
  }
  const bool pass = worst <= kTableTol && spot_mild <= kTableTol &&
                    spot_hard <= kTableTol && ref_mild <= kTableTolRefined &&
                    ref_hard <= kTableTolRefined;
  report(1, pass,
         fmt("disk table: 12 rows max |dev| %.2f%% (tol %.0f%%), refined "
             "spots %.2f%% / %.2f%% (tol %.0f%%), slowest row %.0fs",
             100 * worst, 100 * kTableTol, 100 * ref_mild, 100 * ref_hard,
             100 * kTableTolRefined, worst_secs),
         seconds_since(t0));
}

// --------------------------------------------------------------------------
// 2. Ellipse reference table plus diagonal-drive alignment.
// --------------------------------------------------------------------------
void check_ellipse_table() {
  const auto t0 = std::chrono::steady_clock::now();
  const InclusionShape ellipse = InclusionShape::ellipse(0.35, 0.0625 / 0.35);
  const TetMesh mesh = build_cell(ellipse, kTableH, kTableLayers);
  std::vector<ReferenceRow> got;
  const RowResult res = run_reference_rows("ellipse", mesh, &got);
  const double spot_a = spot_dev(got, 1.0, 10.0, 0.00355439);
  const double spot_b = spot_dev(got, 1000.0, 0.1, 10025.0);
  const bool pass = res.worst_norm_dev <= kTableTol && spot_a <= kTableTol &&
                    spot_b <= kTableTol && res.worst_cos_dev <= kCosTol;
  report(2, pass,
         fmt("ellipse table: 12 rows max |dev| %.2f%% (tol %.0f%%), spots "
             "%.2f%% / %.2f%%, diagonal cos dev %.4f (tol %.2f)",
             100 * res.worst_norm_dev, 100 * kTableTol, 100 * spot_a,
             100 * spot_b, res.worst_cos_dev, kCosTol),
         seconds_since(t0));
}

// --------------------------------------------------------------------------
// 3. r = 2 collapses to the linear law U = A xi / (mu eta0) exactly.
// --------------------------------------------------------------------------
void check_newtonian_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  const TetMesh mesh =
      build_cell(InclusionShape::disk(0.25), kTableH, kTableLayers);
  CellWorkspace ws(mesh);
  const Mat2 A = ws.permeability_tensor();
  const CarreauParams params = make_params(2.0, 1.0, 1.7, 0.9);
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> radius(0.1, 2.0), angle(0.0, 6.2831853);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double rho = radius(gen), th = angle(gen);
    const Vec2 xi(rho * std::cos(th), rho * std::sin(th));
    const Vec2 expect = A * xi / (params.mu * params.eta0);
    const Vec2 got = ws.solve_cell(params, xi).V;
    worst = std::max(worst, (got - expect).norm() / expect.norm());
  }
  report(3, worst <= kNewtonianRel,
         fmt("newtonian consistency: 10 drives, max rel err %.2e (tol %.0e)",
             worst, kNewtonianRel),
         seconds_since(t0));
}

// --------------------------------------------------------------------------
// 4. U(mu; xi) = U(1; xi/mu): the same discrete system up to scaling.
// --------------------------------------------------------------------------
void check_mu_rescaling() {
  const auto t0 = std::chrono::steady_clock::now();
  const TetMesh mesh =
      build_cell(InclusionShape::disk(0.25), kSmallH, kSmallLayers);
  CellWorkspace ws(mesh);
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> logmu(std::log(0.05), std::log(20.0));
  std::uniform_real_distribution<double> radius(0.01, 1.5), angle(0.0, 6.2831853);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double mu = std::exp(logmu(gen));
    const double rho = radius(gen), th = angle(gen);
    const Vec2 xi(rho * std::cos(th), rho * std::sin(th));
    const Vec2 a =
        ws.solve_cell(make_params(1.3, 1.0, mu), xi, 1e-14, 1e-12, 100).V;
    const Vec2 b =
        ws.solve_cell(make_params(1.3, 1.0, 1.0), xi / mu, 1e-14, 1e-12, 100).V;
    worst = std::max(worst, (a - b).norm() / b.norm());
  }
  report(4, worst <= kRescaleRel,
         fmt("mu rescaling: 10 pairs, max rel err %.2e (tol %.0e)", worst,
             kRescaleRel),
         seconds_since(t0));
}

// --------------------------------------------------------------------------
// 5. Analytic Jacobian vs central differences; symmetry; eigenvalue floor.
// --------------------------------------------------------------------------
void check_jacobian() {
  const auto t0 = std::chrono::steady_clock::now();
  const TetMesh mesh =
      build_cell(InclusionShape::disk(0.25), kSmallH, kSmallLayers);
  CellWorkspace ws(mesh);
  const CarreauParams params = make_params(1.3, 1.0, 1.0);
  const Vec2 points[5] = {Vec2(0.0, 0.0), Vec2(1.0, 0.0), Vec2(0.3, 0.1),
                          Vec2(-0.5, 0.8), Vec2(0.05, -0.02)};
  double worst_fd = 0.0, worst_sym = 0.0, worst_eig = 0.0;
  for (const Vec2& xi : points) {
    const CellSolution base = ws.solve_cell(params, xi, 1e-14, 1e-12, 80);
    const Mat2 A = ws.permeability_jacobian(params, base);
    const double h = 1e-5 * std::max(1.0, xi.norm());
    Mat2 fd;
    for (int j = 0; j < 2; ++j) {
      Vec2 dp = xi, dm = xi;
      dp[j] += h;
      dm[j] -= h;
      const Vec2 up = ws.solve_cell(params, dp, 1e-14, 1e-12, 80).V;
      const Vec2 um = ws.solve_cell(params, dm, 1e-14, 1e-12, 80).V;
      fd.col(j) = (up - um) / (2.0 * h);
    }
    worst_fd = std::max(worst_fd, (A - fd).norm() / fd.norm());
    worst_sym = std::max(worst_sym, (A - A.transpose()).norm() / A.norm());
    const Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (A + A.transpose()));
    worst_eig =
        std::max(worst_eig, -es.eigenvalues().minCoeff() / A.norm());
  }
  const bool pass = worst_fd <= kJacFdRel && worst_sym <= kJacSymRel &&
                    worst_eig <= kJacEigRel;
  report(5, pass,
         fmt("jacobian: 5 points, FD err %.2e (tol %.0e), asym %.2e (tol "
             "%.0e), eig floor %.2e (tol %.0e)",
             worst_fd, kJacFdRel, worst_sym, kJacSymRel, worst_eig, kJacEigRel),
         seconds_since(t0));
}

// --------------------------------------------------------------------------
// 6. Strict monotonicity of the permeability map.
// --------------------------------------------------------------------------
void check_monotonicity() {
  const auto t0 = std::chrono::steady_clock::now();
  const TetMesh mesh =
      build_cell(InclusionShape::disk(0.25), kSmallH, kSmallLayers);
  CellWorkspace ws(mesh);
  const CarreauParams params = make_params(1.3, 10.0, 1.0);
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> coord(-1.2, 1.2);
  int positive = 0;
  double min_prod = 1e300;
  for (int k = 0; k < 20; ++k) {
    Vec2 xi(coord(gen), coord(gen)), eta(coord(gen), coord(gen));
    while ((xi - eta).norm() < 1e-3) eta = Vec2(coord(gen), coord(gen));
    const Vec2 u = ws.solve_cell(params, xi, 1e-12, 1e-10, 80).V;
    const Vec2 v = ws.solve_cell(params, eta, 1e-12, 1e-10, 80).V;
    const double prod = (u - v).dot(xi - eta);
    min_prod = std::min(min_prod, prod);
    if (prod > 0.0) ++positive;
  }
  report(6, positive == 20,
         fmt("monotonicity: %d/20 pairs strictly positive, min product %.2e",
             positive, min_prod),
         seconds_since(t0));
}

// --------------------------------------------------------------------------
// 7. Macroscopic runs at Re = 1 and Re = 100: pressure is invariant, the
//    velocity scales by the viscosity ratio.
// --------------------------------------------------------------------------
void check_darcy_reynolds() {
  const auto t0 = std::chrono::steady_clock::now();
  const TriMesh omega = generate_domain_mesh(Rect{0.0, 1.0, 0.0, 0.5}, 0.05);
  const TetMesh cell =
      build_cell(InclusionShape::disk(0.25), kSmallH, kSmallLayers);
  DarcyProblem pb;
  pb.omega = &omega;
  pb.forcing = forcing_profile;
  pb.mode = DarcyMode::Exact;
  pb.cell_mesh = &cell;
  pb.eps = 0.1;
  DarcyOptions opts;
  opts.log = [](int it, double r) {
    std::fprintf(stderr, "  darcy iter %d residual %.3e\n", it, r);
  };

  pb.params = make_params(1.3, 1.0, 10.0);  // Re = 1/(eps*mu) = 1
  const PressureField low = newton_solve(pb, opts);
  const double t_low = seconds_since(t0);
  pb.params = make_params(1.3, 1.0, 0.1);  // Re = 100
  const PressureField high = newton_solve(pb, opts);

  const Space2D space(omega, Family::P2);
  const ElementCache2D cache(space, triangle_rule(4));
  const double p_diff = l2_norm(space, cache, low.P - high.P) /
                        l2_norm(space, cache, low.P);
  double v_low = 0.0, v_high = 0.0;
  for (std::size_t e = 0; e < omega.triangles.size(); ++e) {
    const double area = omega.triangle_area(static_cast<int>(e));
    v_low += area * low.V[e].squaredNorm();
    v_high += area * high.V[e].squaredNorm();
  }
  const double ratio = std::sqrt(v_high) / std::sqrt(v_low);
  const bool pass =
      p_diff <= kDarcyPdiff && std::abs(ratio / 100.0 - 1.0) <= kDarcyRatioTol;
  report(7, pass,
         fmt("reynolds sweep: rel L2 pressure drift %.4f%% (tol %.0f%%), "
             "velocity ratio %.2f (target 100 +- %.0f%%), %.0fs + %.0fs",
             100 * p_diff, 100 * kDarcyPdiff, ratio, 100 * kDarcyRatioTol,
             t_low, seconds_since(t0) - t_low),
         seconds_since(t0));
}

// --------------------------------------------------------------------------
// 8. r = 2 macroscopic solve agrees with the linear Darcy law.
// --------------------------------------------------------------------------
void check_darcy_linear_limit() {
  const auto t0 = std::chrono::steady_clock::now();
  const TriMesh omega = generate_domain_mesh(Rect{0.0, 1.0, 0.0, 0.5}, 0.05);
  const TetMesh cell =
      build_cell(InclusionShape::disk(0.25), kSmallH, kSmallLayers);
  DarcyProblem pb;
  pb.omega = &omega;
  pb.forcing = forcing_profile;
  pb.params = make_params(2.0, 1.0, 1.0);
  pb.mode = DarcyMode::Exact;
  pb.cell_mesh = &cell;
  const PressureField nonlinear = newton_solve(pb);

  CellWorkspace ws(cell);
  const Mat2 A = ws.permeability_tensor();
  const PressureField linear =
      solve_linear_darcy(omega, forcing_profile, A, 1.0, 1.0);

  const Space2D space(omega, Family::P2);
  const ElementCache2D cache(space, triangle_rule(4));
  const double rel = l2_norm(space, cache, nonlinear.P - linear.P) /
                     l2_norm(space, cache, linear.P);
  report(8, rel <= kLinearRel,
         fmt("linear limit: rel L2 pressure gap %.2e (tol %.0e), %d outer "
             "iterations",
             rel, kLinearRel, nonlinear.iters),
         seconds_since(t0));
}

// --------------------------------------------------------------------------
// 9. Structural invariants of every cell solve, and the tensor's shape.
// --------------------------------------------------------------------------
void check_solver_invariants(const Mat2& disk_tensor) {
  const auto t0 = std::chrono::steady_clock::now();
  const TetMesh mesh =
      build_cell(InclusionShape::disk(0.25), kSmallH, kSmallLayers);
  std::vector<double> history;
  CellOptions opts;
  opts.log = [&history](int, double r) { history.push_back(r); };
  CellWorkspace ws(mesh, opts);

  struct Case {
    CarreauParams params;
    Vec2 xi;
  };
  const Case cases[6] = {
      {make_params(1.3, 1.0, 1.0), Vec2(1.0, 0.0)},
      {make_params(1.3, 1.0, 1.0), Vec2(0.7, 0.7)},
      {make_params(1.3, 1000.0, 0.1), Vec2(1.0, 0.0)},
      {make_params(1.8, 10.0, 1.0), Vec2(0.7, 0.7)},
      {make_params(2.5, 1.0, 1.0), Vec2(1.0, 0.0)},
      {make_params(2.0, 1.0, 1.0), Vec2(0.3, -0.4)},
  };
  double worst_div = 0.0, worst_mean = 0.0, worst_w3 = 0.0;
  bool monotone = true;
  for (const Case& c : cases) {
    history.clear();
    const CellSolution s = ws.solve_cell(c.params, c.xi);
    worst_div = std::max(worst_div, ws.divergence_norm(s));
    const double scale = std::max(1.0, s.pi.cwiseAbs().maxCoeff());
    worst_mean = std::max(
        worst_mean, std::abs(ws.pressure_integral(s.pi)) /
                        (ws.fluid_volume() * scale));
    worst_w3 = std::max(worst_w3, ws.w3_ratio(s));
    for (std::size_t k = 1; k < history.size(); ++k)
      if (!(history[k] < history[k - 1])) monotone = false;
  }

  const Eigen::SelfAdjointEigenSolver<Mat2> es(
      0.5 * (disk_tensor + disk_tensor.transpose()));
  const bool spd = es.eigenvalues().minCoeff() > 0.0;
  const double iso =
      std::abs(disk_tensor(0, 0) - disk_tensor(1, 1)) / disk_tensor(0, 0);
  const bool pass = worst_div <= kDivTol && worst_mean <= kMeanTol &&
                    worst_w3 <= kW3Tol && monotone && spd &&
                    iso <= kTensorSymTol;
  report(9, pass,
         fmt("invariants: div %.1e (tol %.0e), pressure mean %.1e (tol %.0e), "
             "w3 %.1e (tol %.0e), residuals %s, tensor SPD %s, |A11-A22|/A11 "
             "%.1e (tol %.0e)",
             worst_div, kDivTol, worst_mean, kMeanTol, worst_w3, kW3Tol,
             monotone ? "monotone" : "NOT monotone", spd ? "yes" : "NO", iso,
             kTensorSymTol),
         seconds_since(t0));
}

// --------------------------------------------------------------------------
// 10. Interfaces: extrusion count, MSH/VTK round trips, expression parser
//     precedence, byte-identical repeated outputs.
// --------------------------------------------------------------------------
bool check_tet_counts(std::string* why) {
  const struct {
    InclusionShape shape;
    double h;
    int layers;
  } cases[3] = {{InclusionShape::disk(0.25), 0.2, 2},
                {InclusionShape::disk(0.25), 0.15, 3},
                {InclusionShape::ellipse(0.35, 0.0625 / 0.35), 0.12, 4}};
  for (const auto& c : cases) {
    const TriMesh base = generate_cell_mesh_2d(c.shape, c.h);
    const TetMesh cell = extrude_half_cell(base, c.layers);
    const std::size_t expect =
        3 * base.triangles.size() * static_cast<std::size_t>(c.layers);
    if (cell.tets.size() != expect) {
      *why = fmt("tet count %zu != 3*%zu*%d", cell.tets.size(),
                 base.triangles.size(), c.layers);
      return false;
    }
  }
  return true;
}

bool check_msh_roundtrip(const std::filesystem::path& dir, std::string* why) {
  const TetMesh cell =
      build_cell(InclusionShape::disk(0.25), kSmallH, kSmallLayers);
  const std::string path = (dir / "rt.msh").string();
  write_msh(cell, path);
  const auto back = read_msh(path);
  const TetMesh* rt = std::get_if<TetMesh>(&back);
  if (rt == nullptr) {
    *why = "MSH read back as a surface mesh";
    return false;
  }
  if (rt->vertices.size() != cell.vertices.size() ||
      rt->tets != cell.tets || rt->boundary_faces != cell.boundary_faces) {
    *why = "MSH connectivity changed in round trip";
    return false;
  }
  for (std::size_t i = 0; i < cell.vertices.size(); ++i)
    if (rt->vertices[i] != cell.vertices[i]) {
      *why = fmt("MSH vertex %zu not bitwise equal", i);
      return false;
    }
  return true;
}

bool check_vtk_roundtrip(const std::filesystem::path& dir, std::string* why) {
  const TriMesh omega = generate_domain_mesh(Rect{0.0, 1.0, 0.0, 0.5}, 0.25);
  std::vector<VtkField> fields(2);
  fields[0].name = "P";
  fields[0].data.resize(omega.vertices.size());
  for (std::size_t i = 0; i < omega.vertices.size(); ++i)
    fields[0].data[i] = std::sin(1.0 + static_cast<double>(i)) / 3.0;
  fields[1].name = "V1";
  fields[1].per_cell = true;
  fields[1].data.resize(omega.triangles.size());
  for (std::size_t i = 0; i < omega.triangles.size(); ++i)
    fields[1].data[i] = 1.0 / (1.0 + static_cast<double>(i));
  const std::string path = (dir / "rt.vtk").string();
  write_vtk(omega, fields, path);
  const VtkContent back = read_vtk(path);
  if (back.points.size() != omega.vertices.size() ||
      back.cells.size() != omega.triangles.size() || back.fields.size() != 2) {
    *why = "VTK sizes changed in round trip";
    return false;
  }
  for (std::size_t i = 0; i < omega.vertices.size(); ++i)
    if (back.points[i] != Vec3(omega.vertices[i].x(), omega.vertices[i].y(),
                               0.0)) {
      *why = fmt("VTK point %zu not bitwise equal", i);
      return false;
    }
  for (int f = 0; f < 2; ++f)
    if (back.fields[static_cast<std::size_t>(f)].data != fields[
            static_cast<std::size_t>(f)].data) {
      *why = fmt("VTK field %s not bitwise equal", fields[
          static_cast<std::size_t>(f)].name.c_str());
      return false;
    }
  return true;
}

bool check_parser(std::string* why) {
  const struct {
    const char* text;
    double x1, x2, expect;
  } cases[] = {
      {"2^3^2", 0, 0, 512.0},        // right-associative power
      {"-2^2", 0, 0, -4.0},          // unary minus binds weaker than power
      {"1+2*3", 0, 0, 7.0},          // product before sum
      {"6-2-1", 0, 0, 3.0},          // left-associative difference
      {"2*x2^2", 0, 3, 18.0},        // power before product
      {"(1+2)*3", 0, 0, 9.0},        // parentheses
      {"x2*(0.5-x2)", 0, 0.1, 0.04},  // the default forcing profile
      {"-x1^2+4", 2, 0, 0.0},
  };
  for (const auto& c : cases) {
    const ForcingExpr e = parse_expr(c.text);
    const double got = e.eval(c.x1, c.x2);
    if (std::abs(got - c.expect) > 1e-15 * std::max(1.0, std::abs(c.expect))) {
      *why = fmt("'%s' evaluated to %.17g, expected %.17g", c.text, got,
                 c.expect);
      return false;
    }
    const std::string printed = e.print();
    const ForcingExpr e2 = parse_expr(printed);
    if (e2.print() != printed || e2.eval(c.x1, c.x2) != got) {
      *why = fmt("'%s' print/parse not idempotent ('%s')", c.text,
                 printed.c_str());
      return false;
    }
  }
  return true;
}

bool check_byte_identity(std::string* why) {
  const TetMesh cell =
      build_cell(InclusionShape::disk(0.25), kSmallH, kSmallLayers);
  const CarreauParams params = make_params(1.3, 1.0, 1.0);
  const std::vector<double> radii = {0.05, 0.15};
  const PermTable t1 = tabulate(params, cell, radii, 8);
  const PermTable t2 = tabulate(params, cell, radii, 8);
  const std::string j1 = table_to_json(t1).dump(2);
  const std::string j2 = table_to_json(t2).dump(2);
  if (j1 != j2) {
    *why = "repeated tabulation JSON differs";
    return false;
  }
  std::vector<Vec2> xis, vs;
  for (const auto& e : t1.entries) {
    xis.emplace_back(e.r * std::cos(e.theta), e.r * std::sin(e.theta));
    vs.push_back(e.V);
  }
  std::vector<Vec2> xis2, vs2;
  for (const auto& e : t2.entries) {
    xis2.emplace_back(e.r * std::cos(e.theta), e.r * std::sin(e.theta));
    vs2.push_back(e.V);
  }
  if (to_csv(cell_results_csv(xis, vs)) != to_csv(cell_results_csv(xis2, vs2))) {
    *why = "repeated tabulation CSV differs";
    return false;
  }
  return true;
}

void check_io_formats() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "cdarcy_acceptance";
  std::filesystem::create_directories(dir);
  std::string why;
  bool pass = check_tet_counts(&why) && check_msh_roundtrip(dir, &why) &&
              check_vtk_roundtrip(dir, &why) && check_parser(&why) &&
              check_byte_identity(&why);
  report(10, pass,
         pass ? std::string("io formats: extrusion counts exact, MSH/VTK "
                            "round trips bitwise, parser precedence ok, "
                            "repeated outputs byte-identical")
              : "io formats: " + why,
         seconds_since(t0));
}

}  // namespace

int main() {
  std::printf("acceptance: nonlinear Darcy pipeline\n");
  std::fflush(stdout);
  Mat2 disk_tensor = Mat2::Zero();
  const struct {
    int id;
    std::function<void()> run;
  } checks[] = {
      {1, [&] { check_disk_table(&disk_tensor); }},
      {2, [] { check_ellipse_table(); }},
      {3, [] { check_newtonian_consistency(); }},
      {4, [] { check_mu_rescaling(); }},
      {5, [] { check_jacobian(); }},
      {6, [] { check_monotonicity(); }},
      {7, [] { check_darcy_reynolds(); }},
      {8, [] { check_darcy_linear_limit(); }},
      {9, [&] { check_solver_invariants(disk_tensor); }},
      {10, [] { check_io_formats(); }},
  };
  for (const auto& c : checks) {
    try {
      c.run();
    } catch (const std::exception& e) {
      report(c.id, false, fmt("exception: %s", e.what()), 0.0);
    }
  }
  std::printf("acceptance: %d/10 checks passed\n", 10 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
