#pragma once

// Embedded reference outputs of the cell solver for the two canonical
// geometries (disk R = 0.25 and ellipse a = 0.35, b = 0.25^2/0.35) at
// r = 1.3, eta0 = 1, etaInf = 0, on an ~8k-tet half-cell mesh. The
// reproduce-tables command re-solves these configurations and reports the
// relative deviation of |V'| from these values.

#include <array>

namespace cdarcy {

struct ReferenceRow {
  const char* shape;  ///< "disk" | "ellipse"
  double xi1, xi2;    ///< drive
  double lambda, mu;
  double V1, V2, normV;
};

inline const std::array<ReferenceRow, 24>& reference_rows() {
  // 0.70710678118654752 = sqrt(2)/2 (diagonal drive of unit norm).
  static constexpr double d = 0.70710678118654752;
  static const std::array<ReferenceRow, 24> rows = {{
      {"disk", 1.0, 0.0, 1.0, 10.0, 0.00251667, -1.19492e-08, 0.00251667},
      {"disk", 1.0, 0.0, 1.0, 1.0, 0.0258962, -2.03842e-07, 0.0258962},
      {"disk", 1.0, 0.0, 1.0, 0.1, 1.66673, -0.000146684, 1.66673},
      {"disk", 1.0, 0.0, 1000.0, 10.0, 0.00329309, -2.07601e-07, 0.00329309},
      {"disk", 1.0, 0.0, 1000.0, 1.0, 2.41035, -9.17069e-05, 2.41035},
      {"disk", 1.0, 0.0, 1000.0, 0.1, 5192.89, -0.196614, 5192.89},
      {"disk", d, d, 1.0, 10.0, 0.00177941, 0.00177946, 0.0025165},
      {"disk", d, d, 1.0, 1.0, 0.0181773, 0.0181779, 0.025707},
      {"disk", d, d, 1.0, 0.1, 1.06628, 1.06742, 1.50875},
      {"disk", d, d, 1000.0, 10.0, 0.00222964, 0.00223, 0.00315344},
      {"disk", d, d, 1000.0, 1.0, 1.5389, 1.54094, 2.17777},
      {"disk", d, d, 1000.0, 0.1, 3315.42, 3319.82, 4691.83},
      {"ellipse", 1.0, 0.0, 1.0, 10.0, 0.00355439, -2.04336e-08, 0.00355439},
      {"ellipse", 1.0, 0.0, 1.0, 1.0, 0.0365926, -2.17653e-07, 0.0365926},
      {"ellipse", 1.0, 0.0, 1.0, 0.1, 3.19015, -0.000131535, 3.19015},
      {"ellipse", 1.0, 0.0, 1000.0, 10.0, 0.00484256, -6.00639e-08,
       0.00484256},
      {"ellipse", 1.0, 0.0, 1000.0, 1.0, 4.65322, -0.000188363, 4.65322},
      {"ellipse", 1.0, 0.0, 1000.0, 0.1, 10025.0, -0.405677, 10025.0},
      {"ellipse", d, d, 1.0, 10.0, 0.00251303, 0.000763869, 0.00262656},
      {"ellipse", d, d, 1.0, 1.0, 0.0255712, 0.0078233, 0.0267412},
      {"ellipse", d, d, 1.0, 0.1, 1.34546, 0.453007, 1.41967},
      {"ellipse", d, d, 1000.0, 10.0, 0.00303631, 0.000973364, 0.00318851},
      {"ellipse", d, d, 1000.0, 1.0, 1.93222, 0.650889, 2.0389},
      {"ellipse", d, d, 1000.0, 0.1, 4162.78, 1402.28, 4392.63},
  }};
  return rows;
}

}  // namespace cdarcy
