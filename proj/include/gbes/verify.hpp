#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gbes/core.hpp"
#include "gbes/montecarlo.hpp"

namespace gbes {

struct CheckRow {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckRow> checks;
  bool pass = false;  // conjunction of the rows

  void finish() {
    pass = true;
    for (const CheckRow& c : checks) pass = pass && c.pass;
  }
};

// Plain square matrix (rotations are not symmetric).
struct SquareMatrix {
  int dim = 0;
  std::vector<double> a;  // row-major

  static SquareMatrix identity(int d);
  // Rotation by `radians` in the (0,1) coordinate plane of dimension d.
  static SquareMatrix plane_rotation(int d, double radians);

  double at(int i, int j) const {
    return a[static_cast<std::size_t>(i) * dim + j];
  }
  void apply(std::span<const double> x, std::span<double> out) const;
  bool is_orthogonal(double tol = 1e-12) const;
};

// Least-squares slope of log(y) against log(x); refinement orders.
double fit_loglog_slope(std::span<const double> xs, std::span<const double> ys);

// Distributional equality of |Q B^x| and |B^(Qx)| through a fixed panel of
// bounded Lipschitz functions at three grid times; arms share seeds, so
// Q = I agrees exactly.
SuiteReport rotation_suite(std::span<const double> x, const SquareMatrix& q,
                           const ControlFamily& family, const TimeGrid& grid,
                           const VolatilityBand& band, std::size_t n_paths,
                           std::uint64_t seed, int threads = 1);

// Pathwise content of the isotropic-class equivalence: per-component
// realized quadratic variations agree and cross-variations vanish under
// refinement (fitted order >= 0.4), and realized QV/t recovers nu for
// constant controls.
SuiteReport equivalence_suite(const VolatilityBand& band, int d,
                              const TimeGrid& grid, std::size_t n_paths,
                              std::uint64_t seed, int threads = 1);

// Diagnostics for the extracted radial driver: per-policy martingale means,
// the variance band for beta_T^2, and the eps^(3/2) third-moment increment
// scaling (fitted exponent >= 1.4).
SuiteReport beta_suite(std::span<const double> x, const ControlFamily& family,
                       const TimeGrid& grid, const VolatilityBand& band,
                       std::size_t n_paths, std::uint64_t seed,
                       int threads = 1);

}  // namespace gbes
