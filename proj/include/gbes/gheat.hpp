#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gbes/core.hpp"

namespace gbes {

enum class HeatMode { Line, Radial };

// Instance of the nonlinear heat equation  u_t = g_prime(Lap u)  with
// Gaussian initial data exp(-n s^2 / (2 hi^2)), s the signed coordinate
// (line mode, centered at a_offset) or the radius (radial mode).
struct HeatProblem {
  VolatilityBand band{1.0, 1.0};
  int d = 1;                  // spatial dimension (1 in line mode)
  HeatMode mode = HeatMode::Line;
  double n = 1.0;             // Gaussian sharpness, 1/length^2
  double a_offset = 0.0;      // Gaussian center (line mode only)
  double domain_radius = 0.0; // half-width (line) or radius (radial)
  int n_space = 0;            // grid points (odd in line mode)
  double t_end = 1.0;
  int n_time = 0;             // 0: derive from the CFL bound
  double cfl_safety = 1.0;    // kappa in dt <= ds^2/(hi^2 (d + kappa))
  int store_every = 0;        // 0: auto, keep <= ~1025 time slices

  double ds() const;
  // Largest stable step: min of the stated CFL bound and the exact
  // monotonicity bound of the stencil.
  double dt_max() const;
  int resolved_n_time() const;
};

// Space-time field on the stored time slices (always includes 0 and t_end).
struct RadialField {
  std::vector<double> times;
  std::vector<double> coords;
  std::vector<double> values;  // times.size() x coords.size(), row-major

  double at(std::size_t k, std::size_t j) const {
    return values[k * coords.size() + j];
  }
};

enum class HeatBoundary {
  Zero,          // far-field Dirichlet 0 (Gaussian data)
  FrozenInitial  // Dirichlet at the initial boundary value
};

// Explicit monotone stepping of u_t = g_prime(Lap u). Line mode uses the
// centered second difference; radial mode the conservative form of
// u_rr + (d-1)/r u_r with the symmetry stencil at the origin. Rejects CFL
// violations and domains too small for the far-field truncation.
RadialField heat_solve(const HeatProblem& problem);

// Same stepping with caller-supplied initial data (used for comparison
// properties, zero data, and non-Gaussian payoffs). Skips the Gaussian
// domain-size precondition; the caller owns the boundary choice.
RadialField heat_solve_with_data(const HeatProblem& problem,
                                 std::span<const double> initial,
                                 HeatBoundary boundary);

// Initial-data vector the Gaussian entry point uses (exposed for oracles).
std::vector<double> heat_initial_data(const HeatProblem& problem);

// Decay bound (1 + n t)^(-c rho) with rho = lo^2/(2 hi^2).
double decay_bound(double t, double n, double c, const VolatilityBand& band);

struct DecayBoundReport {
  double max_violation = 0.0;  // max over the grid of u - bound
  double t_argmax = 0.0;
  double s_argmax = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Checks u(t,x) <= (1+nt)^(-c rho) over every stored grid point, against the
// a-priori truncation budget 10 * ds^2 * n * hi^2 * t_end (overridable).
// Requires the dimension condition and c in [0, d].
DecayBoundReport verify_decay_bound(const RadialField& field,
                                    const HeatProblem& problem, double c,
                                    double tolerance_override = 0.0);

}  // namespace gbes
