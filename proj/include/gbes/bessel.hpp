#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gbes/core.hpp"
#include "gbes/montecarlo.hpp"

namespace gbes {

// Radial part R = |B^x| of a controlled path, together with the extracted
// one-dimensional driver beta and the shared quadratic variation.
struct BesselPath {
  TimeGrid grid{1.0, 1};
  double r0 = 0.0;
  std::vector<double> R;
  std::vector<double> beta;  // empty until extract_beta
  std::vector<double> qv;    // copied from the source path
};

// R_t = |path value at t|; beta left empty.
BesselPath bessel_direct(const GPath& gpath);

// Fills beta via the left-point sum
//   beta_{k+1} = beta_k + sum_i (x_i(t_k)/R_k) dB^(i)_k,
// with the integrand taken as 0 where R_k = 0.
BesselPath extract_beta(const GPath& gpath);

struct SdeResidualReport {
  double sup_residual = 0.0;
  std::size_t argmax_step = 0;
};

// Residual of the radial identity R_t = r0 + beta_t + sum (d-1)/(2 R) dqv,
// with the drift denominator floored at max(R, dt^(1/4)) so coarse paths
// that graze the origin keep a finite drift sum; the floor vanishes under
// refinement.
SdeResidualReport sde_residual(const BesselPath& bp, int d);

// Truncated singular SDE X_{k+1} = X_k + dbeta_k + m * min(1/|X_k|, n) * dqv_k.
struct TruncatedSdeConfig {
  double r = 1.0;             // start, > 0
  double m = 1.0;             // drift weight, > 1/2
  int n = 1;                  // truncation level, >= 1
  VolatilityBand band{1.0, 1.0};
  TimeGrid grid{1.0, 1};

  void validate() const;
};

struct TruncatedPath {
  TimeGrid grid{1.0, 1};
  std::vector<double> x;
  std::vector<double> qv;
};

double f_truncated(double x, int n);  // min(1/|x|, n)

TruncatedPath euler_truncated(const TruncatedSdeConfig& cfg,
                              const ControlPolicy& policy, std::uint64_t seed,
                              std::uint64_t path_index = 0,
                              const SimOptions& opts = {});

// First grid time with x <= level, if any.
std::optional<double> first_hit(const TruncatedPath& path, double level);

// C^2 smoothing of sqrt: quadratic below eps, sqrt above, matching value and
// two derivatives at eps.
struct SmoothSqrt {
  double eps;

  explicit SmoothSqrt(double eps);
  double value(double y) const;
  double d1(double y) const;
  double d2(double y) const;
};

// order 0/1/2 selects the value or a derivative.
double smooth_sqrt(double eps, double y, int order);

struct ScalePolicyRow {
  std::string policy;
  double mean_h = 0.0;     // sample mean of h(X_{T ^ tau_n}), h(x) = x^(1-2m)
  double stderr_h = 0.0;
  double target = 0.0;     // r^(1-2m)
  bool mean_pass = false;
  double hit_freq = 0.0;
  double hit_stderr = 0.0;
  double derived_bound = 0.0;  // (n r)^(1-2m)
  double printed_bound = 0.0;  // (r/n)^(2m-1), reported side by side
  bool hit_pass = false;
};

struct ScaleCheckReport {
  std::vector<ScalePolicyRow> rows;
  bool pass = false;
};

// Per-policy martingale identity for the scale function h(x) = x^(1-2m) of
// the stopped truncated SDE, plus the hit-frequency bound. The horizon T
// reuses the step size of cfg.grid. A nonpositive stopped value is a hard
// fault (dt too coarse for the truncation level).
ScaleCheckReport scale_function_check(const TruncatedSdeConfig& cfg,
                                      const ControlFamily& family,
                                      std::size_t n_paths, double T,
                                      std::uint64_t seed, int threads = 1);

double second_moment_bound(double r, double m, double sigma_hi, double T);
double fourth_moment_bound(double r, double m, double sigma_hi, double T);

struct MomentBoundReport {
  double est2 = 0.0, se2 = 0.0, bound2 = 0.0;
  double est4 = 0.0, se4 = 0.0, bound4 = 0.0;
  bool pass = false;
};

// Upper-expectation estimates of X_T^2 and X_T^4 against the closed-form
// bounds, within 3 standard errors.
MomentBoundReport moment_bounds_check(const TruncatedSdeConfig& cfg,
                                      const ControlFamily& family,
                                      std::size_t n_paths, std::uint64_t seed,
                                      int threads = 1);

struct ItoDecomposition {
  double i_total = 0.0;          // sum over coordinates of the I terms at T
  double j_term = 0.0;           // drift on {Y >= eps_n}
  double k_term = 0.0;           // boundary layer on {Y < eps_n}
  double identity_residual = 0.0;  // sup_t of the discrete Ito defect
};

// Discrete transcription of the smoothed-sqrt Ito expansion of Y = R^2 with
// eps_n = 2^(-n): stochastic term I, drift term J, boundary-layer term K,
// and the sup-norm defect of the identity
//   phi(Y_t) = phi(r^2) + sum_i I^(i) + J + K.
ItoDecomposition ito_decomposition(const GPath& gpath, int eps_index);

}  // namespace gbes
