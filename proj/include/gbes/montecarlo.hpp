#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gbes/core.hpp"

namespace gbes {

// A payoff is a measurable function of the discrete path; terminal payoffs
// read the path value at t_end only. The optional convexity hint feeds the
// default family's feedback policies (positive hint -> run at hi^2).
struct Payoff {
  enum class Kind { Terminal, Pathwise };

  Kind kind = Kind::Terminal;
  std::string name;
  bool bounded = true;
  std::function<double(const GPath&)> eval;
  std::function<double(double, std::span<const double>)> convexity_hint;

  static Payoff terminal(std::string name,
                         std::function<double(std::span<const double>)> f,
                         bool bounded = true);
  static Payoff pathwise(std::string name,
                         std::function<double(const GPath&)> f,
                         bool bounded = true);
  Payoff negated() const;
  Payoff scaled(double lambda) const;
  static Payoff sum(const Payoff& a, const Payoff& b);
};

// Finite inner approximation of the representing family: one policy per
// candidate measure.
struct ControlFamily {
  std::vector<ControlPolicy> policies;
  std::string spec_desc;
};

// 9 equispaced constants, 32 random two-switch bang-bang policies, plus the
// two hint-driven feedback policies when the payoff supplies a hint.
ControlFamily default_family(const VolatilityBand& band, double t_end,
                             std::uint64_t seed,
                             const Payoff* payoff = nullptr);
// Reduced variant for heavier experiments: n_constants equispaced constants
// and n_bang_bang random two-switch policies.
ControlFamily make_family(const VolatilityBand& band, double t_end,
                          std::uint64_t seed, int n_constants, int n_bang_bang,
                          const Payoff* payoff = nullptr);

struct EstimateReport {
  double value = 0.0;
  std::size_t argmax_index = 0;
  std::string argmax_policy;
  double stderr_value = 0.0;  // argmax policy's standard error
  std::size_t n_paths = 0;
  std::vector<double> per_policy_means;
  std::vector<double> per_policy_stderr;
  bool near_tie = false;      // top two policies within one joint stderr
  std::string warning;        // e.g. unbounded payoff
};

// Upper expectation by policy maximization with common random numbers: for
// every policy the same normal draws drive n_paths simulations; the report
// carries the max of the per-policy sample means. With a finite family this
// is a statistically consistent lower bound of the true supremum.
EstimateReport estimate_upper(const Payoff& payoff, const ControlFamily& family,
                              const TimeGrid& grid, int d,
                              std::span<const double> start,
                              const VolatilityBand& band, std::size_t n_paths,
                              std::uint64_t seed, int threads = 1);

// Lower expectation: -estimate_upper(-payoff).
EstimateReport estimate_lower(const Payoff& payoff, const ControlFamily& family,
                              const TimeGrid& grid, int d,
                              std::span<const double> start,
                              const VolatilityBand& band, std::size_t n_paths,
                              std::uint64_t seed, int threads = 1);

// Panel variant: every payoff is evaluated on the same simulated paths, so a
// k-payoff panel costs one sweep instead of k.
std::vector<EstimateReport> estimate_upper_multi(
    std::span<const Payoff> payoffs, const ControlFamily& family,
    const TimeGrid& grid, int d, std::span<const double> start,
    const VolatilityBand& band, std::size_t n_paths, std::uint64_t seed,
    int threads = 1);

struct CapacityReport {
  EstimateReport indicator;
  EstimateReport smoothed;  // Gaussian smoothing exp(-|x-a|^2/(2 hi^2 eps^2))
  double c = 0.0;
  double bound = 0.0;       // exp(1/(2 hi^2)) eps^(2 c rho) / t^(c rho)
};

// Capacity of the ball event {|B_t - a| < eps} (indicator payoff), reported
// together with its Gaussian smoothing and the analytic decay bound.
CapacityReport capacity_ball(double t, std::span<const double> a, double eps,
                             const ControlFamily& family, const TimeGrid& grid,
                             int d, std::span<const double> start,
                             const VolatilityBand& band, std::size_t n_paths,
                             std::uint64_t seed, double c, int threads = 1);

struct OccupationReport {
  EstimateReport estimate;
  double alpha = 0.0;
  double bound = 0.0;  // (1/(1-alpha)) exp(1/(2 hi^2)) eps^(2 alpha - 1) T^(1-alpha)
};

// Occupation-time functional (1/eps) * sum_k 1{|B_(t_k) - a| < eps} dt with
// its analytic bound; alpha must lie in (1/2, 1), which encodes the
// dimension condition d * rho > 1/2.
OccupationReport occupation_integral(double T, std::span<const double> a,
                                     double eps, const ControlFamily& family,
                                     const TimeGrid& grid, int d,
                                     std::span<const double> start,
                                     const VolatilityBand& band,
                                     std::size_t n_paths, std::uint64_t seed,
                                     double alpha, int threads = 1);

double capacity_ball_bound(double t, double eps, double c,
                           const VolatilityBand& band);
double occupation_bound(double T, double eps, double alpha,
                        const VolatilityBand& band);

}  // namespace gbes
