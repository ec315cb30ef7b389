#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gbes {

// Volatility band (sigma_lo, sigma_hi), both per sqrt(time). Defines the
// sublinear generator g_prime and the control ranges of every module.
class VolatilityBand {
 public:
  VolatilityBand(double sigma_lo, double sigma_hi);

  double lo() const { return sigma_lo_; }
  double hi() const { return sigma_hi_; }
  double lo2() const { return sigma_lo_ * sigma_lo_; }
  double hi2() const { return sigma_hi_ * sigma_hi_; }

  // rho = sigma_lo^2 / (2 sigma_hi^2), always in (0, 1/2].
  double rho() const { return lo2() / (2.0 * hi2()); }

  bool classical() const { return sigma_lo_ == sigma_hi_; }

 private:
  double sigma_lo_;
  double sigma_hi_;
};

// One-dimensional sublinear generator of the isotropic class:
//   g_prime(x) = (hi^2 * x_plus - lo^2 * x_minus) / 2.
// Positively homogeneous, monotone, subadditive.
double g_prime(double x, const VolatilityBand& band);

// Dense symmetric matrix, row-major. Small dimensions only.
struct SymMatrix {
  int dim = 0;
  std::vector<double> a;  // dim*dim, row-major

  static SymMatrix identity(int d);
  static SymMatrix diag(std::span<const double> entries);
  static SymMatrix scaled_identity(int d, double nu);

  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * dim + j]; }
  double at(int i, int j) const {
    return a[static_cast<std::size_t>(i) * dim + j];
  }
  double trace() const;
  bool is_symmetric(double tol = 1e-12) const;
  bool is_psd(double tol = 1e-10) const;
};

// Finite set of symmetric nonnegative matrices (variance per unit time).
struct GammaSet {
  std::vector<SymMatrix> matrices;

  // {nu * I_d : nu in {lo^2, hi^2}} — the endpoint reduction of the
  // isotropic interval family.
  static GammaSet isotropic_endpoints(int d, const VolatilityBand& band);
};

// (1/2) max over the set of tr(gamma * A). Throws on empty set or
// dimension mismatch. For isotropic endpoint sets this equals
// g_prime(tr A, band): the sup of a linear function of nu over an interval
// sits at an endpoint.
double g_sup(const SymMatrix& a, const GammaSet& gamma);

struct DimensionCheck {
  bool pass = false;
  int threshold = 0;
};

// Dimension condition d >= floor(hi^2/lo^2) + 1, with the optional
// uniqueness strengthening d >= (floor(hi^2/lo^2) + 1) v 3.
// Rejects d < 2.
DimensionCheck dimension_check(int d, const VolatilityBand& band,
                               bool require_uniqueness = false);

// Uniform grid on [0, t_end] with n_steps steps.
class TimeGrid {
 public:
  TimeGrid(double t_end, std::size_t n_steps);

  double t_end() const { return t_end_; }
  std::size_t n_steps() const { return n_steps_; }
  double dt() const { return t_end_ / static_cast<double>(n_steps_); }
  double time(std::size_t k) const {
    return t_end_ * (static_cast<double>(k) / static_cast<double>(n_steps_));
  }

 private:
  double t_end_;
  std::size_t n_steps_;
};

// A volatility selector: emits the instantaneous variance rate nu_t in
// [lo^2, hi^2]. One policy corresponds to one measure in the representing
// family. Feedback rules may read (t, current state) only, so evaluating
// them at the left endpoint of each step keeps them adapted.
class ControlPolicy {
 public:
  enum class Kind { Constant, Piecewise, BangBang, Feedback };

  using FeedbackRule = std::function<double(double, std::span<const double>)>;

  static ControlPolicy constant(double nu);
  // Left-closed segments: value(t) = values[i] for t in [breaks[i], breaks[i+1]).
  static ControlPolicy piecewise(std::vector<double> breaks,
                                 std::vector<double> values);
  // Two-switch policy: nu_first on [0,t1), nu_mid on [t1,t2), nu_last after.
  static ControlPolicy bang_bang(double t1, double t2, double nu_first,
                                 double nu_mid, double nu_last);
  static ControlPolicy feedback(std::string label, FeedbackRule rule);

  double value(double t, std::span<const double> state) const;
  Kind kind() const { return kind_; }
  const std::string& describe() const { return label_; }

 private:
  ControlPolicy() = default;

  Kind kind_ = Kind::Constant;
  std::string label_;
  std::vector<double> breaks_;
  std::vector<double> values_;
  FeedbackRule rule_;
};

// Sampled d-dimensional controlled path with its shared per-component
// quadratic variation (identical across components in the isotropic class).
struct GPath {
  TimeGrid grid{1.0, 1};
  int d = 0;
  std::vector<double> start;
  std::vector<double> values;         // (n_steps+1) x d, row-major
  std::vector<double> qv;             // n_steps+1, qv[0] = 0
  std::vector<double> control_trace;  // n_steps, nu per step

  std::span<const double> at(std::size_t k) const {
    return {values.data() + k * static_cast<std::size_t>(d),
            static_cast<std::size_t>(d)};
  }
};

struct SimOptions {
  // Test hook: forces every normal draw to 0 and freezes qv accumulation,
  // giving the degenerate path whose realized variation vanishes.
  bool frozen = false;
};

// Euler simulation of a controlled path: increments theta_k*sqrt(dt)*Z_k
// with theta_k^2 = nu_k read from the policy at the left endpoint, qv
// accumulating nu_k*dt. Deterministic given (seed, path_index, grid,
// policy). A policy emitting nu outside [lo^2, hi^2] is a hard fault.
GPath simulate_gpath(const TimeGrid& grid, int d, std::span<const double> start,
                     const ControlPolicy& policy, const VolatilityBand& band,
                     std::uint64_t seed, std::uint64_t path_index = 0,
                     const SimOptions& opts = {});

// In-place variant for hot loops (reuses the path's buffers).
void simulate_gpath_into(GPath& out, const TimeGrid& grid, int d,
                         std::span<const double> start,
                         const ControlPolicy& policy,
                         const VolatilityBand& band, std::uint64_t seed,
                         std::uint64_t path_index = 0,
                         const SimOptions& opts = {});

// Restriction of a path to every `factor`-th grid time (factor must divide
// n_steps). Coarse increments are sums of fine increments, which is the
// nesting the refinement studies rely on.
GPath coarsen(const GPath& path, std::size_t factor);

// Deterministic static-partition parallel map; results are written to
// disjoint slots so the thread count never changes them.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace gbes
