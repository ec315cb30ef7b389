#include "gbes/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "gbes/rng.hpp"

namespace gbes {

VolatilityBand::VolatilityBand(double sigma_lo, double sigma_hi)
    : sigma_lo_(sigma_lo), sigma_hi_(sigma_hi) {
  if (!(sigma_lo > 0.0) || !(sigma_lo <= sigma_hi) ||
      !std::isfinite(sigma_hi)) {
    throw std::invalid_argument(
        "VolatilityBand requires 0 < sigma_lo <= sigma_hi < inf");
  }
}

double g_prime(double x, const VolatilityBand& band) {
  return x >= 0.0 ? 0.5 * band.hi2() * x : 0.5 * band.lo2() * x;
}

SymMatrix SymMatrix::identity(int d) {
  SymMatrix m;
  m.dim = d;
  m.a.assign(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) m.at(i, i) = 1.0;
  return m;
}

SymMatrix SymMatrix::diag(std::span<const double> entries) {
  SymMatrix m;
  m.dim = static_cast<int>(entries.size());
  m.a.assign(entries.size() * entries.size(), 0.0);
  for (int i = 0; i < m.dim; ++i) m.at(i, i) = entries[static_cast<std::size_t>(i)];
  return m;
}

SymMatrix SymMatrix::scaled_identity(int d, double nu) {
  SymMatrix m = identity(d);
  for (int i = 0; i < d; ++i) m.at(i, i) = nu;
  return m;
}

double SymMatrix::trace() const {
  double tr = 0.0;
  for (int i = 0; i < dim; ++i) tr += at(i, i);
  return tr;
}

bool SymMatrix::is_symmetric(double tol) const {
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j)
      if (std::abs(at(i, j) - at(j, i)) > tol) return false;
  return true;
}

bool SymMatrix::is_psd(double tol) const {
  // Cholesky with a tol*scale shift; enough for the small matrices used here.
  const double scale = std::max(1.0, std::abs(trace()));
  SymMatrix c = *this;
  for (int i = 0; i < dim; ++i) c.at(i, i) += tol * scale;
  for (int j = 0; j < dim; ++j) {
    double diag = c.at(j, j);
    for (int k = 0; k < j; ++k) diag -= c.at(j, k) * c.at(j, k);
    if (diag < 0.0) return false;
    const double root = std::sqrt(diag);
    c.at(j, j) = root;
    for (int i = j + 1; i < dim; ++i) {
      double v = c.at(i, j);
      for (int k = 0; k < j; ++k) v -= c.at(i, k) * c.at(j, k);
      c.at(i, j) = root > 0.0 ? v / root : 0.0;
    }
  }
  return true;
}

GammaSet GammaSet::isotropic_endpoints(int d, const VolatilityBand& band) {
  GammaSet g;
  g.matrices.push_back(SymMatrix::scaled_identity(d, band.lo2()));
  if (band.hi2() != band.lo2())
    g.matrices.push_back(SymMatrix::scaled_identity(d, band.hi2()));
  return g;
}

double g_sup(const SymMatrix& a, const GammaSet& gamma) {
  if (gamma.matrices.empty())
    throw std::invalid_argument("g_sup: empty gamma set");
  if (!a.is_symmetric()) throw std::invalid_argument("g_sup: A not symmetric");
  double best = -std::numeric_limits<double>::infinity();
  for (const SymMatrix& g : gamma.matrices) {
    if (g.dim != a.dim)
      throw std::invalid_argument("g_sup: dimension mismatch");
    if (!g.is_symmetric() || !g.is_psd())
      throw std::invalid_argument(
          "g_sup: gamma elements must be symmetric nonnegative");
    double tr = 0.0;
    for (int i = 0; i < a.dim; ++i)
      for (int j = 0; j < a.dim; ++j) tr += g.at(i, j) * a.at(j, i);
    best = std::max(best, 0.5 * tr);
  }
  return best;
}

DimensionCheck dimension_check(int d, const VolatilityBand& band,
                               bool require_uniqueness) {
  if (d < 2)
    throw std::invalid_argument("dimension_check: d >= 2 required");
  const double ratio = band.hi2() / band.lo2();
  // Tiny guard so exact ratios (4.0 from band (1,2)) survive rounding.
  int threshold = static_cast<int>(std::floor(ratio + 1e-12)) + 1;
  if (require_uniqueness) threshold = std::max(threshold, 3);
  return {d >= threshold, threshold};
}

TimeGrid::TimeGrid(double t_end, std::size_t n_steps)
    : t_end_(t_end), n_steps_(n_steps) {
  if (!(t_end > 0.0) || n_steps < 1)
    throw std::invalid_argument("TimeGrid requires t_end > 0 and n_steps >= 1");
}

ControlPolicy ControlPolicy::constant(double nu) {
  ControlPolicy p;
  p.kind_ = Kind::Constant;
  p.values_ = {nu};
  p.label_ = "constant(nu=" + std::to_string(nu) + ")";
  return p;
}

ControlPolicy ControlPolicy::piecewise(std::vector<double> breaks,
                                       std::vector<double> values) {
  if (breaks.size() != values.size() || breaks.empty() || breaks.front() != 0.0)
    throw std::invalid_argument(
        "piecewise policy: breaks must start at 0 and pair with values");
  if (!std::is_sorted(breaks.begin(), breaks.end()))
    throw std::invalid_argument("piecewise policy: breaks must be increasing");
  ControlPolicy p;
  p.kind_ = Kind::Piecewise;
  p.label_ = "piecewise(" + std::to_string(breaks.size()) + " segments)";
  p.breaks_ = std::move(breaks);
  p.values_ = std::move(values);
  return p;
}

ControlPolicy ControlPolicy::bang_bang(double t1, double t2, double nu_first,
                                       double nu_mid, double nu_last) {
  if (!(0.0 <= t1 && t1 <= t2))
    throw std::invalid_argument("bang_bang policy: need 0 <= t1 <= t2");
  ControlPolicy p;
  p.kind_ = Kind::BangBang;
  p.breaks_ = {0.0, t1, t2};
  p.values_ = {nu_first, nu_mid, nu_last};
  p.label_ = "bang_bang(t1=" + std::to_string(t1) + ",t2=" + std::to_string(t2) +
             ",nu=" + std::to_string(nu_first) + "/" + std::to_string(nu_mid) +
             "/" + std::to_string(nu_last) + ")";
  return p;
}

ControlPolicy ControlPolicy::feedback(std::string label, FeedbackRule rule) {
  ControlPolicy p;
  p.kind_ = Kind::Feedback;
  p.label_ = "feedback(" + std::move(label) + ")";
  p.rule_ = std::move(rule);
  return p;
}

double ControlPolicy::value(double t, std::span<const double> state) const {
  switch (kind_) {
    case Kind::Constant:
      return values_[0];
    case Kind::Piecewise:
    case Kind::BangBang: {
      // Last segment whose start does not exceed t.
      std::size_t i = breaks_.size() - 1;
      while (i > 0 && breaks_[i] > t) --i;
      return values_[i];
    }
    case Kind::Feedback:
      return rule_(t, state);
  }
  return values_[0];
}

void simulate_gpath_into(GPath& out, const TimeGrid& grid, int d,
                         std::span<const double> start,
                         const ControlPolicy& policy,
                         const VolatilityBand& band, std::uint64_t seed,
                         std::uint64_t path_index, const SimOptions& opts) {
  if (d < 1) throw std::invalid_argument("simulate_gpath: d >= 1 required");
  if (start.size() != static_cast<std::size_t>(d))
    throw std::invalid_argument("simulate_gpath: start has wrong dimension");

  const std::size_t n = grid.n_steps();
  const std::size_t dim = static_cast<std::size_t>(d);
  out.grid = grid;
  out.d = d;
  out.start.assign(start.begin(), start.end());
  out.values.resize((n + 1) * dim);
  out.qv.resize(n + 1);
  out.control_trace.resize(n);

  std::copy(start.begin(), start.end(), out.values.begin());
  out.qv[0] = 0.0;

  Rng rng(seed, path_index);
  const double dt = grid.dt();
  const double sqrt_dt = std::sqrt(dt);
  // Validation slack: policies built from band endpoints may differ by ulps.
  const double slack = 1e-12 * band.hi2();

  for (std::size_t k = 0; k < n; ++k) {
    const double* xk = out.values.data() + k * dim;
    const double nu = policy.value(grid.time(k), {xk, dim});
    if (!(nu >= band.lo2() - slack) || !(nu <= band.hi2() + slack))
      throw std::runtime_error(
          "simulate_gpath: policy emitted nu outside [lo^2, hi^2]");
    const double theta = std::sqrt(nu);
    double* xk1 = out.values.data() + (k + 1) * dim;
    for (std::size_t i = 0; i < dim; ++i) {
      const double z = opts.frozen ? 0.0 : rng.normal();
      xk1[i] = xk[i] + theta * sqrt_dt * z;
    }
    out.qv[k + 1] = out.qv[k] + (opts.frozen ? 0.0 : nu * dt);
    out.control_trace[k] = opts.frozen ? 0.0 : nu;
  }
}

GPath simulate_gpath(const TimeGrid& grid, int d, std::span<const double> start,
                     const ControlPolicy& policy, const VolatilityBand& band,
                     std::uint64_t seed, std::uint64_t path_index,
                     const SimOptions& opts) {
  GPath out;
  simulate_gpath_into(out, grid, d, start, policy, band, seed, path_index, opts);
  return out;
}

GPath coarsen(const GPath& path, std::size_t factor) {
  if (factor == 0 || path.grid.n_steps() % factor != 0)
    throw std::invalid_argument("coarsen: factor must divide n_steps");
  const std::size_t n = path.grid.n_steps() / factor;
  const std::size_t dim = static_cast<std::size_t>(path.d);
  GPath out;
  out.grid = TimeGrid(path.grid.t_end(), n);
  out.d = path.d;
  out.start = path.start;
  out.values.resize((n + 1) * dim);
  out.qv.resize(n + 1);
  out.control_trace.resize(n);
  const double dt = out.grid.dt();
  for (std::size_t k = 0; k <= n; ++k) {
    const std::size_t src = k * factor;
    std::copy_n(path.values.begin() + src * dim, dim, out.values.begin() + k * dim);
    out.qv[k] = path.qv[src];
    if (k < n) out.control_trace[k] = (path.qv[(k + 1) * factor] - path.qv[src]) / dt;
  }
  return out;
}

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads <= 0)
    threads = static_cast<int>(std::thread::hardware_concurrency());
  const std::size_t workers =
      std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(count, 1));
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace gbes
