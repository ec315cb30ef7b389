#include "gbes/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gbes/bessel.hpp"
#include "gbes/rng.hpp"

namespace gbes {

SquareMatrix SquareMatrix::identity(int d) {
  SquareMatrix m;
  m.dim = d;
  m.a.assign(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) m.a[static_cast<std::size_t>(i) * d + i] = 1.0;
  return m;
}

SquareMatrix SquareMatrix::plane_rotation(int d, double radians) {
  if (d < 2) throw std::invalid_argument("plane_rotation: d >= 2");
  SquareMatrix m = identity(d);
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  m.a[0] = c;
  m.a[1] = -s;
  m.a[static_cast<std::size_t>(d)] = s;
  m.a[static_cast<std::size_t>(d) + 1] = c;
  return m;
}

void SquareMatrix::apply(std::span<const double> x, std::span<double> out) const {
  for (int i = 0; i < dim; ++i) {
    double acc = 0.0;
    for (int j = 0; j < dim; ++j) acc += at(i, j) * x[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = acc;
  }
}

bool SquareMatrix::is_orthogonal(double tol) const {
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      double acc = 0.0;
      for (int k = 0; k < dim; ++k) acc += at(k, i) * at(k, j);
      if (std::abs(acc - (i == j ? 1.0 : 0.0)) > tol) return false;
    }
  }
  return true;
}

double fit_loglog_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("fit_loglog_slope: need >= 2 matching points");
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double lx = std::log(xs[i]);
    const double ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

// Fixed panel of bounded Lipschitz test functions of the radius.
using RadialFn = double (*)(double);
constexpr RadialFn kPanel[] = {
    [](double r) { return std::min(r, 2.0); },
    [](double r) { return std::exp(-r * r); },
    [](double r) { return 1.0 / (1.0 + r * r); },
    [](double r) { return std::min(r * r, 4.0); },
    [](double r) { return std::cos(r); },
    [](double r) { return 1.0 / (1.0 + std::exp(4.0 * (r - 1.0))); },
    [](double r) { return std::max(0.0, 1.0 - r); },
    [](double r) { return std::tanh(r); },
};
constexpr std::size_t kPanelSize = sizeof(kPanel) / sizeof(kPanel[0]);

double norm_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

SuiteReport rotation_suite(std::span<const double> x, const SquareMatrix& q,
                           const ControlFamily& family, const TimeGrid& grid,
                           const VolatilityBand& band, std::size_t n_paths,
                           std::uint64_t seed, int threads) {
  const int d = q.dim;
  if (x.size() != static_cast<std::size_t>(d))
    throw std::invalid_argument("rotation_suite: x/Q dimension mismatch");
  if (!q.is_orthogonal())
    throw std::invalid_argument("rotation_suite: Q is not orthogonal");

  const std::size_t taps[3] = {grid.n_steps() / 3, 2 * grid.n_steps() / 3,
                               grid.n_steps()};

  // Arm A evaluates the panel on |Q B^x|, arm B on |B^(Qx)| directly; the
  // same seed drives both arms.
  std::vector<Payoff> arm_a, arm_b;
  for (std::size_t f = 0; f < kPanelSize; ++f) {
    for (std::size_t tap : taps) {
      const RadialFn fn = kPanel[f];
      SquareMatrix qc = q;
      arm_a.push_back(Payoff::pathwise(
          "panel" + std::to_string(f) + "@k" + std::to_string(tap),
          [fn, tap, qc](const GPath& path) {
            std::vector<double> rotated(static_cast<std::size_t>(path.d));
            qc.apply(path.at(tap), rotated);
            return fn(norm_of(rotated));
          }));
      arm_b.push_back(Payoff::pathwise(
          arm_a.back().name,
          [fn, tap](const GPath& path) { return fn(norm_of(path.at(tap))); }));
    }
  }

  std::vector<double> qx(static_cast<std::size_t>(d));
  q.apply(x, qx);

  const auto rep_a = estimate_upper_multi(arm_a, family, grid, d, x, band,
                                          n_paths, seed, threads);
  const auto rep_b = estimate_upper_multi(arm_b, family, grid, d, qx, band,
                                          n_paths, seed, threads);

  SuiteReport suite;
  suite.suite = "rotation";
  for (std::size_t i = 0; i < rep_a.size(); ++i) {
    CheckRow row;
    row.name = arm_a[i].name;
    row.statistic = std::abs(rep_a[i].value - rep_b[i].value);
    row.threshold =
        3.0 * std::hypot(rep_a[i].stderr_value, rep_b[i].stderr_value) + 1e-12;
    row.pass = row.statistic <= row.threshold;
    suite.checks.push_back(row);
  }
  suite.finish();
  return suite;
}

SuiteReport equivalence_suite(const VolatilityBand& band, int d,
                              const TimeGrid& grid, std::size_t n_paths,
                              std::uint64_t seed, int threads) {
  if (d < 2) throw std::invalid_argument("equivalence_suite: d >= 2");
  constexpr std::size_t kLevels = 5;
  if (grid.n_steps() % (1u << (kLevels - 1)) != 0)
    throw std::invalid_argument(
        "equivalence_suite: n_steps must be divisible by 16");

  const double t_end = grid.t_end();
  const ControlPolicy policy = ControlPolicy::bang_bang(
      t_end / 3.0, 2.0 * t_end / 3.0, band.hi2(), band.lo2(), band.hi2());
  const std::vector<double> start(static_cast<std::size_t>(d), 0.0);

  // Per level: mean over paths of the worst diagonal-QV mismatch and the
  // worst cross-variation; coarse levels reuse the fine driver.
  std::vector<double> diag_stat(kLevels, 0.0), cross_stat(kLevels, 0.0),
      dts(kLevels);
  std::vector<std::vector<double>> diag_acc(kLevels), cross_acc(kLevels);
  for (auto& v : diag_acc) v.assign(n_paths, 0.0);
  for (auto& v : cross_acc) v.assign(n_paths, 0.0);

  parallel_for(n_paths, threads, [&](std::size_t p) {
    const GPath fine = simulate_gpath(grid, d, start, policy, band, seed, p);
    for (std::size_t lvl = 0; lvl < kLevels; ++lvl) {
      const std::size_t factor = 1u << (kLevels - 1 - lvl);
      const GPath path = factor == 1 ? fine : coarsen(fine, factor);
      const std::size_t n = path.grid.n_steps();
      const std::size_t dim = static_cast<std::size_t>(d);
      std::vector<double> rqv(dim, 0.0);
      std::vector<double> cross(dim * dim, 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        const auto a = path.at(k);
        const auto b = path.at(k + 1);
        for (std::size_t i = 0; i < dim; ++i) {
          const double di = b[i] - a[i];
          rqv[i] += di * di;
          for (std::size_t j = i + 1; j < dim; ++j)
            cross[i * dim + j] += di * (b[j] - a[j]);
        }
      }
      double worst_diag = 0.0, worst_cross = 0.0;
      for (std::size_t i = 1; i < dim; ++i)
        worst_diag = std::max(worst_diag, std::abs(rqv[i] - rqv[0]));
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = i + 1; j < dim; ++j)
          worst_cross = std::max(worst_cross, std::abs(cross[i * dim + j]));
      diag_acc[lvl][p] = worst_diag;
      cross_acc[lvl][p] = worst_cross;
    }
  });

  for (std::size_t lvl = 0; lvl < kLevels; ++lvl) {
    const std::size_t factor = 1u << (kLevels - 1 - lvl);
    dts[lvl] = grid.dt() * static_cast<double>(factor);
    for (std::size_t p = 0; p < n_paths; ++p) {
      diag_stat[lvl] += diag_acc[lvl][p];
      cross_stat[lvl] += cross_acc[lvl][p];
    }
    diag_stat[lvl] /= static_cast<double>(n_paths);
    cross_stat[lvl] /= static_cast<double>(n_paths);
  }

  SuiteReport suite;
  suite.suite = "equivalence";
  const double diag_order = fit_loglog_slope(dts, diag_stat);
  suite.checks.push_back(
      {"diag_qv_mismatch_order", diag_order, 0.4, diag_order >= 0.4});
  const double cross_order = fit_loglog_slope(dts, cross_stat);
  suite.checks.push_back(
      {"cross_variation_order", cross_order, 0.4, cross_order >= 0.4});

  // Constant controls: realized QV / t recovers nu per component.
  for (double nu : {band.lo2(), 0.5 * (band.lo2() + band.hi2()), band.hi2()}) {
    const ControlPolicy cpol = ControlPolicy::constant(nu);
    std::vector<double> sums(static_cast<std::size_t>(d), 0.0),
        sumsq(static_cast<std::size_t>(d), 0.0);
    GPath scratch;
    for (std::size_t p = 0; p < n_paths; ++p) {
      simulate_gpath_into(scratch, grid, d, start, cpol, band,
                          derive_seed(seed, "equivalence-const"), p);
      for (int i = 0; i < d; ++i) {
        double rqv = 0.0;
        for (std::size_t k = 0; k < grid.n_steps(); ++k) {
          const double di = scratch.at(k + 1)[static_cast<std::size_t>(i)] -
                            scratch.at(k)[static_cast<std::size_t>(i)];
          rqv += di * di;
        }
        const double v = rqv / t_end;
        sums[static_cast<std::size_t>(i)] += v;
        sumsq[static_cast<std::size_t>(i)] += v * v;
      }
    }
    double worst_z = 0.0;
    for (int i = 0; i < d; ++i) {
      const double np = static_cast<double>(n_paths);
      const double mean = sums[static_cast<std::size_t>(i)] / np;
      const double var = std::max(
          0.0,
          (sumsq[static_cast<std::size_t>(i)] - sums[static_cast<std::size_t>(i)] * mean) /
              (np - 1.0));
      const double se = std::sqrt(var / np);
      worst_z = std::max(worst_z, std::abs(mean - nu) / std::max(se, 1e-300));
    }
    CheckRow row;
    row.name = "realized_qv_recovers_nu=" + std::to_string(nu);
    row.statistic = worst_z;
    row.threshold = 3.0;
    row.pass = row.statistic <= row.threshold;
    suite.checks.push_back(row);
  }
  suite.finish();
  return suite;
}

SuiteReport beta_suite(std::span<const double> x, const ControlFamily& family,
                       const TimeGrid& grid, const VolatilityBand& band,
                       std::size_t n_paths, std::uint64_t seed, int threads) {
  if (norm_of(x) <= 0.0)
    throw std::invalid_argument("beta_suite: |x| > 0 required");
  if (grid.n_steps() % 32 != 0 || grid.n_steps() < 64)
    throw std::invalid_argument(
        "beta_suite: n_steps must be a multiple of 32 and >= 64");

  const int d = static_cast<int>(x.size());
  const std::size_t n_pol = family.policies.size();
  const double T = grid.t_end();
  const std::size_t k0 = grid.n_steps() / 2;
  const std::size_t eps_steps[4] = {grid.n_steps() / 32, grid.n_steps() / 16,
                                    grid.n_steps() / 8, grid.n_steps() / 4};

  struct Moments {
    double mean_beta = 0.0, se_beta = 0.0;
    double mean_b2 = 0.0, se_b2 = 0.0;
    double inc3[4] = {0.0, 0.0, 0.0, 0.0};
  };
  std::vector<Moments> rows(n_pol);

  parallel_for(n_pol, threads, [&](std::size_t ip) {
    GPath scratch;
    double s1 = 0.0, s1q = 0.0, s2 = 0.0, s2q = 0.0, inc[4] = {0, 0, 0, 0};
    for (std::size_t p = 0; p < n_paths; ++p) {
      simulate_gpath_into(scratch, grid, d, x, family.policies[ip], band, seed, p);
      const BesselPath bp = extract_beta(scratch);
      const double bt = bp.beta.back();
      s1 += bt;
      s1q += bt * bt;
      s2 += bt * bt;
      s2q += bt * bt * bt * bt;
      for (int j = 0; j < 4; ++j) {
        const double db = bp.beta[k0 + eps_steps[j]] - bp.beta[k0];
        inc[j] += std::abs(db * db * db);
      }
    }
    const double np = static_cast<double>(n_paths);
    Moments& m = rows[ip];
    m.mean_beta = s1 / np;
    m.se_beta = std::sqrt(std::max(0.0, (s1q - s1 * m.mean_beta) / (np - 1.0)) / np);
    m.mean_b2 = s2 / np;
    m.se_b2 = std::sqrt(std::max(0.0, (s2q - s2 * m.mean_b2) / (np - 1.0)) / np);
    for (int j = 0; j < 4; ++j) m.inc3[j] = inc[j] / np;
  });

  SuiteReport suite;
  suite.suite = "beta";

  // (a) per-policy symmetric-martingale surrogate: mean beta_T ~ 0.
  double worst_z = 0.0;
  for (const Moments& m : rows)
    worst_z = std::max(worst_z,
                       std::abs(m.mean_beta) / std::max(m.se_beta, 1e-300));
  suite.checks.push_back(
      {"beta_mean_zero_worst_z", worst_z, 3.0, worst_z <= 3.0});

  // (b) upper estimate of beta_T^2 inside the variance band, top attained
  // by the widest constant control.
  std::size_t best = 0;
  for (std::size_t ip = 1; ip < n_pol; ++ip)
    if (rows[ip].mean_b2 > rows[best].mean_b2) best = ip;
  const double upper = rows[best].mean_b2;
  const double se_up = rows[best].se_b2;
  suite.checks.push_back({"beta_sq_upper<=hi2*T", upper,
                          band.hi2() * T + 3.0 * se_up,
                          upper <= band.hi2() * T + 3.0 * se_up});
  suite.checks.push_back({"beta_sq_upper>=lo2*T", upper,
                          band.lo2() * T - 3.0 * se_up,
                          upper >= band.lo2() * T - 3.0 * se_up});
  // The family is expected to contain the constant hi^2 policy; its mean
  // saturates the band top.
  CheckRow sat;
  sat.name = "beta_sq_top_attained_by_const_hi";
  sat.statistic = std::abs(upper - band.hi2() * T);
  sat.threshold = 3.0 * se_up;
  sat.pass = sat.statistic <= sat.threshold;
  suite.checks.push_back(sat);

  // (c) third-moment increment scaling in eps.
  double eps_vals[4], sup3[4];
  for (int j = 0; j < 4; ++j) {
    eps_vals[j] = grid.dt() * static_cast<double>(eps_steps[j]);
    double m = 0.0;
    for (const Moments& row : rows) m = std::max(m, row.inc3[j]);
    sup3[j] = m;
  }
  const double slope = fit_loglog_slope(eps_vals, sup3);
  suite.checks.push_back(
      {"beta_increment_third_moment_exponent", slope, 1.4, slope >= 1.4});

  suite.finish();
  return suite;
}

}  // namespace gbes
