#include "gbes/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gbes/rng.hpp"

namespace gbes {

namespace {

double norm_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

BesselPath bessel_direct(const GPath& gpath) {
  BesselPath bp;
  bp.grid = gpath.grid;
  bp.qv = gpath.qv;
  const std::size_t n = gpath.grid.n_steps();
  bp.R.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) bp.R[k] = norm_of(gpath.at(k));
  bp.r0 = bp.R[0];
  return bp;
}

BesselPath extract_beta(const GPath& gpath) {
  BesselPath bp = bessel_direct(gpath);
  const std::size_t n = gpath.grid.n_steps();
  const std::size_t dim = static_cast<std::size_t>(gpath.d);
  bp.beta.assign(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto xk = gpath.at(k);
    const auto xk1 = gpath.at(k + 1);
    double inc = 0.0;
    if (bp.R[k] > 0.0) {
      for (std::size_t i = 0; i < dim; ++i)
        inc += (xk[i] / bp.R[k]) * (xk1[i] - xk[i]);
    }
    bp.beta[k + 1] = bp.beta[k] + inc;
  }
  return bp;
}

SdeResidualReport sde_residual(const BesselPath& bp, int d) {
  if (bp.beta.empty())
    throw std::invalid_argument("sde_residual: run extract_beta first");
  if (!(bp.r0 > 0.0))
    throw std::invalid_argument("sde_residual: r0 > 0 required");
  const std::size_t n = bp.grid.n_steps();
  const double floor = std::pow(bp.grid.dt(), 0.25);
  const double half_dm1 = 0.5 * (d - 1);
  SdeResidualReport rep;
  double drift = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double res = std::abs(bp.R[k] - bp.r0 - bp.beta[k] - drift);
    if (res > rep.sup_residual) {
      rep.sup_residual = res;
      rep.argmax_step = k;
    }
    if (k < n)
      drift += half_dm1 / std::max(bp.R[k], floor) * (bp.qv[k + 1] - bp.qv[k]);
  }
  return rep;
}

void TruncatedSdeConfig::validate() const {
  if (!(r > 0.0)) throw std::invalid_argument("TruncatedSdeConfig: r > 0");
  if (!(m > 0.5)) throw std::invalid_argument("TruncatedSdeConfig: m > 1/2");
  if (n < 1) throw std::invalid_argument("TruncatedSdeConfig: n >= 1");
}

double f_truncated(double x, int n) {
  const double ax = std::abs(x);
  const double cap = static_cast<double>(n);
  if (ax * cap <= 1.0) return cap;  // also covers x = 0
  return 1.0 / ax;
}

TruncatedPath euler_truncated(const TruncatedSdeConfig& cfg,
                              const ControlPolicy& policy, std::uint64_t seed,
                              std::uint64_t path_index, const SimOptions& opts) {
  cfg.validate();
  const std::size_t n_steps = cfg.grid.n_steps();
  TruncatedPath out;
  out.grid = cfg.grid;
  out.x.resize(n_steps + 1);
  out.qv.resize(n_steps + 1);
  out.x[0] = cfg.r;
  out.qv[0] = 0.0;

  Rng rng(seed, path_index);
  const double dt = cfg.grid.dt();
  const double sqrt_dt = std::sqrt(dt);
  const double slack = 1e-12 * cfg.band.hi2();
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double xk = out.x[k];
    const double nu = policy.value(cfg.grid.time(k), {&out.x[k], 1});
    if (!(nu >= cfg.band.lo2() - slack) || !(nu <= cfg.band.hi2() + slack))
      throw std::runtime_error(
          "euler_truncated: policy emitted nu outside [lo^2, hi^2]");
    const double z = opts.frozen ? 0.0 : rng.normal();
    const double dbeta = std::sqrt(nu) * sqrt_dt * z;
    const double dqv = opts.frozen ? 0.0 : nu * dt;
    out.x[k + 1] = xk + dbeta + cfg.m * f_truncated(xk, cfg.n) * dqv;
    out.qv[k + 1] = out.qv[k] + dqv;
  }
  return out;
}

std::optional<double> first_hit(const TruncatedPath& path, double level) {
  if (!(level > 0.0)) throw std::invalid_argument("first_hit: level > 0");
  for (std::size_t k = 0; k < path.x.size(); ++k)
    if (path.x[k] <= level) return path.grid.time(k);
  return std::nullopt;
}

SmoothSqrt::SmoothSqrt(double eps_in) : eps(eps_in) {
  if (!(eps > 0.0)) throw std::invalid_argument("SmoothSqrt: eps > 0");
}

double SmoothSqrt::value(double y) const {
  if (y >= eps) return std::sqrt(y);
  const double rt = std::sqrt(eps);
  return 0.375 * rt + 0.75 / rt * y - 0.125 / (eps * rt) * y * y;
}

double SmoothSqrt::d1(double y) const {
  if (y >= eps) return 0.5 / std::sqrt(y);
  const double rt = std::sqrt(eps);
  return 0.75 / rt - 0.25 / (eps * rt) * y;
}

double SmoothSqrt::d2(double y) const {
  if (y >= eps) return -0.25 / (y * std::sqrt(y));
  return -0.25 / (eps * std::sqrt(eps));
}

double smooth_sqrt(double eps, double y, int order) {
  const SmoothSqrt phi(eps);
  switch (order) {
    case 0: return phi.value(y);
    case 1: return phi.d1(y);
    case 2: return phi.d2(y);
    default:
      throw std::invalid_argument("smooth_sqrt: order must be 0, 1 or 2");
  }
}

ScaleCheckReport scale_function_check(const TruncatedSdeConfig& cfg,
                                      const ControlFamily& family,
                                      std::size_t n_paths, double T,
                                      std::uint64_t seed, int threads) {
  cfg.validate();
  if (family.policies.empty())
    throw std::invalid_argument("scale_function_check: empty family");

  TruncatedSdeConfig run = cfg;
  const auto horizon_steps = static_cast<std::size_t>(
      std::llround(T / cfg.grid.dt()));
  run.grid = TimeGrid(T, std::max<std::size_t>(horizon_steps, 1));

  const double level = 1.0 / static_cast<double>(cfg.n);
  const double exponent = 1.0 - 2.0 * cfg.m;
  const double target = std::pow(cfg.r, exponent);
  const double derived = std::pow(cfg.n * cfg.r, exponent);
  const double printed = std::pow(cfg.r / cfg.n, 2.0 * cfg.m - 1.0);

  ScaleCheckReport rep;
  rep.rows.resize(family.policies.size());
  std::vector<std::string> faults(family.policies.size());

  parallel_for(family.policies.size(), threads, [&](std::size_t ip) {
    const ControlPolicy& policy = family.policies[ip];
    double sum_h = 0.0, sumsq_h = 0.0;
    std::size_t hits = 0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      const TruncatedPath path = euler_truncated(run, policy, seed, p);
      // The continuous process stops exactly at the level, so a hit
      // contributes h(level); the discrete overshoot below the level is a
      // monitoring artifact, not part of the stopped value.
      double stopped = path.x.back();
      bool hit = false;
      for (double x : path.x) {
        if (x <= 0.0 && !hit) {
          faults[ip] =
              "nonpositive value before the stopping level; dt too coarse "
              "for truncation level 1/n — rerun with a finer grid";
          return;
        }
        if (x <= level) {
          stopped = level;
          hit = true;
          break;
        }
      }
      const double h = std::pow(stopped, exponent);
      sum_h += h;
      sumsq_h += h * h;
      if (hit) ++hits;
    }
    const double np = static_cast<double>(n_paths);
    ScalePolicyRow& row = rep.rows[ip];
    row.policy = policy.describe();
    row.mean_h = sum_h / np;
    const double var_h =
        std::max(0.0, (sumsq_h - sum_h * row.mean_h) / (np - 1.0));
    row.stderr_h = std::sqrt(var_h / np);
    row.target = target;
    row.mean_pass = std::abs(row.mean_h - target) <= 3.0 * row.stderr_h;
    row.hit_freq = static_cast<double>(hits) / np;
    row.hit_stderr = std::sqrt(row.hit_freq * (1.0 - row.hit_freq) / np);
    row.derived_bound = derived;
    row.printed_bound = printed;
    row.hit_pass = row.hit_freq <= derived + 3.0 * row.hit_stderr;
  });

  for (const std::string& f : faults)
    if (!f.empty()) throw std::runtime_error("scale_function_check: " + f);

  rep.pass = std::all_of(rep.rows.begin(), rep.rows.end(), [](const auto& r) {
    return r.mean_pass && r.hit_pass;
  });
  return rep;
}

double second_moment_bound(double r, double m, double sigma_hi, double T) {
  return r * r + (2.0 * m + 1.0) * sigma_hi * sigma_hi * T;
}

double fourth_moment_bound(double r, double m, double sigma_hi, double T) {
  const double s2 = sigma_hi * sigma_hi;
  return r * r * r * r + (4.0 * m + 6.0) * s2 * r * r +
         (2.0 * m + 1.0) * (4.0 * m + 6.0) * s2 * s2 * T * T;
}

MomentBoundReport moment_bounds_check(const TruncatedSdeConfig& cfg,
                                      const ControlFamily& family,
                                      std::size_t n_paths, std::uint64_t seed,
                                      int threads) {
  cfg.validate();
  const std::size_t n_pol = family.policies.size();
  std::vector<double> mean2(n_pol), se2(n_pol), mean4(n_pol), se4(n_pol);

  parallel_for(n_pol, threads, [&](std::size_t ip) {
    double s2 = 0.0, ss2 = 0.0, s4 = 0.0, ss4 = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      const TruncatedPath path = euler_truncated(cfg, family.policies[ip], seed, p);
      const double xt = path.x.back();
      const double x2 = xt * xt;
      const double x4 = x2 * x2;
      s2 += x2;
      ss2 += x2 * x2;
      s4 += x4;
      ss4 += x4 * x4;
    }
    const double np = static_cast<double>(n_paths);
    mean2[ip] = s2 / np;
    mean4[ip] = s4 / np;
    se2[ip] = std::sqrt(std::max(0.0, (ss2 - s2 * mean2[ip]) / (np - 1.0)) / np);
    se4[ip] = std::sqrt(std::max(0.0, (ss4 - s4 * mean4[ip]) / (np - 1.0)) / np);
  });

  MomentBoundReport rep;
  std::size_t i2 = 0, i4 = 0;
  for (std::size_t ip = 1; ip < n_pol; ++ip) {
    if (mean2[ip] > mean2[i2]) i2 = ip;
    if (mean4[ip] > mean4[i4]) i4 = ip;
  }
  rep.est2 = mean2[i2];
  rep.se2 = se2[i2];
  rep.est4 = mean4[i4];
  rep.se4 = se4[i4];
  const double T = cfg.grid.t_end();
  rep.bound2 = second_moment_bound(cfg.r, cfg.m, cfg.band.hi(), T);
  rep.bound4 = fourth_moment_bound(cfg.r, cfg.m, cfg.band.hi(), T);
  rep.pass = rep.est2 <= rep.bound2 + 3.0 * rep.se2 &&
             rep.est4 <= rep.bound4 + 3.0 * rep.se4;
  return rep;
}

ItoDecomposition ito_decomposition(const GPath& gpath, int eps_index) {
  if (eps_index < 0)
    throw std::invalid_argument("ito_decomposition: eps_index >= 0");
  const double eps = std::ldexp(1.0, -eps_index);  // 2^(-n)
  const SmoothSqrt phi(eps);
  const double rt_eps = std::sqrt(eps);
  const std::size_t n = gpath.grid.n_steps();
  const std::size_t dim = static_cast<std::size_t>(gpath.d);
  const double d_real = static_cast<double>(gpath.d);

  const double r0 = norm_of(gpath.at(0));
  const double phi0 = phi.value(r0 * r0);

  ItoDecomposition rep;
  double i_sum = 0.0, j_sum = 0.0, k_sum = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double r = norm_of(gpath.at(k));
    const double y = r * r;
    const double defect = std::abs(phi.value(y) - phi0 - i_sum - j_sum - k_sum);
    rep.identity_residual = std::max(rep.identity_residual, defect);
    if (k == n) break;

    const auto xk = gpath.at(k);
    const auto xk1 = gpath.at(k + 1);
    const double dqv = gpath.qv[k + 1] - gpath.qv[k];
    if (y < eps) {
      const double coeff = 0.5 / rt_eps * (3.0 - y / eps);
      for (std::size_t i = 0; i < dim; ++i)
        i_sum += coeff * xk[i] * (xk1[i] - xk[i]);
      k_sum += 0.25 / rt_eps * (3.0 * d_real - (d_real + 2.0) * y / eps) * dqv;
    } else {
      for (std::size_t i = 0; i < dim; ++i)
        i_sum += xk[i] / r * (xk1[i] - xk[i]);
      j_sum += (d_real - 1.0) / (2.0 * r) * dqv;
    }
  }
  rep.i_total = i_sum;
  rep.j_term = j_sum;
  rep.k_term = k_sum;
  return rep;
}

}  // namespace gbes
