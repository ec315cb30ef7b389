#include "gbes/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gbes/rng.hpp"

namespace gbes {

Payoff Payoff::terminal(std::string name,
                        std::function<double(std::span<const double>)> f,
                        bool bounded) {
  Payoff p;
  p.kind = Kind::Terminal;
  p.name = std::move(name);
  p.bounded = bounded;
  p.eval = [f = std::move(f)](const GPath& path) {
    return f(path.at(path.grid.n_steps()));
  };
  return p;
}

Payoff Payoff::pathwise(std::string name,
                        std::function<double(const GPath&)> f, bool bounded) {
  Payoff p;
  p.kind = Kind::Pathwise;
  p.name = std::move(name);
  p.bounded = bounded;
  p.eval = std::move(f);
  return p;
}

Payoff Payoff::negated() const {
  Payoff p = *this;
  p.name = "-(" + name + ")";
  p.eval = [inner = eval](const GPath& path) { return -inner(path); };
  if (convexity_hint)
    p.convexity_hint = [inner = convexity_hint](double t,
                                                std::span<const double> x) {
      return -inner(t, x);
    };
  return p;
}

Payoff Payoff::scaled(double lambda) const {
  Payoff p = *this;
  p.name = std::to_string(lambda) + "*(" + name + ")";
  p.eval = [inner = eval, lambda](const GPath& path) {
    return lambda * inner(path);
  };
  return p;
}

Payoff Payoff::sum(const Payoff& a, const Payoff& b) {
  Payoff p;
  p.kind = (a.kind == Kind::Terminal && b.kind == Kind::Terminal)
               ? Kind::Terminal
               : Kind::Pathwise;
  p.name = "(" + a.name + ")+(" + b.name + ")";
  p.bounded = a.bounded && b.bounded;
  p.eval = [fa = a.eval, fb = b.eval](const GPath& path) {
    return fa(path) + fb(path);
  };
  return p;
}

ControlFamily make_family(const VolatilityBand& band, double t_end,
                          std::uint64_t seed, int n_constants, int n_bang_bang,
                          const Payoff* payoff) {
  if (n_constants < 1)
    throw std::invalid_argument("make_family: need at least one constant");
  ControlFamily fam;
  const double lo2 = band.lo2();
  const double hi2 = band.hi2();
  for (int i = 0; i < n_constants; ++i) {
    const double frac =
        n_constants == 1 ? 1.0
                         : static_cast<double>(i) / (n_constants - 1);
    fam.policies.push_back(ControlPolicy::constant(lo2 + frac * (hi2 - lo2)));
  }
  Rng rng(derive_seed(seed, "control-family"), 0);
  for (int i = 0; i < n_bang_bang; ++i) {
    double t1 = rng.uniform01() * t_end;
    double t2 = rng.uniform01() * t_end;
    if (t2 < t1) std::swap(t1, t2);
    const bool hi_first = rng.uniform01() < 0.5;
    const double a = hi_first ? hi2 : lo2;
    const double b = hi_first ? lo2 : hi2;
    fam.policies.push_back(ControlPolicy::bang_bang(t1, t2, a, b, a));
  }
  if (payoff && payoff->convexity_hint) {
    const auto hint = payoff->convexity_hint;
    fam.policies.push_back(ControlPolicy::feedback(
        "hint+", [hint, lo2, hi2](double t, std::span<const double> x) {
          return hint(t, x) >= 0.0 ? hi2 : lo2;
        }));
    fam.policies.push_back(ControlPolicy::feedback(
        "hint-", [hint, lo2, hi2](double t, std::span<const double> x) {
          return hint(t, x) >= 0.0 ? lo2 : hi2;
        }));
  }
  fam.spec_desc = std::to_string(n_constants) + " constants, " +
                  std::to_string(n_bang_bang) + " bang-bang" +
                  (payoff && payoff->convexity_hint ? ", 2 feedback" : "");
  return fam;
}

ControlFamily default_family(const VolatilityBand& band, double t_end,
                             std::uint64_t seed, const Payoff* payoff) {
  return make_family(band, t_end, seed, 9, 32, payoff);
}

std::vector<EstimateReport> estimate_upper_multi(
    std::span<const Payoff> payoffs, const ControlFamily& family,
    const TimeGrid& grid, int d, std::span<const double> start,
    const VolatilityBand& band, std::size_t n_paths, std::uint64_t seed,
    int threads) {
  if (family.policies.empty())
    throw std::invalid_argument("estimate_upper: empty control family");
  if (n_paths < 100)
    throw std::invalid_argument("estimate_upper: n_paths >= 100 required");
  for (const Payoff& payoff : payoffs)
    if (!payoff.eval)
      throw std::invalid_argument("estimate_upper: payoff has no evaluator");

  const std::size_t n_pol = family.policies.size();
  const std::size_t n_pay = payoffs.size();
  // means/sds indexed [policy * n_pay + payoff]
  std::vector<double> means(n_pol * n_pay), sds(n_pol * n_pay);
  std::vector<double> start_copy(start.begin(), start.end());

  parallel_for(n_pol, threads, [&](std::size_t ip) {
    const ControlPolicy& policy = family.policies[ip];
    GPath scratch;
    std::vector<double> sum(n_pay, 0.0), sumsq(n_pay, 0.0);
    for (std::size_t p = 0; p < n_paths; ++p) {
      simulate_gpath_into(scratch, grid, d, start_copy, policy, band, seed, p);
      for (std::size_t q = 0; q < n_pay; ++q) {
        const double v = payoffs[q].eval(scratch);
        sum[q] += v;
        sumsq[q] += v * v;
      }
    }
    for (std::size_t q = 0; q < n_pay; ++q) {
      const double mean = sum[q] / static_cast<double>(n_paths);
      const double var = std::max(
          0.0, (sumsq[q] - sum[q] * mean) / static_cast<double>(n_paths - 1));
      means[ip * n_pay + q] = mean;
      sds[ip * n_pay + q] = std::sqrt(var / static_cast<double>(n_paths));
    }
  });

  std::vector<EstimateReport> reports(n_pay);
  for (std::size_t q = 0; q < n_pay; ++q) {
    EstimateReport& rep = reports[q];
    rep.n_paths = n_paths;
    rep.per_policy_means.resize(n_pol);
    rep.per_policy_stderr.resize(n_pol);
    for (std::size_t ip = 0; ip < n_pol; ++ip) {
      rep.per_policy_means[ip] = means[ip * n_pay + q];
      rep.per_policy_stderr[ip] = sds[ip * n_pay + q];
    }
    rep.argmax_index = 0;
    for (std::size_t ip = 1; ip < n_pol; ++ip)
      if (rep.per_policy_means[ip] > rep.per_policy_means[rep.argmax_index])
        rep.argmax_index = ip;
    rep.value = rep.per_policy_means[rep.argmax_index];
    rep.stderr_value = rep.per_policy_stderr[rep.argmax_index];
    rep.argmax_policy = family.policies[rep.argmax_index].describe();
    if (n_pol > 1) {
      double second = -std::numeric_limits<double>::infinity();
      std::size_t second_ix = rep.argmax_index;
      for (std::size_t ip = 0; ip < n_pol; ++ip) {
        if (ip == rep.argmax_index) continue;
        if (rep.per_policy_means[ip] > second) {
          second = rep.per_policy_means[ip];
          second_ix = ip;
        }
      }
      const double joint =
          std::hypot(rep.stderr_value, rep.per_policy_stderr[second_ix]);
      rep.near_tie = rep.value - second <= joint;
    }
    if (!payoffs[q].bounded)
      rep.warning = "payoff not flagged bounded; stderr may be unreliable";
  }
  return reports;
}

EstimateReport estimate_upper(const Payoff& payoff, const ControlFamily& family,
                              const TimeGrid& grid, int d,
                              std::span<const double> start,
                              const VolatilityBand& band, std::size_t n_paths,
                              std::uint64_t seed, int threads) {
  return estimate_upper_multi({&payoff, 1}, family, grid, d, start, band,
                              n_paths, seed, threads)
      .front();
}

EstimateReport estimate_lower(const Payoff& payoff, const ControlFamily& family,
                              const TimeGrid& grid, int d,
                              std::span<const double> start,
                              const VolatilityBand& band, std::size_t n_paths,
                              std::uint64_t seed, int threads) {
  EstimateReport rep = estimate_upper(payoff.negated(), family, grid, d, start,
                                      band, n_paths, seed, threads);
  rep.value = -rep.value;
  for (double& m : rep.per_policy_means) m = -m;
  return rep;
}

double capacity_ball_bound(double t, double eps, double c,
                           const VolatilityBand& band) {
  return std::exp(1.0 / (2.0 * band.hi2())) *
         std::pow(eps, 2.0 * c * band.rho()) / std::pow(t, c * band.rho());
}

double occupation_bound(double T, double eps, double alpha,
                        const VolatilityBand& band) {
  return std::exp(1.0 / (2.0 * band.hi2())) / (1.0 - alpha) *
         std::pow(eps, 2.0 * alpha - 1.0) * std::pow(T, 1.0 - alpha);
}

namespace {

std::size_t grid_index_of(double t, const TimeGrid& grid) {
  const double pos = t / grid.dt();
  const auto k = static_cast<std::size_t>(std::llround(pos));
  if (k > grid.n_steps() || std::abs(pos - static_cast<double>(k)) > 1e-9)
    throw std::invalid_argument("requested time is not a grid point");
  return k;
}

double dist_to(std::span<const double> x, std::span<const double> a) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - a[i];
    s += dx * dx;
  }
  return std::sqrt(s);
}

}  // namespace

CapacityReport capacity_ball(double t, std::span<const double> a, double eps,
                             const ControlFamily& family, const TimeGrid& grid,
                             int d, std::span<const double> start,
                             const VolatilityBand& band, std::size_t n_paths,
                             std::uint64_t seed, double c, int threads) {
  if (!(eps > 0.0)) throw std::invalid_argument("capacity_ball: eps > 0");
  const std::size_t k = grid_index_of(t, grid);
  std::vector<double> center(a.begin(), a.end());

  Payoff indicator = Payoff::pathwise(
      "indicator_ball", [k, center, eps](const GPath& path) {
        return dist_to(path.at(k), center) < eps ? 1.0 : 0.0;
      });

  const double n_sharp = 1.0 / (eps * eps);
  const double denom = 2.0 * band.hi2();
  Payoff smoothed = Payoff::pathwise(
      "gaussian_smoothed_ball", [k, center, n_sharp, denom](const GPath& path) {
        const double r = dist_to(path.at(k), center);
        return std::exp(-n_sharp * r * r / denom);
      });

  const Payoff pair[2] = {indicator, smoothed};
  auto reports =
      estimate_upper_multi(pair, family, grid, d, start, band, n_paths, seed,
                           threads);
  CapacityReport rep;
  rep.indicator = std::move(reports[0]);
  rep.smoothed = std::move(reports[1]);
  rep.c = c;
  rep.bound = capacity_ball_bound(t, eps, c, band);
  return rep;
}

OccupationReport occupation_integral(double T, std::span<const double> a,
                                     double eps, const ControlFamily& family,
                                     const TimeGrid& grid, int d,
                                     std::span<const double> start,
                                     const VolatilityBand& band,
                                     std::size_t n_paths, std::uint64_t seed,
                                     double alpha, int threads) {
  if (!(eps > 0.0)) throw std::invalid_argument("occupation_integral: eps > 0");
  if (!(alpha > 0.5 && alpha < 1.0))
    throw std::invalid_argument(
        "occupation_integral: alpha must lie in (1/2, 1) (needs d*rho > 1/2)");
  const std::size_t k_end = grid_index_of(T, grid);
  std::vector<double> center(a.begin(), a.end());

  Payoff occ = Payoff::pathwise(
      "occupation", [k_end, center, eps](const GPath& path) {
        const double dt = path.grid.dt();
        double acc = 0.0;
        for (std::size_t k = 0; k < k_end; ++k)
          if (dist_to(path.at(k), center) < eps) acc += dt;
        return acc / eps;
      });

  OccupationReport rep;
  rep.estimate =
      estimate_upper(occ, family, grid, d, start, band, n_paths, seed, threads);
  rep.alpha = alpha;
  rep.bound = occupation_bound(T, eps, alpha, band);
  return rep;
}

}  // namespace gbes
