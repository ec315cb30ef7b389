#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gbes/gheat.hpp"
#include "gbes/montecarlo.hpp"
#include "gbes/rng.hpp"
#include "oracles.hpp"

using namespace gbes;

namespace {

Payoff first_coord_square() {
  return Payoff::terminal(
      "coord1_sq", [](std::span<const double> x) { return x[0] * x[0]; },
      /*bounded=*/false);
}

}  // namespace

TEST_CASE("upper expectation of B_1^2 reaches hi2 * t") {
  const VolatilityBand band(1.0, 2.0);
  const TimeGrid grid(1.0, 64);
  const std::vector<double> start = {0.0};
  const ControlFamily fam = default_family(band, grid.t_end(), 5);
  const Payoff payoff = first_coord_square();
  const EstimateReport rep =
      estimate_upper(payoff, fam, grid, 1, start, band, 10000, 5);
  CHECK(std::abs(rep.value - 4.0) <= 3.0 * rep.stderr_value);
  CHECK(rep.warning.find("bounded") != std::string::npos);

  const EstimateReport low =
      estimate_lower(payoff, fam, grid, 1, start, band, 10000, 5);
  CHECK(std::abs(low.value - 1.0) <= 3.0 * low.stderr_value);
  CHECK(low.value <= rep.value);
}

TEST_CASE("constant payoffs are preserved with zero stderr") {
  const VolatilityBand band(1.0, 2.0);
  const TimeGrid grid(1.0, 16);
  const std::vector<double> start = {0.0, 0.0};
  const ControlFamily fam = make_family(band, grid.t_end(), 1, 3, 2);
  const Payoff c7 = Payoff::terminal(
      "const7", [](std::span<const double>) { return 7.0; });
  const EstimateReport rep =
      estimate_upper(c7, fam, grid, 2, start, band, 500, 1);
  CHECK(rep.value == 7.0);
  CHECK(rep.stderr_value == 0.0);
}

TEST_CASE("shared-randomness estimator satisfies the sublinear axioms") {
  const VolatilityBand band(1.0, 2.0);
  const TimeGrid grid(1.0, 32);
  const std::vector<double> start = {0.0, 0.0};
  const ControlFamily fam = make_family(band, grid.t_end(), 9, 4, 6);
  const std::size_t n_paths = 512;  // power of two keeps dyadic means exact

  Rng gen(123, 0);
  for (int rep = 0; rep < 25; ++rep) {
    const double a = (gen.uniform01() - 0.5) * 4.0;
    const double b = (gen.uniform01() - 0.5) * 4.0;
    const double w = gen.uniform01() * 3.0;
    const double lam = gen.uniform01() * 4.0 + 0.25;

    const Payoff xi = Payoff::terminal(
        "xi", [a, b](std::span<const double> x) {
          return std::tanh(a * x[0]) + std::sin(b * x[1]);
        });
    const Payoff eta = Payoff::terminal(
        "eta", [a, w](std::span<const double> x) {
          return std::cos(w * x[1]) - std::tanh(a * x[0] - 1.0);
        });
    const Payoff delta = Payoff::terminal(
        "delta", [w](std::span<const double> x) {
          return std::abs(std::sin(w * (x[0] + x[1])));
        });

    auto est = [&](const Payoff& p) {
      return estimate_upper(p, fam, grid, 2, start, band, n_paths, 9).value;
    };

    // Monotonicity is exact: xi <= xi + delta pathwise.
    CHECK(est(xi) <= est(Payoff::sum(xi, delta)));
    // Subadditivity and positive homogeneity hold to rounding.
    CHECK(est(Payoff::sum(xi, eta)) <= est(xi) + est(eta) + 1e-12);
    CHECK(est(xi.scaled(lam)) ==
          doctest::Approx(lam * est(xi)).epsilon(1e-12));
    // Upper dominates lower exactly.
    CHECK(-est(xi.negated()) <= est(xi));
  }
}

TEST_CASE("enlarging the control family never decreases the estimate") {
  const VolatilityBand band(1.0, 2.0);
  const TimeGrid grid(1.0, 32);
  const std::vector<double> start = {0.0};
  const Payoff payoff = Payoff::terminal(
      "bump", [](std::span<const double> x) { return std::exp(-x[0] * x[0]); });
  ControlFamily small = make_family(band, grid.t_end(), 3, 3, 4);
  ControlFamily big = small;
  for (int i = 0; i < 5; ++i)
    big.policies.push_back(
        ControlPolicy::bang_bang(0.1 * i, 0.2 + 0.1 * i, band.lo2(),
                                 band.hi2(), band.lo2()));
  const double v_small =
      estimate_upper(payoff, small, grid, 1, start, band, 2000, 3).value;
  const double v_big =
      estimate_upper(payoff, big, grid, 1, start, band, 2000, 3).value;
  CHECK(v_small <= v_big);
}

TEST_CASE("estimates are independent of the thread count") {
  const VolatilityBand band(1.0, 2.0);
  const TimeGrid grid(1.0, 32);
  const std::vector<double> start = {0.0, 0.0};
  const ControlFamily fam = make_family(band, grid.t_end(), 2, 5, 6);
  const Payoff payoff = Payoff::terminal(
      "norm_sq", [](std::span<const double> x) {
        return x[0] * x[0] + x[1] * x[1];
      });
  const EstimateReport one =
      estimate_upper(payoff, fam, grid, 2, start, band, 1000, 7, 1);
  const EstimateReport four =
      estimate_upper(payoff, fam, grid, 2, start, band, 1000, 7, 4);
  CHECK(one.per_policy_means == four.per_policy_means);
  CHECK(one.value == four.value);
  CHECK(one.argmax_index == four.argmax_index);
}

TEST_CASE("near-tie between top policies is flagged") {
  const VolatilityBand band(1.0, 2.0);
  const TimeGrid grid(1.0, 16);
  const std::vector<double> start = {0.0};
  ControlFamily twins;
  twins.policies = {ControlPolicy::constant(4.0), ControlPolicy::constant(4.0)};
  const Payoff payoff = first_coord_square();
  const EstimateReport rep =
      estimate_upper(payoff, twins, grid, 1, start, band, 500, 2);
  CHECK(rep.near_tie);  // identical policies share the driver, means tie
  CHECK(rep.per_policy_means[0] == rep.per_policy_means[1]);
}

TEST_CASE("input validation") {
  const VolatilityBand band(1.0, 2.0);
  const TimeGrid grid(1.0, 16);
  const std::vector<double> start = {0.0};
  const Payoff payoff = first_coord_square();
  const ControlFamily fam = make_family(band, grid.t_end(), 2, 1, 2);
  CHECK_THROWS_AS(
      estimate_upper(payoff, ControlFamily{}, grid, 1, start, band, 500, 1),
      std::invalid_argument);
  CHECK_THROWS_AS(estimate_upper(payoff, fam, grid, 1, start, band, 50, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(capacity_ball(0.333, start, 0.1, fam, grid, 1, start, band,
                                500, 1, 1.0),
                  std::invalid_argument);  // t off the grid
  CHECK_THROWS_AS(occupation_integral(1.0, start, 0.1, fam, grid, 1, start,
                                      band, 500, 1, 0.4),
                  std::invalid_argument);  // alpha outside (1/2, 1)
  CHECK_THROWS_AS(occupation_integral(1.0, start, 0.1, fam, grid, 1, start,
                                      band, 500, 1, 1.0),
                  std::invalid_argument);
}

TEST_CASE("capacity bound values and the certain event") {
  const VolatilityBand band(1.0, 2.0);
  CHECK(capacity_ball_bound(1.0, 0.1, 5.0, band) ==
        doctest::Approx(0.063718).epsilon(1e-4));
  const TimeGrid grid(1.0, 32);
  const std::vector<double> zero2 = {0.0, 0.0};
  const ControlFamily fam = make_family(band, grid.t_end(), 3, 2, 11);
  const CapacityReport rep = capacity_ball(1.0, zero2, 1000.0, fam, grid, 2,
                                           zero2, band, 500, 11, 2.0);
  CHECK(rep.indicator.value == 1.0);
  CHECK(rep.indicator.stderr_value == 0.0);
}

TEST_CASE("classical capacity matches the chi(3) ball probability") {
  // Oracle self-check first: closed form vs quadrature.
  for (double x : {0.25, 0.5, 1.0, 2.0})
    CHECK(oracle::chi3_cdf(x) ==
          doctest::Approx(oracle::chi_cdf_quadrature(3, x)).epsilon(1e-8));

  const VolatilityBand band(1.0, 1.0);
  const TimeGrid grid(1.0, 64);
  const std::vector<double> zero3 = {0.0, 0.0, 0.0};
  const ControlFamily fam = make_family(band, grid.t_end(), 3, 2, 13);
  const double eps = 0.5;
  const CapacityReport rep = capacity_ball(1.0, zero3, eps, fam, grid, 3,
                                           zero3, band, 10000, 13, 3.0);
  const double exact = oracle::chi3_cdf(eps);
  CHECK(std::abs(rep.indicator.value - exact) <=
        3.0 * rep.indicator.stderr_value);
}

TEST_CASE("indicator is dominated by the scaled Gaussian smoothing") {
  const VolatilityBand band(1.0, 2.0);
  const TimeGrid grid(1.0, 32);
  const std::vector<double> zero2 = {0.0, 0.0};
  const ControlFamily fam = make_family(band, grid.t_end(), 5, 6, 17);
  const CapacityReport rep = capacity_ball(1.0, zero2, 0.4, fam, grid, 2,
                                           zero2, band, 2000, 17, 2.0);
  const double factor = std::exp(1.0 / (2.0 * band.hi2()));
  CHECK(rep.indicator.value <= factor * rep.smoothed.value + 1e-12);
}

TEST_CASE("occupation integral: bound value, decay in eps, far-away center") {
  const VolatilityBand band(1.0, 2.0);
  CHECK(occupation_bound(1.0, 0.1, 0.625, band) ==
        doctest::Approx(1.6993).epsilon(1e-3));

  const TimeGrid grid(1.0, 1024);
  const std::vector<double> zero5(5, 0.0);
  const ControlFamily fam = make_family(band, grid.t_end(), 5, 4, 23);
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {0.2, 0.1, 0.05}) {
    const OccupationReport rep = occupation_integral(
        1.0, zero5, eps, fam, grid, 5, zero5, band, 2000, 23, 0.625);
    CHECK(rep.estimate.value <= rep.bound + 3.0 * rep.estimate.stderr_value);
    CHECK(rep.estimate.value < prev);
    prev = rep.estimate.value;
  }

  std::vector<double> far(5, 0.0);
  far[0] = 10.0 * band.hi();  // 10 hi sqrt(T) away from the start
  const OccupationReport off = occupation_integral(
      1.0, far, 0.1, fam, grid, 5, zero5, band, 2000, 29, 0.625);
  CHECK(off.estimate.value == 0.0);
}

TEST_CASE("PDE and Monte Carlo agree on a truncated quadratic payoff") {
  const VolatilityBand band(1.0, 2.0);

  // Truncation level far outside the diffusion range, so the payoff is
  // effectively convex where paths live and the constant hi policy attains
  // the supremum on both arms.
  const double cap = 64.0;

  // PDE arm: line-mode solve with data min(x^2, cap), frozen boundary.
  HeatProblem p;
  p.band = band;
  p.d = 1;
  p.mode = HeatMode::Line;
  p.a_offset = 0.0;
  p.domain_radius = 14.0;
  p.n_space = 701;
  p.t_end = 1.0;
  std::vector<double> data(static_cast<std::size_t>(p.n_space));
  const double ds = p.ds();
  for (int j = 0; j < p.n_space; ++j) {
    const double x = -p.domain_radius + j * ds;
    data[static_cast<std::size_t>(j)] = std::min(x * x, cap);
  }
  const RadialField field =
      heat_solve_with_data(p, data, HeatBoundary::FrozenInitial);
  const double pde_value =
      field.at(field.times.size() - 1, static_cast<std::size_t>(p.n_space / 2));

  // MC arm: same payoff with a convexity hint for the feedback policies.
  Payoff payoff = Payoff::terminal(
      "trunc_quad", [cap](std::span<const double> x) {
        return std::min(x[0] * x[0], cap);
      });
  payoff.convexity_hint = [cap](double, std::span<const double> x) {
    return cap - x[0] * x[0];
  };
  const TimeGrid grid(1.0, 128);
  const std::vector<double> start = {0.0};
  const ControlFamily fam = default_family(band, grid.t_end(), 31, &payoff);
  const EstimateReport rep =
      estimate_upper(payoff, fam, grid, 1, start, band, 10000, 31);

  const double pde_tol = 0.02;
  CHECK(std::abs(rep.value - pde_value) <=
        3.0 * rep.stderr_value + pde_tol);
}
