#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gbes/gheat.hpp"
#include "oracles.hpp"

using namespace gbes;

namespace {

HeatProblem classical_line(double ds) {
  HeatProblem p;
  p.band = VolatilityBand(1.0, 1.0);
  p.d = 1;
  p.mode = HeatMode::Line;
  p.n = 1.0;
  p.a_offset = 0.0;
  p.domain_radius = 12.0;
  p.n_space = static_cast<int>(std::lround(2.0 * p.domain_radius / ds)) + 1;
  p.t_end = 1.0;
  return p;
}

HeatProblem classical_radial(double ds, int d) {
  HeatProblem p;
  p.band = VolatilityBand(1.0, 1.0);
  p.d = d;
  p.mode = HeatMode::Radial;
  p.n = 1.0;
  p.domain_radius = 12.0;
  p.n_space = static_cast<int>(std::lround(p.domain_radius / ds)) + 1;
  p.t_end = 1.0;
  return p;
}

double linf_vs_gaussian(const RadialField& field, const HeatProblem& p) {
  double worst = 0.0;
  for (std::size_t k = 0; k < field.times.size(); ++k) {
    for (std::size_t j = 0; j < field.coords.size(); ++j) {
      const double r = p.mode == HeatMode::Line
                           ? std::abs(field.coords[j] - p.a_offset)
                           : field.coords[j];
      const double exact = oracle::gaussian_heat_n(
          field.times[k], r, p.n, p.band.hi(), p.band.hi(), p.d);
      worst = std::max(worst, std::abs(field.at(k, j) - exact));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("decay_bound closed form") {
  const VolatilityBand band(1.0, 2.0);
  CHECK(decay_bound(0.0, 5.0, 3.0, band) == 1.0);
  CHECK(decay_bound(1.0, 1.0, 5.0, band) == doctest::Approx(0.6484197773));
  for (double t : {0.0, 0.5, 2.0, 10.0})
    CHECK(decay_bound(t, 4.0, 0.0, band) == 1.0);
  CHECK_THROWS_AS(decay_bound(-1.0, 1.0, 1.0, band), std::invalid_argument);
}

TEST_CASE("classical line solve matches the Gaussian convolution") {
  const HeatProblem coarse = classical_line(0.02);
  const double err_coarse = linf_vs_gaussian(heat_solve(coarse), coarse);
  CHECK(err_coarse <= 1e-3);

  const HeatProblem fine = classical_line(0.01);
  const double err_fine = linf_vs_gaussian(heat_solve(fine), fine);
  CHECK(err_coarse / err_fine >= 3.0);  // order-2 spatial convergence
}

TEST_CASE("classical radial d=3 solve matches the Gaussian convolution") {
  const HeatProblem p = classical_radial(0.02, 3);
  const RadialField field = heat_solve(p);
  CHECK(linf_vs_gaussian(field, p) <= 1e-3);
  // center value at t_end: (1+t)^(-3/2)
  const double center = field.at(field.times.size() - 1, 0);
  CHECK(center == doctest::Approx(std::pow(2.0, -1.5)).epsilon(2e-3));
}

TEST_CASE("zero initial data is a fixed point") {
  HeatProblem p = classical_radial(0.1, 3);
  const std::vector<double> zeros(static_cast<std::size_t>(p.n_space), 0.0);
  const RadialField field = heat_solve_with_data(p, zeros, HeatBoundary::Zero);
  for (double v : field.values) CHECK(v == 0.0);
}

TEST_CASE("scheme is monotone in the initial data") {
  HeatProblem p;
  p.band = VolatilityBand(1.0, 2.0);
  p.d = 5;
  p.mode = HeatMode::Radial;
  p.n = 4.0;
  p.domain_radius = 15.0;
  p.n_space = 301;
  p.t_end = 0.5;
  std::vector<double> lo(static_cast<std::size_t>(p.n_space));
  std::vector<double> hi(static_cast<std::size_t>(p.n_space));
  const double ds = p.ds();
  for (int j = 0; j < p.n_space; ++j) {
    const double r = j * ds;
    lo[static_cast<std::size_t>(j)] = std::exp(-2.0 * r * r);
    hi[static_cast<std::size_t>(j)] = std::exp(-0.5 * r * r);
  }
  const RadialField a = heat_solve_with_data(p, lo, HeatBoundary::Zero);
  const RadialField b = heat_solve_with_data(p, hi, HeatBoundary::Zero);
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i)
    CHECK(a.values[i] <= b.values[i] + 1e-14);
}

TEST_CASE("enlarging the band top never lowers the center value") {
  HeatProblem narrow;
  narrow.band = VolatilityBand(1.0, 1.0);
  narrow.d = 3;
  narrow.mode = HeatMode::Radial;
  narrow.n = 1.0;
  narrow.domain_radius = 21.0;
  narrow.n_space = 421;
  narrow.t_end = 0.5;

  HeatProblem wide = narrow;
  wide.band = VolatilityBand(1.0, 2.0);
  // Same grid and dt for both runs (the wide CFL is the binding one).
  wide.n_time = wide.resolved_n_time();
  narrow.n_time = wide.n_time;

  const RadialField a = heat_solve(narrow);
  const RadialField b = heat_solve(wide);
  const std::size_t last = a.times.size() - 1;
  CHECK(b.at(last, 0) >= a.at(last, 0) - 1e-12);
  for (std::size_t i = 0; i < a.values.size(); ++i)
    CHECK(b.values[i] >= a.values[i] - 1e-12);
}

TEST_CASE("field of the Gaussian problem stays within [0,1]") {
  HeatProblem p;
  p.band = VolatilityBand(1.0, 2.0);
  p.d = 5;
  p.mode = HeatMode::Radial;
  p.n = 4.0;
  p.domain_radius = 18.0;
  p.n_space = 361;
  p.t_end = 1.0;
  const RadialField field = heat_solve(p);
  for (double v : field.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

// Discrete transcription of the supersolution computation: the forward-time
// residual of v(t,s) = (1+nt)^(-c rho) exp(-n s^2/(2(1+nt) hi^2)) under the
// scheme's own stencil stays above -O(ds^2 + dt) whenever c <= d and the
// dimension condition holds.
TEST_CASE("supersolution residual is bounded below by the truncation budget") {
  const VolatilityBand band(1.0, 2.0);
  const int d = 5;
  const double n = 4.0;
  const double c = 5.0;
  const double rho = band.rho();

  auto v_exact = [&](double t, double r) {
    return std::pow(1.0 + n * t, -c * rho) *
           std::exp(-n * r * r / (2.0 * (1.0 + n * t) * band.hi2()));
  };

  double prev_min = 0.0;
  for (const int n_space : {151, 301}) {
    HeatProblem p;
    p.band = band;
    p.d = d;
    p.mode = HeatMode::Radial;
    p.n = n;
    p.domain_radius = 15.0;
    p.n_space = n_space;
    p.t_end = 1.0;
    const double ds = p.ds();
    const int n_time = p.resolved_n_time();
    const double dt = p.t_end / n_time;

    double min_res = 0.0;
    std::vector<double> row(static_cast<std::size_t>(n_space));
    for (int k = 0; k < n_time; k += std::max(1, n_time / 64)) {
      const double t = dt * k;
      for (int j = 0; j < n_space; ++j) row[j] = v_exact(t, j * ds);
      for (int j = 0; j + 1 < n_space; ++j) {
        double lap;
        if (j == 0) {
          lap = 2.0 * d * (row[1] - row[0]) / (ds * ds);
        } else {
          const double r = j * ds;
          const double fl = std::pow((r - 0.5 * ds) / r, d - 1);
          const double fr = std::pow((r + 0.5 * ds) / r, d - 1);
          lap = (fl * row[j - 1] - (fl + fr) * row[j] + fr * row[j + 1]) /
                (ds * ds);
        }
        const double dv_dt = (v_exact(t + dt, j * ds) - row[j]) / dt;
        min_res = std::min(min_res, dv_dt - g_prime(lap, band));
      }
    }
    const double budget = 4.0 * (ds * ds + dt) * n * n;
    CHECK(min_res >= -budget);
    if (prev_min < 0.0) CHECK(min_res >= prev_min);  // shrinks with ds
    prev_min = min_res;
  }
}

TEST_CASE("verify_decay_bound pass and saturation cases") {
  // Classical d=3, c=d: the bound is an equality at the center.
  HeatProblem classical = classical_radial(0.02, 3);
  const RadialField cf = heat_solve(classical);
  const DecayBoundReport crep = verify_decay_bound(cf, classical, 3.0);
  CHECK(crep.pass);
  double worst_gap = 0.0;
  for (std::size_t k = 0; k < cf.times.size(); ++k) {
    const double bound = decay_bound(cf.times[k], classical.n, 3.0, classical.band);
    worst_gap = std::max(worst_gap, std::abs(cf.at(k, 0) - bound));
  }
  CHECK(worst_gap <= 2.0 * crep.tolerance);

  // Volatility-uncertain case.
  HeatProblem g;
  g.band = VolatilityBand(1.0, 2.0);
  g.d = 5;
  g.mode = HeatMode::Radial;
  g.n = 4.0;
  g.domain_radius = 18.0;
  g.n_space = 361;
  g.t_end = 1.0;
  const RadialField gf = heat_solve(g);
  CHECK(verify_decay_bound(gf, g, 5.0).pass);
  CHECK(verify_decay_bound(gf, g, 0.0).pass);  // u <= 1

  CHECK_THROWS_AS(verify_decay_bound(gf, g, 6.0), std::invalid_argument);
  CHECK_THROWS_AS(verify_decay_bound(gf, g, -1.0), std::invalid_argument);
  HeatProblem short_d = g;
  short_d.d = 3;  // threshold is 5 for band (1,2)
  CHECK_THROWS_AS(verify_decay_bound(gf, short_d, 2.0), std::invalid_argument);
}

TEST_CASE("precondition violations are rejected up front") {
  HeatProblem p = classical_line(0.02);
  p.n_time = 10;  // wildly above the CFL limit
  CHECK_THROWS_WITH_AS(static_cast<void>(heat_solve(p)),
                       doctest::Contains("CFL"), std::invalid_argument);

  HeatProblem small = classical_line(0.02);
  small.domain_radius = 3.0;
  small.n_space = 301;
  CHECK_THROWS_AS(static_cast<void>(heat_solve(small)), std::invalid_argument);
}
