#include "gbes/gheat.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gbes {

namespace {

struct Stencil {
  // Lap u at j = wl[j]*u[j-1] + wc[j]*u[j] + wr[j]*u[j+1]; boundary rows
  // are identity (handled outside).
  std::vector<double> wl, wc, wr;
};

Stencil build_stencil(const HeatProblem& p) {
  const int m = p.n_space;
  const double ds = p.ds();
  const double inv2 = 1.0 / (ds * ds);
  Stencil st;
  st.wl.assign(m, 0.0);
  st.wc.assign(m, 0.0);
  st.wr.assign(m, 0.0);
  if (p.mode == HeatMode::Line) {
    for (int j = 1; j + 1 < m; ++j) {
      st.wl[j] = inv2;
      st.wc[j] = -2.0 * inv2;
      st.wr[j] = inv2;
    }
  } else {
    // Conservative form of u_rr + (d-1)/r u_r: all off-diagonal weights
    // stay nonnegative, which the raw centered form loses near the origin
    // for d >= 4.
    const double dm1 = static_cast<double>(p.d - 1);
    st.wr[0] = 2.0 * p.d * inv2;  // symmetry: Lap u(0) = d * u_rr(0)
    st.wc[0] = -st.wr[0];
    for (int j = 1; j + 1 < m; ++j) {
      const double r = j * ds;
      const double fl = std::pow((r - 0.5 * ds) / r, dm1);
      const double fr = std::pow((r + 0.5 * ds) / r, dm1);
      st.wl[j] = fl * inv2;
      st.wr[j] = fr * inv2;
      st.wc[j] = -(st.wl[j] + st.wr[j]);
    }
  }
  return st;
}

double max_center_weight(const HeatProblem& p) {
  const Stencil st = build_stencil(p);
  double w = 0.0;
  for (double c : st.wc) w = std::max(w, -c);
  return w;
}

RadialField solve_impl(const HeatProblem& p, std::span<const double> initial,
                       HeatBoundary boundary) {
  const int m = p.n_space;
  if (m < 3) throw std::invalid_argument("heat_solve: n_space >= 3 required");
  if (p.mode == HeatMode::Line && m % 2 == 0)
    throw std::invalid_argument("heat_solve: n_space must be odd in line mode");
  if (p.mode == HeatMode::Radial && p.d < 2)
    throw std::invalid_argument("heat_solve: radial mode requires d >= 2");
  if (initial.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("heat_solve: initial data size mismatch");

  const int n_time = p.resolved_n_time();
  const double dt = p.t_end / n_time;
  if (dt > p.dt_max() * (1.0 + 1e-12))
    throw std::invalid_argument(
        "heat_solve: CFL violation, need dt <= ds^2/(hi^2 (d + kappa))");

  const Stencil st = build_stencil(p);
  const double ds = p.ds();
  const double s0 = p.mode == HeatMode::Line ? p.a_offset - p.domain_radius : 0.0;

  int store_every = p.store_every;
  if (store_every <= 0) store_every = std::max(1, (n_time + 1024) / 1024);

  RadialField field;
  field.coords.resize(m);
  for (int j = 0; j < m; ++j) field.coords[j] = s0 + j * ds;

  std::vector<double> u(initial.begin(), initial.end());
  std::vector<double> next(u.size());
  const double left_bc = boundary == HeatBoundary::Zero && p.mode == HeatMode::Line
                             ? 0.0
                             : u.front();
  const double right_bc = boundary == HeatBoundary::Zero ? 0.0 : u.back();

  auto store = [&](double t) {
    field.times.push_back(t);
    field.values.insert(field.values.end(), u.begin(), u.end());
  };
  store(0.0);

  for (int k = 0; k < n_time; ++k) {
    const int j_lo = p.mode == HeatMode::Line ? 1 : 0;
    for (int j = j_lo; j + 1 < m; ++j) {
      const double left = j > 0 ? u[j - 1] : 0.0;
      const double lap = st.wl[j] * left + st.wc[j] * u[j] + st.wr[j] * u[j + 1];
      next[j] = u[j] + dt * g_prime(lap, p.band);
    }
    if (p.mode == HeatMode::Line) next[0] = left_bc;
    next[m - 1] = right_bc;
    u.swap(next);
    if ((k + 1) % store_every == 0 || k + 1 == n_time)
      store(dt * (k + 1));
  }
  return field;
}

}  // namespace

double HeatProblem::ds() const {
  if (n_space < 2) throw std::invalid_argument("HeatProblem: n_space too small");
  if (mode == HeatMode::Line)
    return 2.0 * domain_radius / (n_space - 1);
  return domain_radius / (n_space - 1);
}

double HeatProblem::dt_max() const {
  const double h = ds();
  const double kappa = std::max(cfl_safety, 1.0);
  const double deff = mode == HeatMode::Radial ? static_cast<double>(d) : 1.0;
  const double stated = h * h / (band.hi2() * (deff + kappa));
  const double monotone = 2.0 / (band.hi2() * max_center_weight(*this));
  return std::min(stated, monotone);
}

int HeatProblem::resolved_n_time() const {
  if (n_time > 0) return n_time;
  return static_cast<int>(std::ceil(t_end / dt_max() - 1e-12));
}

std::vector<double> heat_initial_data(const HeatProblem& p) {
  std::vector<double> u0(static_cast<std::size_t>(p.n_space));
  const double ds = p.ds();
  const double denom = 2.0 * p.band.hi2();
  for (int j = 0; j < p.n_space; ++j) {
    const double s = p.mode == HeatMode::Line
                         ? (p.a_offset - p.domain_radius) + j * ds - p.a_offset
                         : j * ds;
    u0[static_cast<std::size_t>(j)] = std::exp(-p.n * s * s / denom);
  }
  return u0;
}

RadialField heat_solve(const HeatProblem& p) {
  if (!(p.n > 0.0)) throw std::invalid_argument("heat_solve: n > 0 required");
  const double needed =
      6.0 * p.band.hi() * std::sqrt(p.t_end) + 6.0 * std::sqrt(p.band.hi2() / p.n);
  if (p.domain_radius < needed)
    throw std::invalid_argument(
        "heat_solve: domain too small for far-field truncation (need >= 6 hi "
        "sqrt(t_end) + 6 sqrt(hi^2/n))");
  const std::vector<double> u0 = heat_initial_data(p);
  if (u0.back() > 1e-8)
    throw std::invalid_argument(
        "heat_solve: initial data exceeds 1e-8 at the boundary");
  return solve_impl(p, u0, HeatBoundary::Zero);
}

RadialField heat_solve_with_data(const HeatProblem& p,
                                 std::span<const double> initial,
                                 HeatBoundary boundary) {
  return solve_impl(p, initial, boundary);
}

double decay_bound(double t, double n, double c, const VolatilityBand& band) {
  if (t < 0.0) throw std::invalid_argument("decay_bound: t >= 0 required");
  return std::pow(1.0 + n * t, -c * band.rho());
}

DecayBoundReport verify_decay_bound(const RadialField& field,
                                    const HeatProblem& p, double c,
                                    double tolerance_override) {
  if (!dimension_check(p.d, p.band).pass)
    throw std::invalid_argument(
        "verify_decay_bound: dimension condition d >= floor(hi^2/lo^2)+1 fails");
  if (c < 0.0 || c > static_cast<double>(p.d))
    throw std::invalid_argument("verify_decay_bound: c must lie in [0, d]");

  DecayBoundReport rep;
  rep.tolerance = tolerance_override > 0.0
                      ? tolerance_override
                      : 10.0 * p.ds() * p.ds() * p.n * p.band.hi2() * p.t_end;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < field.times.size(); ++k) {
    const double bound = decay_bound(field.times[k], p.n, c, p.band);
    for (std::size_t j = 0; j < field.coords.size(); ++j) {
      const double v = field.at(k, j) - bound;
      if (v > rep.max_violation) {
        rep.max_violation = v;
        rep.t_argmax = field.times[k];
        rep.s_argmax = field.coords[j];
      }
    }
  }
  rep.pass = rep.max_violation <= rep.tolerance;
  return rep;
}

}  // namespace gbes
