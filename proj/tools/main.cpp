// Command-line front end: wires JSON/flag configuration to the solver,
// estimator and suite runs, and emits deterministic reports plus plot-ready
// CSV data. Exit codes: 0 all checks pass, 1 check failure, 2 config error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gbes/bessel.hpp"
#include "gbes/core.hpp"
#include "gbes/gheat.hpp"
#include "gbes/montecarlo.hpp"
#include "gbes/report.hpp"
#include "gbes/rng.hpp"
#include "gbes/verify.hpp"

using namespace gbes;

namespace {

struct RunConfig {
  double band_lo = 1.0;
  double band_hi = 2.0;
  int d = 5;
  double t_end = 1.0;
  std::uint64_t n_steps = 0;  // 0: per-command default
  std::uint64_t n_paths = 2000;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out = "out";

  double heat_n = 4.0;        // Gaussian sharpness of the initial data
  double c = -1.0;            // decay exponent weight; -1 resolves to d
  double ds = 0.02;
  double domain_radius = 0.0; // 0: auto from the far-field precondition
  double eps = 0.1;
  double alpha = 0.0;         // 0: resolves to c * rho
  double m = 2.0;
  int level_n = 2;
  double r = 1.0;
  double angle_deg = 90.0;
  std::string payoff_kind = "coord_square";
  double payoff_c = 7.0;
  double payoff_cap = 64.0;
  int fam_constants = 9;
  int fam_bang_bang = 32;

  VolatilityBand band() const { return VolatilityBand(band_lo, band_hi); }
  double resolved_c() const { return c < 0.0 ? static_cast<double>(d) : c; }
  double resolved_alpha() const {
    return alpha > 0.0 ? alpha : resolved_c() * band().rho();
  }
  std::uint64_t steps_or(std::uint64_t fallback) const {
    return n_steps > 0 ? n_steps : fallback;
  }
};

void apply_json(RunConfig& cfg, const Json& j) {
  if (j.contains("band")) {
    cfg.band_lo = j["band"].at(0).get<double>();
    cfg.band_hi = j["band"].at(1).get<double>();
  }
  auto get = [&](const char* key, auto& slot) {
    if (j.contains(key)) slot = j[key].get<std::decay_t<decltype(slot)>>();
  };
  get("d", cfg.d);
  get("t_end", cfg.t_end);
  get("n_steps", cfg.n_steps);
  get("paths", cfg.n_paths);
  get("seed", cfg.seed);
  get("threads", cfg.threads);
  get("out", cfg.out);
  get("heat_n", cfg.heat_n);
  get("c", cfg.c);
  get("ds", cfg.ds);
  get("domain_radius", cfg.domain_radius);
  get("eps", cfg.eps);
  get("alpha", cfg.alpha);
  get("m", cfg.m);
  get("level_n", cfg.level_n);
  get("r", cfg.r);
  get("angle_deg", cfg.angle_deg);
  if (j.contains("payoff")) {
    const Json& p = j["payoff"];
    if (p.contains("kind")) cfg.payoff_kind = p["kind"].get<std::string>();
    if (p.contains("c")) cfg.payoff_c = p["c"].get<double>();
    if (p.contains("cap")) cfg.payoff_cap = p["cap"].get<double>();
  }
  if (j.contains("family")) {
    const Json& f = j["family"];
    if (f.contains("constants")) cfg.fam_constants = f["constants"].get<int>();
    if (f.contains("bang_bang")) cfg.fam_bang_bang = f["bang_bang"].get<int>();
  }
}

Json config_json(const RunConfig& cfg) {
  Json j;
  j["band"] = {cfg.band_lo, cfg.band_hi};
  j["d"] = cfg.d;
  j["t_end"] = cfg.t_end;
  j["n_steps"] = cfg.n_steps;
  j["paths"] = cfg.n_paths;
  j["seed"] = cfg.seed;
  j["heat_n"] = cfg.heat_n;
  j["c"] = cfg.resolved_c();
  j["ds"] = cfg.ds;
  j["domain_radius"] = cfg.domain_radius;
  j["eps"] = cfg.eps;
  j["alpha"] = cfg.resolved_alpha();
  j["m"] = cfg.m;
  j["level_n"] = cfg.level_n;
  j["r"] = cfg.r;
  j["angle_deg"] = cfg.angle_deg;
  j["payoff"] = {{"kind", cfg.payoff_kind},
                 {"c", cfg.payoff_c},
                 {"cap", cfg.payoff_cap}};
  j["family"] = {{"constants", cfg.fam_constants},
                 {"bang_bang", cfg.fam_bang_bang}};
  return j;
}

Payoff build_payoff(const RunConfig& cfg) {
  if (cfg.payoff_kind == "constant") {
    const double value = cfg.payoff_c;
    return Payoff::terminal("constant",
                            [value](std::span<const double>) { return value; });
  }
  if (cfg.payoff_kind == "coord_square") {
    return Payoff::terminal(
        "coord_square",
        [](std::span<const double> x) { return x[0] * x[0]; },
        /*bounded=*/false);
  }
  if (cfg.payoff_kind == "norm_square_trunc") {
    const double cap = cfg.payoff_cap;
    Payoff p = Payoff::terminal(
        "norm_square_trunc", [cap](std::span<const double> x) {
          double s = 0.0;
          for (double v : x) s += v * v;
          return std::min(s, cap);
        });
    p.convexity_hint = [cap](double, std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v * v;
      return cap - s;
    };
    return p;
  }
  if (cfg.payoff_kind == "gaussian_bump") {
    const double sharp = cfg.heat_n;
    const double denom = 2.0 * cfg.band_hi * cfg.band_hi;
    Payoff p = Payoff::terminal(
        "gaussian_bump", [sharp, denom](std::span<const double> x) {
          double s = 0.0;
          for (double v : x) s += v * v;
          return std::exp(-sharp * s / denom);
        });
    p.convexity_hint = [sharp, denom](double, std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v * v;
      return sharp * s - denom;  // convex outside the bump core
    };
    return p;
  }
  throw std::invalid_argument("unknown payoff kind: " + cfg.payoff_kind);
}

std::vector<double> start_vector(const RunConfig& cfg) {
  std::vector<double> x(static_cast<std::size_t>(cfg.d), 0.0);
  x[0] = cfg.r;
  return x;
}

// ---- commands -------------------------------------------------------------

Json run_heat(const RunConfig& cfg, bool& pass, const std::string& out_prefix) {
  HeatProblem p;
  p.band = cfg.band();
  p.d = cfg.d;
  p.mode = cfg.d == 1 ? HeatMode::Line : HeatMode::Radial;
  p.n = cfg.heat_n;
  p.t_end = cfg.t_end;
  const double auto_radius = 6.0 * p.band.hi() * std::sqrt(p.t_end) +
                             6.0 * std::sqrt(p.band.hi2() / p.n) + 1.0;
  p.domain_radius = cfg.domain_radius > 0.0 ? cfg.domain_radius : auto_radius;
  const double width = p.mode == HeatMode::Line ? 2.0 * p.domain_radius
                                                : p.domain_radius;
  int n_space = static_cast<int>(std::lround(width / cfg.ds)) + 1;
  if (p.mode == HeatMode::Line && n_space % 2 == 0) ++n_space;
  p.n_space = n_space;
  p.n_time = static_cast<int>(cfg.n_steps);

  const RadialField field = heat_solve(p);
  write_text_file(out_prefix + "field.csv", field_to_csv(field));

  Json j;
  j["problem"] = {{"mode", p.mode == HeatMode::Line ? "line" : "radial"},
                  {"n_space", p.n_space},
                  {"n_time", p.resolved_n_time()},
                  {"domain_radius", p.domain_radius}};
  j["center_value_at_t_end"] = field.at(
      field.times.size() - 1,
      p.mode == HeatMode::Line ? static_cast<std::size_t>(p.n_space / 2) : 0);

  pass = true;
  if (p.d >= 2 && dimension_check(p.d, p.band).pass) {
    const DecayBoundReport rep = verify_decay_bound(field, p, cfg.resolved_c());
    j["decay_bound"] = to_json(rep);
    pass = rep.pass;
  } else {
    j["decay_bound"] = nullptr;
  }
  return j;
}

Json run_estimate(const RunConfig& cfg, bool& pass,
                  const std::string& out_prefix) {
  const VolatilityBand band = cfg.band();
  const TimeGrid grid(cfg.t_end, cfg.steps_or(256));
  const Payoff payoff = build_payoff(cfg);
  const ControlFamily fam = make_family(band, grid.t_end(), cfg.seed,
                                        cfg.fam_constants, cfg.fam_bang_bang,
                                        &payoff);
  const std::vector<double> start = start_vector(cfg);
  const EstimateReport upper = estimate_upper(
      payoff, fam, grid, cfg.d, start, band, cfg.n_paths, cfg.seed, cfg.threads);
  const EstimateReport lower = estimate_lower(
      payoff, fam, grid, cfg.d, start, band, cfg.n_paths, cfg.seed, cfg.threads);
  write_text_file(out_prefix + "per_policy_means.csv",
                  per_policy_csv(upper, fam));

  Json j;
  j["payoff"] = payoff.name;
  j["family"] = fam.spec_desc;
  j["upper"] = to_json(upper);
  j["lower"] = to_json(lower);
  pass = lower.value <= upper.value;
  return j;
}

Json run_capacity(const RunConfig& cfg, bool& pass,
                  const std::string& out_prefix) {
  const VolatilityBand band = cfg.band();
  const TimeGrid grid(cfg.t_end, cfg.steps_or(1024));
  const ControlFamily fam = make_family(band, grid.t_end(), cfg.seed,
                                        cfg.fam_constants, cfg.fam_bang_bang);
  const std::vector<double> start = start_vector(cfg);
  const std::vector<double> center(static_cast<std::size_t>(cfg.d), 0.0);

  const CapacityReport cap =
      capacity_ball(cfg.t_end, center, cfg.eps, fam, grid, cfg.d, start, band,
                    cfg.n_paths, cfg.seed, cfg.resolved_c(), cfg.threads);
  const OccupationReport occ = occupation_integral(
      cfg.t_end, center, cfg.eps, fam, grid, cfg.d, start, band, cfg.n_paths,
      cfg.seed, cfg.resolved_alpha(), cfg.threads);
  write_text_file(out_prefix + "capacity_per_policy.csv",
                  per_policy_csv(cap.indicator, fam));

  Json j;
  j["ball"] = to_json(cap);
  j["occupation"] = to_json(occ);
  pass = j["ball"]["pass"].get<bool>() && j["occupation"]["pass"].get<bool>();
  return j;
}

Json run_bessel(const RunConfig& cfg, bool& pass,
                const std::string& out_prefix) {
  const VolatilityBand band = cfg.band();
  Json j;
  bool all_ok = true;

  // Radial SDE identity under refinement (nested drivers).
  {
    const std::size_t fine_steps = cfg.steps_or(4096);
    const std::size_t levels = 5;
    if (fine_steps % (1u << (levels - 1)) != 0)
      throw std::invalid_argument("bessel: n_steps must be divisible by 16");
    const std::size_t n_paths = std::min<std::size_t>(cfg.n_paths, 256);
    const ControlPolicy policy = ControlPolicy::bang_bang(
        cfg.t_end / 3.0, 2.0 * cfg.t_end / 3.0, band.hi2(), band.lo2(),
        band.hi2());
    std::vector<std::vector<double>> sup(levels, std::vector<double>(n_paths));
    const std::vector<double> start = start_vector(cfg);
    parallel_for(n_paths, cfg.threads, [&](std::size_t p) {
      const GPath fine = simulate_gpath(TimeGrid(cfg.t_end, fine_steps), cfg.d,
                                        start, policy, band,
                                        derive_seed(cfg.seed, "bessel.sde"), p);
      for (std::size_t lvl = 0; lvl < levels; ++lvl) {
        const std::size_t factor = 1u << (levels - 1 - lvl);
        const GPath path = factor == 1 ? fine : coarsen(fine, factor);
        sup[lvl][p] = sde_residual(extract_beta(path), cfg.d).sup_residual;
      }
    });
    std::vector<double> med(levels), dts(levels);
    for (std::size_t lvl = 0; lvl < levels; ++lvl) {
      std::sort(sup[lvl].begin(), sup[lvl].end());
      med[lvl] = sup[lvl][n_paths / 2];
      dts[lvl] =
          cfg.t_end / static_cast<double>(fine_steps >> (levels - 1 - lvl));
    }
    const double order = fit_loglog_slope(dts, med);
    j["sde_residual"] = {{"median_sup_residual", med},
                         {"dt", dts},
                         {"fitted_order", order},
                         {"pass", order >= 0.4}};
    all_ok = all_ok && order >= 0.4;
  }

  TruncatedSdeConfig tcfg;
  tcfg.r = cfg.r;
  tcfg.m = cfg.m;
  tcfg.n = cfg.level_n;
  tcfg.band = band;
  tcfg.grid = TimeGrid(cfg.t_end, cfg.steps_or(8192));
  const ControlFamily fam = make_family(band, cfg.t_end, cfg.seed,
                                        std::min(cfg.fam_constants, 5),
                                        std::min(cfg.fam_bang_bang, 4));

  const MomentBoundReport moments =
      moment_bounds_check(tcfg, fam, cfg.n_paths, cfg.seed, cfg.threads);
  j["moment_bounds"] = to_json(moments);
  all_ok = all_ok && moments.pass;

  const ScaleCheckReport scale = scale_function_check(
      tcfg, fam, cfg.n_paths, cfg.t_end, cfg.seed, cfg.threads);
  j["scale_check"] = to_json(scale);
  all_ok = all_ok && scale.pass;

  // Boundary-layer decay of the smoothed Ito expansion.
  {
    const TimeGrid grid(cfg.t_end, 512);
    std::vector<double> start(static_cast<std::size_t>(cfg.d), 0.0);
    start[0] = 0.1;
    const std::size_t n_paths = std::min<std::size_t>(cfg.n_paths, 2000);
    Json trend = Json::array();
    double prev = std::numeric_limits<double>::infinity();
    bool decreasing = true;
    for (int n : {4, 6, 8}) {
      double best = 0.0;
      for (const ControlPolicy& policy : fam.policies) {
        double acc = 0.0;
        GPath scratch;
        for (std::size_t p = 0; p < n_paths; ++p) {
          simulate_gpath_into(scratch, grid, cfg.d, start, policy, band,
                              derive_seed(cfg.seed, "bessel.k"), p);
          acc += std::abs(ito_decomposition(scratch, n).k_term);
        }
        best = std::max(best, acc / static_cast<double>(n_paths));
      }
      trend.push_back({{"eps_index", n}, {"estimate", best}});
      decreasing = decreasing && best < prev;
      prev = best;
    }
    j["boundary_layer"] = {{"trend", trend}, {"pass", decreasing}};
    all_ok = all_ok && decreasing;
  }

  // Sample path dump.
  {
    const GPath sample =
        simulate_gpath(TimeGrid(cfg.t_end, 1024), cfg.d, start_vector(cfg),
                       ControlPolicy::constant(band.hi2()), band, cfg.seed, 0);
    const BesselPath bp = extract_beta(sample);
    TruncatedSdeConfig scfg = tcfg;
    scfg.grid = TimeGrid(cfg.t_end, 1024);
    const TruncatedPath xp =
        euler_truncated(scfg, ControlPolicy::constant(band.hi2()), cfg.seed, 0);
    write_text_file(out_prefix + "path.csv", bessel_path_csv(bp, &xp));
  }

  pass = all_ok;
  return j;
}

Json run_verify(const RunConfig& cfg, bool& pass,
                const std::string& out_prefix) {
  const VolatilityBand band = cfg.band();
  const TimeGrid grid(cfg.t_end, cfg.steps_or(1024));
  const ControlFamily fam =
      make_family(band, grid.t_end(), cfg.seed, std::min(cfg.fam_constants, 3),
                  std::min(cfg.fam_bang_bang, 4));

  const int rd = std::max(cfg.d, 2);
  std::vector<double> x(static_cast<std::size_t>(rd), 0.0);
  x[0] = cfg.r;
  const SquareMatrix q = SquareMatrix::plane_rotation(
      rd, cfg.angle_deg * std::numbers::pi / 180.0);
  const SuiteReport rotation = rotation_suite(
      x, q, fam, grid, band, cfg.n_paths, derive_seed(cfg.seed, "rot"),
      cfg.threads);
  const SuiteReport equivalence =
      equivalence_suite(band, rd, grid, std::min<std::size_t>(cfg.n_paths, 512),
                        derive_seed(cfg.seed, "equiv"), cfg.threads);
  const SuiteReport beta = beta_suite(x, fam, grid, band, cfg.n_paths,
                                      derive_seed(cfg.seed, "beta"),
                                      cfg.threads);
  Json j;
  j["rotation"] = to_json(rotation);
  j["equivalence"] = to_json(equivalence);
  j["beta"] = to_json(beta);
  write_json_file(out_prefix + "suites.json", j);
  pass = rotation.pass && equivalence.pass && beta.pass;
  return j;
}

const char* kSchemas =
    R"({
  "field.csv": ["t", "s", "u"],
  "per_policy_means.csv": ["policy", "mean", "stderr"],
  "capacity_per_policy.csv": ["policy", "mean", "stderr"],
  "path.csv": ["t", "R", "beta", "qv", "X"]
}
)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for volatility-uncertain Brownian "
               "motion, nonlinear heat equations and radial processes"};
  app.fallthrough();

  std::string config_path;
  RunConfig cfg;
  std::optional<int> f_d, f_level_n, f_threads;
  std::optional<double> f_eps, f_m, f_c, f_t_end, f_r, f_alpha;
  std::optional<std::uint64_t> f_seed, f_paths, f_steps;
  std::optional<std::string> f_out;

  app.add_option("--config", config_path, "JSON config file");
  std::pair<double, double> band_flag;
  auto* band_opt =
      app.add_option("--band", band_flag, "volatility band LO,HI")
          ->delimiter(',');
  app.add_option("--seed", f_seed, "random seed");
  app.add_option("--out", f_out, "output directory");
  app.add_option("--threads", f_threads, "worker pool size");
  app.add_option("--paths", f_paths, "Monte Carlo paths");
  app.add_option("--d", f_d, "spatial dimension");
  app.add_option("--eps", f_eps, "ball radius / occupation width");
  app.add_option("--m", f_m, "drift weight of the truncated SDE");
  app.add_option("--level-n", f_level_n, "truncation level n");
  app.add_option("--c", f_c, "decay exponent weight c");
  app.add_option("--t-end", f_t_end, "horizon");
  app.add_option("--n-steps", f_steps, "grid steps (PDE time steps for heat)");
  app.add_option("--r", f_r, "radial start");
  app.add_option("--alpha", f_alpha, "occupation exponent alpha");

  app.require_subcommand(1);
  auto* cmd_heat = app.add_subcommand("heat", "solve + decay-bound check");
  auto* cmd_estimate = app.add_subcommand("estimate", "upper/lower expectation");
  auto* cmd_capacity =
      app.add_subcommand("capacity", "ball capacity + occupation integral");
  auto* cmd_bessel = app.add_subcommand("bessel", "radial process battery");
  auto* cmd_verify = app.add_subcommand("verify", "structural suites");
  auto* cmd_all = app.add_subcommand("all", "full battery");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw std::invalid_argument("cannot read config: " + config_path);
      Json j;
      try {
        in >> j;
      } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config parse failure: ") +
                                    e.what());
      }
      apply_json(cfg, j);
    }
    if (band_opt->count()) {
      cfg.band_lo = band_flag.first;
      cfg.band_hi = band_flag.second;
    }
    if (f_seed) cfg.seed = *f_seed;
    if (f_out) cfg.out = *f_out;
    if (f_threads) cfg.threads = *f_threads;
    if (f_paths) cfg.n_paths = *f_paths;
    if (f_d) cfg.d = *f_d;
    if (f_eps) cfg.eps = *f_eps;
    if (f_m) cfg.m = *f_m;
    if (f_level_n) cfg.level_n = *f_level_n;
    if (f_c) cfg.c = *f_c;
    if (f_t_end) cfg.t_end = *f_t_end;
    if (f_steps) cfg.n_steps = *f_steps;
    if (f_r) cfg.r = *f_r;
    if (f_alpha) cfg.alpha = *f_alpha;

    (void)cfg.band();  // validates 0 < lo <= hi
    if (cfg.d < 1) throw std::invalid_argument("d >= 1 required");
    if (!(cfg.t_end > 0.0)) throw std::invalid_argument("t_end > 0 required");

    const std::string out_dir = cfg.out + "/";
    Json report;
    report["command"] = app.get_subcommands().front()->get_name();
    report["config"] = config_json(cfg);
    bool pass = true;

    if (cmd_heat->parsed()) {
      report["heat"] = run_heat(cfg, pass, out_dir);
    } else if (cmd_estimate->parsed()) {
      report["estimate"] = run_estimate(cfg, pass, out_dir);
    } else if (cmd_capacity->parsed()) {
      report["capacity"] = run_capacity(cfg, pass, out_dir);
    } else if (cmd_bessel->parsed()) {
      report["bessel"] = run_bessel(cfg, pass, out_dir);
    } else if (cmd_verify->parsed()) {
      report["verify"] = run_verify(cfg, pass, out_dir);
    } else if (cmd_all->parsed()) {
      bool ok = true;
      bool sub = true;
      report["heat"] = run_heat(cfg, sub, out_dir);
      ok = ok && sub;
      report["estimate"] = run_estimate(cfg, sub, out_dir);
      ok = ok && sub;
      report["capacity"] = run_capacity(cfg, sub, out_dir);
      ok = ok && sub;
      report["bessel"] = run_bessel(cfg, sub, out_dir);
      ok = ok && sub;
      report["verify"] = run_verify(cfg, sub, out_dir);
      ok = ok && sub;
      pass = ok;
    }
    report["pass"] = pass;

    write_json_file(out_dir + "report.json", report);
    write_text_file(out_dir + "schema.json", kSchemas);
    Json meta;
    meta["generated_unix_time"] = static_cast<std::int64_t>(std::time(nullptr));
    meta["threads"] = cfg.threads;
    write_json_file(out_dir + "meta.json", meta);

    std::cout << (pass ? "PASS" : "FAIL") << " -> " << out_dir << "report.json"
              << std::endl;
    return pass ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << std::endl;
    return 1;
  }
}
