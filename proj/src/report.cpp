#include "gbes/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace gbes {

Json to_json(const EstimateReport& rep) {
  Json j;
  j["value"] = rep.value;
  j["stderr"] = rep.stderr_value;
  j["argmax_policy"] = rep.argmax_policy;
  j["argmax_index"] = rep.argmax_index;
  j["n_paths"] = rep.n_paths;
  j["near_tie"] = rep.near_tie;
  if (!rep.warning.empty()) j["warning"] = rep.warning;
  j["per_policy_means"] = rep.per_policy_means;
  return j;
}

Json to_json(const CapacityReport& rep) {
  Json j;
  j["indicator"] = to_json(rep.indicator);
  j["smoothed"] = to_json(rep.smoothed);
  j["c"] = rep.c;
  j["bound"] = rep.bound;
  j["pass"] = rep.indicator.value <= rep.bound + 3.0 * rep.indicator.stderr_value;
  return j;
}

Json to_json(const OccupationReport& rep) {
  Json j;
  j["estimate"] = to_json(rep.estimate);
  j["alpha"] = rep.alpha;
  j["bound"] = rep.bound;
  j["pass"] = rep.estimate.value <= rep.bound + 3.0 * rep.estimate.stderr_value;
  return j;
}

Json to_json(const DecayBoundReport& rep) {
  Json j;
  j["max_violation"] = rep.max_violation;
  j["t_argmax"] = rep.t_argmax;
  j["s_argmax"] = rep.s_argmax;
  j["tolerance"] = rep.tolerance;
  j["pass"] = rep.pass;
  return j;
}

Json to_json(const SuiteReport& rep) {
  Json j;
  j["suite"] = rep.suite;
  Json rows = Json::array();
  for (const CheckRow& c : rep.checks) {
    Json row;
    row["name"] = c.name;
    row["statistic"] = c.statistic;
    row["threshold"] = c.threshold;
    row["pass"] = c.pass;
    rows.push_back(row);
  }
  j["checks"] = rows;
  j["pass"] = rep.pass;
  return j;
}

Json to_json(const ScaleCheckReport& rep) {
  Json j;
  Json rows = Json::array();
  for (const ScalePolicyRow& r : rep.rows) {
    Json row;
    row["policy"] = r.policy;
    row["mean_h"] = r.mean_h;
    row["stderr_h"] = r.stderr_h;
    row["target"] = r.target;
    row["mean_pass"] = r.mean_pass;
    row["hit_freq"] = r.hit_freq;
    row["hit_stderr"] = r.hit_stderr;
    row["derived_bound"] = r.derived_bound;
    row["printed_bound"] = r.printed_bound;
    row["hit_pass"] = r.hit_pass;
    rows.push_back(row);
  }
  j["per_policy"] = rows;
  j["pass"] = rep.pass;
  return j;
}

Json to_json(const MomentBoundReport& rep) {
  Json j;
  j["second_moment"] = {{"estimate", rep.est2},
                        {"stderr", rep.se2},
                        {"bound", rep.bound2}};
  j["fourth_moment"] = {{"estimate", rep.est4},
                        {"stderr", rep.se4},
                        {"bound", rep.bound4}};
  j["pass"] = rep.pass;
  return j;
}

Json to_json(const ItoDecomposition& rep) {
  Json j;
  j["i_total"] = rep.i_total;
  j["j_term"] = rep.j_term;
  j["k_term"] = rep.k_term;
  j["identity_residual"] = rep.identity_residual;
  return j;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
}

void write_json_file(const std::string& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

std::string csv_from_columns(const std::vector<std::string>& header,
                             const std::vector<std::vector<double>>& columns) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out += ',';
      out += format_double(columns[c][r]);
    }
    out += '\n';
  }
  return out;
}

std::string field_to_csv(const RadialField& field) {
  std::string out = "t,s,u\n";
  for (std::size_t k = 0; k < field.times.size(); ++k) {
    for (std::size_t j = 0; j < field.coords.size(); ++j) {
      out += format_double(field.times[k]);
      out += ',';
      out += format_double(field.coords[j]);
      out += ',';
      out += format_double(field.at(k, j));
      out += '\n';
    }
  }
  return out;
}

std::string per_policy_csv(const EstimateReport& rep,
                           const ControlFamily& family) {
  std::string out = "policy,mean,stderr\n";
  for (std::size_t i = 0; i < rep.per_policy_means.size(); ++i) {
    out += '"' + family.policies[i].describe() + '"';
    out += ',';
    out += format_double(rep.per_policy_means[i]);
    out += ',';
    out += format_double(rep.per_policy_stderr[i]);
    out += '\n';
  }
  return out;
}

std::string bessel_path_csv(const BesselPath& bp, const TruncatedPath* xpath) {
  std::string out = xpath ? "t,R,beta,qv,X\n" : "t,R,beta,qv\n";
  for (std::size_t k = 0; k < bp.R.size(); ++k) {
    out += format_double(bp.grid.time(k));
    out += ',';
    out += format_double(bp.R[k]);
    out += ',';
    out += format_double(bp.beta.empty() ? 0.0 : bp.beta[k]);
    out += ',';
    out += format_double(bp.qv[k]);
    if (xpath) {
      out += ',';
      out += format_double(xpath->x[k]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace gbes
