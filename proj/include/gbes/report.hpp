#pragma once

#include <string>

#include <json.hpp>

#include "gbes/bessel.hpp"
#include "gbes/gheat.hpp"
#include "gbes/montecarlo.hpp"
#include "gbes/verify.hpp"

namespace gbes {

using Json = nlohmann::ordered_json;

Json to_json(const EstimateReport& rep);
Json to_json(const CapacityReport& rep);
Json to_json(const OccupationReport& rep);
Json to_json(const DecayBoundReport& rep);
Json to_json(const SuiteReport& rep);
Json to_json(const ScaleCheckReport& rep);
Json to_json(const MomentBoundReport& rep);
Json to_json(const ItoDecomposition& rep);

// Round-trip representation of a double for CSV (shortest is left to JSON).
std::string format_double(double v);

// Writes text atomically enough for our purposes; creates parent dirs.
void write_text_file(const std::string& path, const std::string& content);
void write_json_file(const std::string& path, const Json& j);

// CSV emission: header row then format_double()-rendered cells.
std::string csv_from_columns(const std::vector<std::string>& header,
                             const std::vector<std::vector<double>>& columns);

std::string field_to_csv(const RadialField& field);             // t,s,u
std::string per_policy_csv(const EstimateReport& rep,
                           const ControlFamily& family);        // policy,mean,stderr
std::string bessel_path_csv(const BesselPath& bp,
                            const TruncatedPath* xpath = nullptr);  // t,R,beta,qv[,X]

}  // namespace gbes
