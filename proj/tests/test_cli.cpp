#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef GBES_CLI_PATH
#error "GBES_CLI_PATH must be defined by the build"
#endif

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(GBES_CLI_PATH) + " " + args +
                          " >/dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kTmp = "cli_test_artifacts";

}  // namespace

TEST_CASE("verify command passes in the classical configuration") {
  CHECK(run("verify --band 1,1 --d 3 --paths 800 --seed 4 --out " + kTmp +
            "/verify") == 0);
  const auto rep = nlohmann::json::parse(slurp(kTmp + "/verify/report.json"));
  CHECK(rep.at("pass").get<bool>());
  CHECK(rep.at("verify").at("rotation").at("pass").get<bool>());
  CHECK(rep.at("verify").at("equivalence").at("pass").get<bool>());
  CHECK(rep.at("verify").at("beta").at("pass").get<bool>());
}

TEST_CASE("constant payoff estimate is exact with zero stderr") {
  std::ofstream cfg(kTmp + "_estimate.json");
  cfg << R"({"payoff": {"kind": "constant", "c": 7.0},
             "family": {"constants": 3, "bang_bang": 2},
             "d": 2, "paths": 512})";
  cfg.close();
  CHECK(run("estimate --config " + kTmp + "_estimate.json --out " + kTmp +
            "/est") == 0);
  const auto rep = nlohmann::json::parse(slurp(kTmp + "/est/report.json"));
  CHECK(rep.at("estimate").at("upper").at("value").get<double>() == 7.0);
  CHECK(rep.at("estimate").at("upper").at("stderr").get<double>() == 0.0);
  CHECK(rep.at("estimate").at("lower").at("value").get<double>() == 7.0);
}

TEST_CASE("CFL-violating step count is a config error naming the bound") {
  CHECK(run("heat --n-steps 10 --out " + kTmp + "/cfl") == 2);
}

TEST_CASE("invalid band and unknown command exit with config errors") {
  CHECK(run("estimate --band 2,1 --out " + kTmp + "/bad") == 2);
  CHECK(run("frobnicate") == 2);
}

TEST_CASE("flags override config file values") {
  std::ofstream cfg(kTmp + "_seed.json");
  cfg << R"({"seed": 1, "payoff": {"kind": "constant", "c": 3.0},
             "family": {"constants": 2, "bang_bang": 1},
             "d": 1, "paths": 256})";
  cfg.close();
  CHECK(run("estimate --config " + kTmp + "_seed.json --seed 77 --out " +
            kTmp + "/ovr") == 0);
  const auto rep = nlohmann::json::parse(slurp(kTmp + "/ovr/report.json"));
  CHECK(rep.at("config").at("seed").get<std::uint64_t>() == 77);
}

TEST_CASE("repeated runs are byte-identical at any thread count") {
  std::ofstream cfg(kTmp + "_all.json");
  cfg << R"({"paths": 200, "seed": 9,
             "family": {"constants": 3, "bang_bang": 4}})";
  cfg.close();
  CHECK(run("all --config " + kTmp + "_all.json --threads 1 --out " + kTmp +
            "/d1") == 0);
  CHECK(run("all --config " + kTmp + "_all.json --threads 2 --out " + kTmp +
            "/d2") == 0);
  CHECK(run("all --config " + kTmp + "_all.json --threads 1 --out " + kTmp +
            "/d3") == 0);
  const std::string a = slurp(kTmp + "/d1/report.json");
  CHECK(a == slurp(kTmp + "/d2/report.json"));
  CHECK(a == slurp(kTmp + "/d3/report.json"));
  // Every report embeds the resolved config.
  const auto rep = nlohmann::json::parse(a);
  CHECK(rep.at("config").at("paths").get<std::uint64_t>() == 200);
}
