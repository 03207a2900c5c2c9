#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "amlmc/error.hpp"
#include "amlmc/experiment.hpp"
#include "amlmc/payoffs.hpp"

using namespace amlmc;
namespace fs = std::filesystem;

namespace {

std::string config_error(const std::string& text, const FlagMap& flags = {}) {
  try {
    parse_config(text, flags);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

bool contains(const std::string& s, const std::string& part) {
  return s.find(part) != std::string::npos;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("amlmc_test_config_" + name);
  fs::remove_all(dir);
  return dir;
}

const char* kFullConfig = R"(# comment
[experiment]
mode = variance_study
scheme = euler_coupled
seed = 42
levels = 2-4, 6
samples = 1e3, 2000, 3000, 4000
n0 = 2
horizon = 0.5
workers = 3
out = somewhere

[model]
name = geometric_multi
sigma = 0.1,0.2

[payoff]
name = european_call
strike = 1.1
)";

}  // namespace

TEST_CASE("defaults") {
  const ExperimentConfig c = parse_config("");
  CHECK(c.mode == Mode::estimate);
  CHECK(c.model == "geometric_multi");
  CHECK(c.payoff == "smooth_quadratic_capped");
  CHECK(c.scheme == CouplingScheme::antithetic_milstein);
  CHECK(c.levels == std::vector<int>{1, 2, 3, 4, 5, 6, 7});
  CHECK(c.samples_at(3) == 100000);
  CHECK(c.workers == 1);
}

TEST_CASE("full file") {
  const ExperimentConfig c = parse_config(kFullConfig);
  CHECK(c.mode == Mode::variance_study);
  CHECK(c.scheme == CouplingScheme::euler_coupled);
  CHECK(c.seed == 42);
  CHECK(c.levels == std::vector<int>{2, 3, 4, 6});
  CHECK(c.samples_at(0) == 1000);
  CHECK(c.samples_at(3) == 4000);
  CHECK(c.n0 == 2);
  CHECK(c.horizon == 0.5);
  CHECK(c.workers == 3);
  CHECK(c.out == "somewhere");
  CHECK(c.model_params.at("sigma") == "0.1,0.2");
  CHECK(c.payoff == "european_call");
  CHECK(c.payoff_params.at("strike") == "1.1");
}

TEST_CASE("flags override the file") {
  const std::string file = "[experiment]\nseed = 5\neps = 0.1\n[model]\nname = geometric_multi\nsigma = 0.1,0.2\n";
  const ExperimentConfig c =
      parse_config(file, {{"seed", "9"}, {"model", "noncommutative_test:sigma1=0.25;mu=0,0"}});
  CHECK(c.seed == 9);
  CHECK(c.epsilons == std::vector<double>{0.1});
  CHECK(c.model == "noncommutative_test");
  // The flag replaces the whole section, so sigma does not leak through.
  CHECK(c.model_params == ParamMap{{"sigma1", "0.25"}, {"mu", "0,0"}});

  const ExperimentConfig d = parse_config("", {{"payoff", "asian_call"}});
  CHECK(d.payoff == "asian_call");
  CHECK(d.payoff_params.empty());
}

TEST_CASE("syntax errors name the line") {
  CHECK(contains(config_error("[experiment]\nseed = 1\nseed = 2\n"), "line 3"));
  CHECK(contains(config_error("[experiment]\n[experiment]\n"), "duplicate section"));
  CHECK(contains(config_error("seed = 1\n"), "outside a section"));
  CHECK(contains(config_error("[results]\n"), "unknown section"));
  CHECK(contains(config_error("[experiment\n"), "malformed"));
  CHECK(contains(config_error("[experiment]\nseed\n"), "expected key = value"));
  CHECK(contains(config_error("[model]\nsigma = 1\n"), "no name"));
  // Comments must stand on their own line.
  CHECK(contains(config_error("[experiment]\n\nhorizon = 0.5 ; half\n"), "line 3"));
}

TEST_CASE("unknown keys and values are reported") {
  const std::string msg = config_error("[experiment]\nepsilon = 0.1\n");
  CHECK(contains(msg, "epsilon"));
  CHECK(contains(msg, "eps"));
  CHECK(contains(config_error("", {{"tolerance", "1"}}), "tolerance"));
  CHECK(contains(config_error("", {{"mode", "fast"}}), "validate"));
  CHECK(contains(config_error("", {{"scheme", "antithetic"}}), "euler_coupled"));
  CHECK(contains(config_error("", {{"seed", "-1"}}), "seed"));
  CHECK(contains(config_error("", {{"eps", "0"}}), "eps"));
  CHECK(contains(config_error("", {{"eps", "0.1,0.2"}}), "single"));
  CHECK(contains(config_error("", {{"samples", "1"}}), "samples"));
  CHECK(contains(config_error("", {{"samples", "5,6"}}), "samples"));
  CHECK(contains(config_error("", {{"samples", "2.5"}}), "samples"));
  CHECK(contains(config_error("", {{"initial_samples", "50"}}), "initial_samples"));
  CHECK(contains(config_error("", {{"workers", "0"}}), "workers"));
  CHECK(contains(config_error("", {{"horizon", "-1"}}), "horizon"));
  CHECK(contains(config_error("", {{"n0", "0"}}), "n0"));
  CHECK(contains(config_error("", {{"model", "sine:a"}}), "key=value"));
}

TEST_CASE("unknown model and payoff names list the builtins") {
  const std::string m = config_error("", {{"model", "heston"}});
  for (const std::string& name : builtin_model_names()) CHECK(contains(m, name));
  const std::string p = config_error("", {{"payoff", "digital"}});
  for (const std::string& name : builtin_payoff_names()) CHECK(contains(p, name));
  CHECK(contains(config_error("", {{"model", "geometric_multi:sigma=0.1;mu=1,2,3"}}), "mu"));
}

TEST_CASE("levels") {
  CHECK(parse_config("", {{"levels", "0-3"}}).levels == std::vector<int>{0, 1, 2, 3});
  CHECK(parse_config("", {{"levels", "1,3,5"}}).levels == std::vector<int>{1, 3, 5});
  CHECK(parse_config("", {{"levels", "0,2-4"}}).levels == std::vector<int>{0, 2, 3, 4});
  CHECK(contains(config_error("", {{"levels", "3,2"}}), "increasing"));
  CHECK(contains(config_error("", {{"levels", "4-2"}}), "empty range"));
  CHECK(contains(config_error("", {{"levels", "-1"}}), "levels"));
  CHECK(contains(config_error("", {{"levels", "25"}}), "levels"));
  CHECK(contains(config_error("", {{"levels", "x"}}), "levels"));
}

TEST_CASE("mode-specific constraints") {
  CHECK(contains(config_error("", {{"mode", "strong_error_study"}, {"levels", "0-3"}}),
                 "levels"));
  CHECK(contains(config_error("", {{"mode", "validate"}}), "clark_cameron"));
  CHECK_NOTHROW(parse_config("", {{"mode", "validate"}, {"model", "clark_cameron"}}));
  CHECK_NOTHROW(parse_config("", {{"mode", "complexity_study"}, {"eps", "0.1,0.05"}}));
}

TEST_CASE("render round-trips") {
  const ExperimentConfig c = parse_config(
      "", {{"mode", "complexity_study"},
           {"eps", "0.04,0.02"},
           {"levels", "0-2,5"},
           {"samples", "10,20,30,40"},
           {"horizon", "0.75"},
           {"workers", "2"},
           {"model", "geometric_multi:sigma=0.1,0.2;rho=0.5"},
           {"payoff", "smooth_quadratic_capped:notional=100"}});
  const std::string text = render_config(c);
  const ExperimentConfig back = parse_config(text);
  CHECK(render_config(back) == text);
  CHECK(back.epsilons == c.epsilons);
  CHECK(back.levels == c.levels);
  CHECK(back.samples == c.samples);
  CHECK(back.model_params == c.model_params);
  CHECK(back.payoff_params == c.payoff_params);
  CHECK(back.workers == 2);

  const std::string header = render_config(c, false);
  CHECK_FALSE(contains(header, "workers"));
  CHECK_FALSE(contains(header, "out ="));
  CHECK(parse_config(header).workers == 1);
}

TEST_CASE("load_config reads a file") {
  const fs::path dir = scratch_dir("load");
  fs::create_directories(dir);
  const fs::path file = dir / "run.ini";
  std::ofstream(file) << "[experiment]\nseed = 77\n";
  CHECK(load_config(file.string(), {}).seed == 77);
  CHECK(load_config(file.string(), {{"seed", "78"}}).seed == 78);
  CHECK(load_config(std::nullopt, {}).seed == 1);
  CHECK_THROWS_AS(load_config((dir / "missing.ini").string(), {}), Error);
  fs::remove_all(dir);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ErrorKind::config) == 1);
  CHECK(exit_code_for(ErrorKind::invalid_argument) == 1);
  CHECK(exit_code_for(ErrorKind::validation) == 2);
  CHECK(exit_code_for(ErrorKind::nonconvergence) == 3);
  CHECK(exit_code_for(ErrorKind::divergence) == 4);
}

TEST_CASE("variance study writes a self-describing csv") {
  const fs::path dir = scratch_dir("variance");
  ExperimentConfig c = parse_config(
      "", {{"mode", "variance_study"}, {"levels", "0-3"}, {"samples", "500"}});
  c.out = dir.string();
  const ExperimentReport r = run_experiment(c);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "resolved_config.ini"));
  CHECK(fs::exists(dir / "variance_study.csv"));
  CHECK(parse_config(read_file(dir / "resolved_config.ini")).levels == c.levels);

  std::istringstream csv(read_file(dir / "variance_study.csv"));
  std::string line, header_text;
  std::vector<std::string> rows;
  std::getline(csv, line);
  CHECK(line == "# amlmc variance_study report");
  while (std::getline(csv, line)) {
    if (line.rfind("# ", 0) == 0) {
      header_text += line.substr(2) + "\n";
    } else if (line == "#") {
      header_text += "\n";
    } else {
      rows.push_back(line);
    }
  }
  // The embedded header is itself a loadable configuration.
  CHECK(render_config(parse_config(header_text), false) == render_config(c, false));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "level,dt,mean_Y,var_Y,var_P,kurtosis,cost,N");
  CHECK(rows[1].rfind("0,1,", 0) == 0);
  CHECK(rows[4].rfind("3,0.125,", 0) == 0);
  fs::remove_all(dir);
}
