// Command-line experiment runner. Talks to the engine through the C API only.

#include <cstdio>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "amlmc/amlmc.h"

namespace {

int report_error(amlmc_status status) {
  std::fprintf(stderr, "amlmc: %s: %s\n", amlmc_status_name(status), amlmc_last_error());
  return amlmc_exit_code(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Antithetic multilevel Monte Carlo experiments"};
  app.set_help_flag("-h,--help", "Show this help");

  std::string config_file;
  app.add_option("--config", config_file, "Config file (flags override its values)")
      ->check(CLI::ExistingFile);

  // Every other flag is passed through verbatim and validated by the engine.
  const std::map<std::string, std::string> flags{
      {"mode", "estimate | variance_study | complexity_study | strong_error_study | validate"},
      {"model", "Model as name or name:key=value;key=value"},
      {"payoff", "Payoff as name or name:key=value;key=value"},
      {"scheme", "antithetic_milstein | euler_coupled"},
      {"eps", "Target RMSE, or a comma-separated list for complexity_study"},
      {"levels", "Level range such as 2-7, or a comma-separated list"},
      {"samples", "Samples per level (one value or one per level)"},
      {"seed", "64-bit unsigned seed"},
      {"n0", "Timesteps at level 0"},
      {"horizon", "Final time T"},
      {"workers", "Worker threads"},
      {"out", "Output directory"},
      {"initial-samples", "Warm-up samples per new level in adaptive runs"},
      {"max-level", "Deepest level an adaptive run may add"},
  };
  std::map<std::string, std::string> values;
  for (const auto& [name, help] : flags) {
    app.add_option("--" + name, values[name], help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  amlmc_config* config = nullptr;
  amlmc_status status = amlmc_config_create(&config);
  if (status != AMLMC_OK) return report_error(status);
  if (!config_file.empty()) status = amlmc_config_set_file(config, config_file.c_str());
  for (const auto& [name, value] : values) {
    if (status != AMLMC_OK) break;
    if (app.count("--" + name) == 0) continue;
    std::string key = name;
    for (char& ch : key) {
      if (ch == '-') ch = '_';
    }
    status = amlmc_config_set(config, key.c_str(), value.c_str());
  }
  if (status == AMLMC_OK) status = amlmc_config_resolve(config);
  if (status != AMLMC_OK) {
    amlmc_config_destroy(config);
    return report_error(status);
  }

  amlmc_report* report = nullptr;
  status = amlmc_experiment_run(config, &report);
  amlmc_config_destroy(config);
  if (status != AMLMC_OK) return report_error(status);

  std::fputs(amlmc_report_summary(report), stdout);
  for (std::size_t i = 0; i < amlmc_report_file_count(report); ++i) {
    std::printf("wrote %s\n", amlmc_report_file(report, i));
  }
  const int code = amlmc_report_exit_code(report);
  amlmc_report_destroy(report);
  return code;
}
