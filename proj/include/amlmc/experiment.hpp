#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "amlmc/error.hpp"
#include "amlmc/models.hpp"
#include "amlmc/schemes.hpp"

namespace amlmc {

enum class Mode { estimate, variance_study, complexity_study, strong_error_study, validate };

struct ExperimentConfig {
  Mode mode = Mode::estimate;
  std::string model = "geometric_multi";
  ParamMap model_params;
  std::string payoff = "smooth_quadratic_capped";
  ParamMap payoff_params;
  CouplingScheme scheme = CouplingScheme::antithetic_milstein;
  std::uint64_t seed = 1;
  std::vector<double> epsilons{0.01};
  std::vector<int> levels{1, 2, 3, 4, 5, 6, 7};
  /// One count for every level, or one per entry of `levels`.
  std::vector<std::uint64_t> samples{100000};
  std::size_t n0 = 1;
  double horizon = 1.0;
  std::uint64_t initial_samples = 10000;
  int max_level = 12;
  unsigned workers = 1;
  std::string out = "results";

  std::uint64_t samples_at(std::size_t level_index) const;
};

/// Flag name (without dashes) to raw value, e.g. {"eps", "0.02,0.01"}.
/// --model / --payoff take "name" or "name:key=value;key=value" and replace
/// the corresponding file section as a whole.
using FlagMap = std::map<std::string, std::string>;

/// Parses the sectioned key = value format (see README) and applies flag
/// overrides. Every value is validated; unknown sections and keys are
/// configuration errors naming the offending key.
ExperimentConfig parse_config(const std::string& text, const FlagMap& flags = {});

/// Reads `path` (when given) and delegates to parse_config.
ExperimentConfig load_config(const std::optional<std::string>& path, const FlagMap& flags);

/// Canonical text form, loadable by parse_config. With runtime == false the
/// `workers` and `out` keys are left out; this is the reproducibility header
/// embedded in every CSV file.
std::string render_config(const ExperimentConfig& config, bool runtime = true);

std::string mode_name(Mode mode);
std::string scheme_name(CouplingScheme scheme);

struct ValidationCheck {
  std::string name;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct ExperimentReport {
  int exit_code = 0;
  std::string summary;
  std::vector<std::string> files;
  std::vector<ValidationCheck> checks;  // validate mode only
};

/// Runs the configured mode, writing CSV files and resolved_config.ini into
/// config.out (created if missing). Non-convergence and failed validation are
/// reported through exit_code; other failures throw amlmc::Error.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Process exit status for an error kind: 1 usage/config, 3 non-convergence,
/// 4 divergence, 2 validation.
int exit_code_for(ErrorKind kind);

}  // namespace amlmc
