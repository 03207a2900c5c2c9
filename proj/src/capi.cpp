#include "amlmc/amlmc.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <new>
#include <optional>
#include <string>

#include "amlmc/error.hpp"
#include "amlmc/experiment.hpp"
#include "amlmc/mlmc.hpp"
#include "amlmc/models.hpp"
#include "amlmc/payoffs.hpp"

struct amlmc_model {
  amlmc::ModelSpec spec;
};

struct amlmc_payoff {
  amlmc::PayoffSpec spec;
};

struct amlmc_result {
  amlmc::MlmcResult value;
};

struct amlmc_config {
  std::optional<std::string> file;
  amlmc::FlagMap flags;
  std::optional<amlmc::ExperimentConfig> resolved;
  std::string text;
};

struct amlmc_report {
  amlmc::ExperimentReport value;
};

namespace {

thread_local std::string last_error;

amlmc_status status_of(amlmc::ErrorKind kind) {
  using amlmc::ErrorKind;
  switch (kind) {
    case ErrorKind::invalid_argument: return AMLMC_ERR_INVALID_ARGUMENT;
    case ErrorKind::config: return AMLMC_ERR_CONFIG;
    case ErrorKind::model_evaluation: return AMLMC_ERR_MODEL_EVALUATION;
    case ErrorKind::divergence: return AMLMC_ERR_DIVERGENCE;
    case ErrorKind::insufficient_data: return AMLMC_ERR_INSUFFICIENT_DATA;
    case ErrorKind::nonconvergence: return AMLMC_ERR_NONCONVERGENCE;
    case ErrorKind::validation: return AMLMC_ERR_VALIDATION;
    case ErrorKind::io: return AMLMC_ERR_IO;
  }
  return AMLMC_ERR_INTERNAL;
}

amlmc_status set_error(amlmc_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <typename F>
amlmc_status guarded(F&& body) {
  try {
    body();
    return AMLMC_OK;
  } catch (const amlmc::Error& e) {
    return set_error(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(AMLMC_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(AMLMC_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(AMLMC_ERR_INTERNAL, "unknown error");
  }
}

amlmc::ParamMap parse_params(const char* name, const char* params) {
  if (!params || !*params) return {};
  const std::string flag = std::string(name) + ":" + params;
  amlmc::ParamMap out;
  std::string text(params);
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(';', start), text.size());
    const std::string item = text.substr(start, end - start);
    start = end + 1;
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      amlmc::fail(amlmc::ErrorKind::config, flag + ": expected key=value, got '" + item + "'");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    out[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
  }
  return out;
}

amlmc::EstimatorConfig estimator_config(const amlmc_options* options) {
  amlmc_options defaults;
  amlmc_options_default(&defaults);
  const amlmc_options& o = options ? *options : defaults;
  if (o.base_steps < 1) amlmc::fail(amlmc::ErrorKind::invalid_argument, "base_steps must be >= 1");
  if (!(o.horizon > 0.0)) amlmc::fail(amlmc::ErrorKind::invalid_argument, "horizon must be > 0");
  if (o.workers < 1) amlmc::fail(amlmc::ErrorKind::invalid_argument, "workers must be >= 1");
  amlmc::EstimatorConfig e;
  e.seed = o.seed;
  e.workers = o.workers;
  e.path.base_steps = o.base_steps;
  e.path.horizon = o.horizon;
  switch (o.scheme) {
    case AMLMC_SCHEME_ANTITHETIC_MILSTEIN:
      e.path.coupling = amlmc::CouplingScheme::antithetic_milstein;
      break;
    case AMLMC_SCHEME_EULER_COUPLED: e.path.coupling = amlmc::CouplingScheme::euler_coupled; break;
    default: amlmc::fail(amlmc::ErrorKind::invalid_argument, "unknown scheme");
  }
  return e;
}

void require(const void* p, const char* what) {
  if (!p) amlmc::fail(amlmc::ErrorKind::invalid_argument, std::string(what) + " is NULL");
}

}  // namespace

extern "C" {

const char* amlmc_last_error(void) { return last_error.c_str(); }

const char* amlmc_status_name(amlmc_status status) {
  switch (status) {
    case AMLMC_OK: return "ok";
    case AMLMC_ERR_INVALID_ARGUMENT: return "invalid argument";
    case AMLMC_ERR_CONFIG: return "configuration error";
    case AMLMC_ERR_MODEL_EVALUATION: return "model evaluation error";
    case AMLMC_ERR_DIVERGENCE: return "divergence";
    case AMLMC_ERR_INSUFFICIENT_DATA: return "insufficient data";
    case AMLMC_ERR_NONCONVERGENCE: return "non-convergence";
    case AMLMC_ERR_VALIDATION: return "validation failure";
    case AMLMC_ERR_IO: return "i/o error";
    case AMLMC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

int amlmc_exit_code(amlmc_status status) {
  switch (status) {
    case AMLMC_OK: return 0;
    case AMLMC_ERR_VALIDATION: return 2;
    case AMLMC_ERR_NONCONVERGENCE: return 3;
    case AMLMC_ERR_DIVERGENCE: return 4;
    default: return 1;
  }
}

amlmc_status amlmc_model_create(const char* name, const char* params, amlmc_model** out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    *out = new amlmc_model{amlmc::builtin_model(name, parse_params(name, params))};
  });
}

void amlmc_model_destroy(amlmc_model* model) { delete model; }
size_t amlmc_model_state_dim(const amlmc_model* model) { return model ? model->spec.state_dim : 0; }
size_t amlmc_model_noise_dim(const amlmc_model* model) { return model ? model->spec.noise_dim : 0; }

amlmc_status amlmc_payoff_create(const char* name, const char* params, amlmc_payoff** out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    *out = new amlmc_payoff{amlmc::builtin_payoff(name, parse_params(name, params))};
  });
}

void amlmc_payoff_destroy(amlmc_payoff* payoff) { delete payoff; }

void amlmc_options_default(amlmc_options* options) {
  if (!options) return;
  options->seed = 1;
  options->base_steps = 1;
  options->horizon = 1.0;
  options->scheme = AMLMC_SCHEME_ANTITHETIC_MILSTEIN;
  options->workers = 1;
}

amlmc_status amlmc_run_fixed(const amlmc_model* model, const amlmc_payoff* payoff,
                             const amlmc_options* options, const int* levels,
                             const uint64_t* samples, size_t count, amlmc_result** out) {
  return guarded([&] {
    require(model, "model");
    require(payoff, "payoff");
    require(levels, "levels");
    require(samples, "samples");
    require(out, "out");
    auto r = amlmc::run_fixed(model->spec, payoff->spec, {levels, count}, {samples, count},
                              estimator_config(options));
    *out = new amlmc_result{std::move(r)};
  });
}

amlmc_status amlmc_run_adaptive(const amlmc_model* model, const amlmc_payoff* payoff,
                                const amlmc_options* options, double epsilon,
                                uint64_t initial_samples, int max_level, amlmc_result** out) {
  return guarded([&] {
    require(model, "model");
    require(payoff, "payoff");
    require(out, "out");
    amlmc::AdaptiveOptions opt;
    opt.epsilon = epsilon;
    opt.initial_samples = initial_samples;
    opt.max_level = max_level;
    auto r = amlmc::run_adaptive(model->spec, payoff->spec, opt, estimator_config(options));
    *out = new amlmc_result{std::move(r)};
  });
}

double amlmc_result_estimate(const amlmc_result* r) { return r ? r->value.estimate : NAN; }
double amlmc_result_std_error(const amlmc_result* r) { return r ? r->value.std_error : NAN; }
double amlmc_result_total_cost(const amlmc_result* r) { return r ? r->value.total_cost : NAN; }
int amlmc_result_final_level(const amlmc_result* r) { return r ? r->value.final_level : -1; }
int amlmc_result_converged(const amlmc_result* r) { return r && r->value.converged ? 1 : 0; }

const char* amlmc_result_diagnostic(const amlmc_result* r) {
  return r ? r->value.diagnostic.c_str() : "";
}

size_t amlmc_result_level_count(const amlmc_result* r) { return r ? r->value.levels.size() : 0; }

amlmc_status amlmc_result_level(const amlmc_result* r, size_t index, amlmc_level_stats* out) {
  return guarded([&] {
    require(r, "result");
    require(out, "out");
    if (index >= r->value.levels.size()) {
      amlmc::fail(amlmc::ErrorKind::invalid_argument, "level index out of range");
    }
    const amlmc::LevelStats& s = r->value.levels[index];
    *out = {s.level,  s.n_samples, s.dt, s.mean_y, s.var_y, s.mean_p, s.var_p, s.cost_per_sample,
            s.kurtosis.value_or(NAN)};
  });
}

amlmc_status amlmc_result_rates(const amlmc_result* r, double* alpha, double* beta,
                                double* gamma) {
  return guarded([&] {
    require(r, "result");
    if (!r->value.rates) {
      amlmc::fail(amlmc::ErrorKind::insufficient_data, "rates need at least 3 levels >= 1");
    }
    if (alpha) *alpha = r->value.rates->alpha;
    if (beta) *beta = r->value.rates->beta;
    if (gamma) *gamma = r->value.rates->gamma;
  });
}

void amlmc_result_destroy(amlmc_result* r) { delete r; }

amlmc_status amlmc_config_create(amlmc_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new amlmc_config{};
  });
}

amlmc_status amlmc_config_set_file(amlmc_config* config, const char* path) {
  return guarded([&] {
    require(config, "config");
    require(path, "path");
    config->file = path;
    config->resolved.reset();
  });
}

amlmc_status amlmc_config_set(amlmc_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->flags[key] = value;
    config->resolved.reset();
  });
}

amlmc_status amlmc_config_resolve(amlmc_config* config) {
  return guarded([&] {
    require(config, "config");
    config->resolved = amlmc::load_config(config->file, config->flags);
    config->text = amlmc::render_config(*config->resolved);
  });
}

const char* amlmc_config_text(const amlmc_config* config) {
  return config && config->resolved ? config->text.c_str() : nullptr;
}

void amlmc_config_destroy(amlmc_config* config) { delete config; }

amlmc_status amlmc_experiment_run(amlmc_config* config, amlmc_report** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    if (!config->resolved) {
      config->resolved = amlmc::load_config(config->file, config->flags);
      config->text = amlmc::render_config(*config->resolved);
    }
    *out = new amlmc_report{amlmc::run_experiment(*config->resolved)};
  });
}

const char* amlmc_report_summary(const amlmc_report* report) {
  return report ? report->value.summary.c_str() : "";
}

int amlmc_report_exit_code(const amlmc_report* report) {
  return report ? report->value.exit_code : 1;
}

size_t amlmc_report_file_count(const amlmc_report* report) {
  return report ? report->value.files.size() : 0;
}

const char* amlmc_report_file(const amlmc_report* report, size_t index) {
  if (!report || index >= report->value.files.size()) return nullptr;
  return report->value.files[index].c_str();
}

void amlmc_report_destroy(amlmc_report* report) { delete report; }

}  // extern "C"
