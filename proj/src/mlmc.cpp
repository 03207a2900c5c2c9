#include "amlmc/mlmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "amlmc/error.hpp"

namespace amlmc {

namespace {

constexpr double kKurtosisWarning = 100.0;
constexpr int kMaxAdaptiveIterations = 1000;
constexpr int kMaxSupportedLevel = 30;

void run_batch(const ModelSpec& model, const PayoffSpec& payoff, int level,
               std::uint64_t first, std::uint64_t count, const EstimatorConfig& config,
               LevelAccumulator& acc) {
  const StepScheme single_scheme = config.path.coupling == CouplingScheme::euler_coupled
                                       ? StepScheme::euler
                                       : StepScheme::truncated_milstein;
  for (std::uint64_t s = first; s < first + count; ++s) {
    if (level == 0) {
      const SinglePathOutputs path =
          simulate_single_path(model, 0, s, config.seed, single_scheme, config.path);
      const double p = single_payoff(payoff, path);
      acc.y.push(p);
      acc.fine.push(p);
    } else {
      const TriplePathOutputs path = simulate_triple_path(model, level, s, config.seed, config.path);
      const double pf = fine_payoff(payoff, path);
      const double pc = coarse_payoff(payoff, path);
      acc.y.push(pf - pc);
      acc.fine.push(pf);
      acc.coarse.push(pc);
    }
  }
}

std::vector<std::string> kurtosis_warnings(const std::vector<LevelStats>& levels) {
  std::vector<std::string> warnings;
  if (levels.empty()) return warnings;
  const LevelStats& top = levels.back();
  if (top.kurtosis && *top.kurtosis > kKurtosisWarning) {
    std::ostringstream os;
    os << "kurtosis " << *top.kurtosis << " at top level " << top.level
       << " exceeds " << kKurtosisWarning << "; variance estimate is unreliable";
    warnings.push_back(os.str());
  }
  return warnings;
}

void fill_totals(MlmcResult& result) {
  result.estimate = 0.0;
  result.total_cost = 0.0;
  double var = 0.0;
  for (const LevelStats& s : result.levels) {
    result.estimate += s.mean_y;
    result.total_cost += static_cast<double>(s.n_samples) * s.cost_per_sample;
    var += s.var_y / static_cast<double>(s.n_samples);
  }
  result.std_error = std::sqrt(var);
  result.final_level = result.levels.empty() ? 0 : result.levels.back().level;

  // Rates over the contiguous run of levels >= 1 when at least three exist.
  int first = -1;
  for (const LevelStats& s : result.levels) {
    if (s.level >= 1) {
      first = s.level;
      break;
    }
  }
  if (first >= 1 && result.final_level - first >= 2) {
    try {
      result.rates = fit_rates(result.levels, first, result.final_level);
    } catch (const Error&) {
      result.rates.reset();
    }
  }
  result.warnings = kurtosis_warnings(result.levels);
}

const LevelStats* find_level(std::span<const LevelStats> stats, int level) {
  for (const LevelStats& s : stats) {
    if (s.level == level) return &s;
  }
  return nullptr;
}

}  // namespace

void LevelAccumulator::merge(const LevelAccumulator& other) {
  y.merge(other.y);
  fine.merge(other.fine);
  coarse.merge(other.coarse);
}

std::size_t batch_count(std::uint64_t count, std::uint64_t batch_size) {
  if (batch_size == 0) fail(ErrorKind::invalid_argument, "batch_size must be positive");
  return static_cast<std::size_t>((count + batch_size - 1) / batch_size);
}

void for_each_batch(std::uint64_t first, std::uint64_t count, std::uint64_t batch_size,
                    unsigned workers,
                    const std::function<void(std::size_t, std::uint64_t, std::uint64_t)>& body) {
  const std::size_t n_batches = batch_count(count, batch_size);
  std::vector<std::exception_ptr> errors(n_batches);
  auto process = [&](std::size_t b) {
    const std::uint64_t start = first + b * batch_size;
    const std::uint64_t n = std::min<std::uint64_t>(batch_size, first + count - start);
    try {
      body(b, start, n);
    } catch (...) {
      errors[b] = std::current_exception();
    }
  };

  const std::size_t threads = std::min<std::size_t>(std::max(1u, workers), n_batches);
  if (threads <= 1) {
    for (std::size_t b = 0; b < n_batches; ++b) process(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t b = next++; b < n_batches; b = next++) process(b);
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

LevelAccumulator sample_level(const ModelSpec& model, const PayoffSpec& payoff, int level,
                              std::uint64_t first, std::uint64_t count,
                              const EstimatorConfig& config) {
  if (level < 0 || level > kMaxSupportedLevel) {
    fail(ErrorKind::invalid_argument, "sample_level: level out of range");
  }
  std::vector<LevelAccumulator> parts(batch_count(count, config.batch_size));
  for_each_batch(first, count, config.batch_size, config.workers,
                 [&](std::size_t b, std::uint64_t start, std::uint64_t n) {
                   run_batch(model, payoff, level, start, n, config, parts[b]);
                 });
  LevelAccumulator total;
  for (const auto& part : parts) total.merge(part);
  return total;
}

LevelStats summarize_level(int level, const LevelAccumulator& acc, const PathConfig& path) {
  LevelStats s;
  s.level = level;
  s.n_samples = acc.y.count();
  s.dt = path.budget(level).fine_dt();
  s.cost_per_sample = sample_cost(level, path);
  const MomentSummary y = acc.y.finalize();
  const MomentSummary p = acc.fine.finalize();
  s.mean_y = y.mean;
  s.var_y = y.variance;
  s.kurtosis = y.kurtosis;
  s.mean_p = p.mean;
  s.var_p = p.variance;
  if (level > 0) {
    const MomentSummary pc = acc.coarse.finalize();
    s.mean_p_coarse = pc.mean;
    s.var_p_coarse = pc.variance;
  }
  return s;
}

MlmcResult run_fixed(const ModelSpec& model, const PayoffSpec& payoff,
                     std::span<const int> levels, std::span<const std::uint64_t> samples,
                     const EstimatorConfig& config) {
  if (levels.empty() || levels.size() != samples.size()) {
    fail(ErrorKind::invalid_argument, "run_fixed: need one sample count per level");
  }
  MlmcResult result;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (samples[i] < 2) {
      fail(ErrorKind::invalid_argument, "run_fixed: at least 2 samples per level required");
    }
    const LevelAccumulator acc = sample_level(model, payoff, levels[i], 0, samples[i], config);
    result.levels.push_back(summarize_level(levels[i], acc, config.path));
  }
  fill_totals(result);
  return result;
}

MlmcResult run_adaptive(const ModelSpec& model, const PayoffSpec& payoff,
                        const AdaptiveOptions& options, const EstimatorConfig& config) {
  if (!(options.epsilon > 0.0)) fail(ErrorKind::invalid_argument, "epsilon must be positive");
  if (options.initial_samples < 100) {
    fail(ErrorKind::invalid_argument, "initial_samples must be at least 100");
  }
  if (options.min_level < 1 || options.max_level < options.min_level ||
      options.max_level > kMaxSupportedLevel) {
    fail(ErrorKind::invalid_argument, "need 1 <= min_level <= max_level <= 30");
  }
  const double eps2 = options.epsilon * options.epsilon;

  int top = options.min_level;
  std::vector<LevelAccumulator> acc(static_cast<std::size_t>(top) + 1);
  std::vector<std::uint64_t> n(acc.size(), 0);
  std::vector<std::uint64_t> extra(acc.size(), options.initial_samples);
  std::vector<LevelStats> stats;

  MlmcResult result;
  result.epsilon = options.epsilon;
  result.converged = false;

  for (int iteration = 0;; ++iteration) {
    if (iteration == kMaxAdaptiveIterations) {
      result.diagnostic = "sample allocation did not settle within " +
                          std::to_string(kMaxAdaptiveIterations) + " iterations";
      break;
    }
    for (std::size_t l = 0; l < acc.size(); ++l) {
      if (extra[l] == 0) continue;
      acc[l].merge(sample_level(model, payoff, static_cast<int>(l), n[l], extra[l], config));
      n[l] += extra[l];
      extra[l] = 0;
    }
    stats.clear();
    for (std::size_t l = 0; l < acc.size(); ++l) {
      stats.push_back(summarize_level(static_cast<int>(l), acc[l], config.path));
    }

    double sum_sqrt_vc = 0.0;
    for (const LevelStats& s : stats) sum_sqrt_vc += std::sqrt(s.var_y * s.cost_per_sample);
    bool more = false;
    for (std::size_t l = 0; l < stats.size(); ++l) {
      const double target = std::ceil(2.0 / eps2 * std::sqrt(stats[l].var_y / stats[l].cost_per_sample) *
                                      sum_sqrt_vc);
      if (target > static_cast<double>(n[l])) {
        extra[l] = static_cast<std::uint64_t>(target) - n[l];
        more = true;
      }
    }
    if (more) continue;

    // On-the-fly weak rate from levels 1..top with nonzero means.
    std::vector<double> xs, ys;
    for (int l = 1; l <= top; ++l) {
      const double m = std::fabs(stats[static_cast<std::size_t>(l)].mean_y);
      if (m > 0.0) {
        xs.push_back(l);
        ys.push_back(-std::log2(m));
      }
    }
    double alpha = 0.5;
    if (xs.size() >= 2) alpha = std::max(0.5, fit_line(xs, ys).slope);
    const double y_top = std::fabs(stats[static_cast<std::size_t>(top)].mean_y);
    const double y_prev = std::fabs(stats[static_cast<std::size_t>(top) - 1].mean_y);
    const double remaining =
        std::max(std::pow(2.0, -alpha) * y_prev, y_top) / (std::pow(2.0, alpha) - 1.0);

    if (remaining <= options.epsilon / std::sqrt(2.0)) {
      result.converged = true;
      break;
    }
    if (top == options.max_level) {
      std::ostringstream os;
      os << "bias estimate " << remaining << " still exceeds eps/sqrt(2) = "
         << options.epsilon / std::sqrt(2.0) << " at max_level " << options.max_level
         << " (alpha = " << alpha << ")";
      result.diagnostic = os.str();
      break;
    }
    ++top;
    acc.emplace_back();
    n.push_back(0);
    extra.push_back(options.initial_samples);
  }

  result.levels = stats;
  fill_totals(result);
  return result;
}

Rates fit_rates(std::span<const LevelStats> stats, int first_level, int last_level) {
  if (first_level < 1) {
    fail(ErrorKind::invalid_argument, "fit_rates: level 0 is excluded from rate fits");
  }
  if (last_level - first_level < 2) {
    fail(ErrorKind::insufficient_data, "fit_rates: need at least 3 levels");
  }
  std::vector<double> ls, log_mean, log_var, log_cost;
  Rates rates;
  bool mean_zero = false;
  for (int l = first_level; l <= last_level; ++l) {
    const LevelStats* s = find_level(stats, l);
    if (!s) fail(ErrorKind::insufficient_data, "fit_rates: missing level " + std::to_string(l));
    ls.push_back(l);
    if (s->var_y <= 0.0) rates.beta_infinite = true;
    if (s->mean_y == 0.0) mean_zero = true;
    log_mean.push_back(std::log2(std::fabs(s->mean_y)));
    log_var.push_back(std::log2(s->var_y));
    log_cost.push_back(std::log2(s->cost_per_sample));
  }
  const double inf = std::numeric_limits<double>::infinity();
  rates.alpha = mean_zero ? inf : -fit_line(ls, log_mean).slope;
  rates.beta = rates.beta_infinite ? inf : -fit_line(ls, log_var).slope;
  rates.gamma = fit_line(ls, log_cost).slope;
  return rates;
}

ConsistencyReport consistency_check(std::span<const LevelStats> stats) {
  ConsistencyReport report;
  for (const LevelStats& s : stats) {
    const LevelStats* next = find_level(stats, s.level + 1);
    if (!next) continue;
    ConsistencyEntry e;
    e.level = s.level;
    e.mean_fine = s.mean_p;
    e.mean_coarse_next = next->mean_p_coarse;
    e.combined_std_error = std::sqrt(s.var_p / static_cast<double>(s.n_samples) +
                                     next->var_p_coarse / static_cast<double>(next->n_samples));
    const double diff = std::fabs(e.mean_fine - e.mean_coarse_next);
    if (e.combined_std_error > 0.0) {
      e.statistic = diff / e.combined_std_error;
      e.pass = e.statistic <= 3.0;
    } else {
      const double scale = std::max({1.0, std::fabs(e.mean_fine), std::fabs(e.mean_coarse_next)});
      e.statistic = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      e.pass = diff <= 1e-12 * scale;
    }
    report.all_pass = report.all_pass && e.pass;
    report.entries.push_back(e);
  }
  return report;
}

}  // namespace amlmc
