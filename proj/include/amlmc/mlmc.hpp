#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amlmc/models.hpp"
#include "amlmc/payoffs.hpp"
#include "amlmc/schemes.hpp"
#include "amlmc/stats.hpp"

namespace amlmc {

/// Streaming per-level sums. `y` is the correction sample (the plain payoff
/// at level 0), `fine` the fine-side payoff 1/2 (P(X^f) + P(X^a)) and
/// `coarse` the coarse-side payoff P(X^c) (empty at level 0).
struct LevelAccumulator {
  MomentAccumulator y;
  MomentAccumulator fine;
  MomentAccumulator coarse;

  void merge(const LevelAccumulator& other);
};

struct LevelStats {
  int level = 0;
  std::uint64_t n_samples = 0;
  double dt = 0.0;  // fine timestep of the level
  double mean_y = 0.0;
  double var_y = 0.0;
  double mean_p = 0.0;  // fine-side payoff P_l
  double var_p = 0.0;
  double mean_p_coarse = 0.0;  // P_{l-1} evaluated on the coarse member
  double var_p_coarse = 0.0;
  double cost_per_sample = 0.0;
  std::optional<double> kurtosis;
};

struct Rates {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  /// Set when some level had zero correction variance; beta is +inf then.
  bool beta_infinite = false;
};

struct MlmcResult {
  double estimate = 0.0;
  int final_level = 0;
  std::vector<LevelStats> levels;
  std::optional<Rates> rates;  // present when at least 3 levels >= 1 exist
  double total_cost = 0.0;
  double epsilon = 0.0;  // 0 for fixed runs
  /// sqrt(sum_l V_l / N_l).
  double std_error = 0.0;
  bool converged = true;
  std::string diagnostic;
  std::vector<std::string> warnings;
};

struct EstimatorConfig {
  std::uint64_t seed = 0;
  PathConfig path;
  unsigned workers = 1;
  /// Samples per work item. Changing it changes the floating-point
  /// summation order (not the samples); the worker count never does.
  std::uint64_t batch_size = 256;
};

std::size_t batch_count(std::uint64_t count, std::uint64_t batch_size);

/// Calls body(batch, first_sample, n) for every fixed-size batch of
/// [first, first + count) on up to `workers` threads. Batch boundaries depend
/// only on batch_size, so per-batch results merged in batch order are
/// independent of the worker count. The exception of the lowest failing batch
/// is rethrown after all batches finish.
void for_each_batch(std::uint64_t first, std::uint64_t count, std::uint64_t batch_size,
                    unsigned workers,
                    const std::function<void(std::size_t, std::uint64_t, std::uint64_t)>& body);

/// Accumulates samples [first, first + count) of `level` using the configured
/// workers. The result is independent of the worker count.
LevelAccumulator sample_level(const ModelSpec& model, const PayoffSpec& payoff, int level,
                              std::uint64_t first, std::uint64_t count,
                              const EstimatorConfig& config);

LevelStats summarize_level(int level, const LevelAccumulator& acc, const PathConfig& path);

/// Estimates every requested level with exactly the given sample counts.
MlmcResult run_fixed(const ModelSpec& model, const PayoffSpec& payoff,
                     std::span<const int> levels, std::span<const std::uint64_t> samples,
                     const EstimatorConfig& config);

struct AdaptiveOptions {
  double epsilon = 0.01;
  std::uint64_t initial_samples = 10000;
  int min_level = 2;
  int max_level = 12;
};

/// Adaptive MLMC targeting RMSE epsilon with an even bias/variance split.
/// Optimal allocation N_l = ceil(2 eps^-2 sqrt(V_l / C_l) sum_k sqrt(V_k C_k));
/// levels are added until max(2^-alpha |Y_{L-1}|, |Y_L|) / (2^alpha - 1) is
/// below eps / sqrt(2), with alpha regressed on the fly and floored at 1/2.
/// Reaching max_level first yields converged == false.
MlmcResult run_adaptive(const ModelSpec& model, const PayoffSpec& payoff,
                        const AdaptiveOptions& options, const EstimatorConfig& config);

/// OLS fits over levels first..last (level 0 is rejected):
/// alpha from log2 |mean Y_l|, beta from log2 V_l, gamma from log2 C_l.
Rates fit_rates(std::span<const LevelStats> stats, int first_level, int last_level);

struct ConsistencyEntry {
  int level = 0;  // compares fine side at `level` with coarse side at level + 1
  double mean_fine = 0.0;
  double mean_coarse_next = 0.0;
  double combined_std_error = 0.0;
  double statistic = 0.0;  // |difference| / combined_std_error (0 when both vanish)
  bool pass = true;
};

struct ConsistencyReport {
  std::vector<ConsistencyEntry> entries;
  bool all_pass = true;
};

/// Checks E[P^f_l] = E[P^c_l] between adjacent levels at 3 standard errors.
ConsistencyReport consistency_check(std::span<const LevelStats> stats);

}  // namespace amlmc
