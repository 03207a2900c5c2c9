#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "amlmc/models.hpp"
#include "amlmc/random.hpp"

namespace amlmc {

enum class StepScheme { truncated_milstein, euler };

/// How the level-l correction pairs fine and coarse paths.
enum class CouplingScheme {
  /// Coarse truncated Milstein path plus fine path and its antithetic twin
  /// (half-step increments swapped within every coarse step).
  antithetic_milstein,
  /// Plain Euler-Maruyama fine/coarse pair; the antithetic slot mirrors the
  /// fine path so the correction reduces to P(X^f) - P(X^c).
  euler_coupled,
};

/// Deliberate coupling faults, used only by tests of the consistency check.
enum class CouplingDefect {
  none,
  /// Coarse path is driven by the first half-increment alone, so it sees
  /// half the correct variance.
  coarse_drops_second_half,
};

/// Uniform grids of one level pair. Level l has base_steps * 2^l fine steps;
/// for l >= 1 the coarse member has half as many.
struct StepBudget {
  int level = 0;
  std::size_t base_steps = 1;
  double horizon = 1.0;

  std::size_t fine_steps() const { return base_steps << level; }
  std::size_t coarse_steps() const { return level > 0 ? base_steps << (level - 1) : base_steps; }
  double fine_dt() const { return horizon / static_cast<double>(fine_steps()); }
  double coarse_dt() const { return horizon / static_cast<double>(coarse_steps()); }
};

struct PathConfig {
  std::size_t base_steps = 1;
  double horizon = 1.0;
  CouplingScheme coupling = CouplingScheme::antithetic_milstein;
  CouplingDefect defect = CouplingDefect::none;
  /// Test hook: every Brownian increment is forced to zero.
  bool zero_noise = false;

  StepBudget budget(int level) const { return {level, base_steps, horizon}; }
};

/// Cost of one sample in units of fine timesteps:
///   level 0 (single path)       N0
///   antithetic, level l >= 1    3 N0 2^l
///   euler_coupled, level l >= 1 2 N0 2^l
double sample_cost(int level, const PathConfig& config);

/// Scratch buffers for the step kernels. One per worker.
class StepWorkspace {
 public:
  explicit StepWorkspace(const ModelSpec& model);

  std::vector<double> f, g, jacobian, h;
};

/// One truncated Milstein step (Levy areas omitted):
///   X_i += f_i dt + sum_j g_ij dw_j + sum_jk h_ijk (dw_j dw_k - Omega_jk dt).
/// `x` and `out` may alias. Throws DivergenceError (tagged with `key` when
/// given) on a non-finite result. A non-empty `carry` (one entry per state
/// component, zero at the start of a path) holds the rounding error of the
/// previous state update and is folded into this one.
void truncated_milstein_step(const ModelSpec& model, std::span<const double> x,
                             std::span<const double> dw, double dt, std::span<double> out,
                             StepWorkspace& ws, const StreamKey* key = nullptr,
                             std::span<double> carry = {});

std::vector<double> truncated_milstein_step(const ModelSpec& model,
                                            std::span<const double> x,
                                            std::span<const double> dw, double dt);

/// Euler-Maruyama: X_i += f_i dt + sum_j g_ij dw_j.
void euler_step(const ModelSpec& model, std::span<const double> x,
                std::span<const double> dw, double dt, std::span<double> out,
                StepWorkspace& ws, const StreamKey* key = nullptr,
                std::span<double> carry = {});

/// Coarse, fine and antithetic states of one level pair, with the most recent
/// fine midpoints and the running time integrals used for Asian averages.
struct TripleState {
  std::vector<double> xc, xf, xa;
  std::vector<double> xf_mid, xa_mid;
  std::vector<double> asian_acc_c, asian_acc_f, asian_acc_a;
  /// States at the start of the last coarse step.
  std::vector<double> xc_prev, xf_prev, xa_prev;
  /// Rounding carries of the three state updates (see truncated_milstein_step).
  std::vector<double> carry_c, carry_f, carry_a;

  static TripleState initial(const ModelSpec& model);
};

/// Advances the triple by one coarse step of length dt. The coarse path uses
/// delta_first + delta_second; the fine path delta_first then delta_second;
/// the antithetic path delta_second then delta_first, each over dt/2.
void coupled_coarse_step(const ModelSpec& model, TripleState& state,
                         const BrownianSlice& slice, double dt, StepWorkspace& ws,
                         CouplingScheme coupling = CouplingScheme::antithetic_milstein,
                         CouplingDefect defect = CouplingDefect::none,
                         const StreamKey* key = nullptr);

TripleState coupled_coarse_step(const ModelSpec& model, const TripleState& state,
                                const BrownianSlice& slice, double dt);

struct TriplePathOutputs {
  std::vector<double> xc, xf, xa;
  std::vector<double> avg_c, avg_f, avg_a;  // time averages over [0, T]
  /// |1/2 (X^f_{N-1/2} + X^a_{N-1/2}) - 1/2 (X^c_{N-1} + X^c_N)| at the last step.
  double midpoint_gap = 0.0;
  double cost = 0.0;
};

using TripleObserver = std::function<void(std::size_t step, const TripleState&)>;

/// Simulates one antithetic (or Euler-coupled) sample of level >= 1 over the
/// coarse grid of the level pair. Deterministic in (seed, level, sample_index).
TriplePathOutputs simulate_triple_path(const ModelSpec& model, int level,
                                       std::uint64_t sample_index, std::uint64_t seed,
                                       const PathConfig& config,
                                       const TripleObserver& observer = {});

struct SinglePathOutputs {
  std::vector<double> terminal;
  std::vector<double> average;
  double cost = 0.0;
};

/// Plain path on base_steps * 2^level steps; step n uses the summed
/// increment of the slice keyed (seed, level, sample_index, n).
SinglePathOutputs simulate_single_path(const ModelSpec& model, int level,
                                       std::uint64_t sample_index, std::uint64_t seed,
                                       StepScheme scheme, const PathConfig& config);

/// Clark-Cameron solution on the coarse grid of `level`, driven by the same
/// slices as simulate_triple_path and refined to `substeps` Brownian-bridge
/// pieces per coarse step (each half split into substeps / 2). The Levy area
/// enters through the discrete sum over the refined increments. substeps == 2
/// reproduces the fine path. Test oracle only.
std::array<double, 2> clark_cameron_oracle(int level, std::uint64_t sample_index,
                                           std::uint64_t seed, std::size_t substeps,
                                           const PathConfig& config);

}  // namespace amlmc
