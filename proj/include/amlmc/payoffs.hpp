#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amlmc/models.hpp"
#include "amlmc/schemes.hpp"

namespace amlmc {

enum class PayoffKind { european, asian };
enum class Smoothness { smooth, lipschitz_piecewise };

struct PayoffSpec {
  std::string name;
  PayoffKind kind = PayoffKind::european;
  Smoothness smoothness = Smoothness::smooth;
  std::function<double(std::span<const double>)> evaluate;
  /// Global bounds on |dP/dx| and |d2P/dx2| (operator norms), when known.
  std::optional<double> lipschitz_bound;
  std::optional<double> hessian_bound;

  double operator()(std::span<const double> x) const { return evaluate(x); }
};

std::vector<std::string> builtin_payoff_names();

/// Built-in payoffs (K = `strike`, default 1; `component` is 0-based):
///   smooth_quadratic_capped  c^2 (sqrt(1 + ((s - K)/c)^2) - 1), s = mean of the
///                            state components, c = `scale` (default 1).
///                            Quadratic near K, linear far away: L1 = c, L2 = 1.
///   european_call            max(0, x[component] - K)
///   min_of_two_call          max(0, min(x[0], x[1]) - K)
///   asian_call               max(0, a[component] - K) on the time average a
///   asian_smooth             smooth_quadratic_capped on the time average
///   component                x[component]           (L1 = 1, L2 = 0)
///   component_squared        x[component]^2
///   constant                 `value` (default 1)
/// Every payoff also accepts `notional` (default 1), a positive multiplier
/// applied to the value and the declared bounds.
PayoffSpec builtin_payoff(const std::string& name, const ParamMap& params = {});

/// P(X^f) + P(X^a) over two, minus P(X^c); Asian payoffs read the averages.
double correction_sample(const PayoffSpec& payoff, const TriplePathOutputs& path);

/// 1/2 (P(X^f) + P(X^a)).
double fine_payoff(const PayoffSpec& payoff, const TriplePathOutputs& path);
double coarse_payoff(const PayoffSpec& payoff, const TriplePathOutputs& path);
double single_payoff(const PayoffSpec& payoff, const SinglePathOutputs& path);

}  // namespace amlmc
