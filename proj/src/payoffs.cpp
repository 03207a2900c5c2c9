#include "amlmc/payoffs.hpp"

#include <algorithm>
#include <cmath>

#include "amlmc/error.hpp"
#include "params.hpp"

namespace amlmc {

namespace {

std::size_t component_index(const detail::ParamReader& p, const std::string& owner) {
  const double c = p.scalar("component", 0.0);
  if (c < 0.0 || c != std::floor(c) || c >= static_cast<double>(kMaxNoiseDim * 64)) {
    fail(ErrorKind::config, owner + ".component must be a non-negative integer");
  }
  return static_cast<std::size_t>(c);
}

double at(std::span<const double> x, std::size_t i, const std::string& owner) {
  if (i >= x.size()) {
    fail(ErrorKind::invalid_argument, owner + ": component " + std::to_string(i) +
                                          " out of range for a " +
                                          std::to_string(x.size()) + "-dimensional state");
  }
  return x[i];
}

// c^2 (sqrt(1 + (u/c)^2) - 1) written to avoid cancellation near u = 0.
double capped_quadratic(double u, double c) {
  const double r = u / c;
  return c * c * r * r / (std::sqrt(1.0 + r * r) + 1.0);
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

}  // namespace

std::vector<std::string> builtin_payoff_names() {
  return {"smooth_quadratic_capped", "european_call", "min_of_two_call",
          "asian_call",              "asian_smooth",  "component",
          "component_squared",       "constant"};
}

PayoffSpec builtin_payoff(const std::string& name, const ParamMap& params) {
  PayoffSpec p;
  p.name = name;
  double notional = 1.0;

  if (name == "smooth_quadratic_capped" || name == "asian_smooth") {
    detail::ParamReader r(name, params, {"strike", "scale", "notional"});
    const double strike = r.scalar("strike", 1.0);
    const double scale = r.scalar("scale", 1.0);
    notional = r.scalar("notional", 1.0);
    if (!(scale > 0.0)) fail(ErrorKind::config, name + ".scale must be positive");
    p.kind = name == "asian_smooth" ? PayoffKind::asian : PayoffKind::european;
    p.smoothness = Smoothness::smooth;
    p.evaluate = [strike, scale](std::span<const double> x) {
      return capped_quadratic(mean_of(x) - strike, scale);
    };
    // psi'(u) <= c and psi''(u) <= 1; averaging over d components only shrinks
    // both norms.
    p.lipschitz_bound = scale;
    p.hessian_bound = 1.0;
  } else if (name == "european_call" || name == "asian_call") {
    detail::ParamReader r(name, params, {"strike", "component", "notional"});
    const double strike = r.scalar("strike", 1.0);
    const std::size_t i = component_index(r, name);
    notional = r.scalar("notional", 1.0);
    p.kind = name == "asian_call" ? PayoffKind::asian : PayoffKind::european;
    p.smoothness = Smoothness::lipschitz_piecewise;
    p.evaluate = [strike, i, name](std::span<const double> x) {
      return std::max(0.0, at(x, i, name) - strike);
    };
    p.lipschitz_bound = 1.0;
  } else if (name == "min_of_two_call") {
    detail::ParamReader r(name, params, {"strike", "notional"});
    const double strike = r.scalar("strike", 1.0);
    notional = r.scalar("notional", 1.0);
    p.kind = PayoffKind::european;
    p.smoothness = Smoothness::lipschitz_piecewise;
    p.evaluate = [strike, name](std::span<const double> x) {
      return std::max(0.0, std::min(at(x, 0, name), at(x, 1, name)) - strike);
    };
    p.lipschitz_bound = 1.0;
  } else if (name == "component" || name == "component_squared") {
    detail::ParamReader r(name, params, {"component", "notional"});
    const std::size_t i = component_index(r, name);
    notional = r.scalar("notional", 1.0);
    p.kind = PayoffKind::european;
    p.smoothness = Smoothness::smooth;
    if (name == "component") {
      p.evaluate = [i, name](std::span<const double> x) { return at(x, i, name); };
      p.lipschitz_bound = 1.0;
      p.hessian_bound = 0.0;
    } else {
      p.evaluate = [i, name](std::span<const double> x) {
        const double v = at(x, i, name);
        return v * v;
      };
    }
  } else if (name == "constant") {
    detail::ParamReader r(name, params, {"value", "notional"});
    const double value = r.scalar("value", 1.0);
    notional = r.scalar("notional", 1.0);
    p.kind = PayoffKind::european;
    p.smoothness = Smoothness::smooth;
    p.evaluate = [value](std::span<const double>) { return value; };
    p.lipschitz_bound = 0.0;
    p.hessian_bound = 0.0;
  } else {
    fail(ErrorKind::config, "unknown payoff '" + name + "' (valid: " +
                                detail::join(builtin_payoff_names(), ", ") + ")");
  }

  if (!(notional > 0.0)) fail(ErrorKind::config, name + ".notional must be positive");
  if (notional != 1.0) {
    p.evaluate = [inner = std::move(p.evaluate), notional](std::span<const double> x) {
      return notional * inner(x);
    };
    if (p.lipschitz_bound) *p.lipschitz_bound *= notional;
    if (p.hessian_bound) *p.hessian_bound *= notional;
  }
  return p;
}

double fine_payoff(const PayoffSpec& payoff, const TriplePathOutputs& path) {
  if (payoff.kind == PayoffKind::asian) {
    return 0.5 * (payoff(path.avg_f) + payoff(path.avg_a));
  }
  return 0.5 * (payoff(path.xf) + payoff(path.xa));
}

double coarse_payoff(const PayoffSpec& payoff, const TriplePathOutputs& path) {
  return payoff(payoff.kind == PayoffKind::asian ? path.avg_c : path.xc);
}

double correction_sample(const PayoffSpec& payoff, const TriplePathOutputs& path) {
  return fine_payoff(payoff, path) - coarse_payoff(payoff, path);
}

double single_payoff(const PayoffSpec& payoff, const SinglePathOutputs& path) {
  return payoff(payoff.kind == PayoffKind::asian ? path.average : path.terminal);
}

}  // namespace amlmc
