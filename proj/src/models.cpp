#include "amlmc/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "amlmc/error.hpp"
#include "params.hpp"

namespace amlmc {

void ModelSpec::finalize() {
  if (state_dim == 0 || noise_dim == 0 || noise_dim > kMaxNoiseDim) {
    fail(ErrorKind::config, "model '" + name + "': invalid dimensions (d=" +
                                std::to_string(state_dim) + ", D=" +
                                std::to_string(noise_dim) + ")");
  }
  if (x0.size() != state_dim) {
    fail(ErrorKind::config, "model '" + name + "': x0 must have " +
                                std::to_string(state_dim) + " entries");
  }
  if (omega.empty()) {
    omega.assign(noise_dim * noise_dim, 0.0);
    for (std::size_t j = 0; j < noise_dim; ++j) omega[j * noise_dim + j] = 1.0;
  }
  if (!drift || !diffusion) {
    fail(ErrorKind::config, "model '" + name + "': drift and diffusion are required");
  }
  omega_chol = CholeskyFactor::from_correlation(omega, noise_dim);
}

double HTensor::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::fabs(v));
  return m;
}

void finite_difference_jacobian(const ModelSpec& model, std::span<const double> x,
                                std::span<double> out) {
  const std::size_t d = model.state_dim;
  const std::size_t D = model.noise_dim;
  std::vector<double> xp(x.begin(), x.end());
  std::vector<double> gp(d * D), gm(d * D);
  for (std::size_t l = 0; l < d; ++l) {
    const double step = std::max(1.0, std::fabs(x[l])) * 1e-6;
    xp[l] = x[l] + step;
    model.diffusion(xp, gp);
    xp[l] = x[l] - step;
    model.diffusion(xp, gm);
    xp[l] = x[l];
    // Divide by the realised spacing, not 2*step, to cancel representation error.
    const double spacing = (x[l] + step) - (x[l] - step);
    for (std::size_t ij = 0; ij < d * D; ++ij) {
      out[ij * d + l] = (gp[ij] - gm[ij]) / spacing;
    }
  }
}

void evaluate_jacobian(const ModelSpec& model, std::span<const double> x,
                       std::span<double> out) {
  const std::size_t d = model.state_dim;
  const std::size_t D = model.noise_dim;
  if (model.diffusion_jacobian) {
    model.diffusion_jacobian(x, out);
  } else {
    finite_difference_jacobian(model, x, out);
  }
  for (std::size_t idx = 0; idx < d * D * d; ++idx) {
    if (!std::isfinite(out[idx])) {
      const std::size_t l = idx % d;
      const std::size_t j = (idx / d) % D;
      const std::size_t i = idx / (d * D);
      fail(ErrorKind::model_evaluation,
           "model '" + model.name + "': non-finite diffusion Jacobian entry dg[" +
               std::to_string(i) + "][" + std::to_string(j) + "]/dx[" +
               std::to_string(l) + "]");
    }
  }
}

void contract_h(std::size_t d, std::size_t D, std::span<const double> g,
                std::span<const double> jacobian, std::span<double> h) {
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < D; ++j) {
      const double* dg_ij = jacobian.data() + (i * D + j) * d;
      for (std::size_t k = 0; k < D; ++k) {
        double s = 0.0;
        for (std::size_t l = 0; l < d; ++l) s += g[l * D + k] * dg_ij[l];
        h[(i * D + j) * D + k] = 0.5 * s;
      }
    }
  }
}

HTensor compute_h(const ModelSpec& model, std::span<const double> x) {
  const std::size_t d = model.state_dim;
  const std::size_t D = model.noise_dim;
  if (x.size() != d) {
    fail(ErrorKind::invalid_argument, "compute_h: state has wrong dimension");
  }
  for (double v : x) {
    if (!std::isfinite(v)) fail(ErrorKind::invalid_argument, "compute_h: non-finite state");
  }
  std::vector<double> g(d * D), jac(d * D * d);
  model.diffusion(x, g);
  evaluate_jacobian(model, x, jac);
  HTensor h{d, D, std::vector<double>(d * D * D)};
  contract_h(d, D, g, jac, h.values);
  return h;
}

bool check_commutativity(const ModelSpec& model,
                         std::span<const std::vector<double>> sample_states) {
  if (sample_states.empty()) {
    fail(ErrorKind::invalid_argument, "check_commutativity: no sample states");
  }
  double max_gap = 0.0;
  double max_h = 0.0;
  for (const auto& x : sample_states) {
    const HTensor h = compute_h(model, x);
    max_h = std::max(max_h, h.max_abs());
    for (std::size_t i = 0; i < h.state_dim; ++i)
      for (std::size_t j = 0; j < h.noise_dim; ++j)
        for (std::size_t k = j + 1; k < h.noise_dim; ++k)
          max_gap = std::max(max_gap, std::fabs(h(i, j, k) - h(i, k, j)));
  }
  return max_gap <= 1e-10 * (1.0 + max_h);
}

std::vector<std::string> builtin_model_names() {
  return {"clark_cameron", "geometric_multi", "noncommutative_test",
          "constant_diffusion"};
}

namespace {

void require_length(const std::string& model, const std::string& key,
                    const std::vector<double>& v, std::size_t n) {
  if (v.size() != n) {
    fail(ErrorKind::config, model + "." + key + " must have " + std::to_string(n) +
                                " entries, got " + std::to_string(v.size()));
  }
}

ModelSpec clark_cameron(const ParamMap& params) {
  detail::ParamReader p("clark_cameron", params, {});
  ModelSpec m;
  m.name = "clark_cameron";
  m.state_dim = 2;
  m.noise_dim = 2;
  m.x0 = {0.0, 0.0};
  m.drift = [](std::span<const double>, std::span<double> f) { f[0] = f[1] = 0.0; };
  m.diffusion = [](std::span<const double> x, std::span<double> g) {
    g[0] = 1.0;
    g[1] = 0.0;
    g[2] = 0.0;
    g[3] = x[0];
  };
  m.diffusion_jacobian = [](std::span<const double>, std::span<double> dg) {
    std::fill(dg.begin(), dg.end(), 0.0);
    dg[(1 * 2 + 1) * 2 + 0] = 1.0;  // d g22 / d x1
  };
  m.bounded_derivatives = true;
  return m;
}

ModelSpec geometric_multi(const ParamMap& params) {
  detail::ParamReader p("geometric_multi", params, {"sigma", "mu", "x0", "rho"});
  const auto sigma = p.vector("sigma", {0.2, 0.3});
  const std::size_t n = sigma.size();
  const auto mu = p.vector("mu", std::vector<double>(n, 0.05));
  const auto x0 = p.vector("x0", std::vector<double>(n, 1.0));
  const double rho = p.scalar("rho", 0.0);
  require_length("geometric_multi", "mu", mu, n);
  require_length("geometric_multi", "x0", x0, n);

  ModelSpec m;
  m.name = "geometric_multi";
  m.state_dim = n;
  m.noise_dim = n;
  m.x0 = x0;
  m.omega.assign(n * n, rho);
  for (std::size_t j = 0; j < n; ++j) m.omega[j * n + j] = 1.0;
  m.drift = [mu](std::span<const double> x, std::span<double> f) {
    for (std::size_t i = 0; i < mu.size(); ++i) f[i] = mu[i] * x[i];
  };
  m.diffusion = [sigma](std::span<const double> x, std::span<double> g) {
    const std::size_t n = sigma.size();
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) g[i * n + i] = sigma[i] * x[i];
  };
  m.diffusion_jacobian = [sigma](std::span<const double>, std::span<double> dg) {
    const std::size_t n = sigma.size();
    std::fill(dg.begin(), dg.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) dg[(i * n + i) * n + i] = sigma[i];
  };
  // f, g and h = sigma^2 x / 2 are linear, so their derivatives are bounded.
  m.bounded_derivatives = true;
  return m;
}

ModelSpec noncommutative_test(const ParamMap& params) {
  detail::ParamReader p("noncommutative_test", params, {"sigma1", "sigma2", "mu", "x0"});
  const double s1 = p.scalar("sigma1", 0.2);
  const double s2 = p.scalar("sigma2", 0.3);
  const auto mu = p.vector("mu", {0.05, 0.05});
  const auto x0 = p.vector("x0", {1.0, 1.0});
  require_length("noncommutative_test", "mu", mu, 2);
  require_length("noncommutative_test", "x0", x0, 2);

  ModelSpec m;
  m.name = "noncommutative_test";
  m.state_dim = 2;
  m.noise_dim = 2;
  m.x0 = x0;
  m.drift = [mu](std::span<const double> x, std::span<double> f) {
    f[0] = mu[0] * x[0];
    f[1] = mu[1] * x[1];
  };
  m.diffusion = [s1, s2](std::span<const double> x, std::span<double> g) {
    g[0] = s1 * x[0];
    g[1] = 0.0;
    g[2] = 0.0;
    g[3] = s2 * x[0] * x[1];
  };
  m.diffusion_jacobian = [s1, s2](std::span<const double> x, std::span<double> dg) {
    std::fill(dg.begin(), dg.end(), 0.0);
    dg[(0 * 2 + 0) * 2 + 0] = s1;         // d g11 / d x1
    dg[(1 * 2 + 1) * 2 + 0] = s2 * x[1];  // d g22 / d x1
    dg[(1 * 2 + 1) * 2 + 1] = s2 * x[0];  // d g22 / d x2
  };
  // g22 = sigma2 x1 x2 has unbounded first derivatives.
  m.bounded_derivatives = false;
  return m;
}

ModelSpec constant_diffusion(const ParamMap& params) {
  detail::ParamReader p("constant_diffusion", params, {"sigma", "drift", "x0"});
  const auto sigma = p.vector("sigma", {1.0, 1.0});
  const std::size_t n = sigma.size();
  const auto drift = p.vector("drift", std::vector<double>(n, 0.0));
  const auto x0 = p.vector("x0", std::vector<double>(n, 0.0));
  require_length("constant_diffusion", "drift", drift, n);
  require_length("constant_diffusion", "x0", x0, n);

  ModelSpec m;
  m.name = "constant_diffusion";
  m.state_dim = n;
  m.noise_dim = n;
  m.x0 = x0;
  m.drift = [drift](std::span<const double>, std::span<double> f) {
    std::copy(drift.begin(), drift.end(), f.begin());
  };
  m.diffusion = [sigma](std::span<const double>, std::span<double> g) {
    const std::size_t n = sigma.size();
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) g[i * n + i] = sigma[i];
  };
  m.diffusion_jacobian = [](std::span<const double>, std::span<double> dg) {
    std::fill(dg.begin(), dg.end(), 0.0);
  };
  m.bounded_derivatives = true;
  return m;
}

}  // namespace

ModelSpec builtin_model(const std::string& name, const ParamMap& params) {
  ModelSpec m;
  if (name == "clark_cameron") {
    m = clark_cameron(params);
  } else if (name == "geometric_multi") {
    m = geometric_multi(params);
  } else if (name == "noncommutative_test") {
    m = noncommutative_test(params);
  } else if (name == "constant_diffusion") {
    m = constant_diffusion(params);
  } else {
    fail(ErrorKind::config, "unknown model '" + name + "' (valid: " +
                                detail::join(builtin_model_names(), ", ") + ")");
  }
  m.finalize();
  return m;
}

}  // namespace amlmc
