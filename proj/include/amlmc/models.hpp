#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "amlmc/random.hpp"

namespace amlmc {

/// Named string parameters, e.g. {"sigma", "0.2,0.3"}. Vector values are
/// comma separated.
using ParamMap = std::map<std::string, std::string>;

/// SDE dx = f(x) dt + g(x) dw with constant correlation between the drivers.
///
/// Layouts (all row-major, writing into caller storage):
///   drift:              f[i]                       size d
///   diffusion:          g[i * D + j]               size d * D
///   diffusion_jacobian: dg_ij/dx_l at (i * D + j) * d + l, size d * D * d
struct ModelSpec {
  using VectorField = std::function<void(std::span<const double>, std::span<double>)>;

  std::string name;
  std::size_t state_dim = 0;  // d
  std::size_t noise_dim = 0;  // D
  std::vector<double> x0;
  std::vector<double> omega;  // D x D
  VectorField drift;
  VectorField diffusion;
  VectorField diffusion_jacobian;  // optional; empty means finite differences
  /// Whether f, g and h have globally bounded first derivatives (and f, g
  /// bounded second derivatives). Informational only.
  bool bounded_derivatives = false;

  /// Cholesky factor of omega, filled by finalize().
  CholeskyFactor omega_chol = CholeskyFactor::identity(1);

  /// Validates dimensions and correlation; computes omega_chol.
  void finalize();
};

/// h_ijk(x) = 1/2 sum_l g_lk(x) dg_ij/dx_l (x), stored at (i * D + j) * D + k.
struct HTensor {
  std::size_t state_dim = 0;
  std::size_t noise_dim = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return values[(i * noise_dim + j) * noise_dim + k];
  }
  double max_abs() const;
};

/// Central-difference Jacobian of g with per-component step
/// max(1, |x_l|) * 1e-6. Writes d * D * d entries.
void finite_difference_jacobian(const ModelSpec& model, std::span<const double> x,
                                std::span<double> out);

/// Jacobian of g, analytic when available. Throws Error(model_evaluation)
/// naming the first non-finite entry.
void evaluate_jacobian(const ModelSpec& model, std::span<const double> x,
                       std::span<double> out);

/// Contracts g and its Jacobian into h. `g` has d * D entries, `jacobian`
/// d * D * d, `h` d * D * D.
void contract_h(std::size_t d, std::size_t D, std::span<const double> g,
                std::span<const double> jacobian, std::span<double> h);

HTensor compute_h(const ModelSpec& model, std::span<const double> x);

/// True iff max |h_ijk - h_ikj| <= 1e-10 (1 + max|h|) over all samples.
bool check_commutativity(const ModelSpec& model,
                         std::span<const std::vector<double>> sample_states);

/// Names accepted by builtin_model.
std::vector<std::string> builtin_model_names();

/// Built-in models:
///   clark_cameron        dx1 = dw1, dx2 = x1 dw2, x0 = (0, 0)
///   geometric_multi      dx_i = mu_i x_i dt + sigma_i x_i dw_i (diagonal)
///                        params sigma, mu, x0, rho (equicorrelation)
///   noncommutative_test  dx1 = mu1 x1 dt + sigma1 x1 dw1
///                        dx2 = mu2 x2 dt + sigma2 x1 x2 dw2
///                        params sigma1, sigma2, mu, x0
///   constant_diffusion   dx = c dt + diag(sigma) dw
///                        params sigma, drift, x0
ModelSpec builtin_model(const std::string& name, const ParamMap& params = {});

}  // namespace amlmc
