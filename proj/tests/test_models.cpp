#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "amlmc/error.hpp"
#include "amlmc/models.hpp"

using namespace amlmc;

namespace {

std::vector<std::vector<double>> random_states(std::size_t d, std::size_t n, double lo, double hi,
                                               unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<std::vector<double>> states(n, std::vector<double>(d));
  for (auto& s : states) {
    for (double& v : s) v = u(rng);
  }
  return states;
}

HTensor h_from_finite_differences(const ModelSpec& m, const std::vector<double>& x) {
  const std::size_t d = m.state_dim, D = m.noise_dim;
  std::vector<double> g(d * D), jac(d * D * d);
  m.diffusion(x, g);
  finite_difference_jacobian(m, x, jac);
  HTensor h{d, D, std::vector<double>(d * D * D)};
  contract_h(d, D, g, jac, h.values);
  return h;
}

std::string error_message(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("clark_cameron tensor has the single entry h_221 = 1/2") {
  const ModelSpec m = builtin_model("clark_cameron");
  CHECK(m.state_dim == 2);
  CHECK(m.noise_dim == 2);
  CHECK(m.x0 == std::vector<double>{0, 0});
  for (const auto& x : random_states(2, 10, -3, 3, 1)) {
    const HTensor h = compute_h(m, x);
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        for (std::size_t k = 0; k < 2; ++k) {
          const double expected = (i == 1 && j == 1 && k == 0) ? 0.5 : 0.0;
          CHECK(h(i, j, k) == expected);
        }
      }
    }
  }
  CHECK_FALSE(check_commutativity(m, random_states(2, 5, -1, 1, 2)));
}

TEST_CASE("geometric_multi tensor is diagonal with h_iii = sigma_i^2 x_i / 2") {
  const ModelSpec m = builtin_model("geometric_multi", {{"sigma", "0.2,0.3"}});
  for (const auto& x : random_states(2, 10, 0.1, 3, 3)) {
    const HTensor h = compute_h(m, x);
    CHECK(h(0, 0, 0) == doctest::Approx(0.5 * 0.04 * x[0]).epsilon(1e-14));
    CHECK(h(1, 1, 1) == doctest::Approx(0.5 * 0.09 * x[1]).epsilon(1e-14));
    CHECK(h(0, 0, 1) == 0.0);
    CHECK(h(0, 1, 0) == 0.0);
    CHECK(h(1, 0, 1) == 0.0);
    CHECK(h(1, 1, 0) == 0.0);
  }
  CHECK(check_commutativity(m, random_states(2, 5, 0.1, 3, 4)));
}

TEST_CASE("noncommutative_test tensor") {
  const double s1 = 0.2, s2 = 0.3;
  const ModelSpec m = builtin_model("noncommutative_test");
  for (const auto& x : random_states(2, 10, 0.1, 3, 5)) {
    const HTensor h = compute_h(m, x);
    // g11 = s1 x1, g22 = s2 x1 x2, differentiated by hand.
    CHECK(h(0, 0, 0) == doctest::Approx(0.5 * s1 * s1 * x[0]).epsilon(1e-14));
    CHECK(h(1, 1, 0) == doctest::Approx(0.5 * s1 * s2 * x[0] * x[1]).epsilon(1e-14));
    CHECK(h(1, 1, 1) == doctest::Approx(0.5 * s2 * s2 * x[0] * x[0] * x[1]).epsilon(1e-14));
    CHECK(h(1, 0, 1) == 0.0);
    CHECK(h(0, 1, 0) == 0.0);
  }
  CHECK_FALSE(check_commutativity(m, random_states(2, 5, 0.1, 3, 6)));
  CHECK_FALSE(m.bounded_derivatives);
}

TEST_CASE("constant_diffusion has a vanishing tensor") {
  const ModelSpec m = builtin_model("constant_diffusion", {{"sigma", "0.5,2,1"}});
  CHECK(m.state_dim == 3);
  for (const auto& x : random_states(3, 5, -2, 2, 7)) CHECK(compute_h(m, x).max_abs() == 0.0);
  CHECK(check_commutativity(m, random_states(3, 3, -2, 2, 8)));
}

TEST_CASE("analytic and finite-difference tensors agree at 100 random states") {
  for (const std::string& name : builtin_model_names()) {
    CAPTURE(name);
    const ModelSpec m = builtin_model(name);
    for (const auto& x : random_states(m.state_dim, 100, 0.1, 3, 9)) {
      const HTensor exact = compute_h(m, x);
      const HTensor fd = h_from_finite_differences(m, x);
      double gap = 0.0;
      for (std::size_t i = 0; i < exact.values.size(); ++i) {
        gap = std::max(gap, std::fabs(exact.values[i] - fd.values[i]));
      }
      CHECK(gap <= 1e-5 * exact.max_abs());
    }
  }
}

TEST_CASE("finite differences stand in for a missing analytic jacobian") {
  ModelSpec m;
  m.name = "sine";
  m.state_dim = 1;
  m.noise_dim = 1;
  m.x0 = {0.3};
  m.omega = {1.0};
  m.drift = [](std::span<const double>, std::span<double> f) { f[0] = 0.0; };
  m.diffusion = [](std::span<const double> x, std::span<double> g) { g[0] = std::sin(x[0]); };
  m.finalize();
  for (double x : {-2.0, -0.3, 0.0, 0.7, 1.9}) {
    const HTensor h = compute_h(m, std::vector<double>{x});
    CHECK(h(0, 0, 0) == doctest::Approx(0.5 * std::sin(x) * std::cos(x)).epsilon(1e-8));
  }
}

TEST_CASE("non-finite jacobian entries are reported with their component") {
  ModelSpec m = builtin_model("geometric_multi");
  m.diffusion_jacobian = [](std::span<const double>, std::span<double> out) {
    for (double& v : out) v = 0.0;
    out[(1 * 2 + 1) * 2 + 0] = std::nan("");
  };
  const std::string msg = error_message([&] { compute_h(m, std::vector<double>{1.0, 1.0}); });
  CHECK(msg.find("dg[1][1]/dx[0]") != std::string::npos);
  try {
    compute_h(m, std::vector<double>{1.0, 1.0});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::model_evaluation);
  }
}

TEST_CASE("geometric_multi parameters") {
  const ModelSpec m = builtin_model(
      "geometric_multi", {{"sigma", "0.1,0.2,0.3"}, {"mu", "0.01,0.02,0.03"}, {"x0", "1,2,3"},
                          {"rho", "0.5"}});
  CHECK(m.state_dim == 3);
  CHECK(m.x0 == std::vector<double>{1, 2, 3});
  CHECK(m.omega[1] == 0.5);
  CHECK(m.omega[4] == 1.0);
  std::vector<double> f(3), g(9);
  m.drift(m.x0, f);
  m.diffusion(m.x0, g);
  CHECK(f[2] == doctest::Approx(0.09));
  CHECK(g[4] == doctest::Approx(0.4));
  CHECK(g[1] == 0.0);
  CHECK_THROWS_AS(builtin_model("geometric_multi", {{"sigma", "0.1,0.2"}, {"mu", "0.1"}}), Error);
  CHECK_THROWS_AS(builtin_model("geometric_multi", {{"rho", "1.5"}}), Error);
}

TEST_CASE("builtin registry errors") {
  const std::string msg = error_message([] { builtin_model("heston"); });
  for (const std::string& name : builtin_model_names()) CHECK(msg.find(name) != std::string::npos);
  try {
    builtin_model("heston");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
  }
  CHECK_THROWS_AS(builtin_model("clark_cameron", {{"sigma", "1"}}), Error);
  CHECK(error_message([] { builtin_model("noncommutative_test", {{"sigma", "1"}}); })
            .find("sigma1") != std::string::npos);
  CHECK_THROWS_AS(builtin_model("geometric_multi", {{"sigma", "abc"}}), Error);
}

TEST_CASE("finalize validates dimensions") {
  ModelSpec m = builtin_model("clark_cameron");
  m.x0 = {0.0};
  CHECK_THROWS_AS(m.finalize(), Error);
  m = builtin_model("clark_cameron");
  m.noise_dim = kMaxNoiseDim + 1;
  CHECK_THROWS_AS(m.finalize(), Error);
  m = builtin_model("clark_cameron");
  m.diffusion = nullptr;
  CHECK_THROWS_AS(m.finalize(), Error);
}
