#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "amlmc/error.hpp"
#include "amlmc/random.hpp"

using namespace amlmc;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("philox4x32-10 known-answer vectors") {
  using W = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == W{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        W{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        W{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("inverse normal cdf inverts the erfc-based cdf") {
  std::vector<double> ps{1e-300, 1e-100, 1e-20, 1e-10, 1e-5, 0.001, 0.01, 0.02425, 0.1,
                         0.3,    0.425,  0.5,   0.575, 0.7,  0.9,  0.97575, 0.99, 0.999};
  for (double p : ps) {
    CAPTURE(p);
    const double x = inverse_normal_cdf(p);
    const double back = p < 0.5 ? normal_cdf(x) : 1.0 - normal_cdf(-x);
    // An error of k ulp in x moves p by about k * x^2 * 2^-52 relative.
    CHECK(std::fabs(back - p) <= 1e-14 * (1.0 + x * x) * p);
  }
  CHECK(inverse_normal_cdf(0.5) == 0.0);
  CHECK(inverse_normal_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-15));
}

TEST_CASE("inverse normal cdf is odd about one half") {
  for (double p : {0.25, 0.125, 0.0625, 0.375, 0.01171875}) {
    CAPTURE(p);
    CHECK(inverse_normal_cdf(1.0 - p) == doctest::Approx(-inverse_normal_cdf(p)).epsilon(1e-15));
  }
}

TEST_CASE("inverse normal cdf rejects values outside the open unit interval") {
  CHECK_THROWS_AS(inverse_normal_cdf(0.0), Error);
  CHECK_THROWS_AS(inverse_normal_cdf(1.0), Error);
  CHECK_THROWS_AS(inverse_normal_cdf(std::nan("")), Error);
}

TEST_CASE("normal streams are deterministic and prefix stable") {
  const StreamKey key{42, 3, 17, 5};
  std::vector<double> a(11), b(11), c(4);
  fill_standard_normals(key, StreamLane::slice, a);
  fill_standard_normals(key, StreamLane::slice, b);
  fill_standard_normals(key, StreamLane::slice, c);
  CHECK(a == b);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == a[i]);

  std::vector<double> other(11);
  fill_standard_normals(key, StreamLane::bridge_refinement, other);
  CHECK(other != a);
  for (StreamKey k : {StreamKey{43, 3, 17, 5}, StreamKey{42, 4, 17, 5}, StreamKey{42, 3, 18, 5},
                      StreamKey{42, 3, 17, 6}}) {
    fill_standard_normals(k, StreamLane::slice, other);
    CHECK(other != a);
  }
}

TEST_CASE("standard normal stream moments") {
  constexpr std::size_t n = 200000;
  double s1 = 0, s2 = 0;
  std::vector<double> z(2);
  for (std::uint64_t i = 0; i < n / 2; ++i) {
    fill_standard_normals({7, 0, i, 0}, StreamLane::slice, z);
    for (double v : z) {
      s1 += v;
      s2 += v * v;
    }
  }
  const double mean = s1 / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::fabs(mean) < 4.0 / std::sqrt(double(n)));
  CHECK(std::fabs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("cholesky factor of a correlation matrix") {
  const std::vector<double> omega{1.0, 0.5, 0.2, 0.5, 1.0, 0.3, 0.2, 0.3, 1.0};
  const CholeskyFactor l = CholeskyFactor::from_correlation(omega, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 3; ++k) s += l(i, k) * l(j, k);
      CHECK(s == doctest::Approx(omega[i * 3 + j]).epsilon(1e-14));
      if (j > i) CHECK(l(i, j) == 0.0);
    }
  }
  const CholeskyFactor id = CholeskyFactor::identity(2);
  CHECK(id(0, 0) == 1.0);
  CHECK(id(1, 0) == 0.0);
}

TEST_CASE("cholesky accepts semidefinite and rejects invalid matrices") {
  CHECK_NOTHROW(CholeskyFactor::from_correlation(std::vector<double>{1, 1, 1, 1}, 2));
  CHECK_THROWS_AS(CholeskyFactor::from_correlation(std::vector<double>{1, 2, 2, 1}, 2), Error);
  CHECK_THROWS_AS(CholeskyFactor::from_correlation(std::vector<double>{2, 0, 0, 1}, 2), Error);
  CHECK_THROWS_AS(CholeskyFactor::from_correlation(std::vector<double>{1, 0.3, 0.1, 1}, 2), Error);
  CHECK_THROWS_AS(CholeskyFactor::from_correlation(std::vector<double>{1, 0, 0}, 2), Error);
}

TEST_CASE("draw_slice is deterministic per key") {
  const CholeskyFactor l = CholeskyFactor::identity(2);
  const BrownianSlice a = draw_slice({1, 2, 3, 4}, 0.25, l);
  CHECK(a == draw_slice({1, 2, 3, 4}, 0.25, l));
  CHECK_FALSE(a == draw_slice({1, 2, 3, 5}, 0.25, l));
  CHECK(a.dim == 2);
}

TEST_CASE("draw_slice rejects bad arguments") {
  const CholeskyFactor l = CholeskyFactor::identity(2);
  CHECK_THROWS_AS(draw_slice({}, 0.0, l), Error);
  CHECK_THROWS_AS(draw_slice({}, -1.0, l), Error);
  CHECK_THROWS_AS(draw_slice({}, 0.1, CholeskyFactor::identity(kMaxNoiseDim + 1)), Error);
}

TEST_CASE("slice increments have mean zero and covariance dt/2 omega") {
  const double dt = 0.1, rho = 0.6;
  const CholeskyFactor l = CholeskyFactor::from_correlation(std::vector<double>{1, rho, rho, 1}, 2);
  constexpr std::uint64_t n = 100000;
  double m[2] = {0, 0}, c00 = 0, c11 = 0, c01 = 0, cross = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const BrownianSlice s = draw_slice({99, 1, i, 0}, dt, l);
    m[0] += s.first[0];
    m[1] += s.first[1];
    c00 += s.first[0] * s.first[0];
    c11 += s.first[1] * s.first[1];
    c01 += s.first[0] * s.first[1];
    cross += s.first[0] * s.second[0];
  }
  const double h = dt / 2, nd = double(n);
  const double se_mean = std::sqrt(h / nd);
  CHECK(std::fabs(m[0] / nd) < 4 * se_mean);
  CHECK(std::fabs(m[1] / nd) < 4 * se_mean);
  // Var(x y) = h^2 (1 + rho^2) for a bivariate normal pair.
  CHECK(std::fabs(c00 / nd - h) < 4 * h * std::sqrt(2.0 / nd));
  CHECK(std::fabs(c11 / nd - h) < 4 * h * std::sqrt(2.0 / nd));
  CHECK(std::fabs(c01 / nd - rho * h) < 4 * h * std::sqrt((1 + rho * rho) / nd));
  // The two halves are independent.
  CHECK(std::fabs(cross / nd) < 4 * h / std::sqrt(nd));
}

TEST_CASE("antithetic swap") {
  BrownianSlice s;
  s.dim = 2;
  s.first = {1, 2};
  s.second = {3, 4};
  const BrownianSlice t = antithetic_swap(s);
  CHECK(t.first[0] == 3);
  CHECK(t.first[1] == 4);
  CHECK(t.second[0] == 1);
  CHECK(t.second[1] == 2);

  const CholeskyFactor l = CholeskyFactor::identity(3);
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const BrownianSlice r = draw_slice({5, 2, i, 1}, 0.5, l);
    CHECK(antithetic_swap(antithetic_swap(r)) == r);
    const auto a = coarse_increment(r);
    const auto b = coarse_increment(antithetic_swap(r));
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(std::fabs(a[j] - b[j]) <=
            std::fabs(std::nextafter(a[j], 1e300) - a[j]));
    }
  }
}
