#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "amlmc/error.hpp"
#include "amlmc/random.hpp"
#include "amlmc/stats.hpp"

using namespace amlmc;

namespace {

MomentAccumulator accumulate(const std::vector<double>& xs) {
  MomentAccumulator a;
  for (double x : xs) a.push(x);
  return a;
}

bool close(double a, double b, double rel) {
  return std::fabs(a - b) <= rel * std::max({std::fabs(a), std::fabs(b), 1e-300});
}

void check_same(const MomentAccumulator& a, const MomentAccumulator& b, double rel) {
  CHECK(a.count() == b.count());
  CHECK(close(a.mean(), b.mean(), rel));
  CHECK(close(a.m2(), b.m2(), rel));
  CHECK(close(a.m4(), b.m4(), rel));
  // M3 of symmetric-ish data can be near zero; compare on the M2^1.5 scale.
  CHECK(std::fabs(a.m3() - b.m3()) <= rel * std::pow(a.m2(), 1.5));
}

// Test data with |mean| / stddev up to 1e3.
std::vector<double> sample_data(unsigned seed, std::size_t n, double mean) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> g(2.0, 1.0);
  std::vector<double> xs(n);
  for (double& x : xs) x = mean + g(rng);
  return xs;
}

}  // namespace

TEST_CASE("hand-computed moments") {
  const MomentSummary s = accumulate({1, 2, 3, 4}).finalize();
  CHECK(s.count == 4);
  CHECK(s.mean == 2.5);
  CHECK(s.variance == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK(s.std_error == doctest::Approx(std::sqrt(5.0 / 12.0)).epsilon(1e-15));
  // Central fourth moment sum 2 * (1.5^4 + 0.5^4) = 10.25, M2 = 5.
  REQUIRE(s.kurtosis);
  CHECK(*s.kurtosis == doctest::Approx(4 * 10.25 / 25.0).epsilon(1e-15));
}

TEST_CASE("merge equals pushing the concatenated stream") {
  MomentAccumulator a = accumulate({1, 2});
  a.merge(accumulate({3, 4}));
  check_same(a, accumulate({1, 2, 3, 4}), 1e-12);

  MomentAccumulator empty;
  MomentAccumulator b = accumulate({5, 7, 11});
  b.merge(empty);
  check_same(b, accumulate({5, 7, 11}), 0.0);
  empty.merge(accumulate({5, 7, 11}));
  check_same(empty, accumulate({5, 7, 11}), 0.0);
}

TEST_CASE("merge is associative and commutative on well-conditioned data") {
  for (double mean : {0.0, 10.0, 1000.0}) {
    CAPTURE(mean);
    const auto xs = sample_data(11, 3000, mean);
    const std::vector<double> p1(xs.begin(), xs.begin() + 700);
    const std::vector<double> p2(xs.begin() + 700, xs.begin() + 1900);
    const std::vector<double> p3(xs.begin() + 1900, xs.end());
    const auto a = accumulate(p1), b = accumulate(p2), c = accumulate(p3);

    MomentAccumulator left = a;  // (a + b) + c
    left.merge(b);
    left.merge(c);
    MomentAccumulator bc = b;  // a + (b + c)
    bc.merge(c);
    MomentAccumulator right = a;
    right.merge(bc);
    MomentAccumulator swapped = c;  // (c + a) + b
    swapped.merge(a);
    swapped.merge(b);

    check_same(left, right, 1e-12);
    check_same(left, swapped, 1e-12);
    check_same(left, accumulate(xs), 1e-12);
  }
}

TEST_CASE("shift invariance") {
  const auto xs = sample_data(5, 5000, 0.0);
  std::vector<double> shifted(xs);
  for (double& x : shifted) x += 123.25;
  const MomentSummary a = accumulate(xs).finalize();
  const MomentSummary b = accumulate(shifted).finalize();
  CHECK(b.mean == doctest::Approx(a.mean + 123.25).epsilon(1e-14));
  CHECK(close(a.variance, b.variance, 1e-9));
  CHECK(close(*a.kurtosis, *b.kurtosis, 1e-9));
}

TEST_CASE("kurtosis of standard normals") {
  constexpr std::uint64_t n = 1000000;
  MomentAccumulator acc;
  std::vector<double> z(2);
  for (std::uint64_t i = 0; i < n / 2; ++i) {
    fill_standard_normals({2024, 0, i, 0}, StreamLane::slice, z);
    acc.push(z[0]);
    acc.push(z[1]);
  }
  const MomentSummary s = acc.finalize();
  REQUIRE(s.kurtosis);
  // Asymptotic standard error of the sample kurtosis of normal data.
  CHECK(std::fabs(*s.kurtosis - 3.0) < 3.0 * std::sqrt(24.0 / n));
}

TEST_CASE("finalize thresholds") {
  CHECK_THROWS_AS(MomentAccumulator{}.finalize(), Error);
  CHECK_THROWS_AS(accumulate({1}).finalize(), Error);
  try {
    accumulate({1}).finalize();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::insufficient_data);
  }
  const MomentSummary two = accumulate({1, 3}).finalize();
  CHECK(two.variance == 2.0);
  CHECK_FALSE(two.kurtosis);
  CHECK_FALSE(accumulate({2, 2, 2, 2}).finalize().kurtosis);
  CHECK(accumulate({2, 2, 2, 2}).finalize().variance == 0.0);
}

TEST_CASE("variance is never negative") {
  MomentAccumulator a;
  for (int i = 0; i < 1000; ++i) a.push(0.1);
  CHECK(a.finalize().variance >= 0.0);
}

TEST_CASE("least-squares line") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 - 1.5 * v);
  const LineFit f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(-1.5).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(3.0).epsilon(1e-14));

  // Sxy = 4.8, Sxx = 5.
  const LineFit g = fit_line(std::vector<double>{0, 1, 2, 3}, std::vector<double>{0.1, 0.9, 2.1, 2.9});
  CHECK(g.slope == doctest::Approx(0.96).epsilon(1e-12));

  CHECK_THROWS_AS(fit_line(std::vector<double>{1}, std::vector<double>{1}), Error);
  CHECK_THROWS_AS(fit_line(std::vector<double>{2, 2}, std::vector<double>{1, 3}), Error);
  CHECK_THROWS_AS(fit_line(std::vector<double>{1, 2}, std::vector<double>{1}), Error);
}
