#pragma once

#include <cstdint>
#include <optional>
#include <span>

namespace amlmc {

struct MomentSummary {
  std::uint64_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased, M2 / (n - 1)
  double std_error = 0.0;  // sqrt(variance / n)
  /// Non-excess kurtosis n M4 / M2^2; empty below four samples or when the
  /// data has zero spread.
  std::optional<double> kurtosis;
};

/// Streaming mean and central moment sums up to fourth order. Value type;
/// each worker owns one and merges at join points.
class MomentAccumulator {
 public:
  void push(double value);
  void merge(const MomentAccumulator& other);

  /// Requires count() >= 2; throws Error(insufficient_data) otherwise.
  MomentSummary finalize() const;

  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double m2() const noexcept { return m2_; }
  double m3() const noexcept { return m3_; }
  double m4() const noexcept { return m4_; }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double m4_ = 0.0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y = intercept + slope * x. Needs at least two
/// distinct abscissae.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace amlmc
