#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace amlmc {

/// Largest driving (Brownian) dimension supported by the fixed-size slice.
inline constexpr std::size_t kMaxNoiseDim = 8;

/// Identifies one coarse step of one sample path. Every random number in the
/// library is a pure function of a StreamKey plus a lane/block offset.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint32_t level = 0;
  std::uint64_t sample_index = 0;
  std::uint32_t step_index = 0;
};

/// Independent sub-streams sharing a StreamKey.
enum class StreamLane : std::uint32_t {
  slice = 0,
  bridge_refinement = 1,
};

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Inverse of the standard normal CDF, Wichura's AS241 (PPND16). Relative
/// accuracy about 1e-16 over (0, 1); throws Error(invalid_argument) outside.
double inverse_normal_cdf(double p);

/// Fills `out` with standard normals derived from (key, lane). Output element
/// i depends only on (key, lane, i), so prefixes are stable.
void fill_standard_normals(const StreamKey& key, StreamLane lane,
                           std::span<double> out);

/// Lower-triangular factor L of a correlation matrix (row-major, D x D).
class CholeskyFactor {
 public:
  /// Identity factor of dimension `dim`.
  static CholeskyFactor identity(std::size_t dim);

  /// Factorises a symmetric positive-semidefinite matrix with unit diagonal.
  /// Throws Error(invalid_argument) otherwise.
  static CholeskyFactor from_correlation(std::span<const double> omega,
                                         std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  double operator()(std::size_t row, std::size_t col) const {
    return values_[row * dim_ + col];
  }
  std::span<const double> values() const noexcept { return values_; }

  /// out = L * z
  void apply(std::span<const double> z, std::span<double> out) const;

 private:
  CholeskyFactor(std::size_t dim, std::vector<double> values)
      : dim_(dim), values_(std::move(values)) {}

  std::size_t dim_;
  std::vector<double> values_;
};

/// Brownian increments over the two halves of one coarse step.
struct BrownianSlice {
  std::size_t dim = 0;
  std::array<double, kMaxNoiseDim> first{};
  std::array<double, kMaxNoiseDim> second{};

  std::span<const double> delta_first() const { return {first.data(), dim}; }
  std::span<const double> delta_second() const { return {second.data(), dim}; }

  friend bool operator==(const BrownianSlice&, const BrownianSlice&) = default;
};

/// Draws both half-step increments for the coarse step identified by `key`.
/// Each half is distributed as L z sqrt(dt/2) with z standard normal.
BrownianSlice draw_slice(const StreamKey& key, double dt,
                         const CholeskyFactor& omega_chol);

/// Component-wise delta_first + delta_second.
std::array<double, kMaxNoiseDim> coarse_increment(const BrownianSlice& slice);

/// Exchanges the two halves.
BrownianSlice antithetic_swap(const BrownianSlice& slice);

}  // namespace amlmc
