#include "amlmc/random.hpp"

#include <cmath>
#include <string>

#include "amlmc/error.hpp"

namespace amlmc {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

// 53-bit uniform strictly inside (0, 1).
inline double to_open_unit(std::uint32_t a, std::uint32_t b) {
  const std::uint64_t bits =
      (static_cast<std::uint64_t>(a >> 5) << 26) | static_cast<std::uint64_t>(b >> 6);
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

template <std::size_t N>
inline double horner(const double (&coeffs)[N], double r) {
  double acc = coeffs[N - 1];
  for (std::size_t i = N - 1; i-- > 0;) acc = acc * r + coeffs[i];
  return acc;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

double inverse_normal_cdf(double p) {
  static constexpr double a[] = {
      3.3871328727963666080e0,  1.3314166789178437745e+2,
      1.9715909503065514427e+3, 1.3731693765509461125e+4,
      4.5921953931549871457e+4, 6.7265770927008700853e+4,
      3.3430575583588128105e+4, 2.5090809287301226727e+3};
  static constexpr double b[] = {
      1.0,                      4.2313330701600911252e+1,
      6.8718700749205790830e+2, 5.3941960214247511077e+3,
      2.1213794301586595867e+4, 3.9307895800092710610e+4,
      2.8729085735721942674e+4, 5.2264952788528545610e+3};
  static constexpr double c[] = {
      1.42343711074968357734e0,  4.63033784615654529590e0,
      5.76949722146069140550e0,  3.64784832476320460504e0,
      1.27045825245236838258e0,  2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static constexpr double d[] = {
      1.0,                       2.05319162663775882187e0,
      1.67638483018380384940e0,  6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9};
  static constexpr double e[] = {
      6.65790464350110377720e0,  5.46378491116411436990e0,
      1.78482653991729133580e0,  2.96560571828504891230e-1,
      2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double f[] = {
      1.0,                       5.99832206555887937690e-1,
      1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7, 2.04426310338993978564e-15};

  if (!(p > 0.0 && p < 1.0)) {
    fail(ErrorKind::invalid_argument, "inverse_normal_cdf: p must lie in (0, 1)");
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * horner(a, r) / horner(b, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = horner(c, r) / horner(d, r);
  } else {
    r -= 5.0;
    value = horner(e, r) / horner(f, r);
  }
  return q < 0.0 ? -value : value;
}

void fill_standard_normals(const StreamKey& key, StreamLane lane,
                           std::span<double> out) {
  // Counter layout: [step | level:8 lane:8 block:16 | sample lo | sample hi].
  const std::array<std::uint32_t, 2> k = {
      static_cast<std::uint32_t>(key.seed),
      static_cast<std::uint32_t>(key.seed >> 32)};
  const std::size_t blocks = (out.size() + 1) / 2;
  if (blocks > 0xFFFFu) {
    fail(ErrorKind::invalid_argument,
         "fill_standard_normals: request exceeds 131070 normals per key");
  }
  for (std::size_t block = 0; block < blocks; ++block) {
    const std::array<std::uint32_t, 4> ctr = {
        key.step_index,
        (key.level & 0xFFu) | (static_cast<std::uint32_t>(lane) & 0xFFu) << 8 |
            static_cast<std::uint32_t>(block) << 16,
        static_cast<std::uint32_t>(key.sample_index),
        static_cast<std::uint32_t>(key.sample_index >> 32)};
    const auto words = philox4x32(ctr, k);
    const double z0 = inverse_normal_cdf(to_open_unit(words[0], words[1]));
    const double z1 = inverse_normal_cdf(to_open_unit(words[2], words[3]));
    if (!std::isfinite(z0) || !std::isfinite(z1)) {
      fail(ErrorKind::invalid_argument,
           "normal generator produced a non-finite value (RNG misconfigured)");
    }
    out[2 * block] = z0;
    if (2 * block + 1 < out.size()) out[2 * block + 1] = z1;
  }
}

CholeskyFactor CholeskyFactor::identity(std::size_t dim) {
  std::vector<double> values(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) values[i * dim + i] = 1.0;
  return CholeskyFactor(dim, std::move(values));
}

CholeskyFactor CholeskyFactor::from_correlation(std::span<const double> omega,
                                                std::size_t dim) {
  if (dim == 0 || omega.size() != dim * dim) {
    fail(ErrorKind::invalid_argument, "correlation matrix has wrong size");
  }
  constexpr double tol = 1e-12;
  for (std::size_t i = 0; i < dim; ++i) {
    if (std::fabs(omega[i * dim + i] - 1.0) > tol) {
      fail(ErrorKind::invalid_argument,
           "correlation matrix must have unit diagonal");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (std::fabs(omega[i * dim + j] - omega[j * dim + i]) > tol) {
        fail(ErrorKind::invalid_argument, "correlation matrix must be symmetric");
      }
    }
  }
  // Semidefinite Cholesky: a vanishing pivot zeroes its column.
  std::vector<double> l(dim * dim, 0.0);
  for (std::size_t j = 0; j < dim; ++j) {
    double pivot = omega[j * dim + j];
    for (std::size_t k = 0; k < j; ++k) pivot -= l[j * dim + k] * l[j * dim + k];
    if (pivot < -1e-10) {
      fail(ErrorKind::invalid_argument,
           "correlation matrix is not positive semidefinite");
    }
    if (pivot <= 1e-14) {
      continue;
    }
    const double diag = std::sqrt(pivot);
    l[j * dim + j] = diag;
    for (std::size_t i = j + 1; i < dim; ++i) {
      double s = omega[i * dim + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * dim + k] * l[j * dim + k];
      l[i * dim + j] = s / diag;
    }
  }
  // A zeroed column only reproduces omega if the residual vanishes too.
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k <= j; ++k) s += l[i * dim + k] * l[j * dim + k];
      if (std::fabs(s - omega[i * dim + j]) > 1e-8) {
        fail(ErrorKind::invalid_argument,
             "correlation matrix is not positive semidefinite");
      }
    }
  }
  return CholeskyFactor(dim, std::move(l));
}

void CholeskyFactor::apply(std::span<const double> z, std::span<double> out) const {
  for (std::size_t i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k <= i; ++k) s += values_[i * dim_ + k] * z[k];
    out[i] = s;
  }
}

BrownianSlice draw_slice(const StreamKey& key, double dt,
                         const CholeskyFactor& omega_chol) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    fail(ErrorKind::invalid_argument, "draw_slice: dt must be positive");
  }
  const std::size_t dim = omega_chol.dim();
  if (dim == 0 || dim > kMaxNoiseDim) {
    fail(ErrorKind::invalid_argument,
         "draw_slice: noise dimension must be in 1.." + std::to_string(kMaxNoiseDim));
  }
  std::array<double, 2 * kMaxNoiseDim> z{};
  fill_standard_normals(key, StreamLane::slice, {z.data(), 2 * dim});

  const double scale = std::sqrt(0.5 * dt);
  BrownianSlice slice;
  slice.dim = dim;
  omega_chol.apply({z.data(), dim}, {slice.first.data(), dim});
  omega_chol.apply({z.data() + dim, dim}, {slice.second.data(), dim});
  for (std::size_t j = 0; j < dim; ++j) {
    slice.first[j] *= scale;
    slice.second[j] *= scale;
  }
  return slice;
}

std::array<double, kMaxNoiseDim> coarse_increment(const BrownianSlice& slice) {
  std::array<double, kMaxNoiseDim> sum{};
  for (std::size_t j = 0; j < slice.dim; ++j) sum[j] = slice.first[j] + slice.second[j];
  return sum;
}

BrownianSlice antithetic_swap(const BrownianSlice& slice) {
  BrownianSlice swapped;
  swapped.dim = slice.dim;
  swapped.first = slice.second;
  swapped.second = slice.first;
  return swapped;
}

}  // namespace amlmc
