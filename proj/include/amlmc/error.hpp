#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace amlmc {

enum class ErrorKind {
  invalid_argument,
  config,
  model_evaluation,
  divergence,
  insufficient_data,
  nonconvergence,
  validation,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when a simulated state becomes non-finite. Carries the stream key
/// of the offending sample so the run can be reproduced.
class DivergenceError : public Error {
 public:
  DivergenceError(std::uint32_t level, std::uint64_t sample_index,
                  std::uint32_t step_index, const std::string& detail);

  std::uint32_t level() const noexcept { return level_; }
  std::uint64_t sample_index() const noexcept { return sample_index_; }
  std::uint32_t step_index() const noexcept { return step_index_; }

 private:
  std::uint32_t level_;
  std::uint64_t sample_index_;
  std::uint32_t step_index_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace amlmc
