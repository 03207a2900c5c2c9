#include "amlmc/error.hpp"

namespace amlmc {

DivergenceError::DivergenceError(std::uint32_t level, std::uint64_t sample_index,
                                 std::uint32_t step_index, const std::string& detail)
    : Error(ErrorKind::divergence,
            "path diverged at level " + std::to_string(level) + ", sample " +
                std::to_string(sample_index) + ", step " + std::to_string(step_index) +
                ": " + detail),
      level_(level),
      sample_index_(sample_index),
      step_index_(step_index) {}

}  // namespace amlmc
