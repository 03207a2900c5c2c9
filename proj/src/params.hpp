#pragma once

// Parsing helpers for builtin model / payoff parameter maps.

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "amlmc/models.hpp"

namespace amlmc::detail {

double parse_double(std::string_view text, std::string_view what);
std::vector<double> parse_double_list(std::string_view text, std::string_view what);

class ParamReader {
 public:
  ParamReader(std::string owner, const ParamMap& params,
              std::initializer_list<std::string_view> allowed);

  double scalar(const std::string& key, double fallback) const;
  std::vector<double> vector(const std::string& key, std::vector<double> fallback) const;
  bool has(const std::string& key) const { return params_.count(key) != 0; }

 private:
  std::string owner_;
  const ParamMap& params_;
};

std::string join(const std::vector<std::string>& items, std::string_view sep);

}  // namespace amlmc::detail
