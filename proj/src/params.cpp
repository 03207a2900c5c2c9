#include "params.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "amlmc/error.hpp"

namespace amlmc::detail {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

double parse_double(std::string_view text, std::string_view what) {
  const std::string_view t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() ||
      !std::isfinite(value)) {
    fail(ErrorKind::config,
         "invalid number '" + std::string(text) + "' for " + std::string(what));
  }
  return value;
}

std::vector<double> parse_double_list(std::string_view text, std::string_view what) {
  std::vector<double> values;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    values.push_back(parse_double(text.substr(start, comma - start), what));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return values;
}

ParamReader::ParamReader(std::string owner, const ParamMap& params,
                         std::initializer_list<std::string_view> allowed)
    : owner_(std::move(owner)), params_(params) {
  for (const auto& [key, value] : params_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      std::vector<std::string> names(allowed.begin(), allowed.end());
      fail(ErrorKind::config, "unknown parameter '" + key + "' for " + owner_ +
                                  " (valid: " +
                                  (names.empty() ? std::string("none") : join(names, ", ")) +
                                  ")");
    }
  }
}

double ParamReader::scalar(const std::string& key, double fallback) const {
  const auto it = params_.find(key);
  if (it == params_.end()) return fallback;
  return parse_double(it->second, owner_ + "." + key);
}

std::vector<double> ParamReader::vector(const std::string& key,
                                        std::vector<double> fallback) const {
  const auto it = params_.find(key);
  if (it == params_.end()) return fallback;
  return parse_double_list(it->second, owner_ + "." + key);
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace amlmc::detail
