#include "amlmc/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "amlmc/mlmc.hpp"
#include "amlmc/payoffs.hpp"
#include "amlmc/stats.hpp"
#include "params.hpp"

namespace amlmc {

namespace {

constexpr int kMaxLevel = 24;

// ---------------------------------------------------------------- parsing

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::uint64_t parse_count(const std::string& text, const std::string& key) {
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec == std::errc() && ptr == end) return v;
  // Allow scientific shorthand such as 1e5 for exact integers.
  const double d = detail::parse_double(text, key);
  if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  fail(ErrorKind::config, key + ": expected a non-negative integer, got '" + text + "'");
}

std::uint64_t parse_seed(const std::string& text) {
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    fail(ErrorKind::config, "seed: expected a 64-bit unsigned decimal, got '" + text + "'");
  }
  return v;
}

int parse_level(const std::string& text, const std::string& key) {
  int v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || v < 0 || v > kMaxLevel) {
    fail(ErrorKind::config, key + ": expected a level in 0.." + std::to_string(kMaxLevel) +
                                ", got '" + text + "'");
  }
  return v;
}

// "2-7" or "1,2,3" (ranges may be mixed into the list).
std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> levels;
  for (const std::string& item : split(text, ',')) {
    const auto dash = item.find('-');
    if (dash != std::string::npos && dash > 0) {
      const int lo = parse_level(trim(item.substr(0, dash)), "levels");
      const int hi = parse_level(trim(item.substr(dash + 1)), "levels");
      if (hi < lo) fail(ErrorKind::config, "levels: empty range '" + item + "'");
      for (int l = lo; l <= hi; ++l) levels.push_back(l);
    } else {
      levels.push_back(parse_level(item, "levels"));
    }
  }
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (levels[i] <= levels[i - 1]) {
      fail(ErrorKind::config, "levels: must be strictly increasing, got '" + text + "'");
    }
  }
  return levels;
}

Mode parse_mode(const std::string& text) {
  if (text == "estimate") return Mode::estimate;
  if (text == "variance_study") return Mode::variance_study;
  if (text == "complexity_study") return Mode::complexity_study;
  if (text == "strong_error_study") return Mode::strong_error_study;
  if (text == "validate") return Mode::validate;
  fail(ErrorKind::config, "mode: unknown value '" + text +
                              "' (valid: estimate, variance_study, complexity_study, "
                              "strong_error_study, validate)");
}

CouplingScheme parse_scheme(const std::string& text) {
  if (text == "antithetic_milstein") return CouplingScheme::antithetic_milstein;
  if (text == "euler_coupled") return CouplingScheme::euler_coupled;
  fail(ErrorKind::config,
       "scheme: unknown value '" + text + "' (valid: antithetic_milstein, euler_coupled)");
}

// "name" or "name:key=value;key=value".
std::pair<std::string, ParamMap> parse_component_flag(const std::string& text,
                                                      const std::string& flag) {
  const auto colon = text.find(':');
  std::pair<std::string, ParamMap> out;
  out.first = trim(text.substr(0, colon));
  if (out.first.empty()) fail(ErrorKind::config, flag + ": missing name");
  if (colon == std::string::npos) return out;
  for (const std::string& item : split(std::string_view(text).substr(colon + 1), ';')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::config, flag + ": expected key=value, got '" + item + "'");
    }
    const std::string key = trim(item.substr(0, eq));
    if (!out.second.emplace(key, trim(item.substr(eq + 1))).second) {
      fail(ErrorKind::config, flag + ": duplicate parameter '" + key + "'");
    }
  }
  return out;
}

const std::set<std::string>& experiment_keys() {
  static const std::set<std::string> keys{"mode",    "scheme",          "seed",      "eps",
                                          "levels",  "samples",         "n0",        "horizon",
                                          "workers", "initial_samples", "max_level", "out"};
  return keys;
}

void apply_experiment_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (value.empty()) fail(ErrorKind::config, key + ": empty value");
  if (key == "mode") {
    c.mode = parse_mode(value);
  } else if (key == "scheme") {
    c.scheme = parse_scheme(value);
  } else if (key == "seed") {
    c.seed = parse_seed(value);
  } else if (key == "eps") {
    c.epsilons = detail::parse_double_list(value, "eps");
  } else if (key == "levels") {
    c.levels = parse_levels(value);
  } else if (key == "samples") {
    c.samples.clear();
    for (const std::string& item : split(value, ',')) c.samples.push_back(parse_count(item, key));
  } else if (key == "n0") {
    c.n0 = static_cast<std::size_t>(parse_count(value, key));
  } else if (key == "horizon") {
    c.horizon = detail::parse_double(value, key);
  } else if (key == "workers") {
    const std::uint64_t w = parse_count(value, key);
    if (w > 4096) fail(ErrorKind::config, "workers: at most 4096");
    c.workers = static_cast<unsigned>(w);
  } else if (key == "initial_samples") {
    c.initial_samples = parse_count(value, key);
  } else if (key == "max_level") {
    c.max_level = parse_level(value, key);
  } else if (key == "out") {
    c.out = value;
  } else {
    fail(ErrorKind::config, "unknown key '" + key + "' in [experiment] (valid: " +
                                detail::join({experiment_keys().begin(), experiment_keys().end()},
                                             ", ") +
                                ")");
  }
}

void validate_config(const ExperimentConfig& c) {
  if (c.n0 < 1 || c.n0 > (std::size_t{1} << 20)) fail(ErrorKind::config, "n0: must be in 1..2^20");
  if (!(c.horizon > 0.0) || !std::isfinite(c.horizon)) {
    fail(ErrorKind::config, "horizon: must be positive");
  }
  if (c.workers < 1) fail(ErrorKind::config, "workers: must be at least 1");
  if (c.epsilons.empty()) fail(ErrorKind::config, "eps: at least one value required");
  for (double e : c.epsilons) {
    if (!(e > 0.0) || !std::isfinite(e)) fail(ErrorKind::config, "eps: values must be positive");
  }
  if (c.levels.empty()) fail(ErrorKind::config, "levels: at least one level required");
  if (c.samples.size() != 1 && c.samples.size() != c.levels.size()) {
    fail(ErrorKind::config, "samples: give one count or one per level");
  }
  for (std::uint64_t n : c.samples) {
    if (n < 2) fail(ErrorKind::config, "samples: at least 2 per level");
  }
  if (c.initial_samples < 100) fail(ErrorKind::config, "initial_samples: must be at least 100");
  if (c.max_level < 2) fail(ErrorKind::config, "max_level: must be at least 2");
  if ((c.n0 << kMaxLevel) >> kMaxLevel != c.n0 || (c.n0 << c.max_level) > (std::size_t{1} << 31)) {
    fail(ErrorKind::config, "n0 * 2^max_level exceeds the supported step count");
  }
  if ((c.n0 << c.levels.back()) > (std::size_t{1} << 31)) {
    fail(ErrorKind::config, "n0 * 2^level exceeds the supported step count");
  }
  if ((c.mode == Mode::estimate) && c.epsilons.size() != 1) {
    fail(ErrorKind::config, "eps: estimate mode takes a single value");
  }
  if (c.mode == Mode::strong_error_study && c.levels.front() < 1) {
    fail(ErrorKind::config, "levels: strong_error_study needs levels >= 1");
  }
  if (c.mode == Mode::validate && c.model != "clark_cameron") {
    fail(ErrorKind::config, "model: validate mode checks the clark_cameron identities only");
  }
  // Constructing both catches unknown names and parameters before any work.
  builtin_model(c.model, c.model_params);
  builtin_payoff(c.payoff, c.payoff_params);
}

// ---------------------------------------------------------------- output

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string render_levels(const std::vector<int>& levels) {
  bool contiguous = levels.size() > 2;
  for (std::size_t i = 1; i < levels.size(); ++i) contiguous &= levels[i] == levels[i - 1] + 1;
  if (contiguous) return std::to_string(levels.front()) + "-" + std::to_string(levels.back());
  std::string s;
  for (std::size_t i = 0; i < levels.size(); ++i) s += (i ? "," : "") + std::to_string(levels[i]);
  return s;
}

class CsvFile {
 public:
  CsvFile(const ExperimentConfig& config, const std::string& name, const std::string& columns)
      : path_((std::filesystem::path(config.out) / name).string()) {
    os_ << "# amlmc " << mode_name(config.mode) << " report\n";
    std::istringstream header(render_config(config, false));
    for (std::string line; std::getline(header, line);) {
      os_ << (line.empty() ? "#" : "# " + line) << '\n';
    }
    os_ << columns << '\n';
  }

  template <typename... Cells>
  void row(const Cells&... cells) {
    std::size_t i = 0;
    ((os_ << (i++ ? "," : "") << cell(cells)), ...);
    os_ << '\n';
  }

  const std::string& path() const { return path_; }

  void write() const {
    std::ofstream f(path_, std::ios::binary);
    f << os_.str();
    if (!f) fail(ErrorKind::io, "cannot write " + path_);
  }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(const std::optional<double>& v) { return v ? num(*v) : "nan"; }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::uint64_t v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  static std::string cell(const std::string& v) { return v; }

  std::string path_;
  std::ostringstream os_;
};

void prepare_output(const ExperimentConfig& config, ExperimentReport& report) {
  std::error_code ec;
  std::filesystem::create_directories(config.out, ec);
  if (ec) fail(ErrorKind::io, "cannot create output directory " + config.out + ": " + ec.message());
  const std::string path = (std::filesystem::path(config.out) / "resolved_config.ini").string();
  std::ofstream f(path, std::ios::binary);
  f << render_config(config, true);
  if (!f) fail(ErrorKind::io, "cannot write " + path);
  report.files.push_back(path);
}

void finish(CsvFile& csv, ExperimentReport& report) {
  csv.write();
  report.files.push_back(csv.path());
}

EstimatorConfig estimator_config(const ExperimentConfig& c) {
  EstimatorConfig e;
  e.seed = c.seed;
  e.workers = c.workers;
  e.path.base_steps = c.n0;
  e.path.horizon = c.horizon;
  e.path.coupling = c.scheme;
  return e;
}

void append_rates(std::ostream& os, const MlmcResult& r) {
  if (!r.rates) {
    os << "rates: need at least 3 levels >= 1\n";
    return;
  }
  os << "alpha = " << r.rates->alpha << "  beta = " << r.rates->beta
     << (r.rates->beta_infinite ? " (zero variance)" : "") << "  gamma = " << r.rates->gamma << '\n';
}

void append_warnings(std::ostream& os, const MlmcResult& r) {
  for (const std::string& w : r.warnings) os << "warning: " << w << '\n';
}

void write_level_rows(CsvFile& csv, const std::vector<LevelStats>& levels) {
  for (const LevelStats& s : levels) {
    csv.row(s.level, s.dt, s.mean_y, s.var_y, s.var_p, s.kurtosis, s.cost_per_sample, s.n_samples);
  }
}

constexpr const char* kLevelColumns = "level,dt,mean_Y,var_Y,var_P,kurtosis,cost,N";

// ---------------------------------------------------------------- modes

void run_estimate(const ExperimentConfig& c, ExperimentReport& report) {
  const ModelSpec model = builtin_model(c.model, c.model_params);
  const PayoffSpec payoff = builtin_payoff(c.payoff, c.payoff_params);
  AdaptiveOptions opt;
  opt.epsilon = c.epsilons.front();
  opt.initial_samples = c.initial_samples;
  opt.max_level = c.max_level;
  const MlmcResult r = run_adaptive(model, payoff, opt, estimator_config(c));

  CsvFile summary(c, "estimate.csv", "epsilon,estimate,std_error,total_cost,L,converged");
  summary.row(r.epsilon, r.estimate, r.std_error, r.total_cost, r.final_level, r.converged);
  CsvFile levels(c, "levels.csv", kLevelColumns);
  write_level_rows(levels, r.levels);
  finish(summary, report);
  finish(levels, report);

  std::ostringstream os;
  os.precision(10);
  os << "estimate = " << r.estimate << "  std_error = " << r.std_error << "  eps = " << r.epsilon
     << "\nfinal level L = " << r.final_level << "  total cost = " << r.total_cost << '\n';
  append_rates(os, r);
  append_warnings(os, r);
  if (!r.converged) {
    os << "not converged: " << r.diagnostic << '\n';
    report.exit_code = exit_code_for(ErrorKind::nonconvergence);
  }
  report.summary = os.str();
}

void run_variance_study(const ExperimentConfig& c, ExperimentReport& report) {
  const ModelSpec model = builtin_model(c.model, c.model_params);
  const PayoffSpec payoff = builtin_payoff(c.payoff, c.payoff_params);
  std::vector<std::uint64_t> samples;
  for (std::size_t i = 0; i < c.levels.size(); ++i) samples.push_back(c.samples_at(i));
  const MlmcResult r = run_fixed(model, payoff, c.levels, samples, estimator_config(c));

  CsvFile csv(c, "variance_study.csv", kLevelColumns);
  write_level_rows(csv, r.levels);
  finish(csv, report);

  std::ostringstream os;
  os.precision(6);
  os << "level        mean_Y         var_Y         var_P  kurtosis\n";
  for (const LevelStats& s : r.levels) {
    char line[160];
    std::snprintf(line, sizeof line, "%5d %13.5e %13.5e %13.5e %9.3g\n", s.level, s.mean_y,
                  s.var_y, s.var_p, s.kurtosis.value_or(std::nan("")));
    os << line;
  }
  append_rates(os, r);
  const ConsistencyReport cons = consistency_check(r.levels);
  for (const ConsistencyEntry& e : cons.entries) {
    if (!e.pass) {
      os << "consistency check failed between levels " << e.level << " and " << e.level + 1
         << " (" << e.statistic << " standard errors)\n";
    }
  }
  append_warnings(os, r);
  report.summary = os.str();
}

void run_complexity_study(const ExperimentConfig& c, ExperimentReport& report) {
  const ModelSpec model = builtin_model(c.model, c.model_params);
  const PayoffSpec payoff = builtin_payoff(c.payoff, c.payoff_params);
  CsvFile csv(c, "complexity_study.csv", "epsilon,total_cost,L,estimate,std_error");
  std::ostringstream os;
  os.precision(6);
  std::vector<double> log_eps, log_cost;
  bool all_converged = true;
  for (double eps : c.epsilons) {
    AdaptiveOptions opt;
    opt.epsilon = eps;
    opt.initial_samples = c.initial_samples;
    opt.max_level = c.max_level;
    const MlmcResult r = run_adaptive(model, payoff, opt, estimator_config(c));
    csv.row(eps, r.total_cost, r.final_level, r.estimate, r.std_error);
    os << "eps = " << eps << "  cost = " << r.total_cost << "  eps^2 cost = " << eps * eps * r.total_cost
       << "  L = " << r.final_level << "  estimate = " << r.estimate << '\n';
    if (!r.converged) {
      all_converged = false;
      os << "  not converged: " << r.diagnostic << '\n';
    }
    append_warnings(os, r);
    log_eps.push_back(std::log(eps));
    log_cost.push_back(std::log(r.total_cost));
  }
  finish(csv, report);
  if (log_eps.size() >= 2) {
    os << "log cost vs log eps slope = " << fit_line(log_eps, log_cost).slope << '\n';
  }
  if (!all_converged) report.exit_code = exit_code_for(ErrorKind::nonconvergence);
  report.summary = os.str();
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

void run_strong_error_study(const ExperimentConfig& c, ExperimentReport& report) {
  const ModelSpec model = builtin_model(c.model, c.model_params);
  const EstimatorConfig est = estimator_config(c);
  CsvFile csv(c, "strong_error_study.csv",
              "level,dt,rms_fine_antithetic,rms_mean_coarse,rms_midpoint,N");
  std::vector<double> log_dt, log_fa, log_mc, log_mid;
  for (std::size_t li = 0; li < c.levels.size(); ++li) {
    const int level = c.levels[li];
    const std::uint64_t n = c.samples_at(li);
    struct Sums {
      double fa = 0.0, mc = 0.0, mid = 0.0;
    };
    std::vector<Sums> parts(batch_count(n, est.batch_size));
    for_each_batch(0, n, est.batch_size, est.workers,
                   [&](std::size_t b, std::uint64_t first, std::uint64_t count) {
                     std::vector<double> mean(model.state_dim);
                     for (std::uint64_t s = first; s < first + count; ++s) {
                       const TriplePathOutputs p =
                           simulate_triple_path(model, level, s, est.seed, est.path);
                       for (std::size_t i = 0; i < mean.size(); ++i) {
                         mean[i] = 0.5 * (p.xf[i] + p.xa[i]);
                       }
                       parts[b].fa += squared_distance(p.xf, p.xa);
                       parts[b].mc += squared_distance(mean, p.xc);
                       parts[b].mid += p.midpoint_gap * p.midpoint_gap;
                     }
                   });
    Sums total;
    for (const Sums& s : parts) {
      total.fa += s.fa;
      total.mc += s.mc;
      total.mid += s.mid;
    }
    const double nd = static_cast<double>(n);
    const double dt = est.path.budget(level).fine_dt();
    const double fa = std::sqrt(total.fa / nd);
    const double mc = std::sqrt(total.mc / nd);
    const double mid = std::sqrt(total.mid / nd);
    csv.row(level, dt, fa, mc, mid, n);
    log_dt.push_back(std::log2(dt));
    log_fa.push_back(std::log2(fa));
    log_mc.push_back(std::log2(mc));
    log_mid.push_back(std::log2(mid));
  }
  finish(csv, report);

  std::ostringstream os;
  os.precision(4);
  auto slope = [&](const std::vector<double>& y) -> std::string {
    if (log_dt.size() < 2) return "n/a";
    for (double v : y) {
      if (!std::isfinite(v)) return "n/a (zero error)";
    }
    std::ostringstream s;
    s.precision(4);
    s << fit_line(log_dt, y).slope;
    return s.str();
  };
  os << "strong rate slopes vs dt: |Xf-Xa| " << slope(log_fa) << ", |mean-Xc| " << slope(log_mc)
     << ", midpoint " << slope(log_mid) << '\n';
  report.summary = os.str();
}

// Distance in units of the spacing of doubles at `scale`, the largest
// magnitude the compared component reached along the path.
double ulps(double a, double b, double scale) {
  const double s = std::max(std::fabs(scale), std::numeric_limits<double>::min());
  return std::fabs(a - b) / (std::nextafter(s, std::numeric_limits<double>::infinity()) - s);
}

void run_validate(const ExperimentConfig& c, ExperimentReport& report) {
  const ModelSpec model = builtin_model("clark_cameron", {});
  const EstimatorConfig est = estimator_config(c);
  const double T = c.horizon;

  // Per-path identities on 10^4 paths at levels 1..6.
  constexpr std::uint64_t kIdentityPaths = 10000;
  double worst_x1 = 0.0;
  double worst_x2 = 0.0;  // ulps per coarse step
  for (int level = 1; level <= 6; ++level) {
    const double steps = static_cast<double>(est.path.budget(level).coarse_steps());
    std::vector<std::array<double, 2>> parts(batch_count(kIdentityPaths, est.batch_size));
    for_each_batch(0, kIdentityPaths, est.batch_size, est.workers,
                   [&](std::size_t b, std::uint64_t first, std::uint64_t count) {
                     for (std::uint64_t s = first; s < first + count; ++s) {
                       double scale1 = 0.0, scale2 = 0.0;
                       const TriplePathOutputs p = simulate_triple_path(
                           model, level, s, est.seed, est.path,
                           [&](std::size_t, const TripleState& st) {
                             for (const auto* x :
                                  {&st.xc, &st.xf, &st.xa, &st.xf_mid, &st.xa_mid}) {
                               scale1 = std::max(scale1, std::fabs((*x)[0]));
                               scale2 = std::max(scale2, std::fabs((*x)[1]));
                             }
                           });
                       const double e1 = std::max(ulps(p.xf[0], p.xc[0], scale1),
                                                  ulps(p.xa[0], p.xc[0], scale1));
                       const double e2 = ulps(0.5 * (p.xf[1] + p.xa[1]), p.xc[1], scale2) / steps;
                       parts[b][0] = std::max(parts[b][0], e1);
                       parts[b][1] = std::max(parts[b][1], e2);
                     }
                   });
    for (const auto& p : parts) {
      worst_x1 = std::max(worst_x1, p[0]);
      worst_x2 = std::max(worst_x2, p[1]);
    }
  }
  report.checks.push_back({"identity_x1_max_ulp", worst_x1, 0.0, 8.0, worst_x1 <= 8.0});
  report.checks.push_back(
      {"identity_x2_average_max_ulp_per_step", worst_x2, 0.0, 8.0, worst_x2 <= 8.0});

  // Moment checks on a coarse grid of 16 steps: level 1 over 16 base steps.
  const std::uint64_t n = std::max<std::uint64_t>(c.samples_at(0), 100000);
  PathConfig grid = est.path;
  grid.base_steps = 16;
  const double dt = T / 16.0;
  std::vector<MomentAccumulator> fourth(batch_count(n, est.batch_size));
  std::vector<MomentAccumulator> sq_err(fourth.size());
  constexpr std::size_t kSubsteps = 64;
  for_each_batch(0, n, est.batch_size, est.workers,
                 [&](std::size_t b, std::uint64_t first, std::uint64_t count) {
                   for (std::uint64_t s = first; s < first + count; ++s) {
                     const TriplePathOutputs p = simulate_triple_path(model, 1, s, est.seed, grid);
                     const double d = p.xf[1] - p.xa[1];
                     fourth[b].push(d * d * d * d);
                     const auto exact = clark_cameron_oracle(1, s, est.seed, kSubsteps, grid);
                     const double e = p.xc[1] - exact[1];
                     sq_err[b].push(e * e);
                   }
                 });
  MomentAccumulator m4, mse;
  for (std::size_t b = 0; b < fourth.size(); ++b) {
    m4.merge(fourth[b]);
    mse.merge(sq_err[b]);
  }
  const MomentSummary m4s = m4.finalize();
  const double m4_target = 0.75 * T * (T + dt) * dt * dt;
  const double m4_tol = 3.0 * m4s.std_error;
  report.checks.push_back({"fourth_moment_fine_minus_antithetic", m4s.mean, m4_target, m4_tol,
                           std::fabs(m4s.mean - m4_target) <= m4_tol});
  const MomentSummary mses = mse.finalize();
  const double mse_target = 0.25 * T * dt;
  const double mse_tol = 0.05 * mse_target;
  report.checks.push_back({"coarse_mse_vs_substepped_solution", mses.mean, mse_target, mse_tol,
                           std::fabs(mses.mean - mse_target) <= mse_tol});

  CsvFile csv(c, "validate.csv", "check,value,target,tolerance,pass");
  std::ostringstream os;
  bool all = true;
  for (const ValidationCheck& k : report.checks) {
    csv.row(k.name, k.value, k.target, k.tolerance, k.pass);
    char line[200];
    std::snprintf(line, sizeof line, "%-4s %-40s value %.6g  target %.6g  tolerance %.3g\n",
                  k.pass ? "PASS" : "FAIL", k.name.c_str(), k.value, k.target, k.tolerance);
    os << line;
    all = all && k.pass;
  }
  finish(csv, report);
  if (!all) report.exit_code = exit_code_for(ErrorKind::validation);
  report.summary = os.str();
}

}  // namespace

std::uint64_t ExperimentConfig::samples_at(std::size_t level_index) const {
  return samples.size() == 1 ? samples.front() : samples.at(level_index);
}

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::estimate: return "estimate";
    case Mode::variance_study: return "variance_study";
    case Mode::complexity_study: return "complexity_study";
    case Mode::strong_error_study: return "strong_error_study";
    case Mode::validate: return "validate";
  }
  return "?";
}

std::string scheme_name(CouplingScheme scheme) {
  return scheme == CouplingScheme::euler_coupled ? "euler_coupled" : "antithetic_milstein";
}

ExperimentConfig parse_config(const std::string& text, const FlagMap& flags) {
  ExperimentConfig c;
  std::string section;
  std::set<std::string> seen_sections;
  std::set<std::string> seen_keys;
  std::optional<std::string> model_name, payoff_name;
  ParamMap model_params, payoff_params;

  std::istringstream in(text);
  int line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::config, where + "malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "experiment" && section != "model" && section != "payoff") {
        fail(ErrorKind::config,
             where + "unknown section [" + section + "] (valid: experiment, model, payoff)");
      }
      if (!seen_sections.insert(section).second) {
        fail(ErrorKind::config, where + "duplicate section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::config, where + "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (section.empty()) fail(ErrorKind::config, where + "key '" + key + "' outside a section");
    if (!seen_keys.insert(section + "." + key).second) {
      fail(ErrorKind::config, where + "duplicate key '" + key + "' in [" + section + "]");
    }
    try {
      if (section == "experiment") {
        apply_experiment_key(c, key, value);
      } else {
        auto& name = section == "model" ? model_name : payoff_name;
        auto& params = section == "model" ? model_params : payoff_params;
        if (key == "name") {
          name = value;
        } else {
          params[key] = value;
        }
      }
    } catch (const Error& e) {
      fail(e.kind(), where + e.what());
    }
  }
  if (model_name) {
    c.model = *model_name;
    c.model_params = model_params;
  } else if (!model_params.empty()) {
    fail(ErrorKind::config, "[model] has parameters but no name");
  }
  if (payoff_name) {
    c.payoff = *payoff_name;
    c.payoff_params = payoff_params;
  } else if (!payoff_params.empty()) {
    fail(ErrorKind::config, "[payoff] has parameters but no name");
  }

  for (const auto& [flag, value] : flags) {
    if (flag == "model") {
      std::tie(c.model, c.model_params) = parse_component_flag(value, "--model");
    } else if (flag == "payoff") {
      std::tie(c.payoff, c.payoff_params) = parse_component_flag(value, "--payoff");
    } else if (experiment_keys().count(flag)) {
      apply_experiment_key(c, flag, value);
    } else {
      fail(ErrorKind::config, "unknown option '" + flag + "'");
    }
  }
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::optional<std::string>& path, const FlagMap& flags) {
  std::string text;
  if (path) {
    std::ifstream f(*path, std::ios::binary);
    if (!f) fail(ErrorKind::config, "cannot read config file '" + *path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    text = ss.str();
  }
  return parse_config(text, flags);
}

std::string render_config(const ExperimentConfig& c, bool runtime) {
  std::ostringstream os;
  auto list = [](const auto& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
      s += i ? "," : "";
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(values[i])>>) {
        s += short_num(values[i]);
      } else {
        s += std::to_string(values[i]);
      }
    }
    return s;
  };
  os << "[experiment]\n"
     << "mode = " << mode_name(c.mode) << '\n'
     << "scheme = " << scheme_name(c.scheme) << '\n'
     << "seed = " << c.seed << '\n'
     << "eps = " << list(c.epsilons) << '\n'
     << "levels = " << render_levels(c.levels) << '\n'
     << "samples = " << list(c.samples) << '\n'
     << "n0 = " << c.n0 << '\n'
     << "horizon = " << short_num(c.horizon) << '\n'
     << "initial_samples = " << c.initial_samples << '\n'
     << "max_level = " << c.max_level << '\n';
  if (runtime) {
    os << "workers = " << c.workers << '\n' << "out = " << c.out << '\n';
  }
  os << "\n[model]\nname = " << c.model << '\n';
  for (const auto& [k, v] : c.model_params) os << k << " = " << v << '\n';
  os << "\n[payoff]\nname = " << c.payoff << '\n';
  for (const auto& [k, v] : c.payoff_params) os << k << " = " << v << '\n';
  return os.str();
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  ExperimentReport report;
  prepare_output(config, report);
  switch (config.mode) {
    case Mode::estimate: run_estimate(config, report); break;
    case Mode::variance_study: run_variance_study(config, report); break;
    case Mode::complexity_study: run_complexity_study(config, report); break;
    case Mode::strong_error_study: run_strong_error_study(config, report); break;
    case Mode::validate: run_validate(config, report); break;
  }
  return report;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return 2;
    case ErrorKind::nonconvergence: return 3;
    case ErrorKind::divergence: return 4;
    default: return 1;
  }
}

}  // namespace amlmc
