#include "amlmc/schemes.hpp"

#include <cmath>
#include <string>

#include "amlmc/error.hpp"

namespace amlmc {

namespace {

void check_finite(std::span<const double> x, const StreamKey* key, const char* what) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      const std::string detail = std::string(what) + " produced non-finite component " +
                                 std::to_string(i);
      if (key) throw DivergenceError(key->level, key->sample_index, key->step_index, detail);
      throw DivergenceError(0, 0, 0, detail);
    }
  }
}

void require_dims(const ModelSpec& model, std::span<const double> x,
                  std::span<const double> dw, std::span<double> out,
                  std::span<const double> carry) {
  if (x.size() != model.state_dim || out.size() != model.state_dim ||
      dw.size() != model.noise_dim || (!carry.empty() && carry.size() != model.state_dim)) {
    fail(ErrorKind::invalid_argument, "step: state or increment has wrong dimension");
  }
}

// x + inc. With a carry, the rounding error of the sum (TwoSum) is kept and
// added back on the next step, so long paths do not accumulate rounding.
double add_increment(double x, double inc, std::span<double> carry, std::size_t i) {
  if (carry.empty()) return x + inc;
  const double y = inc + carry[i];
  const double s = x + y;
  const double y_part = s - x;
  carry[i] = (x - (s - y_part)) + (y - y_part);
  return s;
}

}  // namespace

double sample_cost(int level, const PathConfig& config) {
  const double fine = static_cast<double>(config.base_steps << level);
  if (level == 0) return fine;
  return config.coupling == CouplingScheme::antithetic_milstein ? 3.0 * fine : 2.0 * fine;
}

StepWorkspace::StepWorkspace(const ModelSpec& model)
    : f(model.state_dim),
      g(model.state_dim * model.noise_dim),
      jacobian(model.state_dim * model.noise_dim * model.state_dim),
      h(model.state_dim * model.noise_dim * model.noise_dim) {}

void truncated_milstein_step(const ModelSpec& model, std::span<const double> x,
                             std::span<const double> dw, double dt, std::span<double> out,
                             StepWorkspace& ws, const StreamKey* key, std::span<double> carry) {
  require_dims(model, x, dw, out, carry);
  const std::size_t d = model.state_dim;
  const std::size_t D = model.noise_dim;
  model.drift(x, ws.f);
  model.diffusion(x, ws.g);
  evaluate_jacobian(model, x, ws.jacobian);
  contract_h(d, D, ws.g, ws.jacobian, ws.h);

  const double* omega = model.omega.data();
  for (std::size_t i = 0; i < d; ++i) {
    double inc = ws.f[i] * dt;
    for (std::size_t j = 0; j < D; ++j) inc += ws.g[i * D + j] * dw[j];
    const double* h_i = ws.h.data() + i * D * D;
    for (std::size_t j = 0; j < D; ++j) {
      for (std::size_t k = 0; k < D; ++k) {
        inc += h_i[j * D + k] * (dw[j] * dw[k] - omega[j * D + k] * dt);
      }
    }
    out[i] = add_increment(x[i], inc, carry, i);
  }
  check_finite(out, key, "truncated Milstein step");
}

std::vector<double> truncated_milstein_step(const ModelSpec& model,
                                            std::span<const double> x,
                                            std::span<const double> dw, double dt) {
  StepWorkspace ws(model);
  std::vector<double> out(model.state_dim);
  truncated_milstein_step(model, x, dw, dt, out, ws);
  return out;
}

void euler_step(const ModelSpec& model, std::span<const double> x,
                std::span<const double> dw, double dt, std::span<double> out,
                StepWorkspace& ws, const StreamKey* key, std::span<double> carry) {
  require_dims(model, x, dw, out, carry);
  const std::size_t d = model.state_dim;
  const std::size_t D = model.noise_dim;
  model.drift(x, ws.f);
  model.diffusion(x, ws.g);
  for (std::size_t i = 0; i < d; ++i) {
    double inc = ws.f[i] * dt;
    for (std::size_t j = 0; j < D; ++j) inc += ws.g[i * D + j] * dw[j];
    out[i] = add_increment(x[i], inc, carry, i);
  }
  check_finite(out, key, "Euler step");
}

TripleState TripleState::initial(const ModelSpec& model) {
  const std::vector<double> zeros(model.state_dim, 0.0);
  TripleState s;
  s.xc = s.xf = s.xa = model.x0;
  s.xf_mid = s.xa_mid = model.x0;
  s.xc_prev = s.xf_prev = s.xa_prev = model.x0;
  s.asian_acc_c = s.asian_acc_f = s.asian_acc_a = zeros;
  s.carry_c = s.carry_f = s.carry_a = zeros;
  return s;
}

void coupled_coarse_step(const ModelSpec& model, TripleState& s, const BrownianSlice& slice,
                         double dt, StepWorkspace& ws, CouplingScheme coupling,
                         CouplingDefect defect, const StreamKey* key) {
  const std::size_t d = model.state_dim;
  const std::size_t D = model.noise_dim;
  if (slice.dim != D) fail(ErrorKind::invalid_argument, "slice dimension mismatch");

  std::array<double, kMaxNoiseDim> coarse_dw = coarse_increment(slice);
  if (defect == CouplingDefect::coarse_drops_second_half) coarse_dw = slice.first;
  const std::span<const double> dw_c{coarse_dw.data(), D};
  const double half = 0.5 * dt;

  s.xc_prev = s.xc;
  s.xf_prev = s.xf;
  s.xa_prev = s.xa;

  if (coupling == CouplingScheme::antithetic_milstein) {
    truncated_milstein_step(model, s.xc, dw_c, dt, s.xc, ws, key, s.carry_c);
    truncated_milstein_step(model, s.xf, slice.delta_first(), half, s.xf_mid, ws, key, s.carry_f);
    truncated_milstein_step(model, s.xf_mid, slice.delta_second(), half, s.xf, ws, key, s.carry_f);
    truncated_milstein_step(model, s.xa, slice.delta_second(), half, s.xa_mid, ws, key, s.carry_a);
    truncated_milstein_step(model, s.xa_mid, slice.delta_first(), half, s.xa, ws, key, s.carry_a);
    for (std::size_t i = 0; i < d; ++i) {
      s.asian_acc_a[i] += 0.25 * (s.xa_prev[i] + 2.0 * s.xa_mid[i] + s.xa[i]) * dt;
    }
  } else {
    euler_step(model, s.xc, dw_c, dt, s.xc, ws, key, s.carry_c);
    euler_step(model, s.xf, slice.delta_first(), half, s.xf_mid, ws, key, s.carry_f);
    euler_step(model, s.xf_mid, slice.delta_second(), half, s.xf, ws, key, s.carry_f);
    s.xa = s.xf;
    s.xa_mid = s.xf_mid;
  }

  for (std::size_t i = 0; i < d; ++i) {
    s.asian_acc_c[i] += 0.5 * (s.xc_prev[i] + s.xc[i]) * dt;
    s.asian_acc_f[i] += 0.25 * (s.xf_prev[i] + 2.0 * s.xf_mid[i] + s.xf[i]) * dt;
  }
  if (coupling == CouplingScheme::euler_coupled) s.asian_acc_a = s.asian_acc_f;
}

TripleState coupled_coarse_step(const ModelSpec& model, const TripleState& state,
                                const BrownianSlice& slice, double dt) {
  StepWorkspace ws(model);
  TripleState next = state;
  coupled_coarse_step(model, next, slice, dt, ws);
  return next;
}

TriplePathOutputs simulate_triple_path(const ModelSpec& model, int level,
                                       std::uint64_t sample_index, std::uint64_t seed,
                                       const PathConfig& config,
                                       const TripleObserver& observer) {
  if (level < 1) {
    fail(ErrorKind::invalid_argument, "simulate_triple_path requires level >= 1");
  }
  const StepBudget budget = config.budget(level);
  const std::size_t steps = budget.coarse_steps();
  const double dt = budget.coarse_dt();

  StepWorkspace ws(model);
  TripleState state = TripleState::initial(model);
  BrownianSlice zero;
  zero.dim = model.noise_dim;

  for (std::size_t n = 0; n < steps; ++n) {
    const StreamKey key{seed, static_cast<std::uint32_t>(level), sample_index,
                        static_cast<std::uint32_t>(n)};
    const BrownianSlice slice = config.zero_noise ? zero : draw_slice(key, dt, model.omega_chol);
    coupled_coarse_step(model, state, slice, dt, ws, config.coupling, config.defect, &key);
    if (observer) observer(n, state);
  }

  TriplePathOutputs out;
  const std::size_t d = model.state_dim;
  double gap2 = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double g = 0.5 * (state.xf_mid[i] + state.xa_mid[i]) -
                     0.5 * (state.xc_prev[i] + state.xc[i]);
    gap2 += g * g;
  }
  out.midpoint_gap = std::sqrt(gap2);
  out.xc = std::move(state.xc);
  out.xf = std::move(state.xf);
  out.xa = std::move(state.xa);
  out.avg_c.resize(d);
  out.avg_f.resize(d);
  out.avg_a.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    out.avg_c[i] = state.asian_acc_c[i] / config.horizon;
    out.avg_f[i] = state.asian_acc_f[i] / config.horizon;
    out.avg_a[i] = state.asian_acc_a[i] / config.horizon;
  }
  out.cost = sample_cost(level, config);
  return out;
}

SinglePathOutputs simulate_single_path(const ModelSpec& model, int level,
                                       std::uint64_t sample_index, std::uint64_t seed,
                                       StepScheme scheme, const PathConfig& config) {
  if (level < 0) fail(ErrorKind::invalid_argument, "simulate_single_path: level < 0");
  const StepBudget budget = config.budget(level);
  const std::size_t steps = budget.fine_steps();
  const double dt = budget.fine_dt();
  const std::size_t d = model.state_dim;
  const std::size_t D = model.noise_dim;

  StepWorkspace ws(model);
  std::vector<double> x = model.x0;
  std::vector<double> prev(d);
  std::vector<double> acc(d, 0.0);
  std::vector<double> carry(d, 0.0);
  std::array<double, kMaxNoiseDim> dw{};

  for (std::size_t n = 0; n < steps; ++n) {
    const StreamKey key{seed, static_cast<std::uint32_t>(level), sample_index,
                        static_cast<std::uint32_t>(n)};
    if (!config.zero_noise) dw = coarse_increment(draw_slice(key, dt, model.omega_chol));
    prev = x;
    if (scheme == StepScheme::truncated_milstein) {
      truncated_milstein_step(model, x, {dw.data(), D}, dt, x, ws, &key, carry);
    } else {
      euler_step(model, x, {dw.data(), D}, dt, x, ws, &key, carry);
    }
    for (std::size_t i = 0; i < d; ++i) acc[i] += 0.5 * (prev[i] + x[i]) * dt;
  }

  SinglePathOutputs out;
  out.terminal = std::move(x);
  out.average.resize(d);
  for (std::size_t i = 0; i < d; ++i) out.average[i] = acc[i] / config.horizon;
  out.cost = static_cast<double>(steps);
  return out;
}

std::array<double, 2> clark_cameron_oracle(int level, std::uint64_t sample_index,
                                           std::uint64_t seed, std::size_t substeps,
                                           const PathConfig& config) {
  if (level < 1) fail(ErrorKind::invalid_argument, "clark_cameron_oracle requires level >= 1");
  if (substeps < 2 || substeps % 2 != 0) {
    fail(ErrorKind::invalid_argument, "clark_cameron_oracle: substeps must be even and >= 2");
  }
  const StepBudget budget = config.budget(level);
  const std::size_t steps = budget.coarse_steps();
  const double dt = budget.coarse_dt();
  const std::size_t pieces = substeps / 2;  // per half step
  const double piece_sd = std::sqrt(0.5 * dt / static_cast<double>(pieces));
  const CholeskyFactor identity = CholeskyFactor::identity(2);

  double x1 = 0.0;
  double x2 = 0.0;
  std::vector<double> z(4 * pieces);
  std::vector<double> u1(pieces), u2(pieces);

  auto advance = [&](double du1, double du2) {
    x2 += x1 * du2 + 0.5 * du1 * du2;
    x1 += du1;
  };

  for (std::size_t n = 0; n < steps; ++n) {
    const StreamKey key{seed, static_cast<std::uint32_t>(level), sample_index,
                        static_cast<std::uint32_t>(n)};
    BrownianSlice slice;
    slice.dim = 2;
    if (!config.zero_noise) slice = draw_slice(key, dt, identity);
    if (pieces == 1) {
      advance(slice.first[0], slice.first[1]);
      advance(slice.second[0], slice.second[1]);
      continue;
    }
    if (!config.zero_noise) fill_standard_normals(key, StreamLane::bridge_refinement, z);
    for (int half = 0; half < 2; ++half) {
      const auto& delta = half == 0 ? slice.first : slice.second;
      const double* zh = z.data() + static_cast<std::size_t>(half) * 2 * pieces;
      // Conditional (bridge) increments: unconditioned draws shifted so they
      // sum to the half-step increment.
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t k = 0; k < pieces; ++k) {
        u1[k] = piece_sd * zh[2 * k];
        u2[k] = piece_sd * zh[2 * k + 1];
        s1 += u1[k];
        s2 += u2[k];
      }
      const double shift1 = (s1 - delta[0]) / static_cast<double>(pieces);
      const double shift2 = (s2 - delta[1]) / static_cast<double>(pieces);
      for (std::size_t k = 0; k < pieces; ++k) advance(u1[k] - shift1, u2[k] - shift2);
    }
  }
  if (!std::isfinite(x1) || !std::isfinite(x2)) {
    throw DivergenceError(static_cast<std::uint32_t>(level), sample_index,
                          static_cast<std::uint32_t>(steps), "Clark-Cameron oracle");
  }
  return {x1, x2};
}

}  // namespace amlmc
