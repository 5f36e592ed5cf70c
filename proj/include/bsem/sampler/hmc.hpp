#pragma once

// Static-trajectory HMC with a jittered number of leapfrog steps, a diagonal
// mass matrix, and a three-phase warm-up (fast step-size phase, doubling
// slow windows for the metric, final fast phase), with dual averaging
// toward a target acceptance rate throughout.

#include "bsem/core/types.hpp"
#include "bsem/sampler/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <span>
#include <thread>
#include <vector>

namespace bsem {

template <class T>
concept LogDensityTarget = requires(const T& t, std::span<const double> x, std::span<double> g) {
  { t.dim() } -> std::convertible_to<std::size_t>;
  { t.log_density(x, g) } -> std::convertible_to<double>;
};

struct SamplerConfig {
  std::size_t chains = 4;
  std::optional<std::size_t> warmup;  // 1000 continuous, 2000 categorical
  std::size_t samples = 2000;         // post-warm-up iterations per chain
  std::size_t thin = 1;
  std::uint64_t seed = 20240601;
  double target_accept = 0.8;
  /// Fixed base number of leapfrog steps; when unset, the base count is
  /// trajectory_length / step_size (capped at max_steps).
  std::optional<std::size_t> leapfrog_steps;
  double trajectory_length = 3.0;
  std::size_t max_steps = 128;
  double step_jitter = 0.5;  // steps ~ U[base (1 - j), base (1 + j)]
  double max_energy_error = 1000.0;
  double init_radius = 2.0;  // inits ~ U(-r, r) in unconstrained space
  std::size_t init_buffer = 75;
  std::size_t term_buffer = 50;
  std::size_t base_window = 25;
  std::size_t threads = 0;  // 0: one per chain up to hardware concurrency
  bool keep_latent = false;

  void check() const {
    if (chains < 1) throw InputError("chains must be >= 1");
    if (samples < 1) throw InputError("samples must be >= 1");
    if (thin < 1) throw InputError("thin must be >= 1");
    if (!(target_accept > 0.0 && target_accept < 1.0)) throw InputError("target acceptance must be in (0, 1)");
    if (!(trajectory_length > 0.0)) throw InputError("trajectory length must be > 0");
    if (max_steps < 1) throw InputError("max_steps must be >= 1");
    if (leapfrog_steps && *leapfrog_steps < 1) throw InputError("leapfrog_steps must be >= 1");
    if (!(step_jitter >= 0.0 && step_jitter < 1.0)) throw InputError("step jitter must be in [0, 1)");
    if (!(init_radius >= 0.0)) throw InputError("init radius must be >= 0");
  }
};

struct HmcState {
  Vector x;
  Vector grad;
  double log_p = -std::numeric_limits<double>::infinity();
};

struct TransitionInfo {
  double accept_prob = 0.0;
  double energy_error = 0.0;
  std::size_t steps = 0;
  bool divergent = false;
  bool accepted = false;
};

template <LogDensityTarget T>
double evaluate(const T& target, const Vector& x, Vector& grad) {
  grad.resize(x.size());
  return target.log_density(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                            std::span<double>(grad.data(), static_cast<std::size_t>(grad.size())));
}

/// One HMC transition: fresh momentum, `steps` leapfrog steps of size eps,
/// Metropolis correction. A trajectory whose energy error exceeds
/// max_energy_error (or leaves the support) is divergent and rejected.
template <LogDensityTarget T>
TransitionInfo hmc_transition(const T& target, HmcState& state, double eps, const Vector& inv_metric,
                              std::size_t steps, Rng& rng, double max_energy_error = 1000.0) {
  TransitionInfo info;
  info.steps = steps;
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector r(state.x.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = nd(rng) / std::sqrt(inv_metric[i]);
  const double h0 = -state.log_p + 0.5 * r.cwiseProduct(inv_metric).dot(r);

  Vector x = state.x;
  Vector g = state.grad;
  double lp = state.log_p;
  for (std::size_t s = 0; s < steps; ++s) {
    r.noalias() += 0.5 * eps * g;
    x.noalias() += eps * inv_metric.cwiseProduct(r);
    lp = evaluate(target, x, g);
    if (!std::isfinite(lp)) break;
    r.noalias() += 0.5 * eps * g;
    const double h = -lp + 0.5 * r.cwiseProduct(inv_metric).dot(r);
    if (!std::isfinite(h) || h - h0 > max_energy_error) {
      lp = -std::numeric_limits<double>::infinity();
      break;
    }
  }
  const double h1 = std::isfinite(lp) ? -lp + 0.5 * r.cwiseProduct(inv_metric).dot(r)
                                      : std::numeric_limits<double>::infinity();
  info.energy_error = h1 - h0;
  if (!std::isfinite(h1) || h1 - h0 > max_energy_error) {
    info.divergent = true;
    info.accept_prob = 0.0;
    return info;
  }
  info.accept_prob = std::min(1.0, std::exp(h0 - h1));
  if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < info.accept_prob) {
    state.x = std::move(x);
    state.grad = std::move(g);
    state.log_p = lp;
    info.accepted = true;
  }
  return info;
}

/// Nesterov dual averaging of log step size.
class DualAveraging {
 public:
  DualAveraging(double target, double eps0) : target_(target) { restart(eps0); }

  void restart(double eps0) {
    mu_ = std::log(10.0 * eps0);
    s_bar_ = 0.0;
    x_bar_ = 0.0;
    counter_ = 0;
    log_eps_ = std::log(eps0);
  }

  double update(double accept) {
    ++counter_;
    const double c = static_cast<double>(counter_);
    const double w = 1.0 / (c + kT0);
    s_bar_ = (1.0 - w) * s_bar_ + w * (target_ - accept);
    log_eps_ = mu_ - s_bar_ * std::sqrt(c) / kGamma;
    const double xw = std::pow(c, -kKappa);
    x_bar_ = xw * log_eps_ + (1.0 - xw) * x_bar_;
    return std::exp(log_eps_);
  }

  [[nodiscard]] double final_step() const { return std::exp(x_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double target_;
  double mu_ = 0.0, s_bar_ = 0.0, x_bar_ = 0.0, log_eps_ = 0.0;
  std::size_t counter_ = 0;
};

/// Slow-window schedule: metric samples are collected from `start`, and the
/// metric is re-estimated after each iteration index in `ends` (exclusive).
struct WindowPlan {
  std::size_t start = 0;
  std::vector<std::size_t> ends;
};

[[nodiscard]] inline WindowPlan metric_windows(std::size_t warmup, std::size_t init_buffer, std::size_t term_buffer,
                                               std::size_t base_window) {
  WindowPlan plan;
  if (warmup < 20) return plan;
  if (init_buffer + term_buffer + base_window > warmup) {
    init_buffer = static_cast<std::size_t>(0.15 * static_cast<double>(warmup));
    term_buffer = static_cast<std::size_t>(0.1 * static_cast<double>(warmup));
    base_window = warmup - init_buffer - term_buffer;
  }
  plan.start = init_buffer;
  const std::size_t last = warmup - term_buffer;
  std::size_t start = init_buffer;
  std::size_t size = base_window;
  while (start < last) {
    std::size_t end = start + size;
    if (end + 2 * size > last) end = last;
    plan.ends.push_back(end);
    start = end;
    size *= 2;
  }
  return plan;
}

struct ChainOutput {
  Matrix draws;                       // kept draws x stored dims
  Vector log_p;                       // per kept draw
  std::vector<std::uint8_t> divergent;  // per kept draw
  std::size_t divergences = 0;        // post-warm-up, all iterations
  std::size_t warmup_divergences = 0;
  double step_size = 0.0;
  Vector inv_metric;
  double mean_accept = 0.0;
  std::size_t gradient_evals = 0;
};

namespace detail {

template <LogDensityTarget T>
double find_reasonable_step(const T& target, const HmcState& state, const Vector& inv_metric, double eps, Rng& rng) {
  // Double or halve until one leapfrog step's acceptance crosses 0.8.
  auto accept_one = [&](double e) {
    HmcState s = state;
    Rng local = rng;
    const auto info = hmc_transition(target, s, e, inv_metric, 1, local, std::numeric_limits<double>::infinity());
    return info.divergent ? 0.0 : std::exp(-std::max(0.0, info.energy_error));
  };
  double a = accept_one(eps);
  const int direction = a > 0.8 ? 1 : -1;
  for (int it = 0; it < 60; ++it) {
    const double next = direction > 0 ? eps * 2.0 : eps * 0.5;
    a = accept_one(next);
    if ((direction > 0 && !(a > 0.8)) || (direction < 0 && a > 0.8)) {
      return direction > 0 ? eps : next;
    }
    eps = next;
  }
  return eps;
}

}  // namespace detail

/// Initial point: uniform(-r, r) in unconstrained coordinates, retried until
/// the density and its gradient are finite.
template <LogDensityTarget T>
HmcState initialize(const T& target, double radius, Rng& rng, const std::optional<Vector>& init = std::nullopt) {
  HmcState s;
  const auto d = static_cast<Eigen::Index>(target.dim());
  std::uniform_real_distribution<double> u(-radius, radius);
  for (int attempt = 0; attempt < 100; ++attempt) {
    if (init && attempt == 0) {
      if (init->size() != d) throw InputError("initial value has the wrong length");
      s.x = *init;
    } else {
      s.x.resize(d);
      for (auto& e : s.x) e = radius > 0.0 ? u(rng) : 0.0;
    }
    s.log_p = evaluate(target, s.x, s.grad);
    if (std::isfinite(s.log_p) && s.grad.allFinite()) return s;
  }
  throw NumericalError("could not find an initial point with finite log density");
}

/// Runs one chain: warm-up adaptation followed by `samples` iterations,
/// keeping every thin-th draw and the first keep_dims coordinates.
template <LogDensityTarget T>
ChainOutput run_chain(const T& target, const SamplerConfig& cfg, std::size_t warmup, std::size_t keep_dims, Rng& rng,
                      const std::optional<Vector>& init = std::nullopt) {
  cfg.check();
  const auto d = static_cast<Eigen::Index>(target.dim());
  keep_dims = std::min<std::size_t>(keep_dims, target.dim());
  HmcState state = initialize(target, cfg.init_radius, rng, init);
  Vector inv_metric = Vector::Ones(d);
  double eps = detail::find_reasonable_step(target, state, inv_metric, 1.0, rng);
  DualAveraging da(cfg.target_accept, eps);

  const WindowPlan plan = metric_windows(warmup, cfg.init_buffer, cfg.term_buffer, cfg.base_window);
  std::size_t next_window = 0;
  Vector w_mean = Vector::Zero(d), w_m2 = Vector::Zero(d);
  std::size_t w_count = 0;

  auto steps_for = [&](double e) -> std::size_t {
    double base = cfg.leapfrog_steps ? static_cast<double>(*cfg.leapfrog_steps) : std::ceil(cfg.trajectory_length / e);
    base = std::clamp(base, 1.0, static_cast<double>(cfg.max_steps));
    const auto lo = static_cast<std::size_t>(std::max(1.0, std::round(base * (1.0 - cfg.step_jitter))));
    const auto hi = static_cast<std::size_t>(std::max(static_cast<double>(lo), std::round(base * (1.0 + cfg.step_jitter))));
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };

  ChainOutput out;
  const std::size_t kept = (cfg.samples + cfg.thin - 1) / cfg.thin;
  out.draws.resize(static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(keep_dims));
  out.log_p.resize(static_cast<Eigen::Index>(kept));
  out.divergent.assign(kept, 0);
  double accept_sum = 0.0;

  for (std::size_t it = 0; it < warmup; ++it) {
    const auto info = hmc_transition(target, state, eps, inv_metric, steps_for(eps), rng, cfg.max_energy_error);
    out.gradient_evals += info.steps;
    if (info.divergent) ++out.warmup_divergences;
    eps = da.update(info.accept_prob);
    if (!std::isfinite(eps) || eps <= 0.0) eps = 1e-3;
    if (next_window < plan.ends.size() && it >= plan.start) {
      ++w_count;
      const Vector delta = state.x - w_mean;
      w_mean += delta / static_cast<double>(w_count);
      w_m2 += delta.cwiseProduct(state.x - w_mean);
      if (it + 1 == plan.ends[next_window]) {
        const double nw = static_cast<double>(w_count);
        if (w_count > 1) {
          const Vector var = w_m2 / (nw - 1.0);
          inv_metric = (nw / (nw + 5.0)) * var.array() + 1e-3 * (5.0 / (nw + 5.0));
        }
        w_mean.setZero();
        w_m2.setZero();
        w_count = 0;
        ++next_window;
        eps = detail::find_reasonable_step(target, state, inv_metric, eps, rng);
        da.restart(eps);
      }
    }
  }
  if (warmup > 0) eps = da.final_step();
  out.step_size = eps;
  out.inv_metric = inv_metric;

  std::size_t k = 0;
  for (std::size_t it = 0; it < cfg.samples; ++it) {
    const auto info = hmc_transition(target, state, eps, inv_metric, steps_for(eps), rng, cfg.max_energy_error);
    out.gradient_evals += info.steps;
    accept_sum += info.accept_prob;
    if (info.divergent) ++out.divergences;
    if (it % cfg.thin == 0) {
      out.draws.row(static_cast<Eigen::Index>(k)) = state.x.head(static_cast<Eigen::Index>(keep_dims)).transpose();
      out.log_p[static_cast<Eigen::Index>(k)] = state.log_p;
      out.divergent[k] = info.divergent ? 1 : 0;
      ++k;
    }
  }
  out.mean_accept = accept_sum / static_cast<double>(cfg.samples);
  return out;
}

/// Runs cfg.chains independent chains, chain c on stream (seed, chain, c).
/// Output does not depend on the number of threads.
template <LogDensityTarget T>
std::vector<ChainOutput> run_chains(const T& target, const SamplerConfig& cfg, std::size_t warmup, std::size_t keep_dims,
                                    const std::vector<Vector>& inits = {}) {
  cfg.check();
  std::vector<ChainOutput> out(cfg.chains);
  std::vector<std::exception_ptr> errors(cfg.chains);
  auto work = [&](std::size_t c) {
    try {
      Rng rng = make_stream(cfg.seed, StreamKind::chain, c);
      std::optional<Vector> init;
      if (c < inits.size()) init = inits[c];
      out[c] = run_chain(target, cfg, warmup, keep_dims, rng, init);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  std::size_t threads = cfg.threads;
  if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, cfg.chains);
  if (threads <= 1) {
    for (std::size_t c = 0; c < cfg.chains; ++c) work(c);
  } else {
    std::vector<std::jthread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < cfg.chains; c = next++) work(c);
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace bsem
