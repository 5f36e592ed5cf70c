#pragma once

// Split R-hat and multi-chain effective sample size (Geyer initial monotone
// sequence over split chains), plus per-parameter posterior summaries.

#include "bsem/sampler/draws.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bsem {

using ChainView = std::span<const double>;

namespace detail {

/// Splits each chain into two halves (the middle draw of odd-length chains
/// is dropped).
inline std::vector<ChainView> split_chains(const std::vector<ChainView>& chains) {
  std::vector<ChainView> out;
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    out.push_back(c.first(h));
    out.push_back(c.last(h));
  }
  return out;
}

inline double mean_of(ChainView c) {
  double s = 0.0;
  for (double v : c) s += v;
  return s / static_cast<double>(c.size());
}

inline double var_of(ChainView c) {
  const double m = mean_of(c);
  double s = 0.0;
  for (double v : c) s += (v - m) * (v - m);
  return s / static_cast<double>(c.size() - 1);
}

/// Biased autocovariance at lags 0..n-1 via FFT.
inline std::vector<double> autocovariance(ChainView c) {
  const std::size_t n = c.size();
  const double m = mean_of(c);
  std::size_t len = 1;
  while (len < 2 * n) len <<= 1;
  std::vector<double> x(len, 0.0);
  for (std::size_t i = 0; i < n; ++i) x[i] = c[i] - m;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> f;
  fft.fwd(f, x);
  for (auto& z : f) z = std::complex<double>(std::norm(z), 0.0);
  std::vector<double> ac;
  fft.inv(ac, f);
  ac.resize(n);
  for (auto& a : ac) a /= static_cast<double>(n);
  return ac;
}

inline bool is_constant(const std::vector<ChainView>& chains) {
  for (const auto& c : chains) {
    for (double v : c) {
      if (v != chains[0][0]) return false;
    }
  }
  return true;
}

}  // namespace detail

/// Split R-hat. Needs at least two chains of at least four draws. Returns
/// no value when the draws are constant (R-hat is undefined).
[[nodiscard]] inline std::optional<double> split_rhat(const std::vector<ChainView>& chains) {
  if (chains.size() < 2) throw InputError("R-hat needs at least two chains");
  for (const auto& c : chains) {
    if (c.size() < 4) throw InputError("R-hat needs at least four draws per chain");
    for (double v : c) {
      if (!std::isfinite(v)) return std::nullopt;
    }
  }
  if (detail::is_constant(chains)) return std::nullopt;
  const auto split = detail::split_chains(chains);
  const double n = static_cast<double>(split[0].size());
  const double m = static_cast<double>(split.size());
  std::vector<double> means, vars;
  for (const auto& c : split) {
    means.push_back(detail::mean_of(c));
    vars.push_back(detail::var_of(c));
  }
  double grand = 0.0;
  for (double v : means) grand += v;
  grand /= m;
  double B = 0.0;
  for (double v : means) B += (v - grand) * (v - grand);
  B *= n / (m - 1.0);
  double W = 0.0;
  for (double v : vars) W += v;
  W /= m;
  if (!(W > 0.0)) return std::nullopt;
  const double var_plus = (n - 1.0) / n * W + B / n;
  return std::sqrt(var_plus / W);
}

/// Multi-chain ESS over split chains, capped at the total draw count.
/// Returns no value for constant draws.
[[nodiscard]] inline std::optional<double> effective_sample_size(const std::vector<ChainView>& chains) {
  if (chains.empty()) throw InputError("ESS needs at least one chain");
  for (const auto& c : chains) {
    if (c.size() < 4) throw InputError("ESS needs at least four draws per chain");
    for (double v : c) {
      if (!std::isfinite(v)) return std::nullopt;
    }
  }
  if (detail::is_constant(chains)) return std::nullopt;
  const auto split = detail::split_chains(chains);
  const std::size_t M = split.size();
  const std::size_t N = split[0].size();
  std::vector<std::vector<double>> acov;
  std::vector<double> means;
  for (const auto& c : split) {
    acov.push_back(detail::autocovariance(c));
    means.push_back(detail::mean_of(c));
  }
  const double Nd = static_cast<double>(N);
  double mean_var = 0.0;
  for (const auto& a : acov) mean_var += a[0] * Nd / (Nd - 1.0);
  mean_var /= static_cast<double>(M);
  double var_plus = mean_var * (Nd - 1.0) / Nd;
  if (M > 1) {
    double g = 0.0;
    for (double v : means) g += v;
    g /= static_cast<double>(M);
    double b = 0.0;
    for (double v : means) b += (v - g) * (v - g);
    var_plus += b / static_cast<double>(M - 1);
  }
  if (!(var_plus > 0.0)) return std::nullopt;
  auto acov_mean = [&](std::size_t t) {
    double s = 0.0;
    for (const auto& a : acov) s += a[t];
    return s / static_cast<double>(M);
  };
  std::vector<double> rho(N, 0.0);
  rho[0] = 1.0;
  double even = 1.0;
  double odd = 1.0 - (mean_var - acov_mean(1)) / var_plus;
  rho[1] = odd;
  std::size_t t = 1;
  while (t + 2 < N && t < N - 5 && even + odd > 0.0) {
    even = 1.0 - (mean_var - acov_mean(t + 1)) / var_plus;
    odd = 1.0 - (mean_var - acov_mean(t + 2)) / var_plus;
    if (even + odd >= 0.0) {
      rho[t + 1] = even;
      rho[t + 2] = odd;
    }
    t += 2;
  }
  const std::size_t max_t = std::min(t, N - 2);
  if (even > 0.0 && max_t + 1 < N) rho[max_t + 1] = even;
  // Initial monotone sequence.
  for (std::size_t u = 1; u + 4 <= max_t; u += 2) {
    if (rho[u + 1] + rho[u + 2] > rho[u - 1] + rho[u]) {
      rho[u + 1] = 0.5 * (rho[u - 1] + rho[u]);
      rho[u + 2] = rho[u + 1];
    }
  }
  const double total = static_cast<double>(M * N);
  double tau = -1.0;
  for (std::size_t u = 0; u <= max_t; ++u) tau += 2.0 * rho[u];
  if (max_t + 1 < N) tau += rho[max_t + 1];
  tau = std::max(tau, 1.0 / std::log10(total));
  return std::min(total, total / tau);
}

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
  std::optional<double> rhat;
  std::optional<double> ess;
};

struct Diagnostics {
  std::vector<ParameterSummary> parameters;
  std::size_t divergences = 0;
  double divergence_rate = 0.0;
  std::optional<double> max_rhat;
  std::optional<double> min_ess;

  /// Human-readable reasons the fit should not be trusted; empty if none.
  [[nodiscard]] std::vector<std::string> failures(double rhat_limit = 1.05, double max_divergence_rate = 0.1) const {
    std::vector<std::string> out;
    if (max_rhat && *max_rhat > rhat_limit) {
      out.push_back("max R-hat " + std::to_string(*max_rhat) + " exceeds " + std::to_string(rhat_limit));
    }
    if (divergence_rate > max_divergence_rate) {
      out.push_back("divergent transitions " + std::to_string(100.0 * divergence_rate) + "% exceed " +
                    std::to_string(100.0 * max_divergence_rate) + "%");
    }
    return out;
  }
};

[[nodiscard]] inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Summaries and convergence diagnostics for every named constrained
/// parameter. Align signs first (sign_align) for confirmatory models.
[[nodiscard]] inline Diagnostics diagnose(const Draws& d) {
  Diagnostics out;
  out.divergences = d.divergence_total();
  out.divergence_rate = d.divergence_rate();
  const auto names = parameter_names(d.spec);
  const auto cd = constrained_draws(d);
  for (std::size_t j = 0; j < names.size(); ++j) {
    ParameterSummary s;
    s.name = names[j];
    std::vector<Vector> cols;
    std::vector<ChainView> views;
    std::vector<double> all;
    for (const auto& m : cd) {
      cols.push_back(m.col(static_cast<Eigen::Index>(j)));
    }
    for (const auto& c : cols) {
      views.emplace_back(c.data(), static_cast<std::size_t>(c.size()));
      all.insert(all.end(), c.data(), c.data() + c.size());
    }
    double mean = 0.0;
    for (double v : all) mean += v;
    mean /= static_cast<double>(all.size());
    double var = 0.0;
    for (double v : all) var += (v - mean) * (v - mean);
    s.mean = mean;
    s.sd = all.size() > 1 ? std::sqrt(var / static_cast<double>(all.size() - 1)) : 0.0;
    s.q025 = quantile(all, 0.025);
    s.q50 = quantile(all, 0.5);
    s.q975 = quantile(all, 0.975);
    if (d.chain_count() >= 2 && d.per_chain() >= 4) s.rhat = split_rhat(views);
    if (d.per_chain() >= 4) s.ess = effective_sample_size(views);
    if (s.rhat) out.max_rhat = std::max(out.max_rhat.value_or(0.0), *s.rhat);
    if (s.ess) out.min_ess = std::min(out.min_ess.value_or(std::numeric_limits<double>::infinity()), *s.ess);
    out.parameters.push_back(std::move(s));
  }
  return out;
}

}  // namespace bsem
