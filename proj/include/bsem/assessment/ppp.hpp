#pragma once

// Posterior predictive p-values. Continuous data use the LRT discrepancy of
// the sample covariance; categorical data use G^2 on response patterns with
// Monte Carlo pattern probabilities.

#include "bsem/assessment/discrepancy.hpp"
#include "bsem/core/algebra.hpp"
#include "bsem/sampler/draws.hpp"
#include "bsem/sampler/rng.hpp"

#include <set>
#include <vector>

namespace bsem {

struct PppOptions {
  std::size_t thin = 8;     // every thin-th posterior draw
  std::size_t s_mc = 500;   // latent draws per pattern-probability estimate
  std::uint64_t seed = 1;
};

struct PppResult {
  double value = 0.0;
  std::vector<double> observed;    // D(Y, theta_m)
  std::vector<double> replicated;  // D(Y_rep_m, theta_m)
};

/// Fraction of draws with D(Y, theta_m) < D(Y_rep_m, theta_m). Ties count
/// as failures.
[[nodiscard]] inline double ppp_value(std::span<const double> observed, std::span<const double> replicated) {
  if (observed.size() != replicated.size() || observed.empty()) throw InputError("ppp: need matching non-empty discrepancy lists");
  std::size_t hits = 0;
  for (std::size_t m = 0; m < observed.size(); ++m) hits += observed[m] < replicated[m] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(observed.size());
}

/// Every thin-th draw of d in chain-major order.
[[nodiscard]] inline std::vector<ParameterSet> thinned_params(const Draws& d, std::size_t thin) {
  if (thin == 0) throw InputError("thin must be at least 1");
  std::vector<ParameterSet> out;
  const auto layout = d.structural_layout();
  std::vector<double> buf;
  std::size_t t = 0;
  for (std::size_t c = 0; c < d.chain_count(); ++c) {
    for (std::size_t s = 0; s < d.per_chain(); ++s, ++t) {
      if (t % thin != 0) continue;
      out.push_back(unpack(d.row(c, s, buf).first(d.spec.structural_dim), layout).params);
    }
  }
  return out;
}

/// Model-implied covariance of the observed continuous items.
[[nodiscard]] inline Matrix observed_covariance(const ParameterSet& P, const ValidatedSpec& vs) {
  return implied_covariance(P.Lambda, P.Phi, vs.random_effects() ? P.Omega : std::nullopt, P.psi);
}

/// Continuous discrepancy generator with a user-supplied discrepancy.
template <class Discrepancy>
[[nodiscard]] PppResult ppp_continuous(const std::vector<ParameterSet>& draws, const ValidatedSpec& vs, const Dataset& Y,
                                       std::uint64_t seed, Discrepancy&& D) {
  PppResult r;
  const std::size_t n = Y.n();
  const Matrix S = sample_covariance(Y.values);
  for (std::size_t m = 0; m < draws.size(); ++m) {
    auto rng = make_stream(seed, StreamKind::replicate, m);
    const Matrix sigma = observed_covariance(draws[m], vs);
    const Matrix chol = dist::cholesky_factor(sigma, "implied covariance");
    const Matrix rep = dist::mv_normal_rows(n, draws[m].alpha, chol, rng);
    r.observed.push_back(D(S, sigma, n));
    r.replicated.push_back(D(sample_covariance(rep), sigma, n));
  }
  r.value = ppp_value(r.observed, r.replicated);
  return r;
}

[[nodiscard]] inline PppResult ppp_categorical(const std::vector<ParameterSet>& draws, const ValidatedSpec& vs,
                                               const Dataset& Y, std::uint64_t seed, std::size_t s_mc) {
  PppResult r;
  const PatternCoder coder(vs);
  const PatternTable obs = pattern_table(Y.values, coder);
  for (std::size_t m = 0; m < draws.size(); ++m) {
    auto rng = make_stream(seed, StreamKind::replicate, m);
    const PatternTable rep = pattern_table(simulate_responses(draws[m], vs, Y.n(), rng), coder);
    std::set<PatternCode> uni;
    for (const auto& [c, o] : obs.counts) uni.insert(c);
    for (const auto& [c, o] : rep.counts) uni.insert(c);
    const std::vector<PatternCode> codes(uni.begin(), uni.end());
    const auto pi = pattern_probability(draws[m], vs, coder, codes, s_mc, rng);
    std::vector<double> o_obs(codes.size(), 0.0), o_rep(codes.size(), 0.0);
    for (std::size_t i = 0; i < codes.size(); ++i) {
      if (auto it = obs.counts.find(codes[i]); it != obs.counts.end()) o_obs[i] = it->second;
      if (auto it = rep.counts.find(codes[i]); it != rep.counts.end()) o_rep[i] = it->second;
    }
    r.observed.push_back(g2_statistic(o_obs, pi, obs.n));
    r.replicated.push_back(g2_statistic(o_rep, pi, rep.n));
  }
  r.value = ppp_value(r.observed, r.replicated);
  return r;
}

/// PPP of the fitted model on Y. Draws should come from the posterior given Y.
[[nodiscard]] inline PppResult ppp(const Draws& d, const Dataset& Y, const PppOptions& opt = {}) {
  const auto draws = thinned_params(d, opt.thin);
  if (d.spec.family == DataFamily::continuous) {
    return ppp_continuous(draws, d.spec, Y, opt.seed,
                          [](const Matrix& S, const Matrix& sigma, std::size_t n) { return lrt_discrepancy(S, sigma, n); });
  }
  return ppp_categorical(draws, d.spec, Y, opt.seed, opt.s_mc);
}

}  // namespace bsem
