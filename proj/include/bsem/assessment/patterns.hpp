#pragma once

// Response patterns of categorical data: mixed-radix codes, sparse frequency
// tables, and Monte Carlo pattern probabilities under the fitted model.

#include "bsem/core/validate.hpp"
#include "bsem/likelihood/links.hpp"
#include "bsem/sampler/distributions.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace bsem {

using PatternCode = std::uint64_t;

/// Mixed-radix coding of response patterns; item 0 varies slowest.
class PatternCoder {
 public:
  explicit PatternCoder(std::vector<int> categories) : m_(std::move(categories)) {
    for (int m : m_) {
      if (m < 2) throw InputError("pattern coding needs categorical items");
      if (count_ > (std::uint64_t{1} << 62) / static_cast<std::uint64_t>(m)) {
        throw InputError("too many response patterns to encode");
      }
      count_ *= static_cast<std::uint64_t>(m);
    }
  }
  explicit PatternCoder(const ValidatedSpec& vs) : PatternCoder(category_counts(vs)) {}

  [[nodiscard]] std::size_t items() const { return m_.size(); }
  [[nodiscard]] int categories(std::size_t j) const { return m_[j]; }
  /// R = product of category counts.
  [[nodiscard]] std::uint64_t pattern_count() const { return count_; }

  template <class Row>
  [[nodiscard]] PatternCode encode(const Row& row) const {
    PatternCode c = 0;
    for (std::size_t j = 0; j < m_.size(); ++j) {
      const auto v = static_cast<int>(row[static_cast<Eigen::Index>(j)]);
      if (v < 0 || v >= m_[j]) throw InputError("category code out of range");
      c = c * static_cast<PatternCode>(m_[j]) + static_cast<PatternCode>(v);
    }
    return c;
  }

  [[nodiscard]] std::vector<int> decode(PatternCode c) const {
    std::vector<int> out(m_.size());
    for (std::size_t j = m_.size(); j-- > 0;) {
      out[j] = static_cast<int>(c % static_cast<PatternCode>(m_[j]));
      c /= static_cast<PatternCode>(m_[j]);
    }
    return out;
  }

  static std::vector<int> category_counts(const ValidatedSpec& vs) {
    if (vs.family != DataFamily::categorical) throw InputError("response patterns need categorical items");
    std::vector<int> m;
    for (const auto& it : vs.spec.items) m.push_back(it.category_count());
    return m;
  }

 private:
  std::vector<int> m_;
  std::uint64_t count_ = 1;
};

/// Observed pattern frequencies. Only patterns with O_r > 0 are stored;
/// the remaining R - size() patterns have frequency zero.
struct PatternTable {
  std::map<PatternCode, double> counts;
  double n = 0.0;

  [[nodiscard]] std::vector<PatternCode> codes() const {
    std::vector<PatternCode> out;
    out.reserve(counts.size());
    for (const auto& [c, o] : counts) out.push_back(c);
    return out;
  }
};

[[nodiscard]] inline PatternTable pattern_table(const Matrix& Y, const PatternCoder& coder) {
  PatternTable t;
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    t.counts[coder.encode(Y.row(i))] += 1.0;
  }
  t.n = static_cast<double>(Y.rows());
  return t;
}

namespace detail {

/// Category probabilities of item j at linear predictor eta.
inline void category_probs(const ValidatedSpec& vs, const ParameterSet& P, std::size_t j, double eta,
                           std::vector<double>& out) {
  const Link l = vs.spec.link;
  const auto& item = vs.spec.items[j];
  if (item.kind == ItemKind::ordinal) {
    const Vector& tau = P.tau[j];
    const auto m = static_cast<std::size_t>(item.category_count());
    out.resize(m);
    double prev = 0.0;
    for (std::size_t s = 0; s + 1 < m; ++s) {
      const double c = link::cdf(l, tau[static_cast<Eigen::Index>(s)] - eta);
      out[s] = c - prev;
      prev = c;
    }
    out[m - 1] = 1.0 - prev;
  } else {
    const double p1 = link::cdf(l, eta);
    out.assign({1.0 - p1, p1});
  }
}

/// Draws latent linear predictors eta = alpha + Lambda z + u, one row per draw.
inline Matrix latent_predictors(const ValidatedSpec& vs, const ParameterSet& P, std::size_t draws, Rng& rng) {
  const Matrix chol_phi = dist::cholesky_factor(P.Phi, "Phi");
  const Matrix z = dist::mv_normal_rows(draws, Vector::Zero(P.Phi.rows()), chol_phi, rng);
  Matrix eta = z * P.Lambda.transpose();
  if (vs.random_effects()) {
    const Matrix chol_om = dist::cholesky_factor(*P.Omega, "Omega");
    eta += dist::mv_normal_rows(draws, Vector::Zero(static_cast<Eigen::Index>(vs.p())), chol_om, rng);
  }
  for (std::size_t j = 0; j < vs.p(); ++j) {
    if (vs.spec.items[j].kind != ItemKind::ordinal) eta.col(static_cast<Eigen::Index>(j)).array() += P.alpha[static_cast<Eigen::Index>(j)];
  }
  return eta;
}

}  // namespace detail

/// Monte Carlo estimate of pi_r = E_{z,u}[prod_j P(y_j = r_j | z, u)] for the
/// requested patterns, using s_mc latent draws shared across patterns.
[[nodiscard]] inline std::vector<double> pattern_probability(const ParameterSet& P, const ValidatedSpec& vs,
                                                             const PatternCoder& coder,
                                                             std::span<const PatternCode> patterns, std::size_t s_mc,
                                                             Rng& rng) {
  if (s_mc < 1) throw InputError("pattern probabilities need at least one Monte Carlo draw");
  const std::size_t p = vs.p();
  std::vector<std::vector<int>> decoded;
  decoded.reserve(patterns.size());
  for (auto c : patterns) decoded.push_back(coder.decode(c));
  const Matrix eta = detail::latent_predictors(vs, P, s_mc, rng);
  std::vector<double> out(patterns.size(), 0.0);
  std::vector<std::vector<double>> probs(p);
  for (std::size_t s = 0; s < s_mc; ++s) {
    for (std::size_t j = 0; j < p; ++j) {
      detail::category_probs(vs, P, j, eta(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)), probs[j]);
    }
    for (std::size_t r = 0; r < patterns.size(); ++r) {
      double pr = 1.0;
      for (std::size_t j = 0; j < p; ++j) pr *= probs[j][static_cast<std::size_t>(decoded[r][j])];
      out[r] += pr;
    }
  }
  for (auto& v : out) v /= static_cast<double>(s_mc);
  return out;
}

/// Probabilities of all R patterns, indexed by code.
[[nodiscard]] inline std::vector<double> pattern_probability(const ParameterSet& P, const ValidatedSpec& vs,
                                                             std::size_t s_mc, Rng& rng) {
  const PatternCoder coder(vs);
  if (coder.pattern_count() > (std::uint64_t{1} << 20)) {
    throw InputError("full pattern enumeration is limited to 2^20 patterns");
  }
  std::vector<PatternCode> all(coder.pattern_count());
  for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
  return pattern_probability(P, vs, coder, all, s_mc, rng);
}

/// Simulates n response rows from the model at P.
[[nodiscard]] inline Matrix simulate_responses(const ParameterSet& P, const ValidatedSpec& vs, std::size_t n, Rng& rng) {
  const Matrix eta = detail::latent_predictors(vs, P, n, rng);
  Matrix Y(eta.rows(), eta.cols());
  for (Eigen::Index i = 0; i < eta.rows(); ++i) {
    for (std::size_t j = 0; j < vs.p(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      Y(i, jj) = vs.spec.items[j].kind == ItemKind::ordinal
                     ? dist::ordinal_response(vs.spec.link, P.tau[j], eta(i, jj), rng)
                     : dist::binary_response(vs.spec.link, eta(i, jj), rng);
    }
  }
  return Y;
}

}  // namespace bsem
