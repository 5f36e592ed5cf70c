#pragma once

// Synthetic data for the three two-factor, six-item scenarios:
//  1: simple structure, uncorrelated errors
//  2: simple structure plus six error correlations of 0.2
//  3: two cross-loadings of 0.6, uncorrelated errors
// Factor correlation 0.2 and zero intercepts throughout.

#include "bsem/core/algebra.hpp"
#include "bsem/sampler/distributions.hpp"
#include "bsem/sampler/rng.hpp"
#include "bsem/simulation/presets.hpp"

#include <map>
#include <utility>
#include <vector>

namespace bsem::sim {

/// Item pairs (0-based) carrying the Scenario 2 error correlations.
using ItemPairs = std::vector<std::pair<std::size_t, std::size_t>>;

inline const ItemPairs kScenario2Pairs = {{0, 1}, {0, 3}, {1, 4}, {2, 3}, {2, 5}, {4, 5}};

inline constexpr double kFactorCorrelation = 0.2;
inline constexpr double kErrorCorrelation = 0.2;

struct ScenarioTruth {
  int scenario = 1;
  ItemKind kind = ItemKind::continuous;
  Link link = Link::identity;
  Matrix Lambda;  // 6 x 2
  Matrix Phi;     // 2 x 2 correlation
  Vector alpha;   // zeros
  // Continuous: error covariance (Psi, plus the correlated pairs in Scenario 2).
  // Binary: covariance of the item-individual effects u; zero when absent.
  Matrix error_cov;

  [[nodiscard]] Matrix implied_covariance() const { return bsem::implied_covariance(Lambda, Phi, error_cov); }
};

[[nodiscard]] inline Matrix scenario_loadings(int scenario) {
  if (scenario < 1 || scenario > 3) throw InputError("scenario must be 1, 2 or 3");
  Matrix L = Matrix::Zero(6, 2);
  L(0, 0) = 1.0;
  L(1, 0) = 0.8;
  L(2, 0) = 0.8;
  L(3, 1) = 1.0;
  L(4, 1) = 0.8;
  L(5, 1) = 0.8;
  if (scenario == 3) {
    L(2, 1) = 0.6;
    L(3, 0) = 0.6;
  }
  return L;
}

[[nodiscard]] inline ScenarioTruth scenario_truth(int scenario, ItemKind kind, Link link = Link::logit,
                                                  const ItemPairs& pairs = kScenario2Pairs) {
  if (kind == ItemKind::ordinal) throw InputError("only continuous and binary scenarios are simulated");
  ScenarioTruth t;
  t.scenario = scenario;
  t.kind = kind;
  t.link = kind == ItemKind::continuous ? Link::identity : link;
  if (kind == ItemKind::binary && link == Link::identity) throw InputError("binary data need a probit or logit link");
  t.Lambda = scenario_loadings(scenario);
  t.Phi = Matrix::Identity(2, 2);
  t.Phi(0, 1) = t.Phi(1, 0) = kFactorCorrelation;
  t.alpha = Vector::Zero(6);
  const bool correlated = scenario == 2;
  t.error_cov = (kind == ItemKind::continuous || correlated) ? Matrix(Matrix::Identity(6, 6)) : Matrix(Matrix::Zero(6, 6));
  if (correlated) {
    for (auto [a, b] : pairs) {
      if (a >= 6 || b >= 6 || a == b) throw InputError("error-correlation pair out of range");
      t.error_cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = kErrorCorrelation;
      t.error_cov(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = kErrorCorrelation;
    }
  }
  return t;
}

struct Simulated {
  Dataset data;
  ScenarioTruth truth;
};

/// Continuous rows ~ N(alpha, Lambda Phi Lambda' + error_cov). Binary rows:
/// y_ij ~ Bernoulli(F(eta_ij)) with eta = alpha + Lambda z + u.
[[nodiscard]] inline Simulated generate(int scenario, ItemKind kind, std::size_t n, std::uint64_t seed,
                                        Link link = Link::logit, const ItemPairs& pairs = kScenario2Pairs) {
  if (n == 0) throw InputError("sample size must be at least 1");
  Simulated out{{}, scenario_truth(scenario, kind, link, pairs)};
  const ScenarioTruth& t = out.truth;
  out.data.items = presets::items(6, kind);
  auto rng = make_stream(seed, StreamKind::simulate, static_cast<std::uint64_t>(scenario));
  const Matrix chol_phi = dist::cholesky_factor(t.Phi, "factor correlation");
  const Matrix z = dist::mv_normal_rows(n, Vector::Zero(2), chol_phi, rng);
  Matrix eta = z * t.Lambda.transpose();
  eta.rowwise() += t.alpha.transpose();
  if (!t.error_cov.isZero(0.0)) {
    const Matrix chol_e = dist::cholesky_factor(t.error_cov, "error covariance");
    eta += dist::mv_normal_rows(n, Vector::Zero(6), chol_e, rng);
  }
  if (kind == ItemKind::continuous) {
    out.data.values = std::move(eta);
    return out;
  }
  out.data.values.resize(eta.rows(), eta.cols());
  for (Eigen::Index i = 0; i < eta.rows(); ++i) {
    for (Eigen::Index j = 0; j < eta.cols(); ++j) out.data.values(i, j) = dist::binary_response(t.link, eta(i, j), rng);
  }
  return out;
}

/// Maps each value through cut_map (e.g. {0:0, 1:0, 2:0, 3:1}).
[[nodiscard]] inline std::vector<int> dichotomize(const std::vector<double>& column, const std::map<double, int>& cut_map) {
  std::vector<int> out;
  out.reserve(column.size());
  for (std::size_t i = 0; i < column.size(); ++i) {
    const auto it = cut_map.find(column[i]);
    if (it == cut_map.end()) {
      throw InputError("row " + std::to_string(i + 1) + ": value " + std::to_string(column[i]) + " is not in the cut map");
    }
    if (it->second != 0 && it->second != 1) throw InputError("cut map targets must be 0 or 1");
    out.push_back(it->second);
  }
  return out;
}

}  // namespace bsem::sim
