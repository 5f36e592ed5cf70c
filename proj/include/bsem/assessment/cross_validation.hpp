#pragma once

// Variogram and log scores of posterior predictive distributions, K-fold
// cross-validation, and differences-from-best tables.

#include "bsem/assessment/ppp.hpp"
#include "bsem/sampler/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace bsem {

/// Mean over samples of |y_j - y_k|^P, for all ordered pairs (j, k).
[[nodiscard]] inline Matrix variogram_expectation(const Matrix& samples, double P = 0.5) {
  if (samples.rows() < 1) throw InputError("variogram score needs at least one predictive sample");
  const Eigen::Index p = samples.cols();
  Matrix E = Matrix::Zero(p, p);
  for (Eigen::Index m = 0; m < samples.rows(); ++m) {
    for (Eigen::Index j = 0; j < p; ++j) {
      for (Eigen::Index k = 0; k < j; ++k) E(j, k) += std::pow(std::abs(samples(m, j) - samples(m, k)), P);
    }
  }
  E /= static_cast<double>(samples.rows());
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = 0; k < j; ++k) E(k, j) = E(j, k);
  }
  return E;
}

/// Variogram score of observation y against the expectation matrix E.
[[nodiscard]] inline double variogram_score_expected(const Vector& y, const Matrix& E, double P = 0.5,
                                            const std::optional<Matrix>& weights = std::nullopt) {
  const Eigen::Index p = y.size();
  if (E.rows() != p || E.cols() != p) throw InputError("variogram score: dimension mismatch");
  double s = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = 0; k < p; ++k) {
      if (j == k) continue;  // both terms vanish on the diagonal
      const double d = std::pow(std::abs(y[j] - y[k]), P) - E(j, k);
      s += (weights ? (*weights)(j, k) : 1.0) * d * d;
    }
  }
  return s;
}

/// Variogram score of y against M predictive samples (rows).
[[nodiscard]] inline double variogram_score(const Vector& y, const Matrix& samples, double P = 0.5,
                                            const std::optional<Matrix>& weights = std::nullopt) {
  if (samples.cols() != y.size()) throw InputError("variogram score: dimension mismatch");
  return variogram_score_expected(y, variogram_expectation(samples, P), P, weights);
}

struct FoldPlan {
  std::size_t n = 0;
  std::vector<std::vector<std::size_t>> test;  // sorted indices per fold

  [[nodiscard]] std::size_t folds() const { return test.size(); }
  [[nodiscard]] std::vector<std::size_t> train(std::size_t f) const {
    std::vector<char> in_test(n, 0);
    for (auto i : test.at(f)) in_test[i] = 1;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_test[i]) out.push_back(i);
    }
    return out;
  }
};

/// Random partition of 0..n-1 into K folds whose sizes differ by at most one
/// (the first n mod K folds are one larger).
[[nodiscard]] inline FoldPlan kfold_split(std::size_t n, std::size_t K, std::uint64_t seed) {
  if (K < 2 || K > n) throw InputError("folds must satisfy 2 <= K <= n (got K=" + std::to_string(K) + ", n=" + std::to_string(n) + ")");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto rng = make_stream(seed, StreamKind::fold);
  // Fisher-Yates with an explicit index draw so the plan does not depend on
  // the standard library's shuffle.
  for (std::size_t i = n; i-- > 1;) {
    const auto j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(idx[i], idx[j]);
  }
  FoldPlan plan;
  plan.n = n;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < K; ++f) {
    const std::size_t size = n / K + (f < n % K ? 1 : 0);
    std::vector<std::size_t> t(idx.begin() + static_cast<std::ptrdiff_t>(pos), idx.begin() + static_cast<std::ptrdiff_t>(pos + size));
    std::sort(t.begin(), t.end());
    plan.test.push_back(std::move(t));
    pos += size;
  }
  return plan;
}

struct CvOptions {
  std::size_t replicates_per_draw = 10;  // continuous predictive samples per posterior draw
  std::size_t thin = 1;                  // posterior draws used for the predictive
  std::size_t s_mc = 500;                // latent draws per pattern-probability estimate
  double variogram_order = 0.5;
};

struct ScoreRecord {
  std::string model;
  double total = 0.0;
  std::vector<double> per_fold;
  std::vector<std::vector<std::string>> fold_failures;  // diagnostic failures per fold
};

/// Posterior predictive samples of a continuous model: `reps` vectors per draw.
[[nodiscard]] inline Matrix predictive_samples(const std::vector<ParameterSet>& draws, const ValidatedSpec& vs,
                                               std::size_t reps, std::uint64_t seed) {
  const Eigen::Index p = static_cast<Eigen::Index>(vs.p());
  Matrix out(static_cast<Eigen::Index>(draws.size() * reps), p);
  for (std::size_t m = 0; m < draws.size(); ++m) {
    auto rng = make_stream(seed, StreamKind::predictive, m);
    const Matrix chol = dist::cholesky_factor(observed_covariance(draws[m], vs), "implied covariance");
    out.middleRows(static_cast<Eigen::Index>(m * reps), static_cast<Eigen::Index>(reps)) =
        dist::mv_normal_rows(reps, draws[m].alpha, chol, rng);
  }
  return out;
}

/// Summed variogram score of the test rows under the posterior predictive.
[[nodiscard]] inline double variogram_score_predictive(const std::vector<ParameterSet>& draws, const ValidatedSpec& vs,
                                                       const Dataset& test, const CvOptions& opt, std::uint64_t seed) {
  const Matrix E = variogram_expectation(predictive_samples(draws, vs, opt.replicates_per_draw, seed), opt.variogram_order);
  double s = 0.0;
  for (Eigen::Index i = 0; i < test.values.rows(); ++i) {
    s += variogram_score_expected(test.values.row(i).transpose(), E, opt.variogram_order);
  }
  return s;
}

/// Log score of the test pattern table under posterior-averaged pattern
/// probabilities.
[[nodiscard]] inline double log_score_predictive(const std::vector<ParameterSet>& draws, const ValidatedSpec& vs,
                                                 const Dataset& test, const CvOptions& opt, std::uint64_t seed) {
  const PatternCoder coder(vs);
  const PatternTable t = pattern_table(test.values, coder);
  const auto codes = t.codes();
  std::vector<double> pi(codes.size(), 0.0);
  for (std::size_t m = 0; m < draws.size(); ++m) {
    auto rng = make_stream(seed, StreamKind::predictive, m);
    const auto pm = pattern_probability(draws[m], vs, coder, codes, opt.s_mc, rng);
    for (std::size_t r = 0; r < pi.size(); ++r) pi[r] += pm[r];
  }
  for (auto& v : pi) v /= static_cast<double>(draws.size());
  std::vector<double> O;
  for (const auto& [c, o] : t.counts) O.push_back(o);
  return log_score_patterns(O, pi);
}

/// Score of the test part under a posterior obtained from the training part:
/// variogram for continuous data, log score for categorical data.
[[nodiscard]] inline double predictive_score(const Draws& train_draws, const Dataset& test, const CvOptions& opt,
                                             std::uint64_t seed) {
  const auto draws = thinned_params(train_draws, opt.thin);
  if (train_draws.spec.family == DataFamily::continuous) {
    return variogram_score_predictive(draws, train_draws.spec, test, opt, seed);
  }
  return log_score_predictive(draws, train_draws.spec, test, opt, seed);
}

/// K-fold cross-validated score. Fold f is fitted with a seed derived from
/// cfg.seed and f, so every model sees the same fold streams.
[[nodiscard]] inline ScoreRecord cross_validate(const ValidatedSpec& vs, const Dataset& Y, const FoldPlan& plan,
                                                const SamplerConfig& cfg, const CvOptions& opt = {}) {
  if (plan.n != Y.n()) throw InputError("fold plan does not match the data size");
  ScoreRecord rec;
  rec.model = vs.spec.name;
  for (std::size_t f = 0; f < plan.folds(); ++f) {
    SamplerConfig c = cfg;
    c.seed = derive_seed(cfg.seed, StreamKind::fold, f);
    const auto res = fit(vs, Y.subset(plan.train(f)), c);
    rec.fold_failures.push_back(res.diagnostics.failures());
    rec.per_fold.push_back(predictive_score(res.draws, Y.subset(plan.test[f]), opt, c.seed));
  }
  rec.total = std::accumulate(rec.per_fold.begin(), rec.per_fold.end(), 0.0);
  return rec;
}

struct ScoreDifference {
  std::string model;
  double total = 0.0;
  double difference = 0.0;  // total - best
};

/// Differences from the smallest total; the best model (and any tie) gets 0.
[[nodiscard]] inline std::vector<ScoreDifference> score_table(const std::vector<ScoreRecord>& records) {
  if (records.empty()) throw InputError("score_table needs at least one record");
  double best = records[0].total;
  for (const auto& r : records) best = std::min(best, r.total);
  std::vector<ScoreDifference> out;
  for (const auto& r : records) out.push_back({r.model, r.total, r.total == best ? 0.0 : r.total - best});
  return out;
}

}  // namespace bsem
