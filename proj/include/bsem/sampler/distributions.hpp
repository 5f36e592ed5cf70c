#pragma once

// Random variates used by the simulation study and by posterior prediction.

#include "bsem/core/types.hpp"
#include "bsem/likelihood/links.hpp"
#include "bsem/sampler/rng.hpp"

#include <cmath>
#include <random>
#include <span>

namespace bsem::dist {

[[nodiscard]] inline double std_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

[[nodiscard]] inline double uniform(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

[[nodiscard]] inline Vector std_normal_vector(Eigen::Index n, Rng& rng) {
  Vector v(n);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (auto& e : v) e = nd(rng);
  return v;
}

[[nodiscard]] inline Matrix cholesky_factor(const Matrix& cov, const char* what) {
  Eigen::LLT<Matrix> llt(cov);
  if (cov.rows() != cov.cols() || llt.info() != Eigen::Success) {
    throw InputError(std::string(what) + ": matrix must be symmetric positive definite");
  }
  return llt.matrixL();
}

/// mean + L e, e ~ N(0, I), where cov = L L'.
[[nodiscard]] inline Vector mv_normal(const Vector& mean, const Matrix& cov, Rng& rng) {
  if (mean.size() != cov.rows()) throw InputError("mv_normal: mean and covariance sizes differ");
  return mean + cholesky_factor(cov, "mv_normal") * std_normal_vector(mean.size(), rng);
}

/// n rows from N(mean, cov) given the Cholesky factor of cov.
[[nodiscard]] inline Matrix mv_normal_rows(std::size_t n, const Vector& mean, const Matrix& chol, Rng& rng) {
  Matrix E(static_cast<Eigen::Index>(n), mean.size());
  std::normal_distribution<double> nd(0.0, 1.0);
  for (Eigen::Index i = 0; i < E.rows(); ++i) {
    for (Eigen::Index j = 0; j < E.cols(); ++j) E(i, j) = nd(rng);
  }
  Matrix out = E * chol.transpose();
  out.rowwise() += mean.transpose();
  return out;
}

[[nodiscard]] inline double gamma(double shape, double scale, Rng& rng) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw InputError("gamma: shape and scale must be > 0");
  return std::gamma_distribution<double>(shape, scale)(rng);
}

/// Inverse-gamma with density proportional to x^(-shape-1) exp(-scale / x).
[[nodiscard]] inline double inv_gamma(double shape, double scale, Rng& rng) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw InputError("inv_gamma: shape and scale must be > 0");
  return 1.0 / gamma(shape, 1.0 / scale, rng);
}

[[nodiscard]] inline double beta(double a, double b, Rng& rng) {
  const double x = gamma(a, 1.0, rng);
  const double y = gamma(b, 1.0, rng);
  return x / (x + y);
}

/// Wishart(V, df) by the Bartlett decomposition.
[[nodiscard]] inline Matrix wishart(const Matrix& V, double df, Rng& rng) {
  const Eigen::Index p = V.rows();
  if (!(df > static_cast<double>(p) - 1.0)) throw InputError("wishart: df must exceed p - 1");
  const Matrix L = cholesky_factor(V, "wishart");
  Matrix A = Matrix::Zero(p, p);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (Eigen::Index i = 0; i < p; ++i) {
    A(i, i) = std::sqrt(2.0 * gamma(0.5 * (df - static_cast<double>(i)), 1.0, rng));
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = nd(rng);
  }
  const Matrix LA = L * A;
  Matrix W = LA * LA.transpose();
  return 0.5 * (W + W.transpose());
}

/// Inverse-Wishart IW(scale, df): X^{-1} ~ Wishart(scale^{-1}, df).
/// Requires df > p + 1 so that the mean exists.
[[nodiscard]] inline Matrix inv_wishart(const Matrix& scale, double df, Rng& rng) {
  const Eigen::Index p = scale.rows();
  if (!(df > static_cast<double>(p) + 1.0)) throw InputError("inv_wishart: df must exceed p + 1");
  const Matrix Linv = cholesky_factor(scale, "inv_wishart").triangularView<Eigen::Lower>().solve(Matrix::Identity(p, p));
  const Matrix W = wishart(Linv.transpose() * Linv, df, rng);
  Matrix X = W.llt().solve(Matrix::Identity(p, p));
  return 0.5 * (X + X.transpose());
}

/// LKJ(eta) correlation matrix by the C-vine method: partial correlations
/// at tree level l are Beta(b_l, b_l) on (-1, 1), b_l = eta + (k - 2 - l) / 2.
[[nodiscard]] inline Matrix lkj_correlation(std::size_t k, double eta, Rng& rng) {
  if (k == 0) throw InputError("lkj_correlation: dimension must be >= 1");
  if (!(eta > 0.0)) throw InputError("lkj_correlation: eta must be > 0");
  const auto K = static_cast<Eigen::Index>(k);
  Matrix P = Matrix::Zero(K, K);
  Matrix S = Matrix::Identity(K, K);
  double b = eta + 0.5 * static_cast<double>(k - 1);
  for (Eigen::Index l = 0; l + 1 < K; ++l) {
    b -= 0.5;
    for (Eigen::Index i = l + 1; i < K; ++i) {
      P(l, i) = 2.0 * beta(b, b, rng) - 1.0;
      double r = P(l, i);
      for (Eigen::Index m = l - 1; m >= 0; --m) {
        r = r * std::sqrt((1.0 - P(m, i) * P(m, i)) * (1.0 - P(m, l) * P(m, l))) + P(m, i) * P(m, l);
      }
      S(l, i) = S(i, l) = r;
    }
  }
  return S;
}

[[nodiscard]] inline int bernoulli(double prob, Rng& rng) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw InputError("bernoulli: probability outside [0, 1]");
  return uniform(rng) < prob ? 1 : 0;
}

/// One draw from a categorical distribution with the given probabilities.
[[nodiscard]] inline int categorical(std::span<const double> probs, Rng& rng) {
  double total = 0.0;
  for (double q : probs) {
    if (!(q >= 0.0)) throw InputError("categorical: negative probability");
    total += q;
  }
  if (!(total > 0.0)) throw InputError("categorical: probabilities sum to zero");
  const double u = uniform(rng) * total;
  double acc = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    acc += probs[c];
    if (u < acc) return static_cast<int>(c);
  }
  return static_cast<int>(probs.size()) - 1;
}

/// Counts over categories from `trials` independent categorical draws.
[[nodiscard]] inline std::vector<int> multinomial(int trials, std::span<const double> probs, Rng& rng) {
  if (trials < 0) throw InputError("multinomial: trials must be >= 0");
  std::vector<int> counts(probs.size(), 0);
  for (int t = 0; t < trials; ++t) ++counts[static_cast<std::size_t>(categorical(probs, rng))];
  return counts;
}

/// Binary response with P(y = 1) = F(eta).
[[nodiscard]] inline int binary_response(Link l, double eta, Rng& rng) {
  return uniform(rng) < link::cdf(l, eta) ? 1 : 0;
}

/// Ordinal response with P(y <= s) = F(tau_s - eta).
[[nodiscard]] inline int ordinal_response(Link l, const Vector& tau, double eta, Rng& rng) {
  for (Eigen::Index s = 1; s < tau.size(); ++s) {
    if (!(tau[s] > tau[s - 1])) throw InputError("ordinal_response: cut-points must be increasing");
  }
  const double u = uniform(rng);
  for (Eigen::Index s = 0; s < tau.size(); ++s) {
    if (u < link::cdf(l, tau[s] - eta)) return static_cast<int>(s);
  }
  return static_cast<int>(tau.size());
}

}  // namespace bsem::dist
