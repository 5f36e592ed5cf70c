#pragma once

// Log densities (normalising constants included) and their gradients.
// Matrix gradients are with respect to every entry of the argument treated
// as independent, which is what the Cholesky-factor chain rule expects.

#include "bsem/core/types.hpp"

#include <cmath>
#include <numbers>

namespace bsem::density {

inline constexpr double kLogTwoPi = 1.83787706640934548356;
inline constexpr double kLogPi = 1.14472988584940017414;

[[nodiscard]] inline double normal_lpdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var)) - 0.5 * d * d / var;
}
/// d/dx of normal_lpdf
[[nodiscard]] inline double normal_grad(double x, double mean, double var) { return -(x - mean) / var; }
/// d/dvar of normal_lpdf
[[nodiscard]] inline double normal_grad_var(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 / var + 0.5 * d * d / (var * var);
}

[[nodiscard]] inline double inv_gamma_lpdf(double x, double shape, double scale) {
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}
[[nodiscard]] inline double inv_gamma_grad(double x, double shape, double scale) {
  return -(shape + 1.0) / x + scale / (x * x);
}

/// Half-Cauchy on (0, inf) with location 0.
[[nodiscard]] inline double half_cauchy_lpdf(double x, double scale) {
  const double r = x / scale;
  return std::log(2.0) - kLogPi - std::log(scale) - std::log1p(r * r);
}
[[nodiscard]] inline double half_cauchy_grad(double x, double scale) {
  return -2.0 * x / (scale * scale + x * x);
}

[[nodiscard]] inline double uniform_lpdf(double x, double upper) {
  return (x > 0.0 && x < upper) ? -std::log(upper) : -std::numeric_limits<double>::infinity();
}

/// log of the multivariate gamma function Gamma_p(a).
[[nodiscard]] inline double lmgamma(std::size_t p, double a) {
  double out = 0.25 * static_cast<double>(p * (p - 1)) * kLogPi;
  for (std::size_t j = 0; j < p; ++j) out += std::lgamma(a - 0.5 * static_cast<double>(j));
  return out;
}

/// Inverse-Wishart IW(scale, df) evaluated at X (p x p SPD), given log|X|
/// and X^{-1} precomputed by the caller.
[[nodiscard]] inline double inv_wishart_lpdf(double logdet_x, const Matrix& x_inv, const Matrix& scale, double df) {
  const auto p = static_cast<std::size_t>(scale.rows());
  const double pd = static_cast<double>(p);
  Eigen::LLT<Matrix> llt(scale);
  const double logdet_s = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
  return 0.5 * df * logdet_s - 0.5 * df * pd * std::numbers::ln2 - lmgamma(p, 0.5 * df) -
         0.5 * (df + pd + 1.0) * logdet_x - 0.5 * (scale * x_inv).trace();
}
[[nodiscard]] inline Matrix inv_wishart_grad(const Matrix& x_inv, const Matrix& scale, double df) {
  const double pd = static_cast<double>(scale.rows());
  return -0.5 * (df + pd + 1.0) * x_inv + 0.5 * x_inv * scale * x_inv;
}

/// log normalising constant of the LKJ(eta) density on k x k correlation
/// matrices: density = exp(-log_c) det(R)^(eta - 1).
[[nodiscard]] inline double lkj_log_normalizer(std::size_t k, double eta) {
  double log_c = 0.0;
  for (std::size_t i = 1; i < k; ++i) {
    const double dk = static_cast<double>(k - i);
    const double b = eta + 0.5 * (dk - 1.0);
    const double log_beta = 2.0 * std::lgamma(b) - std::lgamma(2.0 * b);
    log_c += (2.0 * eta - 2.0 + dk) * dk * std::numbers::ln2 + dk * log_beta;
  }
  return log_c;
}

[[nodiscard]] inline double lkj_lpdf(double logdet_r, std::size_t k, double eta) {
  return (eta - 1.0) * logdet_r - lkj_log_normalizer(k, eta);
}

/// Multivariate normal log density of every row of Y around mean, summed.
/// Throws NumericalError when the covariance is not positive definite.
[[nodiscard]] inline double mvn_lpdf_rows(const Matrix& Y, const Vector& mean, const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance matrix is not positive definite");
  const Matrix L = llt.matrixL();
  const double logdet = 2.0 * L.diagonal().array().log().sum();
  const Matrix centered = (Y.rowwise() - mean.transpose()).transpose();
  const Matrix w = L.triangularView<Eigen::Lower>().solve(centered);
  const auto n = static_cast<double>(Y.rows());
  const auto p = static_cast<double>(Y.cols());
  return -0.5 * n * (p * kLogTwoPi + logdet) - 0.5 * w.squaredNorm();
}

}  // namespace bsem::density
