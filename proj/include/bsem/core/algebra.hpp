#pragma once

#include "bsem/core/types.hpp"

#include <optional>

namespace bsem {

/// Sigma = Lambda Phi Lambda' + Omega + diag(psi). The result is exactly
/// symmetric (upper triangle mirrored from the lower).
[[nodiscard]] inline Matrix implied_covariance(const Matrix& Lambda, const Matrix& Phi,
                                               const std::optional<Matrix>& Omega = std::nullopt,
                                               const std::optional<Vector>& psi = std::nullopt) {
  const Eigen::Index p = Lambda.rows();
  if (Phi.rows() != Lambda.cols() || Phi.cols() != Lambda.cols()) {
    throw InputError("implied_covariance: Phi must be k x k with k = Lambda.cols()");
  }
  if (Omega && (Omega->rows() != p || Omega->cols() != p)) {
    throw InputError("implied_covariance: Omega must be p x p");
  }
  if (psi && psi->size() != p) throw InputError("implied_covariance: psi must have length p");
  Matrix sigma = Lambda * Phi * Lambda.transpose();
  if (Omega) sigma += *Omega;
  if (psi) sigma.diagonal() += *psi;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) sigma(j, i) = sigma(i, j);
  }
  return sigma;
}

/// Unbiased sample covariance of the rows of Y.
[[nodiscard]] inline Matrix sample_covariance(const Matrix& Y) {
  if (Y.rows() < 2) throw InputError("sample covariance needs at least two rows");
  const Vector mean = Y.colwise().mean();
  const Matrix centered = Y.rowwise() - mean.transpose();
  return (centered.transpose() * centered) / static_cast<double>(Y.rows() - 1);
}

}  // namespace bsem
