#pragma once

// Discrepancy measures and proper scores on pattern frequencies.

#include "bsem/assessment/patterns.hpp"

#include <cmath>
#include <limits>
#include <span>

namespace bsem {

/// Marker for an infinitely bad fit or forecast (zero probability on an
/// observed pattern).
inline constexpr double kInfiniteMisfit = std::numeric_limits<double>::infinity();

/// (n - 1)(log|Sigma| + tr(S Sigma^-1) - log|S| - p).
[[nodiscard]] inline double lrt_discrepancy(const Matrix& S, const Matrix& Sigma, std::size_t n) {
  const Eigen::Index p = S.rows();
  if (S.cols() != p || Sigma.rows() != p || Sigma.cols() != p) throw InputError("lrt_discrepancy: shape mismatch");
  if (n < 2) throw InputError("lrt_discrepancy: n must be at least 2");
  const Eigen::LLT<Matrix> ls(S);
  const Eigen::LLT<Matrix> lsig(Sigma);
  if (ls.info() != Eigen::Success) throw NumericalError("lrt_discrepancy: sample covariance is not positive definite");
  if (lsig.info() != Eigen::Success) throw NumericalError("lrt_discrepancy: implied covariance is not positive definite");
  const double logdet_s = 2.0 * ls.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet_sig = 2.0 * lsig.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double tr = lsig.solve(S).trace();
  return static_cast<double>(n - 1) * (logdet_sig + tr - logdet_s - static_cast<double>(p));
}

/// G^2 = sum_r O_r log(O_r / (n pi_r)); O_r = 0 terms are zero.
[[nodiscard]] inline double g2_statistic(std::span<const double> O, std::span<const double> pi, double n) {
  if (O.size() != pi.size()) throw InputError("g2_statistic: size mismatch");
  double g = 0.0;
  for (std::size_t r = 0; r < O.size(); ++r) {
    if (O[r] < 0.0) throw InputError("g2_statistic: negative frequency");
    if (O[r] == 0.0) continue;
    if (!(pi[r] > 0.0)) return kInfiniteMisfit;
    g += O[r] * std::log(O[r] / (n * pi[r]));
  }
  return g;
}

/// Log score -sum_r O_r log pi_r with the multinomial constant dropped.
[[nodiscard]] inline double log_score_patterns(std::span<const double> O, std::span<const double> pi) {
  if (O.size() != pi.size()) throw InputError("log_score_patterns: size mismatch");
  double s = 0.0;
  for (std::size_t r = 0; r < O.size(); ++r) {
    if (O[r] == 0.0) continue;
    if (!(pi[r] > 0.0)) return kInfiniteMisfit;
    s -= O[r] * std::log(pi[r]);
  }
  return s;
}

/// G^2 of a sparse table against probabilities of its stored patterns.
[[nodiscard]] inline double g2_statistic(const PatternTable& t, std::span<const double> pi) {
  std::vector<double> O;
  O.reserve(t.counts.size());
  for (const auto& [c, o] : t.counts) O.push_back(o);
  return g2_statistic(O, pi, t.n);
}

}  // namespace bsem
