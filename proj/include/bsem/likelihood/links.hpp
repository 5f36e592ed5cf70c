#pragma once

// Per-observation log probabilities for binary and ordinal items under the
// logit and probit links, with derivatives. Evaluated in log space using
// complementary forms so tails do not cancel; probabilities are floored at
// 1e-300 before the log.

#include "bsem/core/transforms.hpp"
#include "bsem/core/types.hpp"

#include <cmath>
#include <limits>

namespace bsem::link {

inline constexpr double kLogFloor = -690.7755278982137;  // log(1e-300)
inline constexpr double kInf = std::numeric_limits<double>::infinity();

[[nodiscard]] inline double log_std_normal_pdf(double x) { return -0.5 * x * x - 0.91893853320467274178; }

/// log Phi(x), accurate into the far lower tail.
[[nodiscard]] inline double log_ndtr(double x) {
  if (x > -30.0) return std::log(0.5 * std::erfc(-x * 0.70710678118654752440));
  // Asymptotic expansion of the Mills ratio.
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return log_std_normal_pdf(x) - std::log(-x) + std::log(series);
}

[[nodiscard]] inline double cdf(Link l, double x) {
  if (l == Link::logit) return transform::sigmoid(x);
  return 0.5 * std::erfc(-x * 0.70710678118654752440);
}
[[nodiscard]] inline double log_cdf(Link l, double x) {
  return l == Link::logit ? transform::log_sigmoid(x) : log_ndtr(x);
}
/// log density of the link distribution
[[nodiscard]] inline double log_pdf(Link l, double x) {
  if (l == Link::logit) return transform::log_sigmoid(x) + transform::log_sigmoid(-x);
  return log_std_normal_pdf(x);
}

struct LogProb {
  double value = 0.0;
  double d_lower = 0.0;  // derivative with respect to the lower bound
  double d_upper = 0.0;  // derivative with respect to the upper bound
};

/// log P(lower < e <= upper) for e following the link distribution. Either
/// bound may be infinite.
[[nodiscard]] inline LogProb interval(Link l, double lower, double upper) {
  LogProb out;
  const bool lo_inf = std::isinf(lower);
  const bool hi_inf = std::isinf(upper);
  if (lo_inf && hi_inf) return out;
  if (lo_inf) {
    out.value = log_cdf(l, upper);
  } else if (hi_inf) {
    out.value = log_cdf(l, -lower);
  } else {
    // Reflect so the upper endpoint is the one nearer the centre.
    double a = lower;
    double b = upper;
    if (a + b > 0.0) {
      a = -upper;
      b = -lower;
    }
    const double lb = log_cdf(l, b);
    const double la = log_cdf(l, a);
    out.value = lb + std::log(-std::expm1(la - lb));
  }
  if (!(out.value > kLogFloor)) out.value = kLogFloor;
  if (!hi_inf) out.d_upper = std::exp(log_pdf(l, upper) - out.value);
  if (!lo_inf) out.d_lower = -std::exp(log_pdf(l, lower) - out.value);
  return out;
}

/// Binary item: log P(y | eta) with P(y = 1) = F(eta), and d/d eta.
struct BinaryTerm {
  double value;
  double d_eta;
};
[[nodiscard]] inline BinaryTerm binary(Link l, int y, double eta) {
  const double s = y == 1 ? 1.0 : -1.0;
  if (l == Link::logit) {
    return {transform::log_sigmoid(s * eta), s * transform::sigmoid(-s * eta)};
  }
  double v = log_ndtr(s * eta);
  if (!(v > kLogFloor)) v = kLogFloor;
  return {v, s * std::exp(log_std_normal_pdf(eta) - v)};
}

/// Ordinal item with cut-points tau (m-1 increasing values) and category code
/// c in [0, m): P(y = c) = F(tau_c - eta) - F(tau_{c-1} - eta).
struct OrdinalTerm {
  double value;
  double d_eta;
  double d_tau_lower;  // derivative with respect to tau_{c-1} (0 when c = 0)
  double d_tau_upper;  // derivative with respect to tau_c (0 when c = m-1)
};
[[nodiscard]] inline OrdinalTerm ordinal(Link l, int c, const Vector& tau, double eta) {
  const auto m1 = static_cast<int>(tau.size());
  const double lo = c == 0 ? -kInf : tau[c - 1] - eta;
  const double hi = c == m1 ? kInf : tau[c] - eta;
  const LogProb lp = interval(l, lo, hi);
  return {lp.value, -(lp.d_lower + lp.d_upper), lp.d_lower, lp.d_upper};
}

}  // namespace bsem::link
