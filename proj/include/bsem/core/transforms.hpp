#pragma once

// Bijections between unconstrained reals and constrained parameter blocks.
//
// Every forward map returns the constrained value together with the log
// absolute Jacobian determinant of the constrained-from-unconstrained map.
// The matching *_backprop functions turn a gradient with respect to the
// constrained value into a gradient with respect to the unconstrained input,
// adding the gradient of the log-Jacobian term.

#include "bsem/core/types.hpp"

#include <cmath>
#include <span>

namespace bsem::transform {

inline constexpr double kLog2 = 0.69314718055994530942;

[[nodiscard]] inline double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}
[[nodiscard]] inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}
[[nodiscard]] inline double logit(double p) { return std::log(p) - std::log1p(-p); }

// ---------------------------------------------------------------------------
// Positive scalar: v = exp(x).

[[nodiscard]] inline double positive(double x) { return std::exp(x); }
[[nodiscard]] inline double positive_inverse(double v) { return std::log(v); }
[[nodiscard]] inline double positive_log_jac(double x) { return x; }
[[nodiscard]] inline double positive_backprop(double x, double g_value) {
  return g_value * std::exp(x) + 1.0;
}

// ---------------------------------------------------------------------------
// Bounded scalar on (0, upper): v = upper * sigmoid(x).

[[nodiscard]] inline double bounded(double x, double upper) { return upper * sigmoid(x); }
[[nodiscard]] inline double bounded_inverse(double v, double upper) { return logit(v / upper); }
[[nodiscard]] inline double bounded_log_jac(double x, double upper) {
  return std::log(upper) + log_sigmoid(x) + log_sigmoid(-x);
}
[[nodiscard]] inline double bounded_backprop(double x, double upper, double g_value) {
  const double s = sigmoid(x);
  return g_value * upper * s * (1.0 - s) + (1.0 - 2.0 * s);
}

// ---------------------------------------------------------------------------
// Strictly increasing vector: v0 = x0, v_s = v_{s-1} + exp(x_s).

[[nodiscard]] inline Vector ordered(std::span<const double> x) {
  Vector v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t s = 0; s < x.size(); ++s) {
    v[static_cast<Eigen::Index>(s)] = s == 0 ? x[0] : v[static_cast<Eigen::Index>(s - 1)] + std::exp(x[s]);
  }
  return v;
}
[[nodiscard]] inline double ordered_log_jac(std::span<const double> x) {
  double lj = 0.0;
  for (std::size_t s = 1; s < x.size(); ++s) lj += x[s];
  return lj;
}
inline void ordered_inverse(const Vector& v, std::span<double> x) {
  for (Eigen::Index s = 0; s < v.size(); ++s) {
    const double d = s == 0 ? v[0] : v[s] - v[s - 1];
    if (s > 0 && !(d > 0.0)) {
      throw InputError("cut-points must be strictly increasing");
    }
    x[static_cast<std::size_t>(s)] = s == 0 ? d : std::log(d);
  }
}
inline void ordered_backprop(std::span<const double> x, const Vector& g_value, std::span<double> g_x) {
  double tail = 0.0;
  for (std::size_t s = x.size(); s-- > 0;) {
    tail += g_value[static_cast<Eigen::Index>(s)];
    g_x[s] += s == 0 ? tail : tail * std::exp(x[s]) + 1.0;
  }
}

// ---------------------------------------------------------------------------
// Correlation matrix through canonical partial correlations (CPC).
//
// Row i of the Cholesky factor is built from c_ij = tanh(x_ij), j < i:
//   L_ij = c_ij * sqrt(s_j),  s_0 = 1,  s_{j+1} = s_j (1 - c_ij^2),  L_ii = sqrt(s_i).
// Unconstrained entries are stored row-wise over the strict lower triangle.
// The log-Jacobian is taken with respect to the strictly-lower entries of the
// correlation matrix Phi = L L'.

[[nodiscard]] inline std::size_t corr_dim(std::size_t k) { return k * (k - 1) / 2; }

struct CorrFactor {
  Matrix L;
  double log_jac = 0.0;
};

[[nodiscard]] inline CorrFactor corr_cholesky(std::span<const double> x, std::size_t k) {
  CorrFactor out;
  out.L = Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  if (k == 0) return out;
  out.L(0, 0) = 1.0;
  std::size_t pos = 0;
  for (std::size_t i = 1; i < k; ++i) {
    double log_s = 0.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double xv = x[pos++];
      const double c = std::tanh(xv);
      // log(1 - tanh^2 x) = -2 log cosh x, evaluated stably.
      const double a = -2.0 * (std::abs(xv) + std::log1p(std::exp(-2.0 * std::abs(xv))) - kLog2);
      out.L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c * std::exp(0.5 * log_s);
      out.log_jac += a + 0.5 * log_s;
      log_s += a;
    }
    out.L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = std::exp(0.5 * log_s);
    // Column part of the Jacobian of L -> L L' enters through L_ii^(k-1-i).
    out.log_jac += static_cast<double>(k - 1 - i) * 0.5 * log_s;
  }
  return out;
}

/// Gradient of the correlation log-Jacobian with respect to x (accumulated into g_x).
inline void corr_log_jac_grad(std::span<const double> x, std::size_t k, std::span<double> g_x) {
  std::size_t pos = 0;
  for (std::size_t i = 1; i < k; ++i) {
    for (std::size_t l = 0; l < i; ++l) {
      // a_il enters once directly, 0.5 times per later column j in (l, i), and
      // 0.5 (k-1-i) times through log L_ii.
      const double coeff = 1.0 + 0.5 * static_cast<double>(i - 1 - l) + 0.5 * static_cast<double>(k - 1 - i);
      g_x[pos] += coeff * (-2.0 * std::tanh(x[pos]));
      ++pos;
    }
  }
}

/// Backpropagates a gradient with respect to the Cholesky factor entries
/// (lower triangle, diagonal included) into g_x. Does not add Jacobian terms.
inline void corr_cholesky_backprop(std::span<const double> x, const Matrix& L, const Matrix& g_L,
                                   std::span<double> g_x) {
  const auto k = static_cast<std::size_t>(L.rows());
  std::size_t pos = 0;
  for (std::size_t i = 1; i < k; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    // suffix[m] = sum_{j=m+1}^{i} gL_ij L_ij
    double suffix = g_L(ii, ii) * L(ii, ii);
    double log_s = 0.0;
    std::vector<double> sqrt_s(i);
    for (std::size_t j = 0; j < i; ++j) {
      sqrt_s[j] = std::exp(0.5 * log_s);
      const double c = std::tanh(x[pos + j]);
      log_s += std::log1p(-c * c);
    }
    for (std::size_t m = i; m-- > 0;) {
      const auto mm = static_cast<Eigen::Index>(m);
      const double c = std::tanh(x[pos + m]);
      g_x[pos + m] += g_L(ii, mm) * sqrt_s[m] * (1.0 - c * c) - c * suffix;
      suffix += g_L(ii, mm) * L(ii, mm);
    }
    pos += i;
  }
}

inline void corr_inverse(const Matrix& Phi, std::span<double> x) {
  const auto k = static_cast<std::size_t>(Phi.rows());
  Eigen::LLT<Matrix> llt(Phi);
  if (llt.info() != Eigen::Success) {
    throw InputError("correlation matrix is not positive definite");
  }
  const Matrix L = llt.matrixL();
  std::size_t pos = 0;
  for (std::size_t i = 1; i < k; ++i) {
    double s = 1.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c = L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / std::sqrt(s);
      x[pos++] = std::atanh(c);
      s *= 1.0 - c * c;
    }
  }
}

// ---------------------------------------------------------------------------
// SPD matrix through a log-diagonal Cholesky factor:
//   L_ii = exp(x_ii), L_ij = x_ij (i > j), Omega = L L'.
// Unconstrained entries are stored row-wise over the lower triangle
// (diagonal included). The log-Jacobian is with respect to the lower
// triangle of Omega.

[[nodiscard]] inline std::size_t spd_dim(std::size_t k) { return k * (k + 1) / 2; }

struct SpdFactor {
  Matrix L;
  double log_jac = 0.0;
};

[[nodiscard]] inline SpdFactor spd_cholesky(std::span<const double> x, std::size_t k) {
  SpdFactor out;
  out.L = Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  out.log_jac = static_cast<double>(k) * kLog2;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      out.L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[pos++];
    }
    const double xd = x[pos++];
    out.L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = std::exp(xd);
    out.log_jac += static_cast<double>(k - i + 1) * xd;
  }
  return out;
}

/// Backpropagates g_L (lower triangle) into g_x and adds the log-Jacobian gradient.
inline void spd_cholesky_backprop(const Matrix& L, const Matrix& g_L, std::span<double> g_x) {
  const auto k = static_cast<std::size_t>(L.rows());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < i; ++j) {
      g_x[pos++] += g_L(ii, static_cast<Eigen::Index>(j));
    }
    g_x[pos++] += g_L(ii, ii) * L(ii, ii) + static_cast<double>(k - i + 1);
  }
}

inline void spd_inverse(const Matrix& S, std::span<double> x) {
  const auto k = static_cast<std::size_t>(S.rows());
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) {
    throw InputError("matrix is not symmetric positive definite");
  }
  const Matrix L = llt.matrixL();
  std::size_t pos = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      x[pos++] = L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    x[pos++] = std::log(L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
  }
}

/// Gradient with respect to a Cholesky factor L of f(L L'), given the
/// full-entry gradient G of f with respect to the product. Lower triangle only.
[[nodiscard]] inline Matrix product_grad_to_factor(const Matrix& G, const Matrix& L) {
  Matrix gL = (G + G.transpose()) * L;
  return gL.triangularView<Eigen::Lower>();
}

}  // namespace bsem::transform
