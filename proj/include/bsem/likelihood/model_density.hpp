#pragma once

// Constrained-space evaluation of the prior and the likelihood. These are the
// reference definitions; the gradient-carrying posterior in posterior.hpp is
// checked against them.

#include "bsem/core/algebra.hpp"
#include "bsem/core/validate.hpp"
#include "bsem/likelihood/densities.hpp"
#include "bsem/likelihood/links.hpp"

#include <cmath>

namespace bsem {

/// Data-dependent prior inputs. The Heywood-guard scale for item j is
/// (c0 - 1) / (S^{-1})_jj with S the empirical covariance.
struct PriorContext {
  Vector heywood_scale;
};

[[nodiscard]] inline PriorContext make_prior_context(const ValidatedSpec& vs, const Matrix& empirical_cov) {
  PriorContext ctx;
  if (vs.family != DataFamily::continuous) return ctx;
  const double c0 = vs.spec.priors.psi_prior.a;
  Eigen::LLT<Matrix> llt(empirical_cov);
  if (llt.info() != Eigen::Success) throw InputError("empirical covariance is not positive definite");
  const Matrix inv = llt.solve(Matrix::Identity(empirical_cov.rows(), empirical_cov.cols()));
  ctx.heywood_scale = (c0 - 1.0) / inv.diagonal().array();
  return ctx;
}

[[nodiscard]] inline PriorContext make_prior_context(const ValidatedSpec& vs, const Dataset& data) {
  if (vs.family != DataFamily::continuous) return {};
  return make_prior_context(vs, sample_covariance(data.values));
}

[[nodiscard]] inline double psi_log_prior(const PsiPrior& pr, double psi, double heywood_scale) {
  switch (pr.kind) {
    case PsiPriorKind::heywood_guard: return density::inv_gamma_lpdf(psi, pr.a, heywood_scale);
    case PsiPriorKind::inv_gamma: return density::inv_gamma_lpdf(psi, pr.a, pr.b);
    case PsiPriorKind::half_cauchy: return density::half_cauchy_lpdf(psi, pr.a);
    case PsiPriorKind::uniform: return density::uniform_lpdf(psi, pr.a);
  }
  return 0.0;
}

[[nodiscard]] inline double psi_log_prior_grad(const PsiPrior& pr, double psi, double heywood_scale) {
  switch (pr.kind) {
    case PsiPriorKind::heywood_guard: return density::inv_gamma_grad(psi, pr.a, heywood_scale);
    case PsiPriorKind::inv_gamma: return density::inv_gamma_grad(psi, pr.a, pr.b);
    case PsiPriorKind::half_cauchy: return density::half_cauchy_grad(psi, pr.a);
    case PsiPriorKind::uniform: return 0.0;
  }
  return 0.0;
}

/// Sum of all active prior log densities in constrained space.
[[nodiscard]] inline double log_prior(const ParameterSet& P, const ValidatedSpec& vs, const PriorContext& ctx) {
  const auto& pr = vs.spec.priors;
  const std::size_t p = vs.p();
  const std::size_t k = vs.k();
  double lp = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    const auto& item = vs.spec.items[j];
    if (item.kind == ItemKind::ordinal) {
      for (Eigen::Index s = 0; s < P.tau[j].size(); ++s) lp += density::normal_lpdf(P.tau[j][s], 0.0, pr.tau_var);
    } else {
      lp += density::normal_lpdf(P.alpha[static_cast<Eigen::Index>(j)], 0.0, pr.alpha_var);
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const auto e = vs.loading(i, j);
      if (e.kind == LoadingKind::fixed) continue;
      const double v = P.Lambda(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      double var = e.kind == LoadingKind::approx_zero ? pr.cross_loading_var : *pr.free_loading_var;
      if (e.kind == LoadingKind::free && pr.coupled_loading_prior) var = (*P.psi)[static_cast<Eigen::Index>(i)];
      lp += density::normal_lpdf(v, 0.0, var);
      if (vs.spec.leading_sign == LeadingSign::positive && vs.is_leading(i, j)) lp += std::numbers::ln2;
    }
  }
  if (!vs.phi_is_identity()) {
    Eigen::LLT<Matrix> llt(P.Phi);
    if (llt.info() != Eigen::Success) throw NumericalError("Phi is not positive definite");
    const double logdet = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
    if (vs.phi_is_correlation()) {
      if (k > 1) lp += density::lkj_lpdf(logdet, k, pr.lkj_eta);
    } else {
      const Matrix inv = llt.solve(Matrix::Identity(P.Phi.rows(), P.Phi.cols()));
      lp += density::inv_wishart_lpdf(logdet, inv, Matrix::Identity(P.Phi.rows(), P.Phi.cols()), *pr.phi_df);
    }
  }
  if (vs.random_effects()) {
    Eigen::LLT<Matrix> llt(*P.Omega);
    if (llt.info() != Eigen::Success) throw NumericalError("Omega is not positive definite");
    const double logdet = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
    const Matrix inv = llt.solve(Matrix::Identity(P.Omega->rows(), P.Omega->cols()));
    lp += density::inv_wishart_lpdf(logdet, inv, *pr.omega_scale, *pr.omega_df);
  }
  if (vs.family == DataFamily::continuous) {
    for (std::size_t j = 0; j < p; ++j) {
      const double hs = ctx.heywood_scale.size() > 0 ? ctx.heywood_scale[static_cast<Eigen::Index>(j)] : 0.0;
      lp += psi_log_prior(pr.psi_prior, (*P.psi)[static_cast<Eigen::Index>(j)], hs);
    }
  }
  return lp;
}

/// Marginal Normal log likelihood: y_i ~ N(alpha, Lambda Phi Lambda' + Omega + Psi).
[[nodiscard]] inline double loglik_continuous(const Dataset& Y, const ParameterSet& P, const ValidatedSpec& vs) {
  if (vs.family != DataFamily::continuous) throw InputError("loglik_continuous needs continuous items");
  const Matrix sigma = implied_covariance(P.Lambda, P.Phi, vs.random_effects() ? P.Omega : std::nullopt, P.psi);
  return density::mvn_lpdf_rows(Y.values, P.alpha, sigma);
}

/// Linear predictor matrix eta (n x p) of an augmented categorical fit.
[[nodiscard]] inline Matrix linear_predictor(const ParameterSet& P, const ValidatedSpec& vs) {
  if (P.eta) return *P.eta;
  Matrix eta = *P.z * P.Lambda.transpose();
  if (P.u) eta += *P.u;
  for (std::size_t j = 0; j < vs.p(); ++j) {
    if (vs.spec.items[j].kind != ItemKind::ordinal) eta.col(static_cast<Eigen::Index>(j)).array() += P.alpha[static_cast<Eigen::Index>(j)];
  }
  return eta;
}

/// Checks category codes against the item definitions.
inline void check_codes(const Dataset& Y, const ValidatedSpec& vs) {
  for (Eigen::Index i = 0; i < Y.values.rows(); ++i) {
    for (std::size_t j = 0; j < vs.p(); ++j) {
      const double v = Y.values(i, static_cast<Eigen::Index>(j));
      const int m = vs.spec.items[j].category_count();
      if (v != std::floor(v) || v < 0 || v >= m) {
        throw InputError("row " + std::to_string(i + 1) + ", item '" + vs.spec.items[j].name +
                         "': category code out of range");
      }
    }
  }
}

/// Sum over i, j of the Bernoulli / ordered-categorical log mass at eta_ij.
[[nodiscard]] inline double loglik_observations(const Dataset& Y, const ParameterSet& P, const ValidatedSpec& vs) {
  if (vs.family != DataFamily::categorical) throw InputError("categorical likelihood needs categorical items");
  check_codes(Y, vs);
  const Matrix eta = linear_predictor(P, vs);
  const Link l = vs.spec.link;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.rows(); ++i) {
    for (std::size_t j = 0; j < vs.p(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const int y = static_cast<int>(Y.values(i, jj));
      if (vs.spec.items[j].kind == ItemKind::ordinal) {
        ll += link::ordinal(l, y, P.tau[j], eta(i, jj)).value;
      } else {
        ll += link::binary(l, y, eta(i, jj)).value;
      }
    }
  }
  return ll;
}

/// Observation terms plus the log densities of the latent blocks (z and u,
/// or eta when reduced).
[[nodiscard]] inline double loglik_categorical(const Dataset& Y, const ParameterSet& P, const ValidatedSpec& vs) {
  double ll = loglik_observations(Y, P, vs);
  if (P.eta) {
    Vector mean = P.alpha;
    for (std::size_t j = 0; j < vs.p(); ++j) {
      if (vs.spec.items[j].kind == ItemKind::ordinal) mean[static_cast<Eigen::Index>(j)] = 0.0;
    }
    ll += density::mvn_lpdf_rows(*P.eta, mean, implied_covariance(P.Lambda, P.Phi, P.Omega));
  } else {
    ll += density::mvn_lpdf_rows(*P.z, Vector::Zero(P.Phi.rows()), P.Phi);
    if (P.u) ll += density::mvn_lpdf_rows(*P.u, Vector::Zero(P.u->cols()), *P.Omega);
  }
  return ll;
}

}  // namespace bsem
