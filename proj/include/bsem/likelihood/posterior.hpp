#pragma once

// Log posterior in unconstrained coordinates with an exact, hand-derived
// gradient. Value = log prior + log likelihood (+ latent densities) + log
// Jacobian of the unpacking map.
//
// Continuous data use the marginal likelihood through sufficient statistics,
// so the cost of one evaluation does not grow with n. Categorical data use the
// augmented formulation with standardised latent scores z~ and u~
// (z_i = L_phi z~_i, u_i = L_omega u~_i); the Normal densities of z and u
// combined with the Jacobian of that scaling reduce to -|z~|^2/2 - |u~|^2/2.

#include "bsem/core/layout.hpp"
#include "bsem/likelihood/model_density.hpp"

#include <limits>
#include <span>
#include <vector>

namespace bsem {

struct LogDensityResult {
  double value = 0.0;
  Vector gradient;  // empty when not requested
};

class Posterior {
 public:
  Posterior(const ValidatedSpec& vs, const Dataset& data)
      : layout_(vs, data.n()), n_(data.n()) {
    if (data.p() != vs.p()) throw InputError("dataset has " + std::to_string(data.p()) + " items, model expects " + std::to_string(vs.p()));
    if (vs.family == DataFamily::continuous) {
      if (data.n() < 2) throw InputError("continuous fits need at least two rows");
      mean_ = data.values.colwise().mean();
      const Matrix c = data.values.rowwise() - mean_.transpose();
      scatter_ = c.transpose() * c;
      ctx_ = make_prior_context(vs, scatter_ / static_cast<double>(data.n() - 1));
    } else {
      check_codes(data, vs);
      codes_.resize(n_ * vs.p());
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < vs.p(); ++j) {
          codes_[i * vs.p() + j] = static_cast<int>(data.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
      }
    }
  }

  /// Builds a posterior with an explicit prior context (used when the
  /// Heywood-guard scale should come from a different covariance).
  Posterior(const ValidatedSpec& vs, const Dataset& data, PriorContext ctx) : Posterior(vs, data) {
    if (vs.family == DataFamily::continuous) ctx_ = std::move(ctx);
  }

  [[nodiscard]] std::size_t dim() const { return layout_.dim(); }
  [[nodiscard]] const ParameterLayout& layout() const { return layout_; }
  [[nodiscard]] const ValidatedSpec& spec() const { return layout_.spec(); }
  [[nodiscard]] const PriorContext& prior_context() const { return ctx_; }

  /// Evaluates the log density; fills grad (same length as x) when non-empty.
  /// Returns -infinity for numerically degenerate points.
  [[nodiscard]] double log_density(std::span<const double> x, std::span<double> grad) const {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
    double v = -std::numeric_limits<double>::infinity();
    try {
      v = spec().family == DataFamily::continuous ? continuous(x, grad) : categorical(x, grad);
    } catch (const NumericalError&) {
      v = -std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(v)) return -std::numeric_limits<double>::infinity();
    return v;
  }

  [[nodiscard]] LogDensityResult operator()(const Vector& x, bool with_gradient = true) const {
    LogDensityResult r;
    std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    if (with_gradient) {
      r.gradient = Vector::Zero(x.size());
      r.value = log_density(xs, std::span<double>(r.gradient.data(), static_cast<std::size_t>(x.size())));
    } else {
      r.value = log_density(xs, {});
    }
    return r;
  }

 private:
  // Gradients of the structural block, in constrained coordinates.
  struct StructGrad {
    Vector alpha;
    std::vector<Vector> tau;
    Matrix Lambda;
    Matrix Phi;    // full-entry gradient w.r.t. Phi
    Matrix Omega;  // full-entry gradient w.r.t. Omega
    Vector psi;
    Matrix L_phi_extra;    // direct gradient w.r.t. L_phi (latent scaling)
    Matrix L_omega_extra;  // direct gradient w.r.t. L_omega
  };

  [[nodiscard]] StructGrad zero_grad(const Structural& s) const {
    StructGrad g;
    g.alpha = Vector::Zero(s.alpha.size());
    g.tau.resize(s.tau.size());
    for (std::size_t j = 0; j < s.tau.size(); ++j) g.tau[j] = Vector::Zero(s.tau[j].size());
    g.Lambda = Matrix::Zero(s.Lambda.rows(), s.Lambda.cols());
    g.Phi = Matrix::Zero(s.Phi.rows(), s.Phi.cols());
    g.L_phi_extra = Matrix::Zero(s.Phi.rows(), s.Phi.cols());
    if (s.Omega.size() > 0) {
      g.Omega = Matrix::Zero(s.Omega.rows(), s.Omega.cols());
      g.L_omega_extra = Matrix::Zero(s.Omega.rows(), s.Omega.cols());
    }
    g.psi = Vector::Zero(s.psi.size());
    return g;
  }

  // Prior value; accumulates constrained gradients into g when wanted.
  double prior(const Structural& s, StructGrad* g) const {
    const auto& vs = spec();
    const auto& pr = vs.spec.priors;
    const std::size_t p = vs.p();
    double lp = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      if (layout_.alpha_index(j) >= 0) {
        lp += density::normal_lpdf(s.alpha[jj], 0.0, pr.alpha_var);
        if (g) g->alpha[jj] += density::normal_grad(s.alpha[jj], 0.0, pr.alpha_var);
      } else {
        for (Eigen::Index t = 0; t < s.tau[j].size(); ++t) {
          lp += density::normal_lpdf(s.tau[j][t], 0.0, pr.tau_var);
          if (g) g->tau[j][t] += density::normal_grad(s.tau[j][t], 0.0, pr.tau_var);
        }
      }
    }
    for (const auto& slot : layout_.loadings()) {
      const auto r = static_cast<Eigen::Index>(slot.row);
      const auto c = static_cast<Eigen::Index>(slot.col);
      const double v = s.Lambda(r, c);
      if (slot.kind == LoadingKind::approx_zero) {
        lp += density::normal_lpdf(v, 0.0, pr.cross_loading_var);
        if (g) g->Lambda(r, c) += density::normal_grad(v, 0.0, pr.cross_loading_var);
      } else if (pr.coupled_loading_prior) {
        const double var = s.psi[r];
        lp += density::normal_lpdf(v, 0.0, var);
        if (g) {
          g->Lambda(r, c) += density::normal_grad(v, 0.0, var);
          g->psi[r] += density::normal_grad_var(v, 0.0, var);
        }
      } else {
        lp += density::normal_lpdf(v, 0.0, *pr.free_loading_var);
        if (g) g->Lambda(r, c) += density::normal_grad(v, 0.0, *pr.free_loading_var);
      }
      if (slot.positive) lp += std::numbers::ln2;
    }
    const std::size_t k = vs.k();
    if (vs.phi_is_correlation()) {
      if (k > 1) {
        const double logdet = 2.0 * s.L_phi.diagonal().array().log().sum();
        lp += density::lkj_lpdf(logdet, k, pr.lkj_eta);
        if (g) {
          for (std::size_t i = 0; i < k; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            g->L_phi_extra(ii, ii) += 2.0 * (pr.lkj_eta - 1.0) / s.L_phi(ii, ii);
          }
        }
      }
    } else if (!vs.phi_is_identity()) {
      const Matrix inv = cholesky_inverse(s.L_phi);
      const double logdet = 2.0 * s.L_phi.diagonal().array().log().sum();
      const Matrix scale = Matrix::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
      lp += density::inv_wishart_lpdf(logdet, inv, scale, *pr.phi_df);
      if (g) g->Phi += density::inv_wishart_grad(inv, scale, *pr.phi_df);
    }
    if (vs.random_effects()) {
      const Matrix inv = cholesky_inverse(s.L_omega);
      const double logdet = 2.0 * s.L_omega.diagonal().array().log().sum();
      lp += density::inv_wishart_lpdf(logdet, inv, *pr.omega_scale, *pr.omega_df);
      if (g) g->Omega += density::inv_wishart_grad(inv, *pr.omega_scale, *pr.omega_df);
    }
    if (vs.family == DataFamily::continuous) {
      for (std::size_t j = 0; j < p; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double hs = ctx_.heywood_scale.size() > 0 ? ctx_.heywood_scale[jj] : 0.0;
        lp += psi_log_prior(pr.psi_prior, s.psi[jj], hs);
        if (g) g->psi[jj] += psi_log_prior_grad(pr.psi_prior, s.psi[jj], hs);
      }
    }
    return lp;
  }

  static Matrix cholesky_inverse(const Matrix& L) {
    const Matrix Linv = L.triangularView<Eigen::Lower>().solve(Matrix::Identity(L.rows(), L.cols()));
    return Linv.transpose() * Linv;
  }

  // Gaussian block: adds log N(rows | mean, Sigma) given the scatter about
  // the mean (sum of outer products of residuals) and the residual sum.
  // Returns value; writes G = d/dSigma and d/dmean.
  static double gaussian_block(const Matrix& sigma, const Matrix& scatter, const Vector& resid_sum, double n,
                               Matrix* G, Vector* g_mean) {
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) throw NumericalError("implied covariance is not positive definite");
    const Matrix L = llt.matrixL();
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    const Matrix inv = cholesky_inverse(L);
    const auto p = static_cast<double>(sigma.rows());
    const double value = -0.5 * n * (p * density::kLogTwoPi + logdet) - 0.5 * (inv * scatter).trace();
    if (G) *G = -0.5 * n * inv + 0.5 * inv * scatter * inv;
    if (g_mean) *g_mean = inv * resid_sum;
    return value;
  }

  // Chains constrained gradients back to unconstrained coordinates.
  void backprop(std::span<const double> x, const Structural& s, StructGrad& g, std::span<double> grad) const {
    const auto& vs = spec();
    const std::size_t p = vs.p();
    for (std::size_t j = 0; j < p; ++j) {
      if (layout_.alpha_index(j) >= 0) {
        grad[static_cast<std::size_t>(layout_.alpha_index(j))] += g.alpha[static_cast<Eigen::Index>(j)];
      } else {
        const auto off = layout_.tau_offset(j);
        const auto cnt = layout_.tau_count(j);
        transform::ordered_backprop(x.subspan(off, cnt), g.tau[j], grad.subspan(off, cnt));
      }
    }
    for (const auto& slot : layout_.loadings()) {
      const double gl = g.Lambda(static_cast<Eigen::Index>(slot.row), static_cast<Eigen::Index>(slot.col));
      grad[slot.index] += slot.positive ? transform::positive_backprop(x[slot.index], gl) : gl;
    }
    const std::size_t k = vs.k();
    if (!vs.phi_is_identity()) {
      Matrix gL = transform::product_grad_to_factor(g.Phi, s.L_phi);
      gL += Matrix(g.L_phi_extra.triangularView<Eigen::Lower>());
      auto seg_x = x.subspan(layout_.phi_offset(), layout_.phi_size());
      auto seg_g = grad.subspan(layout_.phi_offset(), layout_.phi_size());
      if (vs.phi_is_correlation()) {
        transform::corr_cholesky_backprop(seg_x, s.L_phi, gL, seg_g);
        transform::corr_log_jac_grad(seg_x, k, seg_g);
      } else {
        transform::spd_cholesky_backprop(s.L_phi, gL, seg_g);
      }
    }
    if (layout_.omega_size() > 0) {
      Matrix gL = transform::product_grad_to_factor(g.Omega, s.L_omega);
      gL += Matrix(g.L_omega_extra.triangularView<Eigen::Lower>());
      transform::spd_cholesky_backprop(s.L_omega, gL, grad.subspan(layout_.omega_offset(), layout_.omega_size()));
    }
    if (layout_.psi_size() > 0) {
      for (std::size_t j = 0; j < p; ++j) {
        const auto idx = layout_.psi_offset() + j;
        const double gp = g.psi[static_cast<Eigen::Index>(j)];
        grad[idx] += layout_.psi_bounded() ? transform::bounded_backprop(x[idx], layout_.psi_upper(), gp)
                                           : transform::positive_backprop(x[idx], gp);
      }
    }
  }

  // Adds the contribution of a Gaussian covariance gradient G (w.r.t.
  // Sigma = Lambda Phi Lambda' + Omega [+ Psi]) to the structural gradient.
  static void push_sigma_grad(const Structural& s, const Matrix& G, StructGrad& g) {
    g.Lambda += 2.0 * G * s.Lambda * s.Phi;
    g.Phi += s.Lambda.transpose() * G * s.Lambda;
    if (s.Omega.size() > 0) g.Omega += G;
    if (s.psi.size() > 0) g.psi += G.diagonal();
  }

  double continuous(std::span<const double> x, std::span<double> grad) const {
    const Structural s = layout_.decode(x);
    const bool want = !grad.empty();
    StructGrad g = zero_grad(s);
    const Matrix sigma = implied_covariance(s.Lambda, s.Phi, s.Omega.size() > 0 ? std::optional<Matrix>(s.Omega) : std::nullopt, s.psi);
    const Vector d = mean_ - s.alpha;
    const double n = static_cast<double>(n_);
    const Matrix scatter = scatter_ + n * d * d.transpose();
    Matrix G;
    Vector ga;
    const double ll = gaussian_block(sigma, scatter, n * d, n, want ? &G : nullptr, want ? &ga : nullptr);
    const double lp = prior(s, want ? &g : nullptr);
    if (want) {
      g.alpha += ga;
      push_sigma_grad(s, G, g);
      backprop(x, s, g, grad);
    }
    return ll + lp + s.log_jac;
  }

  double categorical(std::span<const double> x, std::span<double> grad) const {
    const auto& vs = spec();
    const Structural s = layout_.decode(x);
    const bool want = !grad.empty();
    StructGrad g = zero_grad(s);
    const std::size_t p = vs.p();
    const std::size_t k = vs.k();
    const auto n = static_cast<Eigen::Index>(n_);
    const auto P = static_cast<Eigen::Index>(p);

    // Linear predictor.
    Matrix eta;
    Matrix z;
    double latent = 0.0;
    if (layout_.has_eta()) {
      eta = layout_.eta(x);
    } else {
      const auto zs = layout_.z_std(x);
      z = zs * s.L_phi.transpose();
      eta = z * s.Lambda.transpose();
      latent += -0.5 * zs.squaredNorm() - 0.5 * static_cast<double>(n_ * k) * density::kLogTwoPi;
      if (layout_.has_u()) {
        const auto us = layout_.u_std(x);
        eta.noalias() += us * s.L_omega.transpose();
        latent += -0.5 * us.squaredNorm() - 0.5 * static_cast<double>(n_ * p) * density::kLogTwoPi;
      }
      for (std::size_t j = 0; j < p; ++j) {
        if (layout_.alpha_index(j) >= 0) eta.col(static_cast<Eigen::Index>(j)).array() += s.alpha[static_cast<Eigen::Index>(j)];
      }
    }

    // Observation terms.
    const Link l = vs.spec.link;
    Matrix R = want ? Matrix(n, P) : Matrix();
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const int y = codes_[static_cast<std::size_t>(i) * p + j];
        if (layout_.alpha_index(j) >= 0) {
          const auto t = link::binary(l, y, eta(i, jj));
          ll += t.value;
          if (want) R(i, jj) = t.d_eta;
        } else {
          const auto t = link::ordinal(l, y, s.tau[j], eta(i, jj));
          ll += t.value;
          if (want) {
            R(i, jj) = t.d_eta;
            if (y > 0) g.tau[j][y - 1] += t.d_tau_lower;
            if (y < s.tau[j].size()) g.tau[j][y] += t.d_tau_upper;
          }
        }
      }
    }

    double reduced = 0.0;
    Matrix g_eta_prior;
    if (layout_.has_eta()) {
      // eta_i ~ N(alpha, Lambda Phi Lambda' + Omega); ordinal items have mean 0.
      const Matrix sigma = implied_covariance(s.Lambda, s.Phi, s.Omega);
      const Matrix resid = eta.rowwise() - s.alpha.transpose();
      const Matrix scatter = resid.transpose() * resid;
      const Vector rsum = resid.colwise().sum();
      Matrix G;
      Vector ga;
      reduced = gaussian_block(sigma, scatter, rsum, static_cast<double>(n_), want ? &G : nullptr, want ? &ga : nullptr);
      if (want) {
        for (std::size_t j = 0; j < p; ++j) {
          if (layout_.alpha_index(j) >= 0) g.alpha[static_cast<Eigen::Index>(j)] += ga[static_cast<Eigen::Index>(j)];
        }
        push_sigma_grad(s, G, g);
        const Matrix inv = cholesky_inverse(Eigen::LLT<Matrix>(sigma).matrixL());
        g_eta_prior = -resid * inv;
      }
    }

    const double lp = prior(s, want ? &g : nullptr);
    if (want) {
      if (layout_.has_eta()) {
        Eigen::Map<RowMatrix> ge(grad.data() + layout_.latent_offset(), n, P);
        ge = R + g_eta_prior;
      } else {
        for (std::size_t j = 0; j < p; ++j) {
          if (layout_.alpha_index(j) >= 0) g.alpha[static_cast<Eigen::Index>(j)] += R.col(static_cast<Eigen::Index>(j)).sum();
        }
        g.Lambda += R.transpose() * z;
        const Matrix gz = R * s.Lambda;  // n x k
        const auto zs = layout_.z_std(x);
        Eigen::Map<RowMatrix> gzs(grad.data() + layout_.latent_offset(), n, static_cast<Eigen::Index>(k));
        gzs = gz * s.L_phi - Matrix(zs);
        g.L_phi_extra += gz.transpose() * zs;
        if (layout_.has_u()) {
          const auto us = layout_.u_std(x);
          Eigen::Map<RowMatrix> gus(grad.data() + layout_.latent_offset() + n_ * k, n, P);
          gus = R * s.L_omega - Matrix(us);
          g.L_omega_extra += R.transpose() * us;
        }
      }
      backprop(x, s, g, grad);
    }
    return ll + latent + reduced + lp + s.log_jac;
  }

  ParameterLayout layout_;
  std::size_t n_ = 0;
  Vector mean_;
  Matrix scatter_;
  std::vector<int> codes_;
  PriorContext ctx_;
};

/// Convenience wrapper over Posterior for one-off evaluations.
[[nodiscard]] inline LogDensityResult log_posterior(const Vector& x, const Dataset& Y, const ValidatedSpec& vs) {
  const Posterior post(vs, Y);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw InputError("unconstrained vector contains a non-finite value");
  }
  return post(x, true);
}

}  // namespace bsem
