#pragma once

// Maps between the flat unconstrained vector an HMC chain moves in and the
// constrained ParameterSet. Layout order: alpha / cut-points (per item),
// loadings, Phi, Omega, psi, then the per-respondent latent block
// (standardised factor scores and random effects, or eta for the reduced
// formulation), stored row-major.

#include "bsem/core/transforms.hpp"
#include "bsem/core/validate.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace bsem {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LoadingSlot {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t index = 0;
  LoadingKind kind = LoadingKind::free;
  bool positive = false;
};

/// Structural part of a decoded unconstrained vector, with the Cholesky
/// factors kept around for gradient computations.
struct Structural {
  Vector alpha;
  std::vector<Vector> tau;
  Matrix Lambda;
  Matrix L_phi;
  Matrix Phi;
  Matrix L_omega;  // empty without random effects
  Matrix Omega;    // empty without random effects
  Vector psi;      // empty for categorical data
  double log_jac = 0.0;
};

class ParameterLayout {
 public:
  ParameterLayout(const ValidatedSpec& vs, std::size_t n) : vs_(vs), n_(n) {
    const std::size_t p = vs.p();
    const std::size_t k = vs.k();
    std::size_t pos = 0;
    alpha_index_.assign(p, -1);
    tau_offset_.assign(p, 0);
    tau_count_.assign(p, 0);
    for (std::size_t j = 0; j < p; ++j) {
      const auto& item = vs.spec.items[j];
      if (item.kind == ItemKind::ordinal) {
        tau_offset_[j] = pos;
        tau_count_[j] = static_cast<std::size_t>(*item.categories - 1);
        pos += tau_count_[j];
      } else {
        alpha_index_[j] = static_cast<long>(pos++);
      }
    }
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        const auto e = vs.loading(i, j);
        if (e.kind == LoadingKind::fixed) continue;
        const bool positive = vs.spec.leading_sign == LeadingSign::positive && vs.is_leading(i, j);
        loadings_.push_back({i, j, pos++, e.kind, positive});
      }
    }
    phi_offset_ = pos;
    if (vs.phi_is_correlation()) {
      phi_size_ = transform::corr_dim(k);
    } else if (!vs.phi_is_identity()) {
      phi_size_ = transform::spd_dim(k);
    }
    pos += phi_size_;
    omega_offset_ = pos;
    if (vs.random_effects()) omega_size_ = transform::spd_dim(p);
    pos += omega_size_;
    psi_offset_ = pos;
    if (vs.family == DataFamily::continuous) psi_size_ = p;
    pos += psi_size_;
    structural_dim_ = pos;
    if (structural_dim_ != vs.structural_dim) {
      throw std::logic_error("layout dimension disagrees with validated spec");
    }
    latent_offset_ = pos;
    pos += n * vs.latent_dim_per_row;
    dim_ = pos;
  }

  [[nodiscard]] const ValidatedSpec& spec() const { return vs_; }
  [[nodiscard]] std::size_t n() const { return n_; }
  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] std::size_t structural_dim() const { return structural_dim_; }
  [[nodiscard]] long alpha_index(std::size_t item) const { return alpha_index_[item]; }
  [[nodiscard]] std::size_t tau_offset(std::size_t item) const { return tau_offset_[item]; }
  [[nodiscard]] std::size_t tau_count(std::size_t item) const { return tau_count_[item]; }
  [[nodiscard]] const std::vector<LoadingSlot>& loadings() const { return loadings_; }
  [[nodiscard]] std::size_t phi_offset() const { return phi_offset_; }
  [[nodiscard]] std::size_t phi_size() const { return phi_size_; }
  [[nodiscard]] std::size_t omega_offset() const { return omega_offset_; }
  [[nodiscard]] std::size_t omega_size() const { return omega_size_; }
  [[nodiscard]] std::size_t psi_offset() const { return psi_offset_; }
  [[nodiscard]] std::size_t psi_size() const { return psi_size_; }
  [[nodiscard]] std::size_t latent_offset() const { return latent_offset_; }
  [[nodiscard]] bool psi_bounded() const {
    return vs_.spec.priors.psi_prior.kind == PsiPriorKind::uniform;
  }
  [[nodiscard]] double psi_upper() const { return vs_.spec.priors.psi_prior.a; }

  /// Decodes the structural block of x.
  [[nodiscard]] Structural decode(std::span<const double> x) const {
    const std::size_t p = vs_.p();
    const std::size_t k = vs_.k();
    Structural s;
    s.alpha = Vector::Zero(static_cast<Eigen::Index>(p));
    s.tau.assign(p, Vector());
    for (std::size_t j = 0; j < p; ++j) {
      if (alpha_index_[j] >= 0) {
        s.alpha[static_cast<Eigen::Index>(j)] = x[static_cast<std::size_t>(alpha_index_[j])];
      } else {
        auto seg = x.subspan(tau_offset_[j], tau_count_[j]);
        s.tau[j] = transform::ordered(seg);
        s.log_jac += transform::ordered_log_jac(seg);
      }
    }
    s.Lambda = Matrix::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k));
    if (!vs_.exploratory()) {
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          const auto& e = vs_.spec.pattern->at(i, j);
          if (e.kind == LoadingKind::fixed) s.Lambda(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = e.value;
        }
      }
    }
    for (const auto& slot : loadings_) {
      const double v = x[slot.index];
      s.Lambda(static_cast<Eigen::Index>(slot.row), static_cast<Eigen::Index>(slot.col)) =
          slot.positive ? transform::positive(v) : v;
      if (slot.positive) s.log_jac += transform::positive_log_jac(v);
    }
    auto phi_seg = x.subspan(phi_offset_, phi_size_);
    if (vs_.phi_is_identity()) {
      s.L_phi = Matrix::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    } else if (vs_.phi_is_correlation()) {
      auto f = transform::corr_cholesky(phi_seg, k);
      s.L_phi = std::move(f.L);
      s.log_jac += f.log_jac;
    } else {
      auto f = transform::spd_cholesky(phi_seg, k);
      s.L_phi = std::move(f.L);
      s.log_jac += f.log_jac;
    }
    s.Phi = s.L_phi * s.L_phi.transpose();
    if (omega_size_ > 0) {
      auto f = transform::spd_cholesky(x.subspan(omega_offset_, omega_size_), p);
      s.L_omega = std::move(f.L);
      s.log_jac += f.log_jac;
      s.Omega = s.L_omega * s.L_omega.transpose();
    }
    if (psi_size_ > 0) {
      s.psi.resize(static_cast<Eigen::Index>(p));
      for (std::size_t j = 0; j < p; ++j) {
        const double v = x[psi_offset_ + j];
        if (psi_bounded()) {
          s.psi[static_cast<Eigen::Index>(j)] = transform::bounded(v, psi_upper());
          s.log_jac += transform::bounded_log_jac(v, psi_upper());
        } else {
          s.psi[static_cast<Eigen::Index>(j)] = transform::positive(v);
          s.log_jac += transform::positive_log_jac(v);
        }
      }
    }
    return s;
  }

  /// Row-major views of the latent blocks.
  [[nodiscard]] Eigen::Map<const RowMatrix> z_std(std::span<const double> x) const {
    return {x.data() + latent_offset_, static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(vs_.k())};
  }
  [[nodiscard]] Eigen::Map<const RowMatrix> u_std(std::span<const double> x) const {
    return {x.data() + latent_offset_ + n_ * vs_.k(), static_cast<Eigen::Index>(n_),
            static_cast<Eigen::Index>(vs_.p())};
  }
  [[nodiscard]] Eigen::Map<const RowMatrix> eta(std::span<const double> x) const {
    return {x.data() + latent_offset_, static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(vs_.p())};
  }

  [[nodiscard]] bool has_z() const { return vs_.family == DataFamily::categorical && !vs_.reduced(); }
  [[nodiscard]] bool has_u() const { return has_z() && vs_.random_effects(); }
  [[nodiscard]] bool has_eta() const { return vs_.family == DataFamily::categorical && vs_.reduced(); }

 private:
  ValidatedSpec vs_;
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::size_t structural_dim_ = 0;
  std::vector<long> alpha_index_;
  std::vector<std::size_t> tau_offset_;
  std::vector<std::size_t> tau_count_;
  std::vector<LoadingSlot> loadings_;
  std::size_t phi_offset_ = 0, phi_size_ = 0;
  std::size_t omega_offset_ = 0, omega_size_ = 0;
  std::size_t psi_offset_ = 0, psi_size_ = 0;
  std::size_t latent_offset_ = 0;
};

struct Unpacked {
  ParameterSet params;
  double log_jacobian = 0.0;
};

/// Unconstrained -> constrained. The log-Jacobian covers the whole map,
/// including the scaling of standardised latent scores (n log|L| per block).
[[nodiscard]] inline Unpacked unpack(std::span<const double> x, const ParameterLayout& layout) {
  if (x.size() != layout.dim()) throw InputError("unconstrained vector has the wrong length");
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError("unconstrained vector contains a non-finite value");
  }
  Structural s = layout.decode(x);
  Unpacked out;
  out.log_jacobian = s.log_jac;
  auto& P = out.params;
  P.alpha = s.alpha;
  P.tau = s.tau;
  P.Lambda = s.Lambda;
  P.Phi = s.Phi;
  if (s.Omega.size() > 0) P.Omega = s.Omega;
  if (s.psi.size() > 0) P.psi = s.psi;
  const auto n = static_cast<double>(layout.n());
  if (layout.has_z()) {
    P.z = Matrix(layout.z_std(x) * s.L_phi.transpose());
    out.log_jacobian += n * s.L_phi.diagonal().array().log().sum();
  }
  if (layout.has_u()) {
    P.u = Matrix(layout.u_std(x) * s.L_omega.transpose());
    out.log_jacobian += n * s.L_omega.diagonal().array().log().sum();
  }
  if (layout.has_eta()) P.eta = Matrix(layout.eta(x));
  return out;
}

[[nodiscard]] inline Unpacked unpack(const Vector& x, const ParameterLayout& layout) {
  return unpack(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), layout);
}

/// Constrained -> unconstrained.
[[nodiscard]] inline Vector pack(const ParameterSet& P, const ParameterLayout& layout) {
  const auto& vs = layout.spec();
  const std::size_t p = vs.p();
  const std::size_t k = vs.k();
  Vector x = Vector::Zero(static_cast<Eigen::Index>(layout.dim()));
  std::span<double> xs(x.data(), layout.dim());
  for (std::size_t j = 0; j < p; ++j) {
    if (layout.alpha_index(j) >= 0) {
      xs[static_cast<std::size_t>(layout.alpha_index(j))] = P.alpha[static_cast<Eigen::Index>(j)];
    } else {
      if (P.tau.size() <= j || static_cast<std::size_t>(P.tau[j].size()) != layout.tau_count(j)) {
        throw InputError("cut-point vector has the wrong length for item " + vs.spec.items[j].name);
      }
      transform::ordered_inverse(P.tau[j], xs.subspan(layout.tau_offset(j), layout.tau_count(j)));
    }
  }
  for (const auto& slot : layout.loadings()) {
    const double v = P.Lambda(static_cast<Eigen::Index>(slot.row), static_cast<Eigen::Index>(slot.col));
    if (slot.positive && !(v > 0.0)) throw InputError("positive leading loading must be > 0");
    xs[slot.index] = slot.positive ? transform::positive_inverse(v) : v;
  }
  Matrix L_phi = Matrix::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  if (vs.phi_is_correlation()) {
    transform::corr_inverse(P.Phi, xs.subspan(layout.phi_offset(), layout.phi_size()));
  } else if (!vs.phi_is_identity()) {
    transform::spd_inverse(P.Phi, xs.subspan(layout.phi_offset(), layout.phi_size()));
  }
  if (!vs.phi_is_identity()) L_phi = Eigen::LLT<Matrix>(P.Phi).matrixL();
  Matrix L_omega;
  if (layout.omega_size() > 0) {
    if (!P.Omega) throw InputError("parameter set lacks Omega");
    transform::spd_inverse(*P.Omega, xs.subspan(layout.omega_offset(), layout.omega_size()));
    L_omega = Eigen::LLT<Matrix>(*P.Omega).matrixL();
  }
  if (layout.psi_size() > 0) {
    if (!P.psi) throw InputError("parameter set lacks psi");
    for (std::size_t j = 0; j < p; ++j) {
      const double v = (*P.psi)[static_cast<Eigen::Index>(j)];
      if (!(v > 0.0)) throw InputError("psi entries must be > 0");
      xs[layout.psi_offset() + j] =
          layout.psi_bounded() ? transform::bounded_inverse(v, layout.psi_upper()) : transform::positive_inverse(v);
    }
  }
  const auto n = static_cast<Eigen::Index>(layout.n());
  if (layout.has_z()) {
    if (!P.z || P.z->rows() != n) throw InputError("parameter set lacks factor scores z");
    Eigen::Map<RowMatrix> zs(x.data() + layout.latent_offset(), n, static_cast<Eigen::Index>(k));
    // z_i = L z~_i  =>  Z~ = Z L^{-T}
    zs = L_phi.triangularView<Eigen::Lower>().solve(P.z->transpose()).transpose();
  }
  if (layout.has_u()) {
    if (!P.u || P.u->rows() != n) throw InputError("parameter set lacks random effects u");
    Eigen::Map<RowMatrix> us(x.data() + layout.latent_offset() + layout.n() * k, n, static_cast<Eigen::Index>(p));
    us = L_omega.triangularView<Eigen::Lower>().solve(P.u->transpose()).transpose();
  }
  if (layout.has_eta()) {
    if (!P.eta || P.eta->rows() != n) throw InputError("parameter set lacks eta");
    Eigen::Map<RowMatrix>(x.data() + layout.latent_offset(), n, static_cast<Eigen::Index>(p)) = *P.eta;
  }
  return x;
}

}  // namespace bsem
