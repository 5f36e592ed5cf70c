#pragma once

#include "bsem/core/transforms.hpp"
#include "bsem/core/types.hpp"

#include <string>
#include <vector>

namespace bsem {

/// Carries every problem found in a specification, not only the first.
class SpecError : public InputError {
 public:
  explicit SpecError(std::vector<std::string> diagnostics)
      : InputError(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

  [[nodiscard]] const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  static std::string join(const std::vector<std::string>& d) {
    std::string out = "invalid model specification:";
    for (const auto& s : d) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> diagnostics_;
};

enum class DataFamily { continuous, categorical };

/// A specification whose defaults have been resolved and whose structure has
/// been checked. Dimensions exclude per-respondent latent blocks.
struct ValidatedSpec {
  ModelSpec spec;
  DataFamily family = DataFamily::continuous;
  std::size_t structural_dim = 0;
  std::size_t latent_dim_per_row = 0;

  [[nodiscard]] std::size_t p() const { return spec.p(); }
  [[nodiscard]] std::size_t k() const { return static_cast<std::size_t>(spec.k); }
  [[nodiscard]] bool random_effects() const { return has_random_effects(spec.variant); }
  [[nodiscard]] bool exploratory() const { return is_exploratory(spec.variant); }
  [[nodiscard]] bool reduced() const { return spec.augmentation == Augmentation::reduced; }
  [[nodiscard]] bool phi_is_identity() const { return exploratory(); }
  [[nodiscard]] bool phi_is_correlation() const {
    return !exploratory() && spec.phi_form == PhiForm::correlation;
  }

  /// Loading entry kind, with exploratory models treated as all-free.
  [[nodiscard]] LoadingEntry loading(std::size_t i, std::size_t j) const {
    if (exploratory()) return LoadingEntry::free_entry();
    return spec.pattern->at(i, j);
  }
  [[nodiscard]] bool is_leading(std::size_t i, std::size_t j) const {
    return !exploratory() && spec.pattern->leading[j] == static_cast<int>(i);
  }
};

inline ValidatedSpec validate_spec(const ModelSpec& input) {
  std::vector<std::string> diag;
  ValidatedSpec out;
  out.spec = input;
  ModelSpec& spec = out.spec;
  const std::size_t p = spec.p();

  if (p == 0) diag.emplace_back("model has no items");
  if (spec.k < 1) diag.emplace_back("factor count k must be at least 1");

  std::size_t n_cont = 0;
  for (const auto& item : spec.items) {
    if (item.kind == ItemKind::continuous) ++n_cont;
    if (item.kind == ItemKind::ordinal) {
      if (!item.categories || *item.categories < 2) {
        diag.push_back("item '" + item.name + "': ordinal item needs at least 2 categories");
      }
    } else if (item.categories) {
      diag.push_back("item '" + item.name + "': categories given for a non-ordinal item");
    }
  }
  const bool all_cont = n_cont == p;
  if (n_cont != 0 && n_cont != p) {
    diag.emplace_back("continuous and categorical items cannot be mixed in one model");
  }
  if (all_cont && spec.link != Link::identity) {
    diag.emplace_back("link/item-kind mismatch: continuous items require the identity link");
  }
  if (!all_cont && spec.link == Link::identity) {
    diag.emplace_back("link/item-kind mismatch: categorical items require a probit or logit link");
  }
  out.family = all_cont ? DataFamily::continuous : DataFamily::categorical;

  if (is_exploratory(spec.variant)) {
    if (spec.pattern) {
      diag.emplace_back("exploratory variants (EFA, EFA_C) must not be supplied with a loading pattern");
    }
  } else if (!spec.pattern) {
    diag.emplace_back("EZ and AZ variants require a loading pattern");
  } else if (spec.k >= 1) {
    const auto& pat = *spec.pattern;
    const auto k = static_cast<std::size_t>(spec.k);
    if (pat.rows != p || pat.cols != k || pat.entries.size() != p * k) {
      diag.push_back("loading pattern must be " + std::to_string(p) + " x " + std::to_string(k));
    } else {
      if (pat.leading.size() != k) {
        diag.emplace_back("loading pattern must name one leading row per factor");
      }
      for (std::size_t j = 0; j < k; ++j) {
        const int lead = j < pat.leading.size() ? pat.leading[j] : -1;
        if (lead < 0 || static_cast<std::size_t>(lead) >= p) {
          diag.push_back("factor " + std::to_string(j + 1) + ": unidentified factor (no leading loading)");
          continue;
        }
        const auto& e = pat.at(static_cast<std::size_t>(lead), j);
        if (spec.phi_form == PhiForm::covariance) {
          if (e.kind != LoadingKind::fixed || e.value == 0.0) {
            diag.push_back("factor " + std::to_string(j + 1) +
                           ": covariance-form Phi needs a leading loading fixed to a non-zero value");
          }
        } else if (e.kind != LoadingKind::free) {
          diag.push_back("factor " + std::to_string(j + 1) +
                         ": correlation-form Phi needs a free leading loading");
        }
      }
      for (const auto& e : pat.entries) {
        if (spec.variant == Variant::EZ && e.kind == LoadingKind::approx_zero) {
          diag.emplace_back("EZ pattern must not contain approximate-zero entries");
          break;
        }
      }
    }
  }

  if (spec.augmentation == Augmentation::reduced) {
    if (all_cont) diag.emplace_back("reduced augmentation applies to categorical data only");
    if (!has_random_effects(spec.variant)) {
      diag.emplace_back("reduced augmentation requires a random-effect variant (AZ or EFA_C)");
    }
  }

  // Priors.
  auto& pr = spec.priors;
  if (!pr.free_loading_var) pr.free_loading_var = all_cont ? 1.0 : 4.0;
  if (!pr.omega_scale) pr.omega_scale = Matrix::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  if (!pr.omega_df) pr.omega_df = static_cast<double>(p) + 6.0;
  if (!pr.phi_df) pr.phi_df = static_cast<double>(p) + 4.0;
  if (!(pr.cross_loading_var > 0.0)) diag.emplace_back("cross_loading_var must be > 0");
  if (!(*pr.free_loading_var > 0.0)) diag.emplace_back("free_loading_var must be > 0");
  if (!(pr.alpha_var > 0.0)) diag.emplace_back("alpha_var must be > 0");
  if (!(pr.tau_var > 0.0)) diag.emplace_back("tau_var must be > 0");
  if (!(pr.lkj_eta > 0.0)) diag.emplace_back("lkj_eta must be > 0");
  if (!(*pr.omega_df > static_cast<double>(p) + 1.0)) diag.emplace_back("omega_df must exceed p + 1");
  if (spec.phi_form == PhiForm::covariance && !(*pr.phi_df > static_cast<double>(spec.k) + 1.0)) {
    diag.emplace_back("phi_df must exceed k + 1");
  }
  if (pr.omega_scale->rows() != static_cast<Eigen::Index>(p) || pr.omega_scale->cols() != static_cast<Eigen::Index>(p)) {
    diag.emplace_back("omega_scale must be p x p");
  } else if (Eigen::LLT<Matrix>(*pr.omega_scale).info() != Eigen::Success) {
    diag.emplace_back("omega_scale must be positive definite");
  }
  if (!(pr.psi_prior.a > 0.0) || (pr.psi_prior.kind == PsiPriorKind::inv_gamma && !(pr.psi_prior.b > 0.0))) {
    diag.emplace_back("psi prior parameters must be > 0");
  }
  if (pr.coupled_loading_prior && !all_cont) {
    diag.emplace_back("coupled loading prior is available for continuous data only");
  }

  if (!diag.empty()) throw SpecError(std::move(diag));

  // Derived dimensions.
  const auto k = static_cast<std::size_t>(spec.k);
  std::size_t dim = 0;
  for (const auto& item : spec.items) {
    dim += item.kind == ItemKind::ordinal ? static_cast<std::size_t>(*item.categories - 1) : 1;
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (out.loading(i, j).kind != LoadingKind::fixed) ++dim;
    }
  }
  if (out.phi_is_correlation()) dim += transform::corr_dim(k);
  if (!out.exploratory() && spec.phi_form == PhiForm::covariance) dim += transform::spd_dim(k);
  if (out.random_effects()) dim += transform::spd_dim(p);
  if (all_cont) dim += p;
  out.structural_dim = dim;

  if (!all_cont) {
    if (out.reduced()) {
      out.latent_dim_per_row = p;
    } else {
      out.latent_dim_per_row = k + (out.random_effects() ? p : 0);
    }
  }
  return out;
}

}  // namespace bsem
