#pragma once

// Value types shared by every part of the library: item descriptions, loading
// patterns, model specifications, prior settings, datasets and parameter sets.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsem {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown for invalid user input (configs, data, preconditions).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a numerical routine cannot proceed (singular matrix, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ItemKind { continuous, binary, ordinal };

struct ItemSpec {
  std::string name;
  ItemKind kind = ItemKind::continuous;
  // Number of categories; meaningful only for ordinal items (>= 2).
  std::optional<int> categories;

  [[nodiscard]] int category_count() const {
    switch (kind) {
      case ItemKind::binary: return 2;
      case ItemKind::ordinal: return categories.value_or(0);
      case ItemKind::continuous: break;
    }
    return 0;
  }
};

enum class LoadingKind { free, approx_zero, fixed };

struct LoadingEntry {
  LoadingKind kind = LoadingKind::fixed;
  double value = 0.0;  // used when kind == fixed

  static LoadingEntry free_entry() { return {LoadingKind::free, 0.0}; }
  static LoadingEntry approx_zero() { return {LoadingKind::approx_zero, 0.0}; }
  static LoadingEntry fixed_at(double v) { return {LoadingKind::fixed, v}; }

  friend bool operator==(const LoadingEntry&, const LoadingEntry&) = default;
};

/// p x k loading structure plus the leading (identifying) row of each factor.
struct LoadingPattern {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<LoadingEntry> entries;  // row-major, rows * cols
  std::vector<int> leading;           // per factor; -1 when missing

  LoadingPattern() = default;
  LoadingPattern(std::size_t p, std::size_t k)
      : rows(p), cols(k), entries(p * k, LoadingEntry::fixed_at(0.0)), leading(k, -1) {}

  [[nodiscard]] LoadingEntry& at(std::size_t i, std::size_t j) { return entries.at(i * cols + j); }
  [[nodiscard]] const LoadingEntry& at(std::size_t i, std::size_t j) const {
    return entries.at(i * cols + j);
  }
};

enum class Variant { EZ, AZ, EFA, EFA_C };
enum class Link { identity, probit, logit };
enum class PhiForm { correlation, covariance };

/// How factor signs are pinned down when the leading loadings are free.
///  - sign_align: leading loadings unconstrained, draws are sign-aligned afterwards
///  - positive:   leading loadings constrained positive via a log transform
enum class LeadingSign { sign_align, positive };

/// Binary/ordinal formulation: full (z and u augmented, non-centred) or
/// reduced (eta augmented directly with eta ~ N(alpha, Lambda Phi Lambda' + Omega)).
enum class Augmentation { full, reduced };

enum class PsiPriorKind { heywood_guard, inv_gamma, half_cauchy, uniform };

struct PsiPrior {
  PsiPriorKind kind = PsiPriorKind::heywood_guard;
  double a = 2.5;  // heywood_guard: c0; inv_gamma: shape; half_cauchy: scale; uniform: upper
  double b = 0.0;  // inv_gamma: scale

  static PsiPrior heywood_guard(double c0 = 2.5) { return {PsiPriorKind::heywood_guard, c0, 0.0}; }
  static PsiPrior inv_gamma(double shape, double scale) { return {PsiPriorKind::inv_gamma, shape, scale}; }
  static PsiPrior half_cauchy(double scale) { return {PsiPriorKind::half_cauchy, scale, 0.0}; }
  static PsiPrior uniform(double upper) { return {PsiPriorKind::uniform, upper, 0.0}; }
};

/// Prior hyper-parameters. Unset optionals resolve to data-kind dependent
/// defaults during validation.
struct PriorConfig {
  double cross_loading_var = 0.01;
  std::optional<double> free_loading_var;  // 1 continuous, 4 categorical
  bool coupled_loading_prior = false;      // Lambda_jk ~ N(0, psi_j^2), continuous only
  std::optional<Matrix> omega_scale;       // identity
  std::optional<double> omega_df;          // p + 6
  std::optional<double> phi_df;            // p + 4 (covariance form)
  double lkj_eta = 2.0;
  PsiPrior psi_prior = PsiPrior::heywood_guard();
  double alpha_var = 100.0;
  double tau_var = 100.0;
};

struct ModelSpec {
  std::string name;
  std::vector<ItemSpec> items;
  int k = 1;
  Variant variant = Variant::EZ;
  Link link = Link::identity;
  std::optional<LoadingPattern> pattern;  // EZ / AZ only
  PhiForm phi_form = PhiForm::correlation;
  LeadingSign leading_sign = LeadingSign::sign_align;
  Augmentation augmentation = Augmentation::full;
  PriorConfig priors;

  [[nodiscard]] std::size_t p() const { return items.size(); }
};

[[nodiscard]] inline bool has_random_effects(Variant v) {
  return v == Variant::AZ || v == Variant::EFA_C;
}
[[nodiscard]] inline bool is_exploratory(Variant v) {
  return v == Variant::EFA || v == Variant::EFA_C;
}

/// n x p observations. Continuous values are stored as-is, categorical values
/// as category codes 0..m_j-1.
struct Dataset {
  std::vector<ItemSpec> items;
  Matrix values;

  [[nodiscard]] std::size_t n() const { return static_cast<std::size_t>(values.rows()); }
  [[nodiscard]] std::size_t p() const { return items.size(); }

  [[nodiscard]] Dataset subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.items = items;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.values.row(static_cast<Eigen::Index>(r)) = values.row(static_cast<Eigen::Index>(rows[r]));
    }
    return out;
  }
};

/// One point in constrained parameter space.
struct ParameterSet {
  Vector alpha;                    // p; entries of ordinal items are unused (0)
  std::vector<Vector> tau;         // per item; non-empty for ordinal items only
  Matrix Lambda;                   // p x k
  Matrix Phi;                      // k x k
  std::optional<Matrix> Omega;     // p x p, random-effect variants
  std::optional<Vector> psi;       // p idiosyncratic variances, continuous data
  std::optional<Matrix> z;         // n x k, augmented categorical fits
  std::optional<Matrix> u;         // n x p, augmented fits with random effects
  std::optional<Matrix> eta;       // n x p, reduced augmentation
};

}  // namespace bsem
