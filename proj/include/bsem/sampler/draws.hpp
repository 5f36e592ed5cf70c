#pragma once

// Posterior draws in unconstrained coordinates, their constrained views,
// sign alignment of factors, and the flat columnar draws file.

#include "bsem/core/layout.hpp"
#include "bsem/sampler/hmc.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

namespace bsem {

struct Draws {
  ValidatedSpec spec;
  std::size_t n = 0;       // rows of the data the chains were run on
  std::size_t dim = 0;     // stored unconstrained coordinates per draw
  std::size_t warmup = 0;
  std::size_t iterations = 0;  // post-warm-up iterations per chain, before thinning
  std::vector<Matrix> chains;  // per chain: kept draws x dim
  std::vector<Vector> log_p;
  std::vector<std::vector<std::uint8_t>> divergent;
  std::vector<std::size_t> divergences;  // per chain, all post-warm-up iterations
  std::vector<double> step_size;
  std::vector<double> mean_accept;
  std::size_t gradient_evals = 0;

  [[nodiscard]] std::size_t chain_count() const { return chains.size(); }
  [[nodiscard]] std::size_t per_chain() const { return chains.empty() ? 0 : static_cast<std::size_t>(chains[0].rows()); }
  [[nodiscard]] std::size_t total() const { return chain_count() * per_chain(); }
  [[nodiscard]] bool has_latent() const { return dim > spec.structural_dim; }

  [[nodiscard]] std::size_t divergence_total() const {
    std::size_t s = 0;
    for (auto d : divergences) s += d;
    return s;
  }
  [[nodiscard]] double divergence_rate() const {
    const double it = static_cast<double>(iterations * chain_count());
    return it > 0 ? static_cast<double>(divergence_total()) / it : 0.0;
  }

  /// Structural-only layout (latent blocks excluded).
  [[nodiscard]] ParameterLayout structural_layout() const { return ParameterLayout(spec, 0); }

  [[nodiscard]] std::span<const double> row(std::size_t c, std::size_t s, std::vector<double>& buf) const {
    const Matrix& m = chains[c];
    buf.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) buf[j] = m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j));
    return {buf.data(), buf.size()};
  }

  /// Constrained structural parameters of draw s of chain c.
  [[nodiscard]] ParameterSet params(std::size_t c, std::size_t s) const {
    std::vector<double> buf;
    const auto r = row(c, s, buf);
    const auto layout = structural_layout();
    return unpack(r.first(spec.structural_dim), layout).params;
  }

  /// All draws in chain-major order.
  [[nodiscard]] std::vector<ParameterSet> all_params() const {
    std::vector<ParameterSet> out;
    out.reserve(total());
    const auto layout = structural_layout();
    std::vector<double> buf;
    for (std::size_t c = 0; c < chain_count(); ++c) {
      for (std::size_t s = 0; s < per_chain(); ++s) {
        out.push_back(unpack(row(c, s, buf).first(spec.structural_dim), layout).params);
      }
    }
    return out;
  }
};

/// Assembles chain outputs into Draws.
[[nodiscard]] inline Draws assemble_draws(const ValidatedSpec& vs, std::size_t n, std::size_t warmup,
                                          std::size_t iterations, std::vector<ChainOutput>&& outs) {
  Draws d;
  d.spec = vs;
  d.n = n;
  d.warmup = warmup;
  d.iterations = iterations;
  d.dim = outs.empty() ? 0 : static_cast<std::size_t>(outs[0].draws.cols());
  for (auto& o : outs) {
    d.chains.push_back(std::move(o.draws));
    d.log_p.push_back(std::move(o.log_p));
    d.divergent.push_back(std::move(o.divergent));
    d.divergences.push_back(o.divergences);
    d.step_size.push_back(o.step_size);
    d.mean_accept.push_back(o.mean_accept);
    d.gradient_evals += o.gradient_evals;
  }
  return d;
}

/// Flips every factor whose leading loading is negative in a draw. In
/// unconstrained coordinates a flip of factor j negates the free loadings
/// in column j, multiplies each correlation coordinate x_ab by d_a d_b, and
/// negates column j of the standardised scores when those are stored. All
/// operations are sign changes, so Lambda Phi Lambda' and the log posterior
/// are unchanged bit for bit.
[[nodiscard]] inline Draws sign_align(const Draws& in) {
  const auto& vs = in.spec;
  if (vs.exploratory() || vs.spec.leading_sign != LeadingSign::sign_align) return in;
  const auto layout = in.structural_layout();
  const std::size_t k = vs.k();
  // Slot index of each factor's leading loading (fixed leading loadings
  // need no alignment).
  std::vector<long> lead_slot(k, -1);
  for (const auto& s : layout.loadings()) {
    if (vs.is_leading(s.row, s.col)) lead_slot[s.col] = static_cast<long>(s.index);
  }
  Draws out = in;
  const ParameterLayout full(vs, in.n);
  std::vector<double> d(k);
  for (std::size_t c = 0; c < out.chain_count(); ++c) {
    Matrix& m = out.chains[c];
    for (Eigen::Index s = 0; s < m.rows(); ++s) {
      bool any = false;
      for (std::size_t j = 0; j < k; ++j) {
        d[j] = (lead_slot[j] >= 0 && m(s, lead_slot[j]) < 0.0) ? -1.0 : 1.0;
        any = any || d[j] < 0.0;
      }
      if (!any) continue;
      for (const auto& slot : layout.loadings()) {
        if (d[slot.col] < 0.0) m(s, static_cast<Eigen::Index>(slot.index)) = -m(s, static_cast<Eigen::Index>(slot.index));
      }
      if (layout.phi_size() > 0) {
        std::size_t pos = layout.phi_offset();
        if (vs.phi_is_correlation()) {
          for (std::size_t a = 1; a < k; ++a) {
            for (std::size_t b = 0; b < a; ++b, ++pos) {
              if (d[a] * d[b] < 0.0) m(s, static_cast<Eigen::Index>(pos)) = -m(s, static_cast<Eigen::Index>(pos));
            }
          }
        } else {
          for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b <= a; ++b, ++pos) {
              if (a != b && d[a] * d[b] < 0.0) m(s, static_cast<Eigen::Index>(pos)) = -m(s, static_cast<Eigen::Index>(pos));
            }
          }
        }
      }
      if (in.has_latent() && full.has_z()) {
        for (std::size_t i = 0; i < in.n; ++i) {
          for (std::size_t j = 0; j < k; ++j) {
            if (d[j] < 0.0) {
              const auto idx = static_cast<Eigen::Index>(full.latent_offset() + i * k + j);
              m(s, idx) = -m(s, idx);
            }
          }
        }
      }
    }
  }
  return out;
}

[[nodiscard]] inline std::string idx_name(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i + 1) + "]";
}
[[nodiscard]] inline std::string idx_name(const std::string& base, std::size_t i, std::size_t j) {
  return base + "[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]";
}

/// Names and values of the constrained parameters reported per draw.
/// Exploratory models report Lambda Lambda' (lower triangle) instead of
/// Lambda, which is only identified up to rotation.
[[nodiscard]] inline std::vector<std::string> parameter_names(const ValidatedSpec& vs) {
  std::vector<std::string> names;
  const std::size_t p = vs.p(), k = vs.k();
  for (std::size_t j = 0; j < p; ++j) {
    if (vs.spec.items[j].kind == ItemKind::ordinal) {
      for (int s = 0; s + 1 < vs.spec.items[j].category_count(); ++s) names.push_back(idx_name("tau", j, static_cast<std::size_t>(s)));
    } else {
      names.push_back(idx_name("alpha", j));
    }
  }
  if (vs.exploratory()) {
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j <= i; ++j) names.push_back(idx_name("LLt", i, j));
  } else {
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < k; ++j)
        if (vs.loading(i, j).kind != LoadingKind::fixed) names.push_back(idx_name("Lambda", i, j));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < i + (vs.phi_is_correlation() ? 0 : 1); ++j) names.push_back(idx_name("Phi", i, j));
  }
  if (vs.random_effects()) {
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j <= i; ++j) names.push_back(idx_name("Omega", i, j));
  }
  if (vs.family == DataFamily::continuous) {
    for (std::size_t j = 0; j < p; ++j) names.push_back(idx_name("psi", j));
  }
  return names;
}

/// Values in the order of parameter_names.
[[nodiscard]] inline std::vector<double> parameter_values(const ParameterSet& P, const ValidatedSpec& vs) {
  std::vector<double> v;
  const std::size_t p = vs.p(), k = vs.k();
  const auto I = [](std::size_t i) { return static_cast<Eigen::Index>(i); };
  for (std::size_t j = 0; j < p; ++j) {
    if (vs.spec.items[j].kind == ItemKind::ordinal) {
      for (Eigen::Index s = 0; s < P.tau[j].size(); ++s) v.push_back(P.tau[j][s]);
    } else {
      v.push_back(P.alpha[I(j)]);
    }
  }
  if (vs.exploratory()) {
    const Matrix LLt = P.Lambda * P.Lambda.transpose();
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j <= i; ++j) v.push_back(LLt(I(i), I(j)));
  } else {
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < k; ++j)
        if (vs.loading(i, j).kind != LoadingKind::fixed) v.push_back(P.Lambda(I(i), I(j)));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < i + (vs.phi_is_correlation() ? 0 : 1); ++j) v.push_back(P.Phi(I(i), I(j)));
  }
  if (vs.random_effects()) {
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j <= i; ++j) v.push_back((*P.Omega)(I(i), I(j)));
  }
  if (vs.family == DataFamily::continuous) {
    for (std::size_t j = 0; j < p; ++j) v.push_back((*P.psi)[I(j)]);
  }
  return v;
}

/// Constrained draws as (chains) x (draws) x (parameters), flattened per chain.
[[nodiscard]] inline std::vector<Matrix> constrained_draws(const Draws& d) {
  std::vector<Matrix> out;
  const auto names = parameter_names(d.spec);
  const auto layout = d.structural_layout();
  std::vector<double> buf;
  for (std::size_t c = 0; c < d.chain_count(); ++c) {
    Matrix m(static_cast<Eigen::Index>(d.per_chain()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t s = 0; s < d.per_chain(); ++s) {
      const auto P = unpack(d.row(c, s, buf).first(d.spec.structural_dim), layout).params;
      const auto v = parameter_values(P, d.spec);
      for (std::size_t j = 0; j < v.size(); ++j) m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) = v[j];
    }
    out.push_back(std::move(m));
  }
  return out;
}

/// Flat columnar draws file: chain, draw, lp__, divergent__, then one
/// column per named constrained parameter.
inline void write_draws_csv(std::ostream& os, const Draws& d) {
  const auto names = parameter_names(d.spec);
  const auto cd = constrained_draws(d);
  os << "chain,draw,lp__,divergent__";
  for (const auto& n : names) os << ",\"" << n << "\"";
  os << "\n" << std::setprecision(17);
  for (std::size_t c = 0; c < d.chain_count(); ++c) {
    for (std::size_t s = 0; s < d.per_chain(); ++s) {
      os << (c + 1) << "," << (s + 1) << "," << d.log_p[c][static_cast<Eigen::Index>(s)] << ","
         << static_cast<int>(d.divergent[c][s]);
      for (Eigen::Index j = 0; j < cd[c].cols(); ++j) os << "," << cd[c](static_cast<Eigen::Index>(s), j);
      os << "\n";
    }
  }
}

inline void write_draws_csv(const std::string& path, const Draws& d) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot open '" + path + "' for writing");
  write_draws_csv(f, d);
}

}  // namespace bsem
