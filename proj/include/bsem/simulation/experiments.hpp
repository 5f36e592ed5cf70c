#pragma once

// Parameter recovery of the AZ model on binary data simulated from the EZ
// model, and sensitivity of posterior summaries to the psi prior.

#include "bsem/sampler/fit.hpp"
#include "bsem/simulation/generate.hpp"

#include <map>
#include <string>
#include <vector>

namespace bsem::sim {

struct RecoveryRow {
  std::string name;
  double truth = 0.0;
  double coverage = 0.0;     // share of replications whose 95% interval holds the truth
  double bias_mean = 0.0;    // average posterior mean minus truth
  double bias_median = 0.0;  // average posterior median minus truth
};

struct RecoveryResult {
  std::size_t replications = 0;
  std::size_t used = 0;  // replications that produced draws
  std::vector<RecoveryRow> rows;
  std::vector<std::string> failures;  // "replication r: reason"
};

namespace detail {
inline bool is_recovery_parameter(const std::string& name) {
  return name.rfind("Lambda[", 0) == 0 || name.rfind("Phi[", 0) == 0;
}
/// True value of a "Lambda[i,j]" / "Phi[i,j]" name (1-based indices).
inline double truth_of(const std::string& name, const ScenarioTruth& t) {
  const auto open = name.find('['), comma = name.find(','), close = name.find(']');
  const auto i = std::stoul(name.substr(open + 1, comma - open - 1)) - 1;
  const auto j = std::stoul(name.substr(comma + 1, close - comma - 1)) - 1;
  const Matrix& M = name[0] == 'L' ? t.Lambda : t.Phi;
  return M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}
}  // namespace detail

/// Replication r simulates Scenario 1 binary data of size n, fits the AZ
/// model of the simple-structure hypothesis, and records interval coverage
/// and point-estimate bias for every loading and the factor correlation.
/// Replication seeds depend only on (seed, r), so results do not depend on
/// the order in which replications run.
[[nodiscard]] inline RecoveryResult recovery_experiment(std::size_t replications, std::size_t n, std::uint64_t seed,
                                                        SamplerConfig cfg, Link link = Link::logit) {
  if (replications < 1) throw InputError("recovery needs at least one replication");
  auto model = presets::bundle_model(Variant::AZ, ItemKind::binary);
  model.link = link;
  const auto vs = validate_spec(model);
  const auto truth = scenario_truth(1, ItemKind::binary, link);
  const auto names = parameter_names(vs);
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (detail::is_recovery_parameter(names[j])) idx.push_back(j);
  }
  RecoveryResult out;
  out.replications = replications;
  for (auto j : idx) out.rows.push_back({names[j], detail::truth_of(names[j], truth), 0.0, 0.0, 0.0});
  for (std::size_t r = 0; r < replications; ++r) {
    try {
      const auto sim = generate(1, ItemKind::binary, n, derive_seed(seed, StreamKind::simulate, r), link);
      SamplerConfig c = cfg;
      c.seed = derive_seed(seed, StreamKind::chain, r);
      const auto res = fit(vs, sim.data, c);
      for (const auto& f : res.diagnostics.failures()) out.failures.push_back("replication " + std::to_string(r + 1) + ": " + f);
      for (std::size_t q = 0; q < idx.size(); ++q) {
        const auto& s = res.diagnostics.parameters[idx[q]];
        auto& row = out.rows[q];
        row.coverage += (s.q025 <= row.truth && row.truth <= s.q975) ? 1.0 : 0.0;
        row.bias_mean += s.mean - row.truth;
        row.bias_median += s.q50 - row.truth;
      }
      ++out.used;
    } catch (const std::exception& e) {
      out.failures.push_back("replication " + std::to_string(r + 1) + ": " + e.what());
    }
  }
  if (out.used > 0) {
    const double u = static_cast<double>(out.used);
    for (auto& row : out.rows) {
      row.coverage /= u;
      row.bias_mean /= u;
      row.bias_median /= u;
    }
  }
  return out;
}

struct PriorChoice {
  std::string label;
  PsiPrior prior;
};

/// The data-dependent Heywood guard and three data-independent alternatives.
[[nodiscard]] inline std::vector<PriorChoice> sensitivity_priors() {
  return {{"InvGamma(c0=2.5, data-dependent)", PsiPrior::heywood_guard(2.5)},
          {"InvGamma(0.1,0.1)", PsiPrior::inv_gamma(0.1, 0.1)},
          {"Half-Cauchy(5)", PsiPrior::half_cauchy(5.0)},
          {"Uniform(0,10)", PsiPrior::uniform(10.0)}};
}

struct SensitivityTable {
  std::vector<std::string> priors;
  std::vector<std::string> parameters;
  Matrix mean;  // parameters x priors
  Matrix sd;
  std::vector<std::string> failures;

  /// Largest pairwise difference of posterior means across priors, over
  /// parameters whose name starts with `prefix`.
  [[nodiscard]] double max_mean_gap(const std::string& prefix = "") const {
    double gap = 0.0;
    for (Eigen::Index j = 0; j < mean.rows(); ++j) {
      if (parameters[static_cast<std::size_t>(j)].rfind(prefix, 0) != 0) continue;
      gap = std::max(gap, mean.row(j).maxCoeff() - mean.row(j).minCoeff());
    }
    return gap;
  }
};

/// Fits `model` to `data` once per psi prior with the same sampler seed.
[[nodiscard]] inline SensitivityTable sensitivity(const ModelSpec& model, const Dataset& data,
                                                  const std::vector<PriorChoice>& priors, const SamplerConfig& cfg) {
  if (priors.empty()) throw InputError("sensitivity needs at least one prior");
  SensitivityTable t;
  for (std::size_t q = 0; q < priors.size(); ++q) {
    ModelSpec m = model;
    m.priors.psi_prior = priors[q].prior;
    const auto vs = validate_spec(m);
    if (vs.family != DataFamily::continuous) throw InputError("the psi prior only applies to continuous models");
    const auto res = fit(vs, data, cfg);
    if (q == 0) {
      for (const auto& s : res.diagnostics.parameters) t.parameters.push_back(s.name);
      t.mean.resize(static_cast<Eigen::Index>(t.parameters.size()), static_cast<Eigen::Index>(priors.size()));
      t.sd.resizeLike(t.mean);
    }
    t.priors.push_back(priors[q].label);
    for (std::size_t j = 0; j < t.parameters.size(); ++j) {
      t.mean(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(q)) = res.diagnostics.parameters[j].mean;
      t.sd(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(q)) = res.diagnostics.parameters[j].sd;
    }
    for (const auto& f : res.diagnostics.failures()) t.failures.push_back(priors[q].label + ": " + f);
  }
  return t;
}

}  // namespace bsem::sim
