#pragma once

// Full assessment of a set of models on one dataset: fit, PPP, K-fold
// cross-validated score, differences from the best score, and a verdict
// when an exact-zero / approximate-zero pair is present.

#include "bsem/assessment/cross_validation.hpp"
#include "bsem/assessment/decision.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace bsem {

struct AssessOptions {
  SamplerConfig sampler;
  std::size_t folds = 3;
  PppOptions ppp;
  CvOptions cv;
  DecisionOptions decision;
};

struct ModelAssessment {
  std::string name;
  Variant variant = Variant::EZ;
  Diagnostics diagnostics;  // full-data fit
  std::vector<std::string> failures;
  PppResult ppp;
  ScoreRecord cv;
  double difference = 0.0;
};

struct AssessmentReport {
  std::string score_name;  // "variogram" or "log"
  std::size_t n = 0;
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  std::vector<ModelAssessment> models;
  std::optional<Decision> decision;
  std::vector<std::string> notices;

  [[nodiscard]] const ModelAssessment& model(const std::string& name) const {
    for (const auto& m : models) {
      if (m.name == name) return m;
    }
    throw InputError("no model named '" + name + "' in the report");
  }
  [[nodiscard]] bool any_failures() const {
    for (const auto& m : models) {
      if (!m.failures.empty()) return true;
      for (const auto& f : m.cv.fold_failures) {
        if (!f.empty()) return true;
      }
    }
    return false;
  }
};

/// The decision input built from the first EZ and first AZ model in order
/// and all exploratory models as benchmarks.
[[nodiscard]] inline DecisionInput decision_input(const AssessmentReport& r) {
  DecisionInput in;
  for (const auto& m : r.models) {
    const ModelOutcome o{m.name, m.ppp.value, m.cv.total};
    if (m.variant == Variant::EZ && !in.ez) in.ez = o;
    else if (m.variant == Variant::AZ && !in.az) in.az = o;
    else if (is_exploratory(m.variant)) in.benchmarks.push_back(o);
  }
  return in;
}

[[nodiscard]] inline AssessmentReport assess(const std::vector<ModelSpec>& models, const Dataset& Y,
                                             const AssessOptions& opt) {
  if (models.empty()) throw InputError("assess needs at least one model");
  std::vector<ValidatedSpec> specs;
  for (const auto& m : models) specs.push_back(validate_spec(m));
  for (std::size_t i = 1; i < specs.size(); ++i) {
    if (specs[i].family != specs[0].family) throw InputError("all assessed models must share the data family");
  }
  AssessmentReport rep;
  rep.score_name = specs[0].family == DataFamily::continuous ? "variogram" : "log";
  rep.n = Y.n();
  rep.folds = opt.folds;
  rep.seed = opt.sampler.seed;
  const FoldPlan plan = kfold_split(Y.n(), opt.folds, opt.sampler.seed);
  std::vector<ScoreRecord> records;
  for (const auto& vs : specs) {
    ModelAssessment a;
    a.name = vs.spec.name;
    a.variant = vs.spec.variant;
    const auto res = fit(vs, Y, opt.sampler);
    a.diagnostics = res.diagnostics;
    a.failures = res.diagnostics.failures();
    PppOptions po = opt.ppp;
    po.seed = derive_seed(opt.sampler.seed, StreamKind::replicate, 0);
    a.ppp = ppp(res.draws, Y, po);
    a.cv = cross_validate(vs, Y, plan, opt.sampler, opt.cv);
    records.push_back(a.cv);
    rep.models.push_back(std::move(a));
  }
  const auto table = score_table(records);
  for (std::size_t i = 0; i < table.size(); ++i) rep.models[i].difference = table[i].difference;
  const auto in = decision_input(rep);
  if (!in.ez || !in.az) {
    rep.notices.push_back("verdict omitted: the model set needs one exact-zero (EZ) and one approximate-zero (AZ) model");
  } else {
    try {
      rep.decision = decide(in, opt.decision);
    } catch (const InputError& e) {
      rep.notices.push_back(std::string("verdict omitted: ") + e.what());
    }
  }
  return rep;
}

namespace detail {
inline nlohmann::json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}
inline nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? number_or_string(*v) : nlohmann::json(nullptr);
}
}  // namespace detail

[[nodiscard]] inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::EZ: return "EZ";
    case Variant::AZ: return "AZ";
    case Variant::EFA: return "EFA";
    case Variant::EFA_C: return "EFA-C";
  }
  return "?";
}

[[nodiscard]] inline nlohmann::json diagnostics_json(const Diagnostics& d) {
  using detail::optional_number;
  nlohmann::json j;
  j["divergences"] = d.divergences;
  j["divergence_rate"] = d.divergence_rate;
  j["max_rhat"] = optional_number(d.max_rhat);
  j["min_ess"] = optional_number(d.min_ess);
  if (!d.max_rhat) j["rhat_note"] = "R-hat unavailable (needs at least two chains)";
  j["parameters"] = nlohmann::json::array();
  for (const auto& p : d.parameters) {
    j["parameters"].push_back({{"name", p.name},
                               {"mean", p.mean},
                               {"sd", p.sd},
                               {"q2.5", p.q025},
                               {"q50", p.q50},
                               {"q97.5", p.q975},
                               {"rhat", optional_number(p.rhat)},
                               {"ess", optional_number(p.ess)}});
  }
  return j;
}

[[nodiscard]] inline nlohmann::json to_json(const AssessmentReport& r) {
  using detail::number_or_string;
  nlohmann::json j;
  j["score"] = r.score_name;
  j["n"] = r.n;
  j["folds"] = r.folds;
  j["seed"] = r.seed;
  j["models"] = nlohmann::json::array();
  for (const auto& m : r.models) {
    nlohmann::json jm;
    jm["name"] = m.name;
    jm["variant"] = to_string(m.variant);
    jm["ppp"] = m.ppp.value;
    jm["ppp_draws"] = m.ppp.observed.size();
    jm["cv_total"] = number_or_string(m.cv.total);
    jm["cv_per_fold"] = nlohmann::json::array();
    for (double v : m.cv.per_fold) jm["cv_per_fold"].push_back(number_or_string(v));
    jm["difference_from_best"] = number_or_string(m.difference);
    jm["fit_failures"] = m.failures;
    jm["fold_failures"] = m.cv.fold_failures;
    jm["max_rhat"] = detail::optional_number(m.diagnostics.max_rhat);
    jm["divergences"] = m.diagnostics.divergences;
    j["models"].push_back(std::move(jm));
  }
  if (r.decision) {
    j["verdict"] = to_string(r.decision->verdict);
    j["rationale"] = r.decision->rationale;
  } else {
    j["verdict"] = nullptr;
  }
  j["notices"] = r.notices;
  return j;
}

/// Plain-text table derived from the JSON report.
[[nodiscard]] inline std::string summary_text(const nlohmann::json& j) {
  std::ostringstream os;
  os << "model        PPP     " << j["score"].get<std::string>() << " diff\n";
  for (const auto& m : j["models"]) {
    os << std::left << std::setw(12) << m["name"].get<std::string>() << " " << std::setw(7) << std::setprecision(3)
       << m["ppp"].get<double>() << " ";
    if (m["difference_from_best"].is_number()) os << std::fixed << std::setprecision(2) << m["difference_from_best"].get<double>();
    else os << m["difference_from_best"].get<std::string>();
    os.unsetf(std::ios::fixed);
    os << "\n";
  }
  if (!j["verdict"].is_null()) {
    os << "verdict: " << j["verdict"].get<std::string>() << "\n";
    for (const auto& line : j["rationale"]) os << "  " << line.get<std::string>() << "\n";
  }
  for (const auto& line : j["notices"]) os << "note: " << line.get<std::string>() << "\n";
  return os.str();
}

}  // namespace bsem
