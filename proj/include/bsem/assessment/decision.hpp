#pragma once

// Decision rules combining goodness of fit (PPP) of the exact-zero and
// approximate-zero versions of a hypothesised model with their
// cross-validated predictive scores against exploratory benchmarks.

#include "bsem/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace bsem {

enum class Verdict { SUPPORT_EZ, SUPPORT_AZ, NO_SUPPORT, OVERFIT_REJECT, INCONCLUSIVE };

[[nodiscard]] inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::SUPPORT_EZ: return "SUPPORT_EZ";
    case Verdict::SUPPORT_AZ: return "SUPPORT_AZ";
    case Verdict::NO_SUPPORT: return "NO_SUPPORT";
    case Verdict::OVERFIT_REJECT: return "OVERFIT_REJECT";
    case Verdict::INCONCLUSIVE: return "INCONCLUSIVE";
  }
  return "?";
}

struct ModelOutcome {
  std::string name;
  double ppp = 0.0;
  double score = 0.0;  // cross-validated total, smaller is better
};

struct DecisionInput {
  std::optional<ModelOutcome> ez;
  std::optional<ModelOutcome> az;
  std::vector<ModelOutcome> benchmarks;  // exploratory models
};

struct DecisionOptions {
  double ppp_threshold = 0.1;
  // AZ is comparable to the best benchmark when its score exceeds the
  // benchmark's by at most this fraction of the EZ-to-benchmark gap.
  double benchmark_slack = 0.0;
};

struct Decision {
  Verdict verdict = Verdict::INCONCLUSIVE;
  std::vector<std::string> rationale;
};

namespace detail {
inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}
}  // namespace detail

[[nodiscard]] inline Decision decide(const DecisionInput& in, const DecisionOptions& opt = {}) {
  if (!in.ez || !in.az) throw InputError("decide needs both an exact-zero and an approximate-zero model");
  using detail::fmt;
  const double thr = opt.ppp_threshold;
  const auto& ez = *in.ez;
  const auto& az = *in.az;
  Decision d;
  if (ez.ppp >= thr) {
    d.verdict = Verdict::SUPPORT_EZ;
    d.rationale.push_back("rec 1: " + ez.name + " PPP " + fmt(ez.ppp) + " >= " + fmt(thr) + ", exact-zero model fits");
    return d;
  }
  d.rationale.push_back(ez.name + " PPP " + fmt(ez.ppp) + " < " + fmt(thr) + ", exact-zero model fits poorly");
  if (az.ppp < thr) {
    d.verdict = Verdict::NO_SUPPORT;
    d.rationale.push_back("rec 2: " + az.name + " PPP " + fmt(az.ppp) + " < " + fmt(thr) + ", neither version fits");
    return d;
  }
  d.rationale.push_back(az.name + " PPP " + fmt(az.ppp) + " >= " + fmt(thr) + ", approximate-zero model fits");
  if (az.score > ez.score) {
    d.verdict = Verdict::OVERFIT_REJECT;
    d.rationale.push_back("rec 2: " + az.name + " score " + fmt(az.score) + " > " + ez.name + " score " + fmt(ez.score) +
                          ", the approximate zeros pick up noise");
    return d;
  }
  d.rationale.push_back(az.name + " score " + fmt(az.score) + " <= " + ez.name + " score " + fmt(ez.score));
  if (in.benchmarks.empty()) throw InputError("decide needs an exploratory benchmark when only the approximate-zero model fits");
  const auto best = std::min_element(in.benchmarks.begin(), in.benchmarks.end(),
                                     [](const ModelOutcome& a, const ModelOutcome& b) { return a.score < b.score; });
  const double slack = opt.benchmark_slack * std::max(0.0, ez.score - best->score);
  if (az.score <= best->score + slack) {
    d.verdict = Verdict::SUPPORT_AZ;
    d.rationale.push_back("rec 3: " + az.name + " score " + fmt(az.score) + " <= benchmark " + best->name + " " +
                          fmt(best->score) + " + slack " + fmt(slack) + ", hypothesised structure predicts as well");
  } else {
    d.verdict = Verdict::INCONCLUSIVE;
    d.rationale.push_back("rec 3: " + az.name + " score " + fmt(az.score) + " > benchmark " + best->name + " " +
                          fmt(best->score) + " + slack " + fmt(slack) + ", a different structure may predict better");
  }
  return d;
}

}  // namespace bsem
