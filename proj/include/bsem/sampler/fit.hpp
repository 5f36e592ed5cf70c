#pragma once

#include "bsem/likelihood/posterior.hpp"
#include "bsem/sampler/diagnostics.hpp"
#include "bsem/sampler/draws.hpp"
#include "bsem/sampler/hmc.hpp"

namespace bsem {

[[nodiscard]] inline std::size_t default_warmup(const ValidatedSpec& vs) {
  return vs.family == DataFamily::continuous ? 1000 : 2000;
}

/// Runs HMC on the posterior of `vs` given `data`. Stored coordinates are
/// the structural block only unless cfg.keep_latent is set. Draws are raw:
/// apply sign_align before summarising confirmatory models.
[[nodiscard]] inline Draws hmc_run(const ValidatedSpec& vs, const Dataset& data, const SamplerConfig& cfg) {
  cfg.check();
  const Posterior post(vs, data);
  const std::size_t warmup = cfg.warmup.value_or(default_warmup(vs));
  const std::size_t keep = cfg.keep_latent ? post.dim() : vs.structural_dim;
  auto outs = run_chains(post, cfg, warmup, keep);
  return assemble_draws(vs, data.n(), warmup, cfg.samples, std::move(outs));
}

struct FitResult {
  Draws draws;  // sign-aligned
  Diagnostics diagnostics;
};

/// hmc_run followed by sign alignment and diagnostics.
[[nodiscard]] inline FitResult fit(const ValidatedSpec& vs, const Dataset& data, const SamplerConfig& cfg) {
  FitResult r{sign_align(hmc_run(vs, data, cfg)), {}};
  r.diagnostics = diagnose(r.draws);
  return r;
}

}  // namespace bsem
