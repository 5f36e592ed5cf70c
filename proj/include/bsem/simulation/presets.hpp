#pragma once

// Named model presets: the four-model bundle (EZ, AZ, EFA, EFA-C) for a
// simple-structure hypothesis, and the eight-model roster for six binary
// smoking-dependence items.

#include "bsem/core/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace bsem::presets {

[[nodiscard]] inline std::vector<ItemSpec> items(std::size_t p, ItemKind kind, const std::string& prefix = "y") {
  std::vector<ItemSpec> out;
  for (std::size_t j = 0; j < p; ++j) out.push_back({prefix + std::to_string(j + 1), kind, std::nullopt});
  return out;
}

/// Each factor loads on a contiguous block of items; the first item of each
/// block leads. Off-block entries are approximate zeros (AZ) or exact zeros.
[[nodiscard]] inline LoadingPattern simple_structure(const std::vector<std::size_t>& block_sizes, bool approx_zero) {
  std::size_t p = 0;
  for (auto b : block_sizes) p += b;
  LoadingPattern pat(p, block_sizes.size());
  std::size_t start = 0;
  for (std::size_t f = 0; f < block_sizes.size(); ++f) {
    for (std::size_t i = 0; i < p; ++i) {
      const bool in_block = i >= start && i < start + block_sizes[f];
      pat.at(i, f) = in_block ? LoadingEntry::free_entry()
                              : (approx_zero ? LoadingEntry::approx_zero() : LoadingEntry::fixed_at(0.0));
    }
    pat.leading[f] = static_cast<int>(start);
    start += block_sizes[f];
  }
  return pat;
}

[[nodiscard]] inline Link default_link(ItemKind kind) {
  return kind == ItemKind::continuous ? Link::identity : Link::logit;
}

/// One of the four assessment models over p = 3k items with k factors of
/// three items each (k = 2 gives the six-item simulation hypothesis).
[[nodiscard]] inline ModelSpec bundle_model(Variant v, ItemKind kind, std::size_t factors = 2,
                                            std::size_t per_factor = 3) {
  ModelSpec m;
  m.items = items(factors * per_factor, kind);
  m.k = static_cast<int>(factors);
  m.variant = v;
  m.link = default_link(kind);
  if (v == Variant::EZ || v == Variant::AZ) {
    m.pattern = simple_structure(std::vector<std::size_t>(factors, per_factor), v == Variant::AZ);
  }
  switch (v) {
    case Variant::EZ: m.name = "EZ"; break;
    case Variant::AZ: m.name = "AZ"; break;
    case Variant::EFA: m.name = "EFA"; break;
    case Variant::EFA_C: m.name = "EFA-C"; break;
  }
  return m;
}

[[nodiscard]] inline std::vector<ModelSpec> bundle(ItemKind kind) {
  return {bundle_model(Variant::EZ, kind), bundle_model(Variant::AZ, kind), bundle_model(Variant::EFA, kind),
          bundle_model(Variant::EFA_C, kind)};
}

/// Item names of the six dichotomised smoking-dependence items.
inline const std::vector<std::string> kFtndItems = {"FNFIRST", "FNGIVEUP", "FNFREQ", "FNNODAY", "FNFORBDN", "FNSICK"};

/// Models 1F, 1F-C, 2F-EZ, 2F-AZ, 2F-EZ-b, 2F-AZ-b, 2F-EFA, 2F-EFA-C.
/// "-b" lets the first item load freely on both factors; "-C" adds the
/// item-individual random effects.
[[nodiscard]] inline ModelSpec ftnd_model(const std::string& name) {
  ModelSpec m;
  m.name = name;
  for (const auto& it : kFtndItems) m.items.push_back({it, ItemKind::binary, std::nullopt});
  m.link = Link::logit;
  if (name == "1F" || name == "1F-C") {
    m.k = 1;
    m.variant = name == "1F" ? Variant::EZ : Variant::AZ;
    m.pattern = simple_structure({6}, false);
    return m;
  }
  m.k = 2;
  if (name == "2F-EFA" || name == "2F-EFA-C") {
    m.variant = name == "2F-EFA" ? Variant::EFA : Variant::EFA_C;
    return m;
  }
  const bool az = name == "2F-AZ" || name == "2F-AZ-b";
  const bool both = name == "2F-EZ-b" || name == "2F-AZ-b";
  if (!az && !both && name != "2F-EZ") throw InputError("unknown preset '" + name + "'");
  m.variant = az ? Variant::AZ : Variant::EZ;
  m.pattern = simple_structure({3, 3}, az);
  if (both) m.pattern->at(0, 1) = LoadingEntry::free_entry();
  return m;
}

[[nodiscard]] inline std::vector<std::string> ftnd_roster() {
  return {"1F", "1F-C", "2F-EZ", "2F-AZ", "2F-EZ-b", "2F-AZ-b", "2F-EFA", "2F-EFA-C"};
}

}  // namespace bsem::presets
