#pragma once

// Model configuration files (JSON). Key set:
//
//   name          text (defaults to the variant)
//   variant       "EZ" | "AZ" | "EFA" | "EFA-C"
//   factors       k >= 1
//   link          "identity" | "probit" | "logit" (default: identity for
//                 continuous items, logit otherwise)
//   item_kind     default kind for items given by name only
//   items         list of names or of {"name", "kind", "categories"}
//   pattern       p rows of k entries, EZ/AZ only. Entries: "free", "zero"
//                 (exact zero under EZ, approximate zero under AZ),
//                 "approx_zero", or a number (fixed value)
//   leading       1-based leading row per factor (default: first free row)
//   phi_form      "correlation" | "covariance"
//   leading_sign  "sign_align" | "positive"
//   augmentation  "full" | "reduced"
//   priors        cross_loading_var, free_loading_var, coupled_loading_prior,
//                 omega_scale (p x p rows), omega_df, phi_df, lkj_eta,
//                 alpha_var, tau_var, psi_prior {kind, c0 | shape, scale |
//                 scale | upper}
//
// Unknown keys are rejected so that typos do not silently fall back to
// defaults.

#include "bsem/core/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <string>

namespace bsem::io {

using nlohmann::json;

namespace detail {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw InputError(path_ + ": " + msg); }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!ok.count(k)) throw InputError(path_ + "." + k + ": unknown key");
    }
  }

  [[nodiscard]] bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  [[nodiscard]] const json& at(const char* key) const {
    if (!has(key)) fail(std::string("missing required key '") + key + "'");
    return j_.at(key);
  }
  [[nodiscard]] std::string field(const char* key) const { return path_ + "." + key; }

  [[nodiscard]] double number(const char* key) const {
    const auto& v = at(key);
    if (!v.is_number()) throw InputError(field(key) + ": expected a number");
    return v.get<double>();
  }
  [[nodiscard]] std::string text(const char* key) const {
    const auto& v = at(key);
    if (!v.is_string()) throw InputError(field(key) + ": expected a string");
    return v.get<std::string>();
  }
  [[nodiscard]] bool boolean(const char* key) const {
    const auto& v = at(key);
    if (!v.is_boolean()) throw InputError(field(key) + ": expected true or false");
    return v.get<bool>();
  }
  [[nodiscard]] long integer(const char* key) const {
    const auto& v = at(key);
    if (!v.is_number_integer()) throw InputError(field(key) + ": expected an integer");
    return v.get<long>();
  }
  template <class E>
  [[nodiscard]] E choice(const char* key, std::initializer_list<std::pair<const char*, E>> options) const {
    const auto s = text(key);
    std::string list;
    for (const auto& [name, value] : options) {
      if (s == name) return value;
      list += std::string(list.empty() ? "" : ", ") + name;
    }
    throw InputError(field(key) + ": '" + s + "' is not one of " + list);
  }

 private:
  const json& j_;
  std::string path_;
};

inline ItemKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "continuous") return ItemKind::continuous;
  if (s == "binary") return ItemKind::binary;
  if (s == "ordinal") return ItemKind::ordinal;
  throw InputError(where + ": '" + s + "' is not one of continuous, binary, ordinal");
}

inline const char* kind_name(ItemKind k) {
  switch (k) {
    case ItemKind::continuous: return "continuous";
    case ItemKind::binary: return "binary";
    case ItemKind::ordinal: return "ordinal";
  }
  return "?";
}

inline Matrix parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InputError(where + ": expected a list of rows");
  const auto cols = j[0].is_array() ? j[0].size() : 0;
  Matrix M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw InputError(where + "[" + std::to_string(i) + "]: rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) throw InputError(where + "[" + std::to_string(i) + "][" + std::to_string(c) + "]: expected a number");
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    }
  }
  return M;
}

inline PsiPrior parse_psi_prior(const json& j, const std::string& where) {
  Reader r(j, where);
  const auto kind = r.text("kind");
  if (kind == "heywood_guard") {
    r.allow({"kind", "c0"});
    return PsiPrior::heywood_guard(r.has("c0") ? r.number("c0") : 2.5);
  }
  if (kind == "inv_gamma") {
    r.allow({"kind", "shape", "scale"});
    return PsiPrior::inv_gamma(r.number("shape"), r.number("scale"));
  }
  if (kind == "half_cauchy") {
    r.allow({"kind", "scale"});
    return PsiPrior::half_cauchy(r.number("scale"));
  }
  if (kind == "uniform") {
    r.allow({"kind", "upper"});
    return PsiPrior::uniform(r.number("upper"));
  }
  throw InputError(where + ".kind: '" + kind + "' is not one of heywood_guard, inv_gamma, half_cauchy, uniform");
}

inline PriorConfig parse_priors(const json& j, const std::string& where) {
  Reader r(j, where);
  r.allow({"cross_loading_var", "free_loading_var", "coupled_loading_prior", "omega_scale", "omega_df", "phi_df", "lkj_eta",
           "alpha_var", "tau_var", "psi_prior"});
  PriorConfig p;
  if (r.has("cross_loading_var")) p.cross_loading_var = r.number("cross_loading_var");
  if (r.has("free_loading_var")) p.free_loading_var = r.number("free_loading_var");
  if (r.has("coupled_loading_prior")) p.coupled_loading_prior = r.boolean("coupled_loading_prior");
  if (r.has("omega_scale")) p.omega_scale = parse_matrix(r.at("omega_scale"), r.field("omega_scale"));
  if (r.has("omega_df")) p.omega_df = r.number("omega_df");
  if (r.has("phi_df")) p.phi_df = r.number("phi_df");
  if (r.has("lkj_eta")) p.lkj_eta = r.number("lkj_eta");
  if (r.has("alpha_var")) p.alpha_var = r.number("alpha_var");
  if (r.has("tau_var")) p.tau_var = r.number("tau_var");
  if (r.has("psi_prior")) p.psi_prior = parse_psi_prior(r.at("psi_prior"), r.field("psi_prior"));
  return p;
}

}  // namespace detail

[[nodiscard]] inline Variant parse_variant(const std::string& s) {
  if (s == "EZ") return Variant::EZ;
  if (s == "AZ") return Variant::AZ;
  if (s == "EFA") return Variant::EFA;
  if (s == "EFA-C" || s == "EFA_C") return Variant::EFA_C;
  throw InputError("'" + s + "' is not one of EZ, AZ, EFA, EFA-C");
}

/// Builds a ModelSpec from a parsed config. `source` prefixes error paths.
[[nodiscard]] inline ModelSpec model_from_json(const json& j, const std::string& source = "config") {
  detail::Reader r(j, source);
  r.allow({"name", "variant", "factors", "link", "item_kind", "items", "pattern", "leading", "phi_form", "leading_sign",
           "augmentation", "priors"});
  ModelSpec m;
  try {
    m.variant = parse_variant(r.text("variant"));
  } catch (const InputError& e) {
    if (!r.has("variant")) throw;
    throw InputError(r.field("variant") + ": " + e.what());
  }
  m.name = r.has("name") ? r.text("name") : r.text("variant");
  const long k = r.integer("factors");
  if (k < 1) throw InputError(r.field("factors") + ": must be at least 1");
  m.k = static_cast<int>(k);

  const auto default_kind = r.has("item_kind") ? detail::parse_kind(r.text("item_kind"), r.field("item_kind")) : ItemKind::continuous;
  const auto& items = r.at("items");
  if (!items.is_array() || items.empty()) throw InputError(r.field("items") + ": expected a non-empty list");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string where = r.field("items") + "[" + std::to_string(i) + "]";
    if (items[i].is_string()) {
      m.items.push_back({items[i].get<std::string>(), default_kind, std::nullopt});
      continue;
    }
    detail::Reader ir(items[i], where);
    ir.allow({"name", "kind", "categories"});
    ItemSpec it{ir.text("name"), ir.has("kind") ? detail::parse_kind(ir.text("kind"), ir.field("kind")) : default_kind, std::nullopt};
    if (ir.has("categories")) it.categories = static_cast<int>(ir.integer("categories"));
    m.items.push_back(std::move(it));
  }
  {
    std::set<std::string> seen;
    for (const auto& it : m.items) {
      if (!seen.insert(it.name).second) throw InputError(r.field("items") + ": duplicate item name '" + it.name + "'");
    }
  }
  const bool all_cont = std::all_of(m.items.begin(), m.items.end(), [](const ItemSpec& it) { return it.kind == ItemKind::continuous; });
  m.link = r.has("link") ? r.choice<Link>("link", {{"identity", Link::identity}, {"probit", Link::probit}, {"logit", Link::logit}})
                         : (all_cont ? Link::identity : Link::logit);
  if (r.has("phi_form")) m.phi_form = r.choice<PhiForm>("phi_form", {{"correlation", PhiForm::correlation}, {"covariance", PhiForm::covariance}});
  if (r.has("leading_sign")) {
    m.leading_sign = r.choice<LeadingSign>("leading_sign", {{"sign_align", LeadingSign::sign_align}, {"positive", LeadingSign::positive}});
  }
  if (r.has("augmentation")) {
    m.augmentation = r.choice<Augmentation>("augmentation", {{"full", Augmentation::full}, {"reduced", Augmentation::reduced}});
  }
  if (r.has("priors")) m.priors = detail::parse_priors(r.at("priors"), r.field("priors"));

  if (r.has("pattern")) {
    const auto& pj = r.at("pattern");
    const auto p = m.items.size();
    const auto kk = static_cast<std::size_t>(m.k);
    if (!pj.is_array() || pj.size() != p) {
      throw InputError(r.field("pattern") + ": expected " + std::to_string(p) + " rows (one per item)");
    }
    LoadingPattern pat(p, kk);
    for (std::size_t i = 0; i < p; ++i) {
      const std::string row = r.field("pattern") + "[" + std::to_string(i) + "]";
      if (!pj[i].is_array() || pj[i].size() != kk) throw InputError(row + ": expected " + std::to_string(kk) + " entries");
      for (std::size_t c = 0; c < kk; ++c) {
        const auto& e = pj[i][c];
        const std::string where = row + "[" + std::to_string(c) + "]";
        if (e.is_number()) {
          pat.at(i, c) = LoadingEntry::fixed_at(e.get<double>());
        } else if (e == "free") {
          pat.at(i, c) = LoadingEntry::free_entry();
        } else if (e == "approx_zero") {
          pat.at(i, c) = LoadingEntry::approx_zero();
        } else if (e == "zero") {
          pat.at(i, c) = m.variant == Variant::AZ ? LoadingEntry::approx_zero() : LoadingEntry::fixed_at(0.0);
        } else {
          throw InputError(where + ": expected \"free\", \"zero\", \"approx_zero\" or a number");
        }
      }
    }
    if (r.has("leading")) {
      const auto& lj = r.at("leading");
      if (!lj.is_array() || lj.size() != kk) throw InputError(r.field("leading") + ": expected one row number per factor");
      for (std::size_t c = 0; c < kk; ++c) {
        if (!lj[c].is_number_integer() || lj[c].get<long>() < 1 || lj[c].get<long>() > static_cast<long>(p)) {
          throw InputError(r.field("leading") + "[" + std::to_string(c) + "]: expected a row number in 1.." + std::to_string(p));
        }
        pat.leading[c] = static_cast<int>(lj[c].get<long>() - 1);
      }
    } else {
      const bool fixed_lead = m.phi_form == PhiForm::covariance;
      for (std::size_t c = 0; c < kk; ++c) {
        for (std::size_t i = 0; i < p; ++i) {
          const auto& e = pat.at(i, c);
          if (fixed_lead ? (e.kind == LoadingKind::fixed && e.value != 0.0) : e.kind == LoadingKind::free) {
            pat.leading[c] = static_cast<int>(i);
            break;
          }
        }
      }
    }
    m.pattern = pat;
  } else if (r.has("leading")) {
    throw InputError(r.field("leading") + ": only meaningful together with a pattern");
  }
  return m;
}

[[nodiscard]] inline json model_to_json(const ModelSpec& m) {
  json j;
  j["name"] = m.name;
  switch (m.variant) {
    case Variant::EZ: j["variant"] = "EZ"; break;
    case Variant::AZ: j["variant"] = "AZ"; break;
    case Variant::EFA: j["variant"] = "EFA"; break;
    case Variant::EFA_C: j["variant"] = "EFA-C"; break;
  }
  j["factors"] = m.k;
  j["link"] = m.link == Link::identity ? "identity" : (m.link == Link::probit ? "probit" : "logit");
  j["items"] = json::array();
  const bool uniform = !m.items.empty() && std::all_of(m.items.begin(), m.items.end(), [&](const ItemSpec& it) {
    return it.kind == m.items[0].kind && !it.categories;
  });
  if (uniform) j["item_kind"] = detail::kind_name(m.items[0].kind);
  for (const auto& it : m.items) {
    if (uniform) {
      j["items"].push_back(it.name);
      continue;
    }
    json ji{{"name", it.name}, {"kind", detail::kind_name(it.kind)}};
    if (it.categories) ji["categories"] = *it.categories;
    j["items"].push_back(ji);
  }
  if (m.pattern) {
    j["pattern"] = json::array();
    for (std::size_t i = 0; i < m.pattern->rows; ++i) {
      json row = json::array();
      for (std::size_t c = 0; c < m.pattern->cols; ++c) {
        const auto& e = m.pattern->at(i, c);
        if (e.kind == LoadingKind::free) row.push_back("free");
        else if (e.kind == LoadingKind::approx_zero) row.push_back("approx_zero");
        else if (e.value == 0.0) row.push_back("zero");
        else row.push_back(e.value);
      }
      j["pattern"].push_back(row);
    }
    j["leading"] = json::array();
    for (int l : m.pattern->leading) j["leading"].push_back(l + 1);
  }
  j["phi_form"] = m.phi_form == PhiForm::correlation ? "correlation" : "covariance";
  j["leading_sign"] = m.leading_sign == LeadingSign::sign_align ? "sign_align" : "positive";
  j["augmentation"] = m.augmentation == Augmentation::full ? "full" : "reduced";
  const auto& pr = m.priors;
  json jp;
  jp["cross_loading_var"] = pr.cross_loading_var;
  if (pr.free_loading_var) jp["free_loading_var"] = *pr.free_loading_var;
  jp["coupled_loading_prior"] = pr.coupled_loading_prior;
  if (pr.omega_scale) {
    jp["omega_scale"] = json::array();
    for (Eigen::Index i = 0; i < pr.omega_scale->rows(); ++i) {
      json row = json::array();
      for (Eigen::Index c = 0; c < pr.omega_scale->cols(); ++c) row.push_back((*pr.omega_scale)(i, c));
      jp["omega_scale"].push_back(row);
    }
  }
  if (pr.omega_df) jp["omega_df"] = *pr.omega_df;
  if (pr.phi_df) jp["phi_df"] = *pr.phi_df;
  jp["lkj_eta"] = pr.lkj_eta;
  jp["alpha_var"] = pr.alpha_var;
  jp["tau_var"] = pr.tau_var;
  switch (pr.psi_prior.kind) {
    case PsiPriorKind::heywood_guard: jp["psi_prior"] = {{"kind", "heywood_guard"}, {"c0", pr.psi_prior.a}}; break;
    case PsiPriorKind::inv_gamma: jp["psi_prior"] = {{"kind", "inv_gamma"}, {"shape", pr.psi_prior.a}, {"scale", pr.psi_prior.b}}; break;
    case PsiPriorKind::half_cauchy: jp["psi_prior"] = {{"kind", "half_cauchy"}, {"scale", pr.psi_prior.a}}; break;
    case PsiPriorKind::uniform: jp["psi_prior"] = {{"kind", "uniform"}, {"upper", pr.psi_prior.a}}; break;
  }
  j["priors"] = jp;
  return j;
}

/// Parses JSON text; syntax errors carry the line and column.
[[nodiscard]] inline json parse_json_text(std::istream& in, const std::string& source) {
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    const auto pos = msg.find("parse error");
    throw InputError(source + ": " + (pos == std::string::npos ? msg : msg.substr(pos)));
  }
}

[[nodiscard]] inline ModelSpec read_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open '" + path + "'");
  return model_from_json(parse_json_text(f, path), path);
}

}  // namespace bsem::io
