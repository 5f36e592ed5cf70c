#pragma once

// Command-line front end: fit, assess, simulate, recover, sensitivity and
// presets. Exit codes: 0 success, 1 input error, 2 diagnostic failure.

#include "bsem/assessment/assess.hpp"
#include "bsem/io/config.hpp"
#include "bsem/io/csv.hpp"
#include "bsem/io/manifest.hpp"
#include "bsem/simulation/experiments.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace bsem::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kSuccess = 0, kInputError = 1, kDiagnosticFailure = 2 };

struct SamplerFlags {
  std::uint64_t seed = 20240601;
  std::size_t chains = 4;
  std::optional<std::size_t> warmup;
  std::size_t samples = 2000;
  std::size_t threads = 0;

  void add(CLI::App& app) {
    app.add_option("--seed", seed, "master seed; every random stream derives from it")->capture_default_str();
    app.add_option("--chains", chains, "number of chains")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--warmup", warmup, "warm-up iterations per chain (default 1000 continuous, 2000 categorical)");
    app.add_option("--samples", samples, "post-warm-up iterations per chain")->capture_default_str();
    app.add_option("--threads", threads, "worker threads for chains (0: one per chain)")->capture_default_str();
  }
  [[nodiscard]] SamplerConfig config() const {
    if (samples == 0) throw InputError("--samples must be at least 1");
    SamplerConfig c;
    c.seed = seed;
    c.chains = chains;
    c.warmup = warmup;
    c.samples = samples;
    c.threads = threads;
    return c;
  }
};

namespace detail {

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory '" + dir.string() + "'");
}

inline void write_text(const fs::path& path, const std::string& text, io::RunManifest& m) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path.string() + "'");
  f << text;
  f.close();
  m.output(path.string());
}

/// Preset names accepted after "preset:".
inline ModelSpec preset_model(const std::string& name) {
  for (auto kind : {ItemKind::continuous, ItemKind::binary}) {
    const std::string suffix = kind == ItemKind::continuous ? "-continuous" : "-binary";
    for (auto v : {Variant::EZ, Variant::AZ, Variant::EFA, Variant::EFA_C}) {
      auto m = presets::bundle_model(v, kind);
      if (name == m.name + suffix) return m;
    }
  }
  for (const auto& f : presets::ftnd_roster()) {
    if (name == "ftnd-" + f) return presets::ftnd_model(f);
  }
  throw InputError("unknown preset '" + name + "' (see `bsem presets --list`)");
}

inline std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const char* kind : {"continuous", "binary"}) {
    for (const char* v : {"EZ", "AZ", "EFA", "EFA-C"}) out.push_back(std::string(v) + "-" + kind);
  }
  for (const auto& f : presets::ftnd_roster()) out.push_back("ftnd-" + f);
  return out;
}

/// A model reference is a config path or "preset:NAME".
inline ModelSpec load_model(const std::string& ref, io::RunManifest& m) {
  if (ref.rfind("preset:", 0) == 0) return preset_model(ref.substr(7));
  m.input("model", ref);
  return io::read_model(ref);
}

inline Dataset load_data(const std::string& path, const std::vector<ItemSpec>& items, io::RunManifest& m) {
  m.input("data", path);
  return io::bind_items(io::read_csv(path), items, path);
}

inline std::string fit_summary(const std::string& model, const Diagnostics& d) {
  std::ostringstream os;
  os << "model " << model << ": " << d.divergences << " divergent transitions";
  if (d.max_rhat) os << ", max R-hat " << std::setprecision(4) << *d.max_rhat;
  else os << ", R-hat unavailable (needs at least two chains)";
  if (d.min_ess) os << ", min ESS " << std::setprecision(4) << *d.min_ess;
  os << "\n" << std::left << std::setw(16) << "parameter" << std::right << std::setw(10) << "mean" << std::setw(10) << "sd"
     << std::setw(10) << "2.5%" << std::setw(10) << "50%" << std::setw(10) << "97.5%" << std::setw(8) << "R-hat" << "\n";
  for (const auto& p : d.parameters) {
    os << std::left << std::setw(16) << p.name << std::right << std::fixed << std::setprecision(3) << std::setw(10) << p.mean
       << std::setw(10) << p.sd << std::setw(10) << p.q025 << std::setw(10) << p.q50 << std::setw(10) << p.q975;
    if (p.rhat) os << std::setw(8) << *p.rhat;
    else os << std::setw(8) << "NA";
    os << "\n";
    os.unsetf(std::ios::fixed);
  }
  return os.str();
}

inline nlohmann::json truth_json(const sim::ScenarioTruth& t) {
  auto mat = [](const Matrix& M) {
    nlohmann::json j = nlohmann::json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(i, c));
      j.push_back(row);
    }
    return j;
  };
  nlohmann::json j;
  j["scenario"] = t.scenario;
  j["kind"] = t.kind == ItemKind::continuous ? "continuous" : "binary";
  j["link"] = t.link == Link::identity ? "identity" : (t.link == Link::probit ? "probit" : "logit");
  j["Lambda"] = mat(t.Lambda);
  j["Phi"] = mat(t.Phi);
  j["alpha"] = std::vector<double>(t.alpha.data(), t.alpha.data() + t.alpha.size());
  j["error_cov"] = mat(t.error_cov);
  j["implied_covariance"] = mat(t.Lambda * t.Phi * t.Lambda.transpose() + t.error_cov);
  return j;
}

inline sim::PriorChoice parse_prior_flag(const std::string& s) {
  // kind[:a[,b]]
  const auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos) {
    std::stringstream ss(s.substr(colon + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      double v = 0.0;
      if (!io::detail::parse_double(io::detail::trim(tok), v)) throw InputError("--prior '" + s + "': '" + tok + "' is not a number");
      args.push_back(v);
    }
  }
  auto need = [&](std::size_t n) {
    if (args.size() != n) throw InputError("--prior '" + s + "': expected " + std::to_string(n) + " parameter(s)");
  };
  if (kind == "heywood_guard") {
    if (args.empty()) args.push_back(2.5);
    need(1);
    return {s, PsiPrior::heywood_guard(args[0])};
  }
  if (kind == "inv_gamma") {
    need(2);
    return {s, PsiPrior::inv_gamma(args[0], args[1])};
  }
  if (kind == "half_cauchy") {
    need(1);
    return {s, PsiPrior::half_cauchy(args[0])};
  }
  if (kind == "uniform") {
    need(1);
    return {s, PsiPrior::uniform(args[0])};
  }
  throw InputError("--prior '" + s + "': kind must be heywood_guard, inv_gamma, half_cauchy or uniform");
}

}  // namespace detail

/// Parses and runs one command line. Everything user-visible goes to `out`
/// and `err`; the return value is the process exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian SEM with approximate-zero priors: fitting, model assessment and simulation", "bsem"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.failure_message(CLI::FailureMessage::help);

  int code = kSuccess;
  std::function<void()> action;

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit one model and write draws and diagnostics");
  std::string fit_data, fit_model, fit_out = "bsem-fit";
  std::size_t fit_thin = 1;
  SamplerFlags fit_flags;
  fit_cmd->add_option("--data", fit_data, "CSV file with a header row")->required();
  fit_cmd->add_option("--model", fit_model, "model config (JSON) or preset:NAME")->required();
  fit_cmd->add_option("--out", fit_out, "output directory")->capture_default_str();
  fit_cmd->add_option("--thin", fit_thin, "keep every thin-th draw")->capture_default_str()->check(CLI::PositiveNumber);
  fit_flags.add(*fit_cmd);
  fit_cmd->callback([&] {
    action = [&] {
      io::RunManifest man("fit", args, fit_flags.seed);
      const auto model = detail::load_model(fit_model, man);
      const auto vs = validate_spec(model);
      const auto data = detail::load_data(fit_data, model.items, man);
      auto cfg = fit_flags.config();
      cfg.thin = fit_thin;
      const auto res = fit(vs, data, cfg);
      const fs::path dir(fit_out);
      detail::ensure_dir(dir);
      write_draws_csv((dir / "draws.csv").string(), res.draws);
      man.output((dir / "draws.csv").string());
      auto dj = diagnostics_json(res.diagnostics);
      dj["model"] = model.name;
      dj["failures"] = res.diagnostics.failures();
      detail::write_text(dir / "diagnostics.json", dj.dump(2) + "\n", man);
      const auto text = detail::fit_summary(model.name, res.diagnostics);
      detail::write_text(dir / "summary.txt", text, man);
      out << text;
      const auto failures = res.diagnostics.failures();
      for (const auto& f : failures) err << "diagnostic failure: " << f << "\n";
      code = failures.empty() ? kSuccess : kDiagnosticFailure;
      man.write(dir, code);
    };
  });

  // assess
  auto* as_cmd = app.add_subcommand("assess", "PPP, K-fold cross-validated scores and a verdict for a set of models");
  std::string as_data, as_out = "bsem-assess";
  std::vector<std::string> as_models;
  std::size_t as_folds = 3, as_thin = 8, as_smc = 500;
  double as_threshold = 0.1, as_slack = 0.0;
  SamplerFlags as_flags;
  as_cmd->add_option("--data", as_data, "CSV file with a header row")->required();
  as_cmd->add_option("--model", as_models, "model config (JSON) or preset:NAME; repeat for each model")->required();
  as_cmd->add_option("--out", as_out, "output directory")->capture_default_str();
  as_cmd->add_option("--folds", as_folds, "number of cross-validation folds K")->capture_default_str();
  as_cmd->add_option("--thin", as_thin, "PPP uses every thin-th posterior draw")->capture_default_str()->check(CLI::PositiveNumber);
  as_cmd->add_option("--mc-draws", as_smc, "latent draws per pattern probability (categorical data)")->capture_default_str();
  as_cmd->add_option("--ppp-threshold", as_threshold, "PPP below this indicates poor fit")->capture_default_str();
  as_cmd->add_option("--benchmark-slack", as_slack,
                     "AZ may exceed the best exploratory score by this fraction of the EZ-benchmark gap")
      ->capture_default_str();
  as_flags.add(*as_cmd);
  as_cmd->callback([&] {
    action = [&] {
      io::RunManifest man("assess", args, as_flags.seed);
      std::vector<ModelSpec> models;
      for (const auto& ref : as_models) models.push_back(detail::load_model(ref, man));
      for (const auto& m : models) {
        std::vector<std::string> a, b;
        for (const auto& it : m.items) a.push_back(it.name);
        for (const auto& it : models[0].items) b.push_back(it.name);
        if (a != b) throw InputError("model '" + m.name + "' has different items from model '" + models[0].name + "'");
      }
      const auto data = detail::load_data(as_data, models[0].items, man);
      AssessOptions opt;
      opt.sampler = as_flags.config();
      opt.folds = as_folds;
      opt.ppp.thin = as_thin;
      opt.ppp.s_mc = as_smc;
      opt.cv.s_mc = as_smc;
      opt.decision.ppp_threshold = as_threshold;
      opt.decision.benchmark_slack = as_slack;
      const auto report = assess(models, data, opt);
      const auto j = to_json(report);
      const fs::path dir(as_out);
      detail::ensure_dir(dir);
      detail::write_text(dir / "report.json", j.dump(2) + "\n", man);
      const auto text = summary_text(j);
      detail::write_text(dir / "summary.txt", text, man);
      out << text;
      for (const auto& n : report.notices) err << "warning: " << n << "\n";
      for (const auto& m : report.models) {
        for (const auto& f : m.failures) err << "diagnostic failure (" << m.name << "): " << f << "\n";
        for (std::size_t k = 0; k < m.cv.fold_failures.size(); ++k) {
          for (const auto& f : m.cv.fold_failures[k]) err << "diagnostic failure (" << m.name << ", fold " << (k + 1) << "): " << f << "\n";
        }
      }
      code = report.any_failures() ? kDiagnosticFailure : kSuccess;
      man.write(dir, code);
    };
  });

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "simulate a scenario dataset with its truth");
  int sim_scenario = 1;
  std::string sim_kind = "continuous", sim_out = "bsem-sim", sim_link = "logit";
  std::size_t sim_n = 1000;
  std::uint64_t sim_seed = 20240601;
  std::optional<std::uint64_t> sim_seed_pos;
  sim_cmd->add_option("scenario", sim_scenario, "scenario 1, 2 or 3")->required();
  sim_cmd->add_option("kind", sim_kind, "continuous or binary")->required()->check(CLI::IsMember({"continuous", "binary"}));
  sim_cmd->add_option("n", sim_n, "number of rows")->required();
  sim_cmd->add_option("seed_pos", sim_seed_pos, "seed (same as --seed)");
  sim_cmd->add_option("--seed", sim_seed, "seed")->capture_default_str();
  sim_cmd->add_option("--link", sim_link, "binary link")->capture_default_str()->check(CLI::IsMember({"logit", "probit"}));
  sim_cmd->add_option("--out", sim_out, "output directory")->capture_default_str();
  sim_cmd->callback([&] {
    action = [&] {
      const auto seed = sim_seed_pos.value_or(sim_seed);
      io::RunManifest man("simulate", args, seed);
      const auto kind = sim_kind == "continuous" ? ItemKind::continuous : ItemKind::binary;
      const auto s = sim::generate(sim_scenario, kind, sim_n, seed, sim_link == "probit" ? Link::probit : Link::logit);
      const fs::path dir(sim_out);
      detail::ensure_dir(dir);
      io::write_csv((dir / "data.csv").string(), s.data);
      man.output((dir / "data.csv").string());
      detail::write_text(dir / "truth.json", detail::truth_json(s.truth).dump(2) + "\n", man);
      out << "wrote " << sim_n << " rows x " << s.data.p() << " items to " << (dir / "data.csv").string() << "\n";
      man.write(dir, kSuccess);
    };
  });

  // recover
  auto* rec_cmd = app.add_subcommand("recover", "parameter recovery of the AZ model on simulated binary data");
  std::size_t rec_reps = 20, rec_n = 1000;
  std::optional<std::uint64_t> rec_seed_pos;
  std::string rec_out = "bsem-recover", rec_link = "logit";
  SamplerFlags rec_flags;
  rec_flags.chains = 2;
  rec_flags.samples = 1000;
  rec_cmd->add_option("reps", rec_reps, "replications")->required();
  rec_cmd->add_option("n", rec_n, "rows per replication")->required();
  rec_cmd->add_option("seed_pos", rec_seed_pos, "seed (same as --seed)");
  rec_cmd->add_option("--link", rec_link, "link")->capture_default_str()->check(CLI::IsMember({"logit", "probit"}));
  rec_cmd->add_option("--out", rec_out, "output directory")->capture_default_str();
  rec_flags.add(*rec_cmd);
  rec_cmd->callback([&] {
    action = [&] {
      if (rec_seed_pos) rec_flags.seed = *rec_seed_pos;
      io::RunManifest man("recover", args, rec_flags.seed);
      if (rec_flags.warmup.value_or(1) == 0) throw InputError("--warmup must be at least 1");
      const auto r = sim::recovery_experiment(rec_reps, rec_n, rec_flags.seed, rec_flags.config(),
                                              rec_link == "probit" ? Link::probit : Link::logit);
      const fs::path dir(rec_out);
      detail::ensure_dir(dir);
      std::ostringstream csv;
      csv << "parameter,truth,coverage,bias_mean,bias_median\n" << std::setprecision(10);
      nlohmann::json j;
      j["replications"] = r.replications;
      j["used"] = r.used;
      j["failures"] = r.failures;
      j["rows"] = nlohmann::json::array();
      std::ostringstream text;
      text << std::left << std::setw(14) << "parameter" << std::right << std::setw(8) << "truth" << std::setw(10) << "coverage"
           << std::setw(12) << "bias(mean)" << std::setw(14) << "bias(median)\n";
      for (const auto& row : r.rows) {
        csv << "\"" << row.name << "\"," << row.truth << "," << row.coverage << "," << row.bias_mean << "," << row.bias_median << "\n";
        j["rows"].push_back({{"parameter", row.name}, {"truth", row.truth}, {"coverage", row.coverage}, {"bias_mean", row.bias_mean},
                             {"bias_median", row.bias_median}});
        text << std::left << std::setw(14) << row.name << std::right << std::fixed << std::setprecision(2) << std::setw(8) << row.truth
             << std::setw(10) << row.coverage << std::setprecision(3) << std::setw(12) << row.bias_mean << std::setw(13)
             << row.bias_median << "\n";
      }
      detail::write_text(dir / "recovery.csv", csv.str(), man);
      detail::write_text(dir / "recovery.json", j.dump(2) + "\n", man);
      out << text.str() << r.used << " of " << r.replications << " replications used\n";
      for (const auto& f : r.failures) err << "diagnostic failure: " << f << "\n";
      code = r.failures.empty() ? kSuccess : kDiagnosticFailure;
      man.write(dir, code);
    };
  });

  // sensitivity
  auto* sen_cmd = app.add_subcommand("sensitivity", "posterior summaries of one continuous model under several psi priors");
  std::string sen_data, sen_model, sen_out = "bsem-sensitivity";
  std::vector<std::string> sen_priors;
  SamplerFlags sen_flags;
  sen_flags.chains = 2;
  sen_cmd->add_option("--data", sen_data, "CSV file with a header row")->required();
  sen_cmd->add_option("--model", sen_model, "continuous model config (JSON) or preset:NAME")->required();
  sen_cmd->add_option("--prior", sen_priors,
                      "psi prior as kind[:a[,b]], e.g. heywood_guard:2.5, inv_gamma:0.1,0.1, half_cauchy:5, uniform:10 "
                      "(default: those four)")
      ->delimiter(';');
  sen_cmd->add_option("--out", sen_out, "output directory")->capture_default_str();
  sen_flags.add(*sen_cmd);
  sen_cmd->callback([&] {
    action = [&] {
      io::RunManifest man("sensitivity", args, sen_flags.seed);
      const auto model = detail::load_model(sen_model, man);
      const auto data = detail::load_data(sen_data, model.items, man);
      std::vector<sim::PriorChoice> priors;
      if (sen_priors.empty()) priors = sim::sensitivity_priors();
      for (const auto& s : sen_priors) priors.push_back(detail::parse_prior_flag(s));
      const auto t = sim::sensitivity(model, data, priors, sen_flags.config());
      const fs::path dir(sen_out);
      detail::ensure_dir(dir);
      std::ostringstream csv;
      csv << "parameter";
      for (const auto& p : t.priors) csv << ",\"mean " << p << "\",\"sd " << p << "\"";
      csv << "\n" << std::setprecision(10);
      nlohmann::json j;
      j["priors"] = t.priors;
      j["failures"] = t.failures;
      j["rows"] = nlohmann::json::array();
      std::ostringstream text;
      text << std::left << std::setw(16) << "parameter";
      for (std::size_t q = 0; q < t.priors.size(); ++q) text << std::right << std::setw(12) << ("prior " + std::to_string(q + 1));
      text << "\n";
      for (std::size_t r = 0; r < t.parameters.size(); ++r) {
        const auto ri = static_cast<Eigen::Index>(r);
        csv << "\"" << t.parameters[r] << "\"";
        nlohmann::json row{{"parameter", t.parameters[r]}, {"mean", nlohmann::json::array()}, {"sd", nlohmann::json::array()}};
        text << std::left << std::setw(16) << t.parameters[r] << std::right << std::fixed << std::setprecision(3);
        for (Eigen::Index q = 0; q < t.mean.cols(); ++q) {
          csv << "," << t.mean(ri, q) << "," << t.sd(ri, q);
          row["mean"].push_back(t.mean(ri, q));
          row["sd"].push_back(t.sd(ri, q));
          text << std::setw(12) << t.mean(ri, q);
        }
        text.unsetf(std::ios::fixed);
        csv << "\n";
        text << "\n";
        j["rows"].push_back(row);
      }
      j["max_mean_gap_loadings"] = t.max_mean_gap("Lambda");
      for (std::size_t q = 0; q < t.priors.size(); ++q) text << "prior " << (q + 1) << ": " << t.priors[q] << "\n";
      text << "largest gap in loading posterior means across priors: " << std::setprecision(3) << t.max_mean_gap("Lambda") << "\n";
      detail::write_text(dir / "sensitivity.csv", csv.str(), man);
      detail::write_text(dir / "sensitivity.json", j.dump(2) + "\n", man);
      out << text.str();
      for (const auto& f : t.failures) err << "diagnostic failure: " << f << "\n";
      code = t.failures.empty() ? kSuccess : kDiagnosticFailure;
      man.write(dir, code);
    };
  });

  // presets
  auto* pre_cmd = app.add_subcommand("presets", "list the built-in model presets or write them as config files");
  std::string pre_out;
  bool pre_list = false;
  pre_cmd->add_flag("--list", pre_list, "print preset names");
  pre_cmd->add_option("--out", pre_out, "write every preset as NAME.json into this directory");
  pre_cmd->callback([&] {
    action = [&] {
      if (pre_out.empty() || pre_list) {
        for (const auto& n : detail::preset_names()) out << n << "\n";
      }
      if (!pre_out.empty()) {
        const fs::path dir(pre_out);
        detail::ensure_dir(dir);
        for (const auto& n : detail::preset_names()) {
          auto m = detail::preset_model(n);
          std::ofstream f(dir / (n + ".json"));
          if (!f) throw InputError("cannot write into '" + dir.string() + "'");
          f << io::model_to_json(m).dump(2) << "\n";
        }
      }
    };
  });

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  try {
    if (action) action();
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kDiagnosticFailure;
  }
  return code;
}

inline int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr); }

}  // namespace bsem::cli
