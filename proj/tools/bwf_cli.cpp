// bwf: command-line driver for the Bayesian workflow stages.
//
// Every subcommand reads its inputs from files, writes its outputs into
// --out, and records a manifest-<subcommand>.json there.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bwf/data_pipeline.hpp"
#include "bwf/draws.hpp"
#include "bwf/error.hpp"
#include "bwf/manifest.hpp"
#include "bwf/models.hpp"
#include "bwf/plots.hpp"
#include "bwf/ppc.hpp"
#include "bwf/prior_pred.hpp"
#include "bwf/psis.hpp"
#include "bwf/sampler.hpp"
#include "bwf/stats.hpp"

namespace fs = std::filesystem;
using namespace bwf;

namespace {

struct OptionDef {
  std::string key;
  std::string fallback;  // empty: no default
  std::string help;
};

// Resolved settings: command-line flag, else config file, else default.
class Settings {
 public:
  Settings(std::string sub, std::vector<OptionDef> defs) : sub_(std::move(sub)), defs_(std::move(defs)) {}

  void attach(CLI::App* app) {
    app->add_option("--config", config_path_, "key=value configuration file");
    app->add_option("--out", flags_["out"], "output directory")->default_str("bwf_out");
    for (const auto& d : defs_) {
      auto* opt = app->add_option("--" + d.key, flags_[d.key], d.help);
      if (!d.fallback.empty()) opt->default_str(d.fallback);
    }
    app_ = app;
  }

  void resolve() {
    std::map<std::string, std::string> file;
    if (!config_path_.empty()) {
      file = read_config(config_path_);
      inputs_.push_back(config_path_);
    }
    auto known = [&](const std::string& k) {
      return k == "out" || std::any_of(defs_.begin(), defs_.end(), [&](const OptionDef& d) { return d.key == k; });
    };
    for (const auto& [k, v] : file) {
      if (!known(k)) throw ValidationError(config_path_ + ": unknown key '" + k + "' for " + sub_);
    }
    auto pick = [&](const std::string& key, const std::string& fallback) {
      if (app_->count("--" + key) > 0) return flags_[key];
      if (auto it = file.find(key); it != file.end()) return it->second;
      return fallback;
    };
    out_ = pick("out", "bwf_out");
    for (const auto& d : defs_) values_.emplace_back(d.key, pick(d.key, d.fallback));
  }

  const std::string& get(const std::string& key) const {
    for (const auto& [k, v] : values_) {
      if (k == key) return v;
    }
    throw std::logic_error("undeclared option " + key);
  }

  const std::string& require(const std::string& key) const {
    const auto& v = get(key);
    if (v.empty()) throw ValidationError(sub_ + ": --" + key + " is required");
    return v;
  }

  long long integer(const std::string& key, long long lo, long long hi) const {
    const auto& text = require(key);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || v < lo || v > hi) {
      throw ValidationError("--" + key + " must be an integer in [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "], got '" + text + "'");
    }
    return v;
  }

  std::uint64_t seed() const {
    const auto& text = require("seed");
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw ValidationError("--seed must be a non-negative integer, got '" + text + "'");
    }
    return v;
  }

  double real(const std::string& key) const {
    const auto& text = require(key);
    double v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || std::isnan(v)) {
      throw ValidationError("--" + key + " must be a number, got '" + text + "'");
    }
    return v;
  }

  bool boolean(const std::string& key) const {
    const auto& v = require(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("--" + key + " must be true or false, got '" + v + "'");
  }

  const fs::path& out() const { return out_; }
  const std::vector<std::pair<std::string, std::string>>& values() const { return values_; }
  const std::vector<std::string>& config_inputs() const { return inputs_; }

 private:
  static std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty() || line.front() == '[') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ValidationError(path + ":" + std::to_string(line_no) + ": expected key = value");
      }
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
        value = value.substr(1, value.size() - 2);
      }
      std::replace(key.begin(), key.end(), '_', '-');
      kv[key] = value;
    }
    return kv;
  }

  std::string sub_;
  std::vector<OptionDef> defs_;
  std::map<std::string, std::string> flags_;
  std::string config_path_;
  CLI::App* app_ = nullptr;
  fs::path out_;
  std::vector<std::pair<std::string, std::string>> values_;
  std::vector<std::string> inputs_;
};

// Collects outputs and writes the manifest at the end of a run.
class Run {
 public:
  Run(const std::string& sub, const Settings& s) : s_(s) {
    manifest_.subcommand = sub;
    manifest_.config = s.values();
    for (const auto& p : s.config_inputs()) manifest_.add_input(p);
    fs::create_directories(s.out());
  }

  void seed(std::uint64_t v) { manifest_.seed = v; }
  void input(const fs::path& p) { manifest_.add_input(p); }

  fs::path path(const std::string& name) const { return s_.out() / name; }

  void wrote(const std::string& name) { manifest_.add_output(path(name), name); }

  void text(const std::string& name, const std::string& body) {
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw IoError("cannot write " + path(name).string());
    out << body;
    out.close();
    wrote(name);
  }

  void plot(const PlotData& pd, const std::string& stem) {
    for (const auto& f : formats_) {
      const std::string name = stem + "." + f;
      emit_plot(pd, parse_plot_format(f), path(name));
      wrote(name);
    }
  }

  void formats(const std::string& list) {
    formats_.clear();
    std::stringstream ss(list);
    std::string f;
    while (std::getline(ss, f, ',')) {
      parse_plot_format(f);
      formats_.push_back(f);
    }
  }

  void finish() {
    const std::string name = "manifest-" + manifest_.subcommand + ".json";
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw IoError("cannot write " + path(name).string());
    out << manifest_.to_json();
  }

 private:
  const Settings& s_;
  Manifest manifest_;
  std::vector<std::string> formats_{"svg", "csv"};
};

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

ModelSpec model_from(const Settings& s) {
  ModelSpec model = ModelSpec::make(parse_model_kind(s.require("model")));
  const auto& priors = s.get("priors");
  if (!priors.empty() && model.is_regression()) model.priors = PriorConfig::named(priors);
  return model;
}

Dataset data_for(const ModelSpec& model, const Settings& s, Run& run) {
  const auto& path = s.get("data");
  if (model.is_eight_schools()) {
    if (path.empty()) return eight_schools_dataset();
    run.input(path);
    return load_eight_schools(path);
  }
  if (path.empty()) throw ValidationError("--data is required for the " + to_string(model.kind) + " model");
  run.input(path);
  const auto column = model.kind == ModelKind::HierCluster ? GroupColumn::Cluster : GroupColumn::Who;
  return load_csv(path, column);
}

Draws draws_for(const Settings& s, Run& run) {
  const fs::path path = s.require("draws");
  run.input(path);
  if (path.extension() == ".jsonl") return read_draws_jsonl(path);
  return read_draws_csv(path);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> group_labels(const Dataset& data) {
  std::vector<std::string> labels;
  for (int g : data.group) labels.push_back(data.group_names[static_cast<std::size_t>(g)]);
  return labels;
}

// ---- subcommands -------------------------------------------------------------

void cmd_simulate(const Settings& s) {
  Run run("simulate-data", s);
  const auto& design = s.require("design");
  SynthConfig cfg;
  if (design == "grouped") {
    cfg = grouped_synth_config(s.get("seed").empty() ? 7 : s.seed());
  } else if (design != "default") {
    throw ValidationError("--design must be default or grouped");
  }
  if (!s.get("seed").empty()) cfg.seed = s.seed();
  run.seed(cfg.seed);
  const auto result = synth_generate(cfg);
  write_csv(run.path("data.csv"), result.table);
  run.wrote("data.csv");
  run.text("truth.json", truth_to_json(result.truth, cfg));
  const auto ols = ols_fit(result.table.x, result.table.y);
  nlohmann::ordered_json eda;
  eda["n"] = result.table.size();
  eda["ols_intercept"] = ols.intercept;
  eda["ols_slope"] = ols.slope;
  eda["ols_r_squared"] = ols.r_squared;
  run.text("eda.json", eda.dump(2) + "\n");
  run.finish();
}

void cmd_prior_predictive(const Settings& s) {
  Run run("prior-predictive", s);
  run.formats(s.require("formats"));
  ModelSpec model = model_from(s);
  const Dataset templ = data_for(model, s, run);
  const auto seed = s.seed();
  run.seed(seed);
  RngStream rng(seed);
  const int n = static_cast<int>(s.integer("n-datasets", 1, 1000000));
  const auto book = prior_flipbook(model, templ, n, rng);
  const auto summary = prior_tail_summary(book);
  run.text("flipbook.json", flipbook_to_json(book));
  run.text("prior_summary.json", summary_to_json(summary));
  const auto pages = std::min<long long>(s.integer("pages", 0, 100000), n);
  for (long long p = 0; p < pages; ++p) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "flipbook_page_%03lld", p);
    run.plot(flipbook_page_data(book, templ, static_cast<std::size_t>(p)), stem);
  }
  run.finish();
}

void cmd_fit(const Settings& s) {
  Run run("fit", s);
  ModelSpec model = model_from(s);
  const Dataset data = data_for(model, s, run);
  SamplerConfig cfg;
  cfg.seed = s.seed();
  cfg.n_chains = static_cast<int>(s.integer("chains", 1, 64));
  cfg.n_keep = static_cast<int>(s.integer("iter", 1, 10000000));
  cfg.n_warmup = s.get("warmup").empty() ? cfg.n_keep : static_cast<int>(s.integer("warmup", 0, 10000000));
  cfg.target_accept = s.real("target-accept");
  cfg.max_leapfrog = static_cast<int>(s.integer("max-leapfrog", 1, 1 << 20));
  cfg.divergence_threshold = s.real("divergence-threshold");
  cfg.validate();
  run.seed(cfg.seed);
  const auto fit = run_chains(model, data, cfg);
  write_draws_csv(run.path("draws.csv"), fit.draws);
  run.wrote("draws.csv");
  write_draws_jsonl(run.path("draws.jsonl"), fit.draws);
  run.wrote("draws.jsonl");

  std::ostringstream tr;
  tr << "chain,iteration,divergent,energy,energy_error,n_leapfrog,accept_stat\n";
  const auto& d = fit.draws;
  for (std::size_t i = 0; i < d.size(); ++i) {
    tr << d.chain[i] << ',' << d.iteration[i] << ',' << (d.divergent[i] ? 1 : 0) << ','
       << fmt(d.energy[i]) << ',' << fmt(fit.max_energy_error[i]) << ',' << fit.n_leapfrog[i] << ','
       << fmt(d.accept_stat[i]) << '\n';
  }
  run.text("transitions.csv", tr.str());

  nlohmann::ordered_json j;
  j["model"] = to_string(model.kind);
  j["priors"] = {{"label", model.priors.label},
                 {"beta0", model.priors.beta0.describe()},
                 {"beta1", model.priors.beta1.describe()},
                 {"tau", model.priors.tau.describe()},
                 {"sigma", model.priors.sigma.describe()}};
  j["n_observations"] = data.size();
  j["n_groups"] = data.n_groups();
  j["group_names"] = data.group_names;
  j["chains"] = cfg.n_chains;
  j["warmup"] = cfg.n_warmup;
  j["iter"] = cfg.n_keep;
  j["divergent"] = d.divergent_count();
  auto chains = nlohmann::ordered_json::array();
  for (const auto& a : fit.adaptation) {
    chains.push_back({{"step_size", a.step_size},
                      {"max_leapfrog_steps", a.max_steps},
                      {"warmup_divergences", a.warmup_divergences},
                      {"inv_mass", a.inv_mass}});
  }
  j["adaptation"] = std::move(chains);
  run.text("fit.json", j.dump(2) + "\n");
  run.finish();
}

void cmd_diagnose(const Settings& s) {
  Run run("diagnose", s);
  run.formats(s.require("formats"));
  const Draws draws = draws_for(s, run);

  std::ostringstream rh;
  rh << "param,rhat,note\n";
  double max_rhat = 0.0;
  for (const auto& name : draws.names) {
    const auto r = split_rhat(draws, name);
    rh << name << ',' << fmt(r.value) << ',' << r.note.value_or("") << '\n';
    if (std::isfinite(r.value)) max_rhat = std::max(max_rhat, r.value);
  }
  run.text("rhat.csv", rh.str());

  // Funnel-revealing defaults: a group-level quantity against a log scale.
  std::string px = s.get("x"), py = s.get("y");
  std::vector<std::string> axes = split_list(s.get("parcoord"));
  auto pick_indexed = [&](const char* base) {
    std::vector<std::string> out;
    for (std::size_t j = 1; draws.has(std::string(base) + "[" + std::to_string(j) + "]"); ++j) {
      out.push_back(std::string(base) + "[" + std::to_string(j) + "]");
    }
    return out;
  };
  if (draws.has("tau")) {
    if (px.empty()) px = "theta[1]";
    if (py.empty()) py = "log(tau)";
    if (axes.empty()) axes = pick_indexed("theta");
  } else if (draws.has("tau1")) {
    if (px.empty()) px = "b1[1]";
    if (py.empty()) py = "log(tau1)";
    if (axes.empty()) axes = pick_indexed("b1");
  } else {
    if (px.empty()) px = "beta1";
    if (py.empty()) py = "log(sigma)";
    if (axes.empty()) axes = {"beta0", "beta1", "sigma"};
  }
  run.plot(divergence_scatter_data(draws, px, py), "divergence_scatter");
  if (axes.size() >= 2) run.plot(parcoord_data(draws, axes, s.boolean("standardize")), "parcoord");

  nlohmann::ordered_json j;
  j["n_draws"] = draws.size();
  j["n_chains"] = draws.n_chains();
  j["divergent"] = draws.divergent_count();
  j["divergent_fraction"] = static_cast<double>(draws.divergent_count()) / static_cast<double>(draws.size());
  j["max_rhat"] = max_rhat;
  j["rhat_below_1_01"] = max_rhat < 1.01;
  run.text("diagnose.json", j.dump(2) + "\n");
  run.finish();
}

void cmd_ppc(const Settings& s) {
  Run run("ppc", s);
  run.formats(s.require("formats"));
  ModelSpec model = model_from(s);
  const Dataset data = data_for(model, s, run);
  const Draws draws = draws_for(s, run);
  const auto seed = s.seed();
  run.seed(seed);
  RngStream rng(seed);
  const Matrix yrep = simulate_replicates(model, data, draws, rng);
  const int n_curves = static_cast<int>(std::min<long long>(s.integer("curves", 0, 100000),
                                                            static_cast<long long>(yrep.rows())));
  run.plot(density_overlay_data(ppc_density_overlay(data.y, yrep, n_curves)), "ppc_density");

  std::ostringstream checks;
  checks << "stat,group,observed,p_upper,p_lower\n";
  nlohmann::ordered_json notes = nlohmann::ordered_json::array();
  const Grouping grouping{data.group, data.group_names};
  for (const auto& name : split_list(s.require("stats"))) {
    const auto kind = parse_stat_kind(name);
    const auto global = ppc_stat_check(data.y, yrep, kind);
    run.plot(stat_histogram_data(global.checks.front()), "ppc_stat_" + name);
    const auto grouped = ppc_stat_check(data.y, yrep, kind, grouping);
    if (!grouped.checks.empty()) run.plot(grouped_stat_histogram_data(grouped.checks), "ppc_stat_" + name + "_grouped");
    for (const auto* res : {&global, &grouped}) {
      for (const auto& c : res->checks) {
        checks << name << ',' << c.group.value_or("") << ',' << fmt(c.observed) << ','
               << fmt(c.p_upper) << ',' << fmt(c.p_lower) << '\n';
      }
      for (const auto& note : res->notes) notes.push_back(name + ": " + note);
    }
  }
  run.text("ppc_checks.csv", checks.str());

  const auto loo = elpd_loo(pointwise_log_lik(model, data, draws));
  const auto pit = loo_pit(data.y, yrep, loo.smoothed_log_weights);
  std::ostringstream pit_csv;
  pit_csv << "index,pit\n";
  for (std::size_t i = 0; i < pit.size(); ++i) pit_csv << i << ',' << fmt(pit[i]) << '\n';
  run.text("loo_pit.csv", pit_csv.str());
  RngStream ref_rng = rng.derive(1);
  const auto reference = uniform_reference_curves(pit.size(), 100, ref_rng);
  run.plot(pit_overlay_data(kde(pit, 256, CurveRole::Observed), reference), "pit_overlay");

  nlohmann::ordered_json j;
  const double ks = ks_uniform_distance(pit);
  j["ks_distance"] = ks;
  j["ks_critical_1pct"] = ks_critical_1pct(pit.size());
  j["pit_uniform_at_1pct"] = ks < ks_critical_1pct(pit.size());
  j["notes"] = std::move(notes);
  run.text("ppc_summary.json", j.dump(2) + "\n");
  run.finish();
}

void cmd_loo(const Settings& s) {
  Run run("loo", s);
  run.formats(s.require("formats"));
  ModelSpec model = model_from(s);
  const Dataset data = data_for(model, s, run);
  const Draws draws = draws_for(s, run);
  const auto loo = elpd_loo(pointwise_log_lik(model, data, draws));
  write_loo_csv(run.path("loo.csv"), loo);
  run.wrote("loo.csv");
  const auto infl = loo.influence();
  std::ostringstream csv;
  csv << "index,lpd,elpd,influence,khat,band\n";
  std::map<std::string, int> bands{{"good", 0}, {"ok", 0}, {"bad", 0}, {"very bad", 0}};
  for (std::size_t i = 0; i < infl.size(); ++i) {
    const auto band = to_string(khat_band(loo.khat[i]));
    ++bands[band];
    csv << i << ',' << fmt(loo.lpd[i]) << ',' << fmt(loo.pointwise_elpd[i]) << ',' << fmt(infl[i])
        << ',' << fmt(loo.khat[i]) << ',' << band << '\n';
  }
  run.text("influence.csv", csv.str());
  run.plot(khat_scatter_data(loo), "khat");
  nlohmann::ordered_json j;
  j["model"] = to_string(model.kind);
  j["elpd_loo"] = loo.elpd_total;
  j["elpd_se"] = loo.elpd_se;
  j["khat_bands"] = {{"good", bands["good"]}, {"ok", bands["ok"]}, {"bad", bands["bad"]}, {"very bad", bands["very bad"]}};
  const auto worst = std::max_element(loo.khat.begin(), loo.khat.end());
  j["max_khat"] = fmt(*worst);
  j["max_khat_index"] = worst - loo.khat.begin();
  run.text("loo_summary.json", j.dump(2) + "\n");
  run.finish();
}

void cmd_compare(const Settings& s) {
  Run run("compare", s);
  run.formats(s.require("formats"));
  const fs::path pa = s.require("loo-a"), pb = s.require("loo-b");
  run.input(pa);
  run.input(pb);
  const auto a = read_loo_csv(pa);
  const auto b = read_loo_csv(pb);
  std::optional<std::vector<std::string>> groups;
  if (!s.get("data").empty()) {
    run.input(s.get("data"));
    const auto column = s.get("group") == "cluster" ? GroupColumn::Cluster : GroupColumn::Who;
    groups = group_labels(load_csv(s.get("data"), column));
  }
  const auto cmp = loo_compare(a, b, groups);
  write_compare_csv(run.path("compare.csv"), cmp);
  run.wrote("compare.csv");
  run.plot(elpd_diff_data(cmp), "elpd_diff");
  nlohmann::ordered_json j;
  j["elpd_a"] = a.elpd_total;
  j["elpd_b"] = b.elpd_total;
  j["diff_total"] = cmp.diff_total;
  j["diff_se"] = cmp.diff_se;
  j["b_preferred"] = cmp.diff_total > 0;
  run.text("compare.json", j.dump(2) + "\n");
  run.finish();
}

void cmd_render(const Settings& s) {
  Run run("render", s);
  const auto format = s.require("format");
  parse_plot_format(format);
  for (const auto& in : split_list(s.require("input"))) {
    run.input(in);
    const auto pd = read_plot(in);
    const std::string name = fs::path(in).stem().string() + "." + format;
    emit_plot(pd, parse_plot_format(format), run.path(name));
    run.wrote(name);
  }
  run.finish();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian workflow: simulate, fit, diagnose, check and compare models"};
  app.require_subcommand(1);

  const std::vector<OptionDef> model_opts{
      {"model", "", "pooled | hier-who | hier-cluster | 8schools-c | 8schools-nc"},
      {"priors", "weak", "vague | weak (regression models)"},
      {"data", "", "data CSV"}};
  auto with = [](std::vector<OptionDef> a, const std::vector<OptionDef>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  const OptionDef formats{"formats", "svg,csv", "plot formats to write (svg,csv,json)"};

  struct Entry {
    const char* name;
    const char* help;
    Settings settings;
    void (*fn)(const Settings&);
  };
  std::vector<Entry> entries;
  entries.push_back({"simulate-data", "generate a synthetic monitor table",
                     Settings("simulate-data", {{"design", "default", "default | grouped"},
                                                {"seed", "", "seed (design default when omitted)"}}),
                     cmd_simulate});
  entries.push_back({"prior-predictive", "simulate datasets from the prior",
                     Settings("prior-predictive",
                              with(model_opts, {{"seed", "1234", "seed"},
                                                {"n-datasets", "1000", "datasets to simulate"},
                                                {"pages", "10", "flip-book pages to plot"},
                                                formats})),
                     cmd_prior_predictive});
  entries.push_back({"fit", "run the HMC sampler",
                     Settings("fit", with(model_opts, {{"seed", "1234", "seed"},
                                                       {"chains", "4", "number of chains"},
                                                       {"iter", "1000", "kept draws per chain"},
                                                       {"warmup", "", "warmup per chain (default: iter)"},
                                                       {"target-accept", "0.8", "step size target"},
                                                       {"max-leapfrog", "1024", "cap on leapfrog steps"},
                                                       {"divergence-threshold", "1000", "energy error flagged divergent"}})),
                     cmd_fit});
  entries.push_back({"diagnose", "R-hat and divergence plots",
                     Settings("diagnose", {{"draws", "", "draws CSV or JSONL"},
                                           {"x", "", "scatter x parameter"},
                                           {"y", "", "scatter y parameter, log(name) allowed"},
                                           {"parcoord", "", "comma-separated parameters"},
                                           {"standardize", "false", "standardize parallel axes"},
                                           formats}),
                     cmd_diagnose});
  entries.push_back({"ppc", "posterior predictive checks and LOO-PIT",
                     Settings("ppc", with(model_opts, {{"draws", "", "draws CSV or JSONL"},
                                                       {"seed", "1234", "seed"},
                                                       {"curves", "100", "replicate density curves"},
                                                       {"stats", "skew,median", "test statistics"},
                                                       formats})),
                     cmd_ppc});
  entries.push_back({"loo", "PSIS-LOO and k-hat",
                     Settings("loo", with(model_opts, {{"draws", "", "draws CSV or JSONL"}, formats})),
                     cmd_loo});
  entries.push_back({"compare", "pointwise ELPD difference (b - a)",
                     Settings("compare", {{"loo-a", "", "loo.csv of model a"},
                                          {"loo-b", "", "loo.csv of model b"},
                                          {"data", "", "data CSV, for group colouring"},
                                          {"group", "who", "who | cluster"},
                                          formats}),
                     cmd_compare});
  entries.push_back({"render", "re-render plot data files",
                     Settings("render", {{"input", "", "comma-separated plot CSV/JSON files"},
                                         {"format", "svg", "svg | csv | json"}}),
                     cmd_render});

  std::vector<CLI::App*> subs;
  for (auto& e : entries) {
    auto* sub = app.add_subcommand(e.name, e.help);
    e.settings.attach(sub);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (subs[i]->parsed()) {
        entries[i].settings.resolve();
        entries[i].fn(entries[i].settings);
      }
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ComputationError& e) {
    std::cerr << "computation failed: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
