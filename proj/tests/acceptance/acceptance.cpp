// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Usage: bwf_acceptance <path to bwf binary> <scratch directory> [1,2,...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "bwf/data_pipeline.hpp"
#include "bwf/models.hpp"
#include "bwf/ppc.hpp"
#include "bwf/prior_pred.hpp"
#include "bwf/psis.hpp"
#include "bwf/sampler.hpp"

using namespace bwf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double normal_logpdf(double x, double mu, double sd) {
  const double z = (x - mu) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2 * std::numbers::pi);
}

Dataset default_data() { return to_dataset(synth_generate(SynthConfig{}).table, GroupColumn::Who); }

Dataset grouped_data(std::uint64_t seed) {
  return to_dataset(synth_generate(grouped_synth_config(seed)).table, GroupColumn::Who);
}

// ---------------------------------------------------------------------------

Outcome gradients() {
  const Dataset regression = default_data();
  const Dataset schools = eight_schools_dataset();
  RngStream rng(101);
  double worst = 0.0;
  const ModelKind kinds[] = {ModelKind::Pooled, ModelKind::HierWho, ModelKind::HierCluster,
                             ModelKind::EightSchoolsCentered, ModelKind::EightSchoolsNonCentered};
  for (ModelKind kind : kinds) {
    const ModelSpec m = ModelSpec::make(kind);
    Dataset d = m.is_eight_schools() ? schools : regression;
    if (kind == ModelKind::HierCluster) {
      d = to_dataset(synth_generate(SynthConfig{}).table, GroupColumn::Cluster);
    }
    const std::size_t dim = m.dimension(d.n_groups());
    std::vector<double> g(dim), scratch(dim);
    for (int point = 0; point < 100; ++point) {
      std::vector<double> u(dim);
      for (auto& v : u) v = 4.0 * rng.uniform() - 2.0;
      log_posterior_grad_raw(m, d, u, g);
      for (std::size_t k = 0; k < dim; ++k) {
        // five-point central stencil
        const double h = 1e-3 * std::max(1.0, std::abs(u[k]));
        auto at = [&](double step) {
          auto v = u;
          v[k] += step;
          return log_posterior_grad_raw(m, d, v, scratch);
        };
        const double fd = (at(-2 * h) - 8 * at(-h) + 8 * at(h) - at(2 * h)) / (12 * h);
        worst = std::max(worst, std::abs(fd - g[k]) / std::max(1.0, std::abs(g[k])));
      }
    }
  }
  return {worst < 1e-6, format("max relative error %.2e over 5 kinds x 100 points", worst)};
}

Outcome gaussian_sanity() {
  SamplerConfig c;
  auto fit = run_chains(GaussianTarget::standard(50), c);
  double worst_mean = 0.0, worst_sd = 0.0, worst_rhat = 0.0;
  for (const auto& name : fit.draws.names) {
    const auto v = fit.draws.column(name);
    worst_mean = std::max(worst_mean, std::abs(mean_of(v)));
    worst_sd = std::max(worst_sd, std::abs(sd_of(v) - 1.0));
    worst_rhat = std::max(worst_rhat, split_rhat(fit.draws, name).value);
  }
  const auto div = fit.draws.divergent_count();
  return {worst_mean < 0.1 && worst_sd <= 0.1 && worst_rhat < 1.01 && div == 0,
          format("max |mean| %.3f, max |sd-1| %.3f, max R-hat %.4f, divergences %zu", worst_mean,
                 worst_sd, worst_rhat, div)};
}

Outcome funnel() {
  const Dataset d = eight_schools_dataset();
  SamplerConfig c;
  auto cen = run_chains(ModelSpec::make(ModelKind::EightSchoolsCentered), d, c);
  auto nc = run_chains(ModelSpec::make(ModelKind::EightSchoolsNonCentered), d, c);

  const auto lt = cen.draws.column("log(tau)");
  double div_sum = 0.0;
  std::size_t nd = 0;
  for (std::size_t s = 0; s < lt.size(); ++s) {
    if (cen.draws.divergent[s]) {
      div_sum += lt[s];
      ++nd;
    }
  }
  const double cen_frac = static_cast<double>(nd) / static_cast<double>(lt.size());
  const double gap = nd > 0 ? mean_of(lt) - div_sum / static_cast<double>(nd) : 0.0;
  const double nc_frac =
      static_cast<double>(nc.draws.divergent_count()) / static_cast<double>(nc.draws.size());
  double nc_rhat = 0.0;
  for (const auto& name : nc.draws.names) nc_rhat = std::max(nc_rhat, split_rhat(nc.draws, name).value);
  return {cen_frac >= 0.01 && gap >= 1.0 && nc_frac <= 0.001 && nc_rhat < 1.01,
          format("centered: %.2f%% divergent, divergent log(tau) %.3f below mean; "
                 "non-centered: %.3f%% divergent, max R-hat %.4f",
                 100 * cen_frac, gap, 100 * nc_frac, nc_rhat)};
}

Outcome psis_vs_exact() {
  const std::size_t n = 20, S = 4000;
  RngStream rng(2024);
  std::vector<double> y(n);
  for (auto& v : y) v = rng.normal();
  double sum = 0.0;
  for (double v : y) sum += v;
  // y_i ~ N(mu, 1), flat prior: mu | y ~ N(ybar, 1/n) drawn exactly
  Matrix ll(S, n);
  for (std::size_t s = 0; s < S; ++s) {
    const double mu = sum / n + rng.normal() / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) ll(s, i) = normal_logpdf(y[i], mu, 1.0);
  }
  const auto loo = elpd_loo(ll);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = (sum - y[i]) / static_cast<double>(n - 1);
    const double exact = normal_logpdf(y[i], m, std::sqrt(1.0 + 1.0 / static_cast<double>(n - 1)));
    worst = std::max(worst, std::abs(loo.pointwise_elpd[i] - exact));
  }
  return {worst <= 0.05, format("max pointwise |elpd_psis - elpd_exact| = %.4f", worst)};
}

Outcome gpd_recovery() {
  bool ok = true;
  std::string detail;
  for (double k : {0.0, 0.2, 0.5, 0.7, 1.0}) {
    double err = 0.0;
    for (int seed = 0; seed < 50; ++seed) {
      RngStream rng(static_cast<std::uint64_t>(seed), 77);
      std::vector<double> x(2000);
      for (auto& v : x) {
        const double u = rng.uniform();
        v = k == 0.0 ? -std::log1p(-u) : (std::pow(1.0 - u, -k) - 1.0) / k;
      }
      std::sort(x.begin(), x.end());
      err += std::abs(gpd_fit_tail(x).khat - k);
    }
    err /= 50.0;
    ok = ok && err <= 0.05;
    detail += format("k=%.1f: %.4f  ", k, err);
  }
  return {ok, "mean |khat - k|: " + detail};
}

Outcome influence() {
  // default synthetic data plus a small region sitting about seven pooled
  // residual sds above the line; the planted point is its member with the
  // largest pooled residual
  auto table = synth_generate(SynthConfig{}).table;
  const auto base = ols_fit(table.x, table.y);
  const std::size_t n0 = table.size();
  RngStream noise(606);
  const double xs[] = {1.6, 1.95, 2.2, 2.5, 2.7, 3.1, 3.4, 3.6};
  for (int i = 0; i < 8; ++i) {
    table.monitor_id.push_back("planted_" + std::to_string(i));
    table.x.push_back(xs[i]);
    table.y.push_back(base.intercept + base.slope * xs[i] + 4.5 + 0.45 * noise.normal());
    table.region_who.push_back("planted_region");
    table.region_cluster.push_back("planted_region");
    table.country.push_back("Planted");
  }
  const Dataset d = to_dataset(table, GroupColumn::Who);
  std::size_t planted = n0;
  for (std::size_t i = n0; i < d.size(); ++i) {
    const auto resid = [&](std::size_t j) { return d.y[j] - base.intercept - base.slope * d.x[j]; };
    if (resid(i) > resid(planted)) planted = i;
  }

  SamplerConfig c;
  const ModelSpec pooled = ModelSpec::make(ModelKind::Pooled);
  const ModelSpec hier = ModelSpec::make(ModelKind::HierWho);
  const auto lp = elpd_loo(pointwise_log_lik(pooled, d, run_chains(pooled, d, c).draws));
  const auto lh = elpd_loo(pointwise_log_lik(hier, d, run_chains(hier, d, c).draws));
  const auto argmax = static_cast<std::size_t>(
      std::max_element(lp.khat.begin(), lp.khat.end()) - lp.khat.begin());
  const double drop = lp.khat[planted] - lh.khat[planted];
  return {argmax == planted && drop >= 0.1,
          format("pooled khat of planted point %.3f (max at index %zu, planted %zu); "
                 "hierarchical %.3f; drop %.3f",
                 lp.khat[planted], argmax, planted, lh.khat[planted], drop)};
}

// Fits shared by the calibration and comparison criteria.
struct GroupedRun {
  double ks_pooled = 0.0, ks_hier = 0.0, critical = 0.0;
  double diff_total = 0.0, diff_se = 0.0;
};

const std::vector<GroupedRun>& grouped_runs() {
  static const std::vector<GroupedRun> runs = [] {
    std::vector<GroupedRun> out;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const Dataset d = grouped_data(seed);
      SamplerConfig c;
      c.seed = 1000 + seed;
      GroupedRun r;
      r.critical = ks_critical_1pct(d.size());
      LooResult loos[2];
      const ModelKind kinds[2] = {ModelKind::Pooled, ModelKind::HierWho};
      for (int m = 0; m < 2; ++m) {
        const ModelSpec spec = ModelSpec::make(kinds[m]);
        const auto fit = run_chains(spec, d, c);
        loos[m] = elpd_loo(pointwise_log_lik(spec, d, fit.draws));
        RngStream rng(seed, 500 + static_cast<std::uint64_t>(m));
        const Matrix yrep = simulate_replicates(spec, d, fit.draws, rng);
        const double ks = ks_uniform_distance(loo_pit(d.y, yrep, loos[m].smoothed_log_weights));
        (m == 0 ? r.ks_pooled : r.ks_hier) = ks;
      }
      const auto cmp = loo_compare(loos[0], loos[1]);
      r.diff_total = cmp.diff_total;
      r.diff_se = cmp.diff_se;
      out.push_back(r);
    }
    return out;
  }();
  return runs;
}

Outcome calibration() {
  int hier_pass = 0, pooled_fail = 0;
  double worst_hier = 0.0, best_pooled = INFINITY;
  for (const auto& r : grouped_runs()) {
    hier_pass += r.ks_hier < r.critical;
    pooled_fail += r.ks_pooled >= r.critical;
    worst_hier = std::max(worst_hier, r.ks_hier);
    best_pooled = std::min(best_pooled, r.ks_pooled);
  }
  const double crit = grouped_runs().front().critical;
  return {hier_pass >= 18 && pooled_fail >= 18,
          format("hierarchical passes KS in %d/20 (max D %.3f), pooled fails in %d/20 "
                 "(min D %.3f), critical %.3f",
                 hier_pass, worst_hier, pooled_fail, best_pooled, crit)};
}

Outcome skew_ppc() {
  const Dataset d = grouped_data(1);
  SamplerConfig c;
  double tails[2] = {0.0, 0.0};
  const ModelKind kinds[2] = {ModelKind::Pooled, ModelKind::HierWho};
  for (int m = 0; m < 2; ++m) {
    const ModelSpec spec = ModelSpec::make(kinds[m]);
    const auto fit = run_chains(spec, d, c);
    RngStream rng(1, 900 + static_cast<std::uint64_t>(m));
    const Matrix yrep = simulate_replicates(spec, d, fit.draws, rng);
    tails[m] = ppc_stat_check(d.y, yrep, StatKind::Skew).checks.front().min_tail();
  }
  return {tails[0] <= 0.01 && tails[1] >= 0.05 && tails[1] <= 0.95,
          format("pooled min tail %.4f, hierarchical min tail %.4f", tails[0], tails[1])};
}

Outcome flipbook() {
  const Dataset d = default_data();
  ModelSpec weak = ModelSpec::make(ModelKind::HierWho);
  ModelSpec vague = weak;
  vague.priors = PriorConfig::vague();
  RngStream r1(1234), r2(1234);
  const auto sw = prior_tail_summary(prior_flipbook(weak, d, 1000, r1));
  const auto sv = prior_tail_summary(prior_flipbook(vague, d, 1000, r2));
  const double ratio = sv.max_abs_q50 / sw.max_abs_q50;
  return {sw.datasets_exceeding >= 1 && ratio >= 10.0,
          format("weak: %zu of 1000 datasets exceed 22000 ug/m3; median max|log y| vague %.1f vs "
                 "weak %.2f (ratio %.1f)",
                 sw.datasets_exceeding, sv.max_abs_q50, sw.max_abs_q50, ratio)};
}

Outcome eda_anchor() {
  const auto t = synth_generate(SynthConfig{}).table;
  const double r2 = ols_fit(t.x, t.y).r_squared;
  return {r2 >= 0.5 && r2 <= 0.7, format("pooled log-log OLS R^2 = %.4f", r2)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli_determinism(const fs::path& bwf, const fs::path& work) {
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string exe = bwf.string();
  const fs::path in = work / "inputs";

  // Inputs shared by both reruns, so their manifests agree.
  auto run = [&](const std::string& args) {
    const std::string cmd = "\"" + exe + "\" " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  const std::string data = (in / "data" / "data.csv").string();
  const std::string small = " --chains 2 --iter 300 --warmup 300";
  std::vector<std::pair<std::string, std::string>> steps = {
      {"simulate-data", "simulate-data"},
      {"prior-predictive", "prior-predictive --model hier-who --data " + data + " --n-datasets 200 --pages 2 --formats svg,csv,json"},
      {"fit", "fit --model hier-who --data " + data + small},
      {"diagnose", "diagnose --draws " + (in / "fit_hier" / "draws.csv").string() + " --formats svg,csv,json"},
      {"ppc", "ppc --model hier-who --data " + data + " --draws " + (in / "fit_hier" / "draws.csv").string() + " --curves 20"},
      {"loo", "loo --model hier-who --data " + data + " --draws " + (in / "fit_hier" / "draws.csv").string()},
      {"compare", "compare --loo-a " + (in / "loo_pooled" / "loo.csv").string() + " --loo-b " + (in / "loo_hier" / "loo.csv").string() + " --data " + data},
      {"render", "render --input " + (in / "fit_hier_diag" / "divergence_scatter.csv").string() + " --format svg"},
  };

  // Stage inputs once.
  const std::vector<std::string> prep = {
      "simulate-data --out " + (in / "data").string(),
      "fit --model pooled --data " + data + small + " --out " + (in / "fit_pooled").string(),
      "fit --model hier-who --data " + data + small + " --out " + (in / "fit_hier").string(),
      "diagnose --draws " + (in / "fit_hier" / "draws.csv").string() + " --formats csv --out " + (in / "fit_hier_diag").string(),
      "loo --model pooled --data " + data + " --draws " + (in / "fit_pooled" / "draws.csv").string() + " --out " + (in / "loo_pooled").string(),
      "loo --model hier-who --data " + data + " --draws " + (in / "fit_hier" / "draws.csv").string() + " --out " + (in / "loo_hier").string(),
  };
  for (const auto& p : prep) {
    if (run(p) != 0) return {false, "staging command failed: bwf " + p};
  }

  std::vector<std::string> differing;
  std::size_t compared = 0;
  for (const auto& [name, args] : steps) {
    const fs::path a = work / (name + "_a"), b = work / (name + "_b");
    if (run(args + " --out " + a.string()) != 0 || run(args + " --out " + b.string()) != 0) {
      return {false, "subcommand failed: bwf " + args};
    }
    bool any = false;
    for (const auto& entry : fs::directory_iterator(a)) {
      const fs::path other = b / entry.path().filename();
      any = true;
      ++compared;
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
        differing.push_back(name + "/" + entry.path().filename().string());
      }
    }
    std::size_t na = 0, nb = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(a)) ++na;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(b)) ++nb;
    if (!any || na != nb) differing.push_back(name + " (file set)");
  }
  std::string detail = format("8 subcommands, %zu files compared", compared);
  if (!differing.empty()) detail += "; differing: " + differing.front();
  return {differing.empty(), detail};
}

Outcome comparison_direction() {
  int positive = 0;
  double smallest = INFINITY;
  for (const auto& r : grouped_runs()) {
    positive += r.diff_total > 0;
    smallest = std::min(smallest, r.diff_total);
  }
  return {positive == 20, format("diff_total > 0 in %d/20 seeds (smallest %.1f)", positive, smallest)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: bwf_acceptance <bwf binary> <scratch dir> [criteria]\n");
    return 2;
  }
  const fs::path bwf = argv[1];
  const fs::path work = argv[2];

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradients},
      {"sampler sanity (50-d Gaussian)", gaussian_sanity},
      {"funnel regression (8 schools)", funnel},
      {"PSIS vs exact LOO", psis_vs_exact},
      {"GPD shape recovery", gpd_recovery},
      {"influence flagging", influence},
      {"LOO-PIT calibration", calibration},
      {"PPC skewness", skew_ppc},
      {"prior flip-book", flipbook},
      {"EDA anchor R^2", eda_anchor},
      {"CLI determinism", [&] { return cli_determinism(bwf, work); }},
      {"model comparison direction", comparison_direction},
  };

  // optional third argument: comma-separated criterion numbers to run
  std::vector<bool> selected(criteria.size(), argc < 4);
  if (argc >= 4) {
    std::stringstream list(argv[3]);
    for (std::string item; std::getline(list, item, ',');) {
      const auto k = static_cast<std::size_t>(std::stoul(item));
      if (k >= 1 && k <= criteria.size()) selected[k - 1] = true;
    }
  }

  int failures = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d/%d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
