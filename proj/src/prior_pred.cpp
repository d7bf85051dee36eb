#include "bwf/prior_pred.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "bwf/distributions.hpp"
#include "bwf/error.hpp"
#include "bwf/stats.hpp"

namespace bwf {

namespace {

std::string indexed(const char* base, std::size_t j) {
  return std::string(base) + "[" + std::to_string(j + 1) + "]";
}

double draw_tau(const PriorConfig& priors, RngStream& rng) {
  const double t = sample(priors.tau, rng);
  return priors.tau_on_variance() ? std::sqrt(t) : t;
}

}  // namespace

FlipBook prior_flipbook(const ModelSpec& model, const Dataset& templ, int n_datasets,
                        RngStream& rng) {
  if (n_datasets < 1) throw ValidationError("prior_flipbook: n_datasets must be at least 1");
  const auto& pr = model.priors;
  validate_sampling(pr.beta0);
  validate_sampling(pr.tau);
  if (model.is_regression()) {
    validate_sampling(pr.beta1);
    validate_sampling(pr.sigma);
  }
  model.check_data(templ, true);

  const std::size_t n = templ.size();
  const std::size_t J = templ.n_groups();
  FlipBook book;
  book.prior_label = pr.label;
  book.datasets.reserve(static_cast<std::size_t>(n_datasets));
  book.per_dataset_params.reserve(static_cast<std::size_t>(n_datasets));

  for (int d = 0; d < n_datasets; ++d) {
    NamedValues params;
    std::vector<double> y(n);
    if (model.is_eight_schools()) {
      const double mu = sample(pr.beta0, rng);
      const double tau = draw_tau(pr, rng);
      params.set("mu", mu);
      params.set("tau", tau);
      std::vector<double> theta(J);
      for (std::size_t j = 0; j < J; ++j) {
        theta[j] = mu + tau * rng.normal();
        params.set(indexed("theta", j), theta[j]);
      }
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = theta[static_cast<std::size_t>(templ.group[i])] + templ.x[i] * rng.normal();
      }
    } else {
      const double beta0 = sample(pr.beta0, rng);
      const double beta1 = sample(pr.beta1, rng);
      const double sigma = sample(pr.sigma, rng);
      params.set("beta0", beta0);
      params.set("beta1", beta1);
      params.set("sigma", sigma);
      std::vector<double> b0(J, 0.0), b1(J, 0.0);
      if (model.is_hierarchical_regression()) {
        const double tau0 = draw_tau(pr, rng);
        const double tau1 = draw_tau(pr, rng);
        params.set("tau0", tau0);
        params.set("tau1", tau1);
        for (std::size_t j = 0; j < J; ++j) b0[j] = tau0 * rng.normal();
        for (std::size_t j = 0; j < J; ++j) b1[j] = tau1 * rng.normal();
        for (std::size_t j = 0; j < J; ++j) params.set(indexed("b0", j), b0[j]);
        for (std::size_t j = 0; j < J; ++j) params.set(indexed("b1", j), b1[j]);
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto g = static_cast<std::size_t>(templ.group[i]);
        const double mean = beta0 + b0[g] + (beta1 + b1[g]) * templ.x[i];
        // sigma == 0 must reproduce the mean exactly, so no 0 * normal().
        y[i] = sigma > 0.0 ? mean + sigma * rng.normal() : mean;
      }
    }
    book.datasets.push_back(std::move(y));
    book.per_dataset_params.push_back(std::move(params));
  }
  return book;
}

PriorTailSummary prior_tail_summary(const FlipBook& book, double log_threshold) {
  if (book.datasets.empty()) throw ValidationError("prior_tail_summary: empty flip book");
  PriorTailSummary s;
  s.threshold = log_threshold;
  for (const auto& y : book.datasets) {
    if (y.empty()) throw ValidationError("prior_tail_summary: empty dataset in flip book");
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    s.min.push_back(*lo);
    s.max.push_back(*hi);
    s.max_abs.push_back(std::max(std::abs(*lo), std::abs(*hi)));
    s.sd.push_back(y.size() > 1 ? stats::sd(y) : 0.0);
    const auto over = static_cast<std::size_t>(
        std::count_if(y.begin(), y.end(), [&](double v) { return v > log_threshold; }));
    s.points_exceeding += over;
    if (over > 0) ++s.datasets_exceeding;
  }
  s.max_abs_q05 = stats::quantile(s.max_abs, 0.05);
  s.max_abs_q50 = stats::quantile(s.max_abs, 0.50);
  s.max_abs_q95 = stats::quantile(s.max_abs, 0.95);
  return s;
}

PriorTailSummary prior_tail_summary(const FlipBook& book) {
  return prior_tail_summary(book, std::log(22000.0));
}

std::string flipbook_to_json(const FlipBook& book) {
  nlohmann::ordered_json j;
  j["prior_label"] = book.prior_label;
  auto pages = nlohmann::ordered_json::array();
  for (std::size_t d = 0; d < book.datasets.size(); ++d) {
    nlohmann::ordered_json page;
    page["page"] = d;
    nlohmann::ordered_json params;
    const auto& pv = book.per_dataset_params[d];
    for (std::size_t k = 0; k < pv.names.size(); ++k) params[pv.names[k]] = pv.values[k];
    page["params"] = std::move(params);
    page["y"] = book.datasets[d];
    pages.push_back(std::move(page));
  }
  j["datasets"] = std::move(pages);
  return j.dump(1);
}

std::string summary_to_json(const PriorTailSummary& s) {
  nlohmann::ordered_json j;
  j["n_datasets"] = s.max_abs.size();
  j["max_abs_quantiles"] = {{"q05", s.max_abs_q05}, {"q50", s.max_abs_q50}, {"q95", s.max_abs_q95}};
  j["threshold_log"] = s.threshold;
  j["threshold_natural"] = std::exp(s.threshold);
  j["datasets_exceeding"] = s.datasets_exceeding;
  j["points_exceeding"] = s.points_exceeding;
  j["max_abs"] = s.max_abs;
  j["min"] = s.min;
  j["max"] = s.max;
  j["sd"] = s.sd;
  return j.dump(1);
}

}  // namespace bwf
