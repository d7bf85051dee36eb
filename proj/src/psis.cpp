#include "bwf/psis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "bwf/distributions.hpp"
#include "bwf/error.hpp"
#include "bwf/stats.hpp"

namespace bwf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Profile log likelihood per observation at theta (Zhang & Stephens).
double profile_lx(double theta, std::span<const double> x) {
  const double a = -theta;
  double k = 0.0;
  for (double v : x) k += std::log1p(a * v);
  k /= static_cast<double>(x.size());
  return std::log(a / k) - k - 1.0;
}

}  // namespace

GpdFit gpd_fit_tail(std::span<const double> x) {
  const std::size_t N = x.size();
  if (N < 5) {
    throw ValidationError("gpd_fit_tail: need at least 5 exceedances, got " + std::to_string(N));
  }
  for (std::size_t i = 0; i < N; ++i) {
    if (!(x[i] >= 0.0) || !std::isfinite(x[i])) {
      throw ValidationError("gpd_fit_tail: exceedances must be finite and non-negative");
    }
    if (i > 0 && x[i] < x[i - 1]) throw ValidationError("gpd_fit_tail: tail must be sorted");
  }
  if (x.front() == x.back()) return {kInf, 0.0};

  const double prior = 3.0;
  const std::size_t M = 30 + static_cast<std::size_t>(std::sqrt(static_cast<double>(N)));
  const double xstar = x[static_cast<std::size_t>(std::floor(N / 4.0 + 0.5)) - 1];
  std::vector<double> theta(M), l_theta(M);
  for (std::size_t j = 0; j < M; ++j) {
    theta[j] = 1.0 / x[N - 1] +
               (1.0 - std::sqrt(static_cast<double>(M) / (static_cast<double>(j + 1) - 0.5))) /
                   prior / xstar;
    l_theta[j] = static_cast<double>(N) * profile_lx(theta[j], x);
  }
  const double lse = stats::log_sum_exp(l_theta);
  double theta_hat = 0.0;
  for (std::size_t j = 0; j < M; ++j) theta_hat += theta[j] * std::exp(l_theta[j] - lse);

  double k = 0.0;
  for (double v : x) k += std::log1p(-theta_hat * v);
  k /= static_cast<double>(N);
  const double sigma = -k / theta_hat;
  const double n = static_cast<double>(N);
  k = (n * k + 10.0 * 0.5) / (n + 10.0);
  if (std::isnan(k)) k = kInf;
  return {k, sigma};
}

std::string to_string(PsisStatus status) {
  switch (status) {
    case PsisStatus::Smoothed: return "smoothed";
    case PsisStatus::InsufficientTail: return "insufficient-tail";
    case PsisStatus::Degenerate: return "degenerate";
  }
  return "?";
}

std::size_t psis_tail_length(std::size_t S) {
  const double s = static_cast<double>(S);
  return static_cast<std::size_t>(std::ceil(std::min(0.2 * s, 3.0 * std::sqrt(s))));
}

PsisResult psis_smooth(std::span<const double> log_ratios) {
  const std::size_t S = log_ratios.size();
  if (S == 0) throw ValidationError("psis_smooth: no log ratios");
  for (double v : log_ratios) {
    if (!std::isfinite(v)) throw ValidationError("psis_smooth: log ratios must be finite");
  }
  PsisResult out;
  const double max_lr = *std::max_element(log_ratios.begin(), log_ratios.end());
  out.log_weights.resize(S);
  for (std::size_t s = 0; s < S; ++s) out.log_weights[s] = log_ratios[s] - max_lr;
  out.khat = kInf;
  if (S < 25) {
    out.status = PsisStatus::InsufficientTail;
    return out;
  }

  auto& lw = out.log_weights;
  const std::size_t M = psis_tail_length(S);
  std::vector<std::size_t> order(S);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lw[a] < lw[b]; });
  const double cutoff = lw[order[S - M - 1]];
  const double exp_cutoff = std::exp(cutoff);
  std::vector<double> exceed(M);
  for (std::size_t m = 0; m < M; ++m) exceed[m] = std::exp(lw[order[S - M + m]]) - exp_cutoff;
  if (exceed.front() == exceed.back()) {
    out.status = PsisStatus::Degenerate;
    return out;
  }
  const GpdFit fit = gpd_fit_tail(exceed);
  out.khat = fit.khat;
  out.status = PsisStatus::Smoothed;
  if (std::isfinite(fit.khat)) {
    for (std::size_t m = 0; m < M; ++m) {
      const double p = (static_cast<double>(m) + 0.5) / static_cast<double>(M);
      const double q = gpd_inv_cdf(fit.khat, fit.sigma, exp_cutoff, p);
      lw[order[S - M + m]] = std::min(std::log(q), 0.0);
    }
  }
  const double new_max = *std::max_element(lw.begin(), lw.end());
  for (auto& v : lw) v -= new_max;
  return out;
}

KhatBand khat_band(double khat) {
  if (khat <= 0.5) return KhatBand::Good;
  if (khat <= 0.7) return KhatBand::Ok;
  if (khat <= 1.0) return KhatBand::Bad;
  return KhatBand::VeryBad;
}

std::string to_string(KhatBand band) {
  switch (band) {
    case KhatBand::Good: return "good";
    case KhatBand::Ok: return "ok";
    case KhatBand::Bad: return "bad";
    case KhatBand::VeryBad: return "very bad";
  }
  return "?";
}

std::vector<double> LooResult::influence() const {
  std::vector<double> out(pointwise_elpd.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = lpd[i] - pointwise_elpd[i];
  return out;
}

LooResult elpd_loo(const Matrix& log_lik) {
  const std::size_t S = log_lik.rows(), n = log_lik.cols();
  if (S == 0 || n == 0) throw ValidationError("elpd_loo: empty log-likelihood matrix");
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(log_lik(s, i))) {
        throw ValidationError("elpd_loo: non-finite log likelihood at draw " + std::to_string(s) +
                              ", observation " + std::to_string(i));
      }
    }
  }
  LooResult r;
  r.pointwise_elpd.resize(n);
  r.khat.resize(n);
  r.status.resize(n);
  r.lpd.resize(n);
  r.smoothed_log_weights = Matrix(S, n);
  std::vector<double> ll(S), ratio(S), tmp(S);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < S; ++s) {
      ll[s] = log_lik(s, i);
      ratio[s] = -ll[s];
    }
    const PsisResult ps = psis_smooth(ratio);
    for (std::size_t s = 0; s < S; ++s) {
      r.smoothed_log_weights(s, i) = ps.log_weights[s];
      tmp[s] = ps.log_weights[s] + ll[s];
    }
    r.pointwise_elpd[i] = stats::log_sum_exp(tmp) - stats::log_sum_exp(ps.log_weights);
    r.khat[i] = ps.khat;
    r.status[i] = ps.status;
    r.lpd[i] = stats::log_sum_exp(ll) - std::log(static_cast<double>(S));
  }
  r.elpd_total = std::accumulate(r.pointwise_elpd.begin(), r.pointwise_elpd.end(), 0.0);
  r.elpd_se = n > 1 ? std::sqrt(static_cast<double>(n) * stats::variance(r.pointwise_elpd)) : 0.0;
  return r;
}

LooComparison loo_compare(const LooResult& a, const LooResult& b,
                          const std::optional<std::vector<std::string>>& group) {
  const std::size_t n = a.pointwise_elpd.size();
  if (b.pointwise_elpd.size() != n) {
    throw ValidationError("loo_compare: results cover " + std::to_string(n) + " and " +
                          std::to_string(b.pointwise_elpd.size()) + " observations");
  }
  if (group && group->size() != n) throw ValidationError("loo_compare: group labels length differs");
  LooComparison c;
  c.pointwise_diff.resize(n);
  for (std::size_t i = 0; i < n; ++i) c.pointwise_diff[i] = b.pointwise_elpd[i] - a.pointwise_elpd[i];
  c.diff_total = std::accumulate(c.pointwise_diff.begin(), c.pointwise_diff.end(), 0.0);
  c.diff_se = n > 1 ? std::sqrt(static_cast<double>(n) * stats::variance(c.pointwise_diff)) : 0.0;
  c.group = group;
  return c;
}

void write_loo_csv(const std::filesystem::path& path, const LooResult& loo) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "index,elpd,khat\n";
  for (std::size_t i = 0; i < loo.pointwise_elpd.size(); ++i) {
    out << i << ',' << format_double(loo.pointwise_elpd[i]) << ',' << format_double(loo.khat[i])
        << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

LooResult read_loo_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || (line != "index,elpd,khat" && line != "index,elpd,khat\r")) {
    throw ValidationError(path.string() + ":1: expected header index,elpd,khat");
  }
  LooResult r;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) throw ValidationError(where + ": expected 3 fields");
    if (line.substr(0, c1) != std::to_string(r.pointwise_elpd.size())) {
      throw ValidationError(where + ": indices must run 0, 1, 2, ...");
    }
    auto number = [&](const std::string& t) {
      if (t == "inf") return kInf;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw ValidationError(where + ": malformed number '" + t + "'");
      }
      return v;
    };
    r.pointwise_elpd.push_back(number(line.substr(c1 + 1, c2 - c1 - 1)));
    r.khat.push_back(number(line.substr(c2 + 1)));
  }
  if (r.pointwise_elpd.empty()) throw ValidationError(path.string() + ": no rows");
  const std::size_t n = r.pointwise_elpd.size();
  r.elpd_total = std::accumulate(r.pointwise_elpd.begin(), r.pointwise_elpd.end(), 0.0);
  r.elpd_se = n > 1 ? std::sqrt(static_cast<double>(n) * stats::variance(r.pointwise_elpd)) : 0.0;
  return r;
}

void write_compare_csv(const std::filesystem::path& path, const LooComparison& cmp) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "index,elpd_diff,group\n";
  for (std::size_t i = 0; i < cmp.pointwise_diff.size(); ++i) {
    out << i << ',' << format_double(cmp.pointwise_diff[i]) << ','
        << (cmp.group ? (*cmp.group)[i] : std::string()) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace bwf
