#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

#include "bwf/distributions.hpp"
#include "bwf/error.hpp"
#include "bwf/psis.hpp"
#include "bwf/rng.hpp"

using namespace bwf;

namespace {

double normal_logpdf(double x, double mu, double sd) {
  const double z = (x - mu) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2 * std::numbers::pi);
}

// y_i ~ N(mu, 1) with a flat prior on mu: posterior draws are exact, and the
// leave-one-out predictive is N(mean(y_-i), 1 + 1 / (n - 1)).
struct Conjugate {
  std::vector<double> y;
  Matrix log_lik;
  double exact = 0.0;
};

Conjugate conjugate_normal(std::size_t n, std::size_t S, std::uint64_t seed) {
  RngStream rng(seed);
  Conjugate c;
  for (std::size_t i = 0; i < n; ++i) c.y.push_back(rng.normal());
  double sum = 0.0;
  for (double v : c.y) sum += v;
  const double ybar = sum / static_cast<double>(n);
  c.log_lik = Matrix(S, n);
  for (std::size_t s = 0; s < S; ++s) {
    const double mu = ybar + rng.normal() / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) c.log_lik(s, i) = normal_logpdf(c.y[i], mu, 1.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double m = (sum - c.y[i]) / static_cast<double>(n - 1);
    c.exact += normal_logpdf(c.y[i], m, std::sqrt(1.0 + 1.0 / static_cast<double>(n - 1)));
  }
  return c;
}

}  // namespace

TEST_CASE("gpd fit matches an independent Zhang-Stephens implementation") {
  std::vector<double> quad;
  for (int i = 1; i <= 20; ++i) quad.push_back(0.1 * i * i);
  auto f = gpd_fit_tail(quad);
  CHECK(f.khat == doctest::Approx(0.14713797824810115).epsilon(1e-9));
  CHECK(f.sigma == doctest::Approx(14.724433491596477).epsilon(1e-9));

  std::vector<double> small{0.5, 0.7, 1.0, 1.1, 2.0, 3.5, 8.0};
  auto g = gpd_fit_tail(small);
  CHECK(g.khat == doctest::Approx(0.3949241138533728).epsilon(1e-9));
  CHECK(g.sigma == doctest::Approx(1.8983567187133357).epsilon(1e-9));
}

TEST_CASE("gpd fit input checks") {
  std::vector<double> four{0.1, 0.2, 0.3, 0.4};
  CHECK_THROWS_AS(gpd_fit_tail(four), ValidationError);
  std::vector<double> flat(10, 0.0);
  CHECK(std::isinf(gpd_fit_tail(flat).khat));
}

TEST_CASE("tail length") {
  CHECK(psis_tail_length(100) == 20);
  CHECK(psis_tail_length(4000) == 190);
  CHECK(psis_tail_length(1000) == 95);
}

TEST_CASE("psis statuses") {
  std::vector<double> few(24, 0.0);
  few[3] = 1.0;
  auto r = psis_smooth(few);
  CHECK(r.status == PsisStatus::InsufficientTail);
  CHECK(std::isinf(r.khat));
  CHECK(*std::max_element(r.log_weights.begin(), r.log_weights.end()) == 0.0);

  std::vector<double> flat(100, 2.0);
  auto d = psis_smooth(flat);
  CHECK(d.status == PsisStatus::Degenerate);
}

TEST_CASE("smoothing keeps the order and truncates the largest weight") {
  RngStream rng(12);
  std::vector<double> lr(2000);
  for (auto& v : lr) v = 2.0 * rng.normal();
  auto r = psis_smooth(lr);
  REQUIRE(r.status == PsisStatus::Smoothed);
  CHECK(std::isfinite(r.khat));
  std::vector<std::size_t> idx(lr.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return lr[a] < lr[b]; });
  for (std::size_t k = 1; k < idx.size(); ++k) {
    CHECK(r.log_weights[idx[k]] >= r.log_weights[idx[k - 1]]);
  }
  CHECK(*std::max_element(r.log_weights.begin(), r.log_weights.end()) == 0.0);
  // raw maximum exceeds what the smoothed weights allow
  const double raw_gap = lr[idx.back()] - lr[idx[idx.size() / 2]];
  const double smooth_gap = r.log_weights[idx.back()] - r.log_weights[idx[idx.size() / 2]];
  CHECK(smooth_gap <= raw_gap + 1e-12);
}

TEST_CASE("khat bands") {
  CHECK(khat_band(0.5) == KhatBand::Good);
  CHECK(khat_band(0.51) == KhatBand::Ok);
  CHECK(khat_band(0.7) == KhatBand::Ok);
  CHECK(khat_band(0.9) == KhatBand::Bad);
  CHECK(khat_band(1.2) == KhatBand::VeryBad);
  CHECK(to_string(KhatBand::VeryBad) == "very bad");
}

TEST_CASE("identical draws give elpd equal to the log likelihood") {
  Matrix ll(100, 3);
  for (std::size_t s = 0; s < 100; ++s) {
    ll(s, 0) = -1.0;
    ll(s, 1) = -2.5;
    ll(s, 2) = -0.3;
  }
  auto loo = elpd_loo(ll);
  CHECK(loo.pointwise_elpd[0] == doctest::Approx(-1.0));
  CHECK(loo.pointwise_elpd[1] == doctest::Approx(-2.5));
  CHECK(loo.elpd_total == doctest::Approx(-3.8));
  for (double v : loo.influence()) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("conjugate normal matches exact leave-one-out") {
  auto c = conjugate_normal(20, 4000, 31);
  auto loo = elpd_loo(c.log_lik);
  CHECK(std::abs(loo.elpd_total - c.exact) <= 0.05);
  for (double k : loo.khat) CHECK(k < 0.5);
  double sum = 0.0;
  for (double v : loo.pointwise_elpd) sum += v;
  CHECK(sum == doctest::Approx(loo.elpd_total));
  CHECK(loo.elpd_se > 0.0);
}

TEST_CASE("the outlying point has the largest khat") {
  auto c = conjugate_normal(20, 4000, 5);
  // refit with an outlier at position 7
  c.y[7] = 6.0;
  double sum = 0.0;
  for (double v : c.y) sum += v;
  RngStream rng(6);
  for (std::size_t s = 0; s < c.log_lik.rows(); ++s) {
    const double mu = sum / 20.0 + rng.normal() / std::sqrt(20.0);
    for (std::size_t i = 0; i < 20; ++i) c.log_lik(s, i) = normal_logpdf(c.y[i], mu, 1.0);
  }
  auto loo = elpd_loo(c.log_lik);
  const auto worst = std::max_element(loo.khat.begin(), loo.khat.end()) - loo.khat.begin();
  CHECK(worst == 7);
}

TEST_CASE("non-finite log likelihood is named") {
  Matrix ll(30, 4, -1.0);
  ll(12, 3) = std::numeric_limits<double>::quiet_NaN();
  try {
    elpd_loo(ll);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("12") != std::string::npos);
    CHECK(msg.find("3") != std::string::npos);
  }
}

TEST_CASE("loo_compare bookkeeping") {
  auto c = conjugate_normal(10, 500, 2);
  auto a = elpd_loo(c.log_lik);
  auto self = loo_compare(a, a);
  CHECK(self.diff_total == 0.0);
  CHECK(self.diff_se == 0.0);

  LooResult b = a;
  b.pointwise_elpd[4] += 2.0;
  b.elpd_total += 2.0;
  std::vector<std::string> g(10, "x");
  auto d = loo_compare(a, b, g);
  CHECK(d.diff_total == doctest::Approx(2.0));
  CHECK(d.pointwise_diff[4] == doctest::Approx(2.0));
  CHECK(d.diff_se == doctest::Approx(std::sqrt(10.0 * (1.8 * 1.8 + 9 * 0.2 * 0.2) / 9.0)));

  LooResult shorter = a;
  shorter.pointwise_elpd.pop_back();
  shorter.khat.pop_back();
  CHECK_THROWS_AS(loo_compare(a, shorter), ValidationError);
}

TEST_CASE("loo csv round trip") {
  auto c = conjugate_normal(8, 300, 4);
  auto loo = elpd_loo(c.log_lik);
  const auto path = std::filesystem::temp_directory_path() / "bwf_test_loo.csv";
  write_loo_csv(path, loo);
  auto back = read_loo_csv(path);
  REQUIRE(back.pointwise_elpd.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(back.pointwise_elpd[i] == loo.pointwise_elpd[i]);
    CHECK(back.khat[i] == loo.khat[i]);
  }
  CHECK(back.elpd_total == doctest::Approx(loo.elpd_total));
  std::filesystem::remove(path);
}
