#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include "bwf/data_pipeline.hpp"
#include "bwf/error.hpp"

using namespace bwf;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& text) {
  const auto path = fs::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path;
}

std::string header() { return std::string(kMonitorCsvHeader) + "\n"; }

// Same partition up to renaming.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (ab.emplace(a[i], b[i]).first->second != b[i]) return false;
    if (ba.emplace(b[i], a[i]).first->second != a[i]) return false;
  }
  return true;
}

Matrix features_of(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

const std::vector<std::vector<double>> kSeven{{0.0, 0.0}, {0.1, 0.2}, {5.0, 5.0}, {5.2, 4.9},
                                              {0.3, -0.1}, {9.0, 0.5}, {5.1, 5.3}};

}  // namespace

TEST_CASE("monitor row parses") {
  const auto path =
      write_temp("bwf_mongolia.csv", header() + "m1,1.95,4.32,super_region_2,cluster_4,Mongolia\n");
  auto t = load_table(path);
  REQUIRE(t.size() == 1);
  CHECK(t.x[0] == 1.95);
  CHECK(t.y[0] == 4.32);
  CHECK(t.country[0] == "Mongolia");
  auto d = to_dataset(t, GroupColumn::Cluster);
  CHECK(d.group_names == std::vector<std::string>{"cluster_4"});
  fs::remove(path);
}

TEST_CASE("loader errors carry line numbers") {
  const auto empty = write_temp("bwf_empty.csv", header());
  CHECK_THROWS_WITH_AS(load_table(empty), doctest::Contains("no observations"), ValidationError);

  const auto missing =
      write_temp("bwf_missing.csv", header() + "m1,1.0,2.0,a,c,X\nm2,1.5,,a,c,X\n");
  CHECK_THROWS_WITH_AS(load_table(missing), doctest::Contains("bwf_missing.csv:3:"), ValidationError);

  const auto bad = write_temp("bwf_bad.csv", header() + "m1,abc,2.0,a,c,X\n");
  CHECK_THROWS_WITH_AS(load_table(bad), doctest::Contains("bwf_bad.csv:2:"), ValidationError);

  const auto unknown = write_temp("bwf_unknown.csv", header() + "m1,1.0,2.0,zz,c,X\n");
  CHECK_THROWS_AS(load_csv(unknown, GroupColumn::Who, std::vector<std::string>{"a", "b"}),
                  ValidationError);
  for (const auto& p : {empty, missing, bad, unknown}) fs::remove(p);
}

TEST_CASE("table csv round trip") {
  auto synth = synth_generate(SynthConfig{});
  const auto path = fs::temp_directory_path() / "bwf_roundtrip.csv";
  write_csv(path, synth.table);
  CHECK(load_table(path) == synth.table);
  fs::remove(path);
}

TEST_CASE("synthetic data is deterministic and shaped by the config") {
  SynthConfig cfg;
  auto a = synth_generate(cfg);
  auto b = synth_generate(cfg);
  CHECK(a.table == b.table);
  CHECK(a.table.size() == 508);
  cfg.seed = 2019;
  CHECK_FALSE(synth_generate(cfg).table == a.table);

  std::set<std::string> clusters(a.table.region_cluster.begin(), a.table.region_cluster.end());
  CHECK(clusters.size() == 6);
  // each country sits in exactly one cluster
  std::map<std::string, std::string> cluster_of;
  for (std::size_t i = 0; i < a.table.size(); ++i) {
    auto [it, fresh] = cluster_of.emplace(a.table.country[i], a.table.region_cluster[i]);
    CHECK(it->second == a.table.region_cluster[i]);
  }

  SynthConfig broken;
  broken.points_per_group.pop_back();
  CHECK_THROWS_AS(broken.validate(), ValidationError);
}

TEST_CASE("default synthetic data has a moderate single-line fit") {
  auto t = synth_generate(SynthConfig{}).table;
  const double r2 = ols_fit(t.x, t.y).r_squared;
  CHECK(r2 >= 0.5);
  CHECK(r2 <= 0.7);
}

TEST_CASE("noise level of the truth matches its entropy") {
  // average log density of the residuals under the true model equals the
  // negative entropy of N(0, sigma) up to Monte Carlo error
  SynthConfig cfg;
  cfg.points_per_group = {3000, 3000, 3000, 3000, 3000, 3000, 20};
  cfg.discretize_low = false;
  auto r = synth_generate(cfg);
  const auto d = to_dataset(r.table, GroupColumn::Who);
  std::map<std::string, std::size_t> gi;
  for (std::size_t j = 0; j < r.truth.group_names.size(); ++j) gi[r.truth.group_names[j]] = j;
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const std::size_t j = gi.at(d.group_names[static_cast<std::size_t>(d.group[i])]);
    const double mean = r.truth.beta0 + r.truth.offset0[j] + (r.truth.beta1 + r.truth.offset1[j]) * d.x[i];
    const double z = (d.y[i] - mean) / r.truth.sigma;
    total += -0.5 * z * z - std::log(r.truth.sigma) - 0.5 * std::log(2 * std::numbers::pi);
  }
  const double avg = total / static_cast<double>(d.size());
  const double neg_entropy = -0.5 * std::log(2 * std::numbers::pi * std::numbers::e) - std::log(cfg.sigma);
  CHECK(std::abs(avg - neg_entropy) < 0.02);
}

TEST_CASE("ward heights match scipy") {
  auto r = ward_cluster(features_of(kSeven), 1);
  REQUIRE(r.merge_history.size() == 6);
  std::vector<double> heights;
  for (const auto& m : r.merge_history) heights.push_back(m.distance);
  std::sort(heights.begin(), heights.end());
  const std::vector<double> scipy{0.2236068, 0.2236068, 0.36968455, 0.40414519, 7.35504362,
                                  13.15166113};
  for (std::size_t i = 0; i < 6; ++i) CHECK(heights[i] == doctest::Approx(scipy[i]).epsilon(1e-7));
  for (std::size_t i = 1; i < r.merge_history.size(); ++i) {
    CHECK(r.merge_history[i].distance >= r.merge_history[i - 1].distance);
  }
}

TEST_CASE("ward cut recovers blobs and is permutation invariant") {
  auto r = ward_cluster(features_of(kSeven), 3);
  CHECK(same_partition(r.labels, {0, 0, 1, 1, 0, 2, 1}));
  CHECK(r.labels[0] == 0);

  const std::vector<std::size_t> perm{6, 2, 5, 0, 3, 1, 4};
  std::vector<std::vector<double>> shuffled;
  for (auto p : perm) shuffled.push_back(kSeven[p]);
  auto s = ward_cluster(features_of(shuffled), 3);
  std::vector<int> back(7);
  for (std::size_t i = 0; i < 7; ++i) back[perm[i]] = s.labels[i];
  CHECK(same_partition(back, r.labels));

  auto all = ward_cluster(features_of(kSeven), 7);
  std::set<int> distinct(all.labels.begin(), all.labels.end());
  CHECK(distinct.size() == 7);
  CHECK(all.merge_history.empty());
  CHECK_THROWS_AS(ward_cluster(features_of(kSeven), 8), ValidationError);
}

TEST_CASE("ols examples") {
  auto exact = ols_fit({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(exact.intercept == doctest::Approx(1.0));
  CHECK(exact.slope == doctest::Approx(2.0));
  CHECK(exact.r_squared == doctest::Approx(1.0));
  auto flat = ols_fit({0, 1, 2, 3}, {1, -1, -1, 1});
  CHECK(flat.slope == doctest::Approx(0.0));
  CHECK(flat.r_squared == doctest::Approx(0.0));
  CHECK_THROWS_AS(ols_fit({1, 1, 1}, {1, 2, 3}), ValidationError);
}

TEST_CASE("eight schools file matches the built-in data") {
  const auto file = load_eight_schools(fs::path(BWF_DATA_DIR) / "eight_schools.csv");
  CHECK(file == eight_schools_dataset());
  CHECK(file.y[0] == 28.0);
  CHECK(file.x[7] == 18.0);
}
