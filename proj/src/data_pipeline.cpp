#include "bwf/data_pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "bwf/error.hpp"
#include "bwf/rng.hpp"
#include "bwf/stats.hpp"

namespace bwf {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::optional<double> parse_double(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

void Dataset::validate(bool allow_empty) const {
  if (x.size() != y.size() || group.size() != y.size()) {
    throw ValidationError("dataset columns x, y, group differ in length");
  }
  if (!country.empty() && country.size() != y.size()) {
    throw ValidationError("dataset country column has the wrong length");
  }
  if (!monitor_id.empty() && monitor_id.size() != y.size()) {
    throw ValidationError("dataset monitor_id column has the wrong length");
  }
  if (y.empty() && !allow_empty) throw ValidationError("dataset has no observations");
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (group[i] < 0 || static_cast<std::size_t>(group[i]) >= n_groups()) {
      throw ValidationError("observation " + std::to_string(i) + " has group index " +
                            std::to_string(group[i]) + " outside [0, " +
                            std::to_string(n_groups()) + ")");
    }
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw ValidationError("observation " + std::to_string(i) + " is not finite");
    }
  }
}

std::vector<std::vector<std::size_t>> Dataset::members_by_group() const {
  std::vector<std::vector<std::size_t>> members(n_groups());
  for (std::size_t i = 0; i < group.size(); ++i) {
    members[static_cast<std::size_t>(group[i])].push_back(i);
  }
  return members;
}

MonitorTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": no observations");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMonitorCsvHeader) {
    throw ValidationError(path.string() + ":1: expected header '" +
                          std::string(kMonitorCsvHeader) + "'");
  }
  MonitorTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (fields.size() != 6) {
      throw ValidationError(where + "expected 6 fields, found " + std::to_string(fields.size()));
    }
    const auto x = parse_double(fields[1]);
    if (!x) throw ValidationError(where + "malformed x_log_sat '" + fields[1] + "'");
    if (fields[2].empty() || fields[2] == "NA") throw ValidationError(where + "missing y_log_pm25");
    const auto y = parse_double(fields[2]);
    if (!y) throw ValidationError(where + "malformed y_log_pm25 '" + fields[2] + "'");
    if (fields[3].empty() || fields[4].empty()) {
      throw ValidationError(where + "missing region label");
    }
    table.monitor_id.push_back(fields[0]);
    table.x.push_back(*x);
    table.y.push_back(*y);
    table.region_who.push_back(fields[3]);
    table.region_cluster.push_back(fields[4]);
    table.country.push_back(fields[5]);
  }
  if (table.size() == 0) throw ValidationError(path.string() + ": no observations");
  return table;
}

void write_csv(const std::filesystem::path& path, const MonitorTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << kMonitorCsvHeader << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.monitor_id[i] << ',' << format_double(table.x[i]) << ','
        << format_double(table.y[i]) << ',' << table.region_who[i] << ','
        << table.region_cluster[i] << ',' << table.country[i] << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Dataset to_dataset(const MonitorTable& table, GroupColumn column,
                   const std::optional<std::vector<std::string>>& known_labels) {
  const auto& labels = column == GroupColumn::Who ? table.region_who : table.region_cluster;
  Dataset data;
  if (known_labels) {
    data.group_names = *known_labels;
  } else {
    data.group_names = labels;
    std::sort(data.group_names.begin(), data.group_names.end());
    data.group_names.erase(std::unique(data.group_names.begin(), data.group_names.end()),
                           data.group_names.end());
  }
  std::map<std::string, int> index;
  for (std::size_t j = 0; j < data.group_names.size(); ++j) {
    index.emplace(data.group_names[j], static_cast<int>(j));
  }
  data.x = table.x;
  data.y = table.y;
  data.country = table.country;
  data.monitor_id = table.monitor_id;
  data.group.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    auto it = index.find(labels[i]);
    if (it == index.end()) {
      throw ValidationError("row " + std::to_string(i + 2) + ": unknown group label '" +
                            labels[i] + "'");
    }
    data.group.push_back(it->second);
  }
  data.validate();
  return data;
}

Dataset load_csv(const std::filesystem::path& path, GroupColumn column,
                 const std::optional<std::vector<std::string>>& known_labels) {
  return to_dataset(load_table(path), column, known_labels);
}

Dataset eight_schools_dataset() {
  Dataset data;
  data.y = {28, 8, -3, 7, -1, 1, 18, 12};
  data.x = {15, 10, 16, 11, 9, 11, 10, 18};
  data.group = {0, 1, 2, 3, 4, 5, 6, 7};
  data.group_names = {"A", "B", "C", "D", "E", "F", "G", "H"};
  return data;
}

Dataset load_eight_schools(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "school,effect,std_error") {
        throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                              ": expected header school,effect,std_error");
      }
      header_seen = true;
      continue;
    }
    const auto f = split_csv_line(line);
    const auto effect = f.size() == 3 ? parse_double(f[1]) : std::nullopt;
    const auto se = f.size() == 3 ? parse_double(f[2]) : std::nullopt;
    if (!effect || !se) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    data.group.push_back(static_cast<int>(data.group_names.size()));
    data.group_names.push_back(f[0]);
    data.y.push_back(*effect);
    data.x.push_back(*se);
  }
  data.validate();
  return data;
}

void SynthConfig::validate() const {
  if (n_groups < 1) throw ValidationError("synth: n_groups must be positive");
  const auto groups = static_cast<std::size_t>(n_groups);
  if (points_per_group.size() != groups || x_range.size() != groups) {
    throw ValidationError("synth: points_per_group and x_range need one entry per group");
  }
  if (!(tau0 >= 0) || !(tau1 >= 0) || !(sigma >= 0)) {
    throw ValidationError("synth: standard deviations must be non-negative");
  }
  bool has_dense = false;
  bool has_sparse = false;
  for (int n : points_per_group) {
    if (n < 0) throw ValidationError("synth: negative group size");
    has_dense = has_dense || n >= 5;
    has_sparse = has_sparse || n <= 25;
  }
  if (!has_dense || !has_sparse) {
    throw ValidationError(
        "synth: need at least one group with >= 5 points and one with <= 25 points");
  }
  for (const auto& [lo, hi] : x_range) {
    if (!(hi >= lo)) throw ValidationError("synth: empty x range");
  }
  if (countries_per_group < 1 || n_clusters < 1) {
    throw ValidationError("synth: countries_per_group and n_clusters must be positive");
  }
}

SynthConfig grouped_synth_config(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_groups = 4;
  cfg.points_per_group = {100, 50, 30, 20};
  cfg.true_beta0 = 0.3;
  cfg.true_beta1 = 0.8;
  cfg.tau0 = 2.0;
  cfg.tau1 = 0.3;
  cfg.sigma = 0.15;
  cfg.x_range.assign(4, {1.0, 4.0});
  cfg.discretize_low = false;
  cfg.countries_per_group = 3;
  cfg.n_clusters = 4;
  cfg.seed = seed;
  return cfg;
}

SynthResult synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  RngStream rng(cfg.seed, 0);
  SynthResult result;
  auto& truth = result.truth;
  truth.beta0 = cfg.true_beta0;
  truth.beta1 = cfg.true_beta1;
  truth.tau0 = cfg.tau0;
  truth.tau1 = cfg.tau1;
  truth.sigma = cfg.sigma;
  truth.seed = cfg.seed;
  for (int j = 0; j < cfg.n_groups; ++j) {
    truth.offset0.push_back(cfg.tau0 * rng.normal());
    truth.offset1.push_back(cfg.tau1 * rng.normal());
    truth.group_names.push_back("super_region_" + std::to_string(j + 1));
  }

  auto& table = result.table;
  // Country index in (group, country) order; features are built per country.
  std::vector<std::vector<double>> country_values(
      static_cast<std::size_t>(cfg.n_groups * cfg.countries_per_group));
  std::vector<std::size_t> row_country;
  for (int j = 0; j < cfg.n_groups; ++j) {
    const auto [lo, hi] = cfg.x_range[static_cast<std::size_t>(j)];
    for (int i = 0; i < cfg.points_per_group[static_cast<std::size_t>(j)]; ++i) {
      const double x = lo + (hi - lo) * rng.uniform();
      const double mean = truth.beta0 + truth.offset0[static_cast<std::size_t>(j)] +
                          (truth.beta1 + truth.offset1[static_cast<std::size_t>(j)]) * x;
      double y = mean + cfg.sigma * rng.normal();
      if (cfg.discretize_low && y < cfg.discretize_cutoff) y = std::round(y * 10.0) / 10.0;
      const auto c = static_cast<int>(rng.uniform() * cfg.countries_per_group);
      const auto country_idx = static_cast<std::size_t>(j * cfg.countries_per_group + c);
      country_values[country_idx].push_back(y);
      row_country.push_back(country_idx);

      table.monitor_id.push_back("m" + std::to_string(table.size() + 1));
      table.x.push_back(x);
      table.y.push_back(y);
      table.region_who.push_back(truth.group_names[static_cast<std::size_t>(j)]);
      table.country.push_back("country_" + std::to_string(j + 1) + "_" + std::to_string(c + 1));
    }
  }

  std::vector<std::size_t> unit_of_country(country_values.size(), 0);
  std::vector<std::size_t> observed_countries;
  for (std::size_t c = 0; c < country_values.size(); ++c) {
    if (!country_values[c].empty()) {
      unit_of_country[c] = observed_countries.size();
      observed_countries.push_back(c);
    }
  }
  Matrix features(observed_countries.size(), 2);
  for (std::size_t u = 0; u < observed_countries.size(); ++u) {
    const auto& values = country_values[observed_countries[u]];
    features(u, 0) = stats::quantile(values, 0.5);
    features(u, 1) = stats::quantile(values, 0.75) - stats::quantile(values, 0.25);
  }
  const int k = std::min<int>(cfg.n_clusters, static_cast<int>(observed_countries.size()));
  const auto clusters = ward_cluster(features, k);
  for (std::size_t c : row_country) {
    table.region_cluster.push_back("cluster_" +
                                   std::to_string(clusters.labels[unit_of_country[c]] + 1));
  }
  return result;
}

std::string truth_to_json(const SynthTruth& truth, const SynthConfig& cfg) {
  nlohmann::ordered_json j;
  j["note"] = "generating parameters of a synthetic monitor table";
  j["seed"] = truth.seed;
  j["beta0"] = truth.beta0;
  j["beta1"] = truth.beta1;
  j["tau0"] = truth.tau0;
  j["tau1"] = truth.tau1;
  j["sigma"] = truth.sigma;
  j["group_names"] = truth.group_names;
  j["offset0"] = truth.offset0;
  j["offset1"] = truth.offset1;
  nlohmann::ordered_json c;
  c["n_groups"] = cfg.n_groups;
  c["points_per_group"] = cfg.points_per_group;
  c["x_range"] = cfg.x_range;
  c["discretize_low"] = cfg.discretize_low;
  c["discretize_cutoff"] = cfg.discretize_cutoff;
  c["countries_per_group"] = cfg.countries_per_group;
  c["n_clusters"] = cfg.n_clusters;
  j["config"] = c;
  return j.dump(2) + "\n";
}

ClusterResult ward_cluster(const Matrix& features, int k) {
  const std::size_t n = features.rows();
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw ValidationError("ward_cluster: k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(n) + "]");
  }
  for (double v : features.data()) {
    if (!std::isfinite(v)) throw ValidationError("ward_cluster: non-finite feature");
  }
  // dist holds squared Ward distances between active clusters.
  Matrix dist(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = 0.0;
      for (std::size_t c = 0; c < features.cols(); ++c) {
        const double diff = features(i, c) - features(j, c);
        d += diff * diff;
      }
      dist(i, j) = dist(j, i) = d;
    }
  }
  std::vector<std::size_t> size(n, 1);
  std::vector<std::size_t> id(n);  // scipy-style id of the cluster in each slot
  std::iota(id.begin(), id.end(), 0);
  std::vector<bool> active(n, true);
  std::vector<std::size_t> owner(n);  // slot each unit currently belongs to
  std::iota(owner.begin(), owner.end(), 0);

  ClusterResult result;
  result.k = k;
  std::size_t next_id = n;
  for (std::size_t step = 0; step + static_cast<std::size_t>(k) < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (active[j] && dist(i, j) < best) {
          best = dist(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    result.merge_history.push_back(
        {std::min(id[bi], id[bj]), std::max(id[bi], id[bj]), std::sqrt(std::max(best, 0.0))});
    const double ni = static_cast<double>(size[bi]);
    const double nj = static_cast<double>(size[bj]);
    for (std::size_t m = 0; m < n; ++m) {
      if (!active[m] || m == bi || m == bj) continue;
      const double nm = static_cast<double>(size[m]);
      const double updated =
          ((ni + nm) * dist(bi, m) + (nj + nm) * dist(bj, m) - nm * best) / (ni + nj + nm);
      dist(bi, m) = dist(m, bi) = updated;
    }
    size[bi] += size[bj];
    active[bj] = false;
    id[bi] = next_id++;
    for (auto& o : owner) {
      if (o == bj) o = bi;
    }
  }

  result.labels.assign(n, -1);
  std::map<std::size_t, int> slot_label;
  for (std::size_t u = 0; u < n; ++u) {
    auto [it, inserted] = slot_label.emplace(owner[u], static_cast<int>(slot_label.size()));
    result.labels[u] = it->second;
  }
  return result;
}

OlsFit ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("ols_fit: x and y differ in length");
  if (x.size() < 3) throw ValidationError("ols_fit: need at least 3 points");
  const double mx = stats::mean(x);
  const double my = stats::mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0)) throw ValidationError("ols_fit: x is constant");
  OlsFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ss_res += r * r;
  }
  fit.r_squared = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

}  // namespace bwf
