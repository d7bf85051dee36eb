#ifndef BWF_DATA_PIPELINE_HPP
#define BWF_DATA_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bwf/dataset.hpp"
#include "bwf/matrix.hpp"

namespace bwf {

/// Exact CSV header of monitor tables.
inline constexpr const char* kMonitorCsvHeader =
    "monitor_id,x_log_sat,y_log_pm25,region_who,region_cluster,country";

/// One monitor per row, both groupings retained. This is the file-level
/// representation; models see a Dataset built from one grouping column.
struct MonitorTable {
  std::vector<std::string> monitor_id;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::string> region_who;
  std::vector<std::string> region_cluster;
  std::vector<std::string> country;

  std::size_t size() const noexcept { return x.size(); }
  friend bool operator==(const MonitorTable&, const MonitorTable&) = default;
};

enum class GroupColumn { Who, Cluster };

MonitorTable load_table(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const MonitorTable& table);

/// Build the model view of a table. Group labels are indexed in sorted
/// order unless known_labels fixes the label set (and its order), in which
/// case any other label is rejected.
Dataset to_dataset(const MonitorTable& table, GroupColumn column,
                   const std::optional<std::vector<std::string>>& known_labels = std::nullopt);

Dataset load_csv(const std::filesystem::path& path, GroupColumn column = GroupColumn::Who,
                 const std::optional<std::vector<std::string>>& known_labels = std::nullopt);

/// Rubin's 8-schools data: y = estimated effect, x = its standard error,
/// one group per school.
Dataset eight_schools_dataset();

/// Same data read from a `school,effect,std_error` file ('#' lines skipped).
Dataset load_eight_schools(const std::filesystem::path& path);

struct SynthConfig {
  int n_groups = 7;
  std::vector<int> points_per_group{160, 120, 90, 70, 40, 20, 8};
  double true_beta0 = 0.3;
  double true_beta1 = 0.8;
  double tau0 = 0.3;  // sd of group intercept offsets
  double tau1 = 0.1;  // sd of group slope offsets
  double sigma = 0.45;
  std::vector<std::pair<double, double>> x_range{{1.5, 4.0}, {2.0, 4.5}, {0.8, 3.0}, {1.0, 3.5},
                                                 {2.5, 4.8}, {1.2, 3.8}, {1.5, 3.0}};
  bool discretize_low = true;
  double discretize_cutoff = 1.5;  // log scale
  int countries_per_group = 5;
  int n_clusters = 6;
  std::uint64_t seed = 2018;

  /// Throws ValidationError when the configuration is unusable.
  void validate() const;
};

/// Strongly grouped, few-group design (n = 200) where a single regression
/// line is a poor description of the data.
SynthConfig grouped_synth_config(std::uint64_t seed);

/// Generating parameters behind a synthetic table.
struct SynthTruth {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double tau0 = 0.0;
  double tau1 = 0.0;
  double sigma = 0.0;
  std::vector<double> offset0;  // per WHO group
  std::vector<double> offset1;
  std::vector<std::string> group_names;
  std::uint64_t seed = 0;
};

struct SynthResult {
  MonitorTable table;
  SynthTruth truth;
};

/// Draw a table from the hierarchical data-generating process and assign
/// cluster regions by Ward clustering of per-country (median y, IQR y).
SynthResult synth_generate(const SynthConfig& cfg);

std::string truth_to_json(const SynthTruth& truth, const SynthConfig& cfg);

struct Merge {
  std::size_t a = 0;  // cluster ids as in scipy linkage: originals 0..n-1, merged n, n+1, ...
  std::size_t b = 0;
  double distance = 0.0;
};

struct ClusterResult {
  std::vector<int> labels;
  int k = 0;
  std::vector<Merge> merge_history;  // n - k entries
};

/// Agglomerative clustering with Ward linkage (Lance-Williams updates),
/// cut at k clusters. Rows of `features` are units. Labels are numbered
/// by the first unit of each cluster. Merge distances follow the scipy
/// convention (Euclidean Ward height).
ClusterResult ward_cluster(const Matrix& features, int k);

struct OlsFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
};

OlsFit ols_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace bwf

#endif  // BWF_DATA_PIPELINE_HPP
