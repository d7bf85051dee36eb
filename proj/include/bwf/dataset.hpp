#ifndef BWF_DATASET_HPP
#define BWF_DATASET_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace bwf {

/// Observations seen by the models: log satellite estimate x, log measured
/// concentration y, and a group index per observation.
///
/// For the 8-schools fixture x holds the known standard error of each
/// school's estimate and y the estimate itself; group[i] == i.
struct Dataset {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<int> group;
  std::vector<std::string> group_names;
  std::vector<std::string> country;     // empty when unknown
  std::vector<std::string> monitor_id;  // empty when unknown

  std::size_t size() const noexcept { return y.size(); }
  std::size_t n_groups() const noexcept { return group_names.size(); }

  /// Throws ValidationError on length mismatch or out-of-range group index.
  /// An empty dataset is accepted only when allow_empty is set.
  void validate(bool allow_empty = false) const;

  /// Indices of the observations belonging to each group.
  std::vector<std::vector<std::size_t>> members_by_group() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace bwf

#endif  // BWF_DATASET_HPP
