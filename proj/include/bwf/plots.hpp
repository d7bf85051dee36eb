#ifndef BWF_PLOTS_HPP
#define BWF_PLOTS_HPP

#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bwf/dataset.hpp"
#include "bwf/draws.hpp"
#include "bwf/ppc.hpp"
#include "bwf/prior_pred.hpp"
#include "bwf/psis.hpp"

namespace bwf {

/// Figure families. Required series (all columns have equal length):
///   ScatterDivergences    x, y, divergent (0/1)
///   ParallelCoordinates   line, axis (label), value, divergent
///   DensityOverlay        curve, role (label), x, density
///   StatHistogram         value; annotations observed, p_upper, p_lower
///   GroupedStatHistogram  group (label), value; annotations observed:<group>, ...
///   KhatScatter           index, khat, band (label)
///   ElpdDiffScatter       index, elpd_diff, group (label)
///   PitOverlay            curve, role (label), x, density
///   FlipBookPage          x, y, group (label); annotation page
enum class PlotKind {
  ScatterDivergences,
  ParallelCoordinates,
  DensityOverlay,
  StatHistogram,
  GroupedStatHistogram,
  KhatScatter,
  ElpdDiffScatter,
  PitOverlay,
  FlipBookPage
};

std::string to_string(PlotKind kind);
PlotKind parse_plot_kind(const std::string& text);

using SeriesValues = std::variant<std::vector<double>, std::vector<std::string>>;

struct Series {
  std::string name;
  SeriesValues values;

  bool is_real() const noexcept { return std::holds_alternative<std::vector<double>>(values); }
  const std::vector<double>& reals() const;
  const std::vector<std::string>& labels() const;
  std::size_t size() const noexcept;
  friend bool operator==(const Series&, const Series&) = default;
};

struct PlotData {
  PlotKind kind = PlotKind::ScatterDivergences;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<std::pair<std::string, double>> annotations;

  const Series& at(const std::string& name) const;
  bool has(const std::string& name) const;
  double annotation(const std::string& role) const;
  std::size_t length() const;
  /// Throws ValidationError on unequal columns or missing required series.
  void validate() const;
  friend bool operator==(const PlotData&, const PlotData&) = default;
};

PlotData divergence_scatter_data(const Draws& draws, const std::string& param_x,
                                 const std::string& param_y);
PlotData parcoord_data(const Draws& draws, const std::vector<std::string>& params,
                       bool standardize);
PlotData density_overlay_data(const std::vector<DensityCurve>& curves);
PlotData stat_histogram_data(const StatCheck& check);
PlotData grouped_stat_histogram_data(const std::vector<StatCheck>& checks);
PlotData khat_scatter_data(const LooResult& loo);
PlotData elpd_diff_data(const LooComparison& cmp);
/// KDE of the PIT values followed by the uniform reference curves.
PlotData pit_overlay_data(const DensityCurve& pit_curve,
                          const std::vector<DensityCurve>& reference);
PlotData flipbook_page_data(const FlipBook& book, const Dataset& templ, std::size_t page);

enum class PlotFormat { Svg, Csv, Json };

PlotFormat parse_plot_format(const std::string& text);

std::string plot_to_csv(const PlotData& pd);
std::string plot_to_json(const PlotData& pd);
std::string plot_to_svg(const PlotData& pd);
PlotData plot_from_csv(const std::string& text);
PlotData plot_from_json(const std::string& text);

void emit_plot(const PlotData& pd, PlotFormat format, const std::filesystem::path& path);
/// Reads a plot-data file written by emit_plot (.csv or .json).
PlotData read_plot(const std::filesystem::path& path);

}  // namespace bwf

#endif  // BWF_PLOTS_HPP
