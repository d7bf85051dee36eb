#include "bwf/plots.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "bwf/error.hpp"
#include "bwf/stats.hpp"

namespace bwf {

namespace {

constexpr std::array<PlotKind, 9> kAllKinds{
    PlotKind::ScatterDivergences, PlotKind::ParallelCoordinates, PlotKind::DensityOverlay,
    PlotKind::StatHistogram,      PlotKind::GroupedStatHistogram, PlotKind::KhatScatter,
    PlotKind::ElpdDiffScatter,    PlotKind::PitOverlay,          PlotKind::FlipBookPage};

std::vector<std::string> required_series(PlotKind kind) {
  switch (kind) {
    case PlotKind::ScatterDivergences: return {"x", "y", "divergent"};
    case PlotKind::ParallelCoordinates: return {"line", "axis", "value", "divergent"};
    case PlotKind::DensityOverlay:
    case PlotKind::PitOverlay: return {"curve", "role", "x", "density"};
    case PlotKind::StatHistogram: return {"value"};
    case PlotKind::GroupedStatHistogram: return {"group", "value"};
    case PlotKind::KhatScatter: return {"index", "khat", "band"};
    case PlotKind::ElpdDiffScatter: return {"index", "elpd_diff", "group"};
    case PlotKind::FlipBookPage: return {"x", "y", "group"};
  }
  return {};
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Pixel coordinates: fixed precision keeps the SVG short and stable.
std::string px(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

double parse_real(const std::string& text, const std::string& where) {
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  if (text == "nan" || text == "-nan") return NAN;
  double v = 0.0;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), last, v);
  if (ec != std::errc() || ptr != last) {
    throw ValidationError(where + ": malformed number '" + text + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  out.push_back(std::move(field));
  return out;
}

void check_text(const std::string& s, const std::string& what) {
  if (s.find_first_of(",\n\r") != std::string::npos) {
    throw ValidationError("plot " + what + " '" + s + "' contains a comma or line break");
  }
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

Series real_series(std::string name, std::vector<double> v) { return {std::move(name), std::move(v)}; }
Series label_series(std::string name, std::vector<std::string> v) {
  return {std::move(name), std::move(v)};
}

// Draw indices with non-divergent ones first so divergent marks end up on top.
std::vector<std::size_t> divergent_last(const Draws& draws) {
  std::vector<std::size_t> order(draws.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_partition(order.begin(), order.end(),
                        [&](std::size_t s) { return !draws.divergent[s]; });
  return order;
}

}  // namespace

std::string to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::ScatterDivergences: return "ScatterDivergences";
    case PlotKind::ParallelCoordinates: return "ParallelCoordinates";
    case PlotKind::DensityOverlay: return "DensityOverlay";
    case PlotKind::StatHistogram: return "StatHistogram";
    case PlotKind::GroupedStatHistogram: return "GroupedStatHistogram";
    case PlotKind::KhatScatter: return "KhatScatter";
    case PlotKind::ElpdDiffScatter: return "ElpdDiffScatter";
    case PlotKind::PitOverlay: return "PitOverlay";
    case PlotKind::FlipBookPage: return "FlipBookPage";
  }
  return "?";
}

PlotKind parse_plot_kind(const std::string& text) {
  for (auto k : kAllKinds) {
    if (to_string(k) == text) return k;
  }
  throw ValidationError("unknown plot kind '" + text + "'");
}

PlotFormat parse_plot_format(const std::string& text) {
  if (text == "svg") return PlotFormat::Svg;
  if (text == "csv") return PlotFormat::Csv;
  if (text == "json") return PlotFormat::Json;
  throw ValidationError("unknown plot format '" + text + "' (expected svg, csv or json)");
}

const std::vector<double>& Series::reals() const {
  if (!is_real()) throw ValidationError("series '" + name + "' holds labels, not numbers");
  return std::get<std::vector<double>>(values);
}

const std::vector<std::string>& Series::labels() const {
  if (is_real()) throw ValidationError("series '" + name + "' holds numbers, not labels");
  return std::get<std::vector<std::string>>(values);
}

std::size_t Series::size() const noexcept {
  return std::visit([](const auto& v) { return v.size(); }, values);
}

const Series& PlotData::at(const std::string& name) const {
  for (const auto& s : series) {
    if (s.name == name) return s;
  }
  throw ValidationError(to_string(kind) + " plot has no series '" + name + "'");
}

bool PlotData::has(const std::string& name) const {
  return std::any_of(series.begin(), series.end(), [&](const Series& s) { return s.name == name; });
}

double PlotData::annotation(const std::string& role) const {
  for (const auto& [r, v] : annotations) {
    if (r == role) return v;
  }
  throw ValidationError(to_string(kind) + " plot has no annotation '" + role + "'");
}

std::size_t PlotData::length() const { return series.empty() ? 0 : series.front().size(); }

void PlotData::validate() const {
  for (const auto& s : series) {
    if (s.size() != length()) {
      throw ValidationError("plot series '" + s.name + "' has length " + std::to_string(s.size()) +
                            ", expected " + std::to_string(length()));
    }
  }
  for (const auto& name : required_series(kind)) {
    if (!has(name)) throw ValidationError(to_string(kind) + " plot needs a series '" + name + "'");
  }
}

// ---- builders ---------------------------------------------------------------

PlotData divergence_scatter_data(const Draws& draws, const std::string& param_x,
                                 const std::string& param_y) {
  const auto xs = draws.column(param_x);
  const auto ys = draws.column(param_y);
  PlotData pd;
  pd.kind = PlotKind::ScatterDivergences;
  pd.x_label = param_x;
  pd.y_label = param_y;
  std::vector<double> x, y, div;
  for (auto s : divergent_last(draws)) {
    x.push_back(xs[s]);
    y.push_back(ys[s]);
    div.push_back(draws.divergent[s] ? 1.0 : 0.0);
  }
  pd.series = {real_series("x", std::move(x)), real_series("y", std::move(y)),
               real_series("divergent", std::move(div))};
  return pd;
}

PlotData parcoord_data(const Draws& draws, const std::vector<std::string>& params,
                       bool standardize) {
  if (params.size() < 2) throw ValidationError("parallel coordinates need at least 2 parameters");
  std::vector<std::vector<double>> cols;
  for (const auto& p : params) {
    auto c = draws.column(p);
    if (standardize) {
      const double m = stats::mean(c);
      const double sd = c.size() > 1 ? stats::sd(c) : 0.0;
      for (auto& v : c) v = sd > 0.0 ? (v - m) / sd : v - m;
    }
    cols.push_back(std::move(c));
  }
  PlotData pd;
  pd.kind = PlotKind::ParallelCoordinates;
  pd.x_label = "parameter";
  pd.y_label = standardize ? "standardized value" : "value";
  std::vector<double> line, value, div;
  std::vector<std::string> axis;
  for (auto s : divergent_last(draws)) {
    for (std::size_t p = 0; p < params.size(); ++p) {
      line.push_back(static_cast<double>(s));
      axis.push_back(params[p]);
      value.push_back(cols[p][s]);
      div.push_back(draws.divergent[s] ? 1.0 : 0.0);
    }
  }
  for (const auto& p : params) check_text(p, "axis");
  pd.series = {real_series("line", std::move(line)), label_series("axis", std::move(axis)),
               real_series("value", std::move(value)), real_series("divergent", std::move(div))};
  return pd;
}

namespace {

PlotData curves_data(PlotKind kind, const std::vector<DensityCurve>& curves) {
  PlotData pd;
  pd.kind = kind;
  std::vector<double> id, x, d;
  std::vector<std::string> role;
  for (std::size_t c = 0; c < curves.size(); ++c) {
    for (std::size_t g = 0; g < curves[c].grid.size(); ++g) {
      id.push_back(static_cast<double>(c));
      role.push_back(to_string(curves[c].label));
      x.push_back(curves[c].grid[g]);
      d.push_back(curves[c].density[g]);
    }
  }
  pd.series = {real_series("curve", std::move(id)), label_series("role", std::move(role)),
               real_series("x", std::move(x)), real_series("density", std::move(d))};
  return pd;
}

}  // namespace

PlotData density_overlay_data(const std::vector<DensityCurve>& curves) {
  auto pd = curves_data(PlotKind::DensityOverlay, curves);
  pd.x_label = "y";
  pd.y_label = "density";
  return pd;
}

PlotData stat_histogram_data(const StatCheck& check) {
  PlotData pd;
  pd.kind = PlotKind::StatHistogram;
  pd.x_label = to_string(check.stat) + "(y_rep)";
  pd.y_label = "count";
  pd.series = {real_series("value", check.replicated)};
  pd.annotations = {{"observed", check.observed},
                    {"p_upper", check.p_upper},
                    {"p_lower", check.p_lower}};
  return pd;
}

PlotData grouped_stat_histogram_data(const std::vector<StatCheck>& checks) {
  if (checks.empty()) throw ValidationError("grouped histogram needs at least one check");
  PlotData pd;
  pd.kind = PlotKind::GroupedStatHistogram;
  pd.x_label = to_string(checks.front().stat) + "(y_rep)";
  pd.y_label = "count";
  std::vector<std::string> group;
  std::vector<double> value;
  for (const auto& c : checks) {
    const std::string g = c.group.value_or("all");
    check_text(g, "group");
    group.insert(group.end(), c.replicated.size(), g);
    value.insert(value.end(), c.replicated.begin(), c.replicated.end());
    pd.annotations.emplace_back("observed:" + g, c.observed);
    pd.annotations.emplace_back("p_upper:" + g, c.p_upper);
    pd.annotations.emplace_back("p_lower:" + g, c.p_lower);
  }
  pd.series = {label_series("group", std::move(group)), real_series("value", std::move(value))};
  return pd;
}

PlotData khat_scatter_data(const LooResult& loo) {
  PlotData pd;
  pd.kind = PlotKind::KhatScatter;
  pd.x_label = "observation";
  pd.y_label = "k-hat";
  std::vector<double> index(loo.khat.size());
  std::iota(index.begin(), index.end(), 0.0);
  std::vector<std::string> band;
  for (double k : loo.khat) band.push_back(to_string(khat_band(k)));
  pd.series = {real_series("index", std::move(index)), real_series("khat", loo.khat),
               label_series("band", std::move(band))};
  pd.annotations = {{"threshold", 0.5}, {"threshold", 0.7}, {"threshold", 1.0}};
  return pd;
}

PlotData elpd_diff_data(const LooComparison& cmp) {
  PlotData pd;
  pd.kind = PlotKind::ElpdDiffScatter;
  pd.x_label = "observation";
  pd.y_label = "elpd difference";
  std::vector<double> index(cmp.pointwise_diff.size());
  std::iota(index.begin(), index.end(), 0.0);
  std::vector<std::string> group =
      cmp.group ? *cmp.group : std::vector<std::string>(cmp.pointwise_diff.size());
  for (const auto& g : group) check_text(g, "group");
  pd.series = {real_series("index", std::move(index)), real_series("elpd_diff", cmp.pointwise_diff),
               label_series("group", std::move(group))};
  pd.annotations = {{"diff_total", cmp.diff_total}, {"diff_se", cmp.diff_se}};
  return pd;
}

PlotData pit_overlay_data(const DensityCurve& pit_curve,
                          const std::vector<DensityCurve>& reference) {
  std::vector<DensityCurve> curves{pit_curve};
  curves.insert(curves.end(), reference.begin(), reference.end());
  auto pd = curves_data(PlotKind::PitOverlay, curves);
  pd.x_label = "LOO-PIT";
  pd.y_label = "density";
  return pd;
}

PlotData flipbook_page_data(const FlipBook& book, const Dataset& templ, std::size_t page) {
  if (page >= book.datasets.size()) {
    throw ValidationError("flip book has " + std::to_string(book.datasets.size()) +
                          " pages, asked for page " + std::to_string(page));
  }
  const auto& y = book.datasets[page];
  if (y.size() != templ.size()) throw ValidationError("flip book page does not match template");
  PlotData pd;
  pd.kind = PlotKind::FlipBookPage;
  pd.x_label = "x";
  pd.y_label = "simulated y";
  std::vector<std::string> group;
  for (int g : templ.group) {
    group.push_back(templ.group_names[static_cast<std::size_t>(g)]);
    check_text(group.back(), "group");
  }
  pd.series = {real_series("x", templ.x), real_series("y", y), label_series("group", std::move(group))};
  pd.annotations = {{"page", static_cast<double>(page)}};
  return pd;
}

// ---- csv / json -------------------------------------------------------------

std::string plot_to_csv(const PlotData& pd) {
  pd.validate();
  check_text(pd.x_label, "label");
  check_text(pd.y_label, "label");
  std::ostringstream out;
  out << "# kind: " << to_string(pd.kind) << '\n';
  out << "# x_label: " << pd.x_label << '\n';
  out << "# y_label: " << pd.y_label << '\n';
  out << "# columns: ";
  for (std::size_t c = 0; c < pd.series.size(); ++c) {
    check_text(pd.series[c].name, "series name");
    out << (c ? "," : "") << pd.series[c].name << ':' << (pd.series[c].is_real() ? "real" : "label");
  }
  out << '\n';
  for (const auto& [role, value] : pd.annotations) {
    check_text(role, "annotation role");
    out << "# annotation: " << role << '=' << fmt(value) << '\n';
  }
  for (std::size_t c = 0; c < pd.series.size(); ++c) out << (c ? "," : "") << pd.series[c].name;
  out << '\n';
  for (std::size_t r = 0; r < pd.length(); ++r) {
    for (std::size_t c = 0; c < pd.series.size(); ++c) {
      if (c) out << ',';
      const auto& s = pd.series[c];
      if (s.is_real()) {
        out << fmt(s.reals()[r]);
      } else {
        check_text(s.labels()[r], "label");
        out << s.labels()[r];
      }
    }
    out << '\n';
  }
  return out.str();
}

PlotData plot_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  PlotData pd;
  bool have_kind = false;
  std::vector<std::pair<std::string, bool>> columns;  // name, is_real
  std::size_t line_no = 0;
  auto where = [&] { return "plot csv line " + std::to_string(line_no); };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("# ", 0) != 0) break;
    const auto colon = line.find(": ");
    if (colon == std::string::npos) throw ValidationError(where() + ": malformed metadata");
    const std::string key = line.substr(2, colon - 2);
    const std::string value = line.substr(colon + 2);
    if (key == "kind") {
      pd.kind = parse_plot_kind(value);
      have_kind = true;
    } else if (key == "x_label") {
      pd.x_label = value;
    } else if (key == "y_label") {
      pd.y_label = value;
    } else if (key == "columns") {
      for (const auto& spec : split(value, ',')) {
        const auto c = spec.rfind(':');
        if (c == std::string::npos) throw ValidationError(where() + ": malformed column spec");
        const std::string type = spec.substr(c + 1);
        if (type != "real" && type != "label") throw ValidationError(where() + ": bad column type");
        columns.emplace_back(spec.substr(0, c), type == "real");
      }
    } else if (key == "annotation") {
      const auto eq = value.rfind('=');
      if (eq == std::string::npos) throw ValidationError(where() + ": malformed annotation");
      pd.annotations.emplace_back(value.substr(0, eq), parse_real(value.substr(eq + 1), where()));
    } else {
      throw ValidationError(where() + ": unknown metadata key '" + key + "'");
    }
  }
  if (!have_kind) throw ValidationError("plot csv: missing '# kind:' line");
  const auto header = split(line, ',');
  if (header.size() != columns.size()) throw ValidationError(where() + ": header/columns mismatch");
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (header[c] != columns[c].first) throw ValidationError(where() + ": header/columns mismatch");
    if (columns[c].second) {
      pd.series.push_back(real_series(columns[c].first, {}));
    } else {
      pd.series.push_back(label_series(columns[c].first, {}));
    }
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto f = split(line, ',');
    if (f.size() != columns.size()) throw ValidationError(where() + ": wrong number of fields");
    for (std::size_t c = 0; c < f.size(); ++c) {
      auto& s = pd.series[c];
      if (columns[c].second) {
        std::get<std::vector<double>>(s.values).push_back(parse_real(f[c], where()));
      } else {
        std::get<std::vector<std::string>>(s.values).push_back(f[c]);
      }
    }
  }
  pd.validate();
  return pd;
}

namespace {

nlohmann::ordered_json real_to_json(double v) {
  if (std::isfinite(v)) return v;
  return fmt(v);
}

double real_from_json(const nlohmann::ordered_json& j) {
  if (j.is_string()) return parse_real(j.get<std::string>(), "plot json");
  return j.get<double>();
}

}  // namespace

std::string plot_to_json(const PlotData& pd) {
  pd.validate();
  nlohmann::ordered_json j;
  j["kind"] = to_string(pd.kind);
  j["x_label"] = pd.x_label;
  j["y_label"] = pd.y_label;
  auto series = nlohmann::ordered_json::array();
  for (const auto& s : pd.series) {
    nlohmann::ordered_json js;
    js["name"] = s.name;
    js["type"] = s.is_real() ? "real" : "label";
    if (s.is_real()) {
      auto arr = nlohmann::ordered_json::array();
      for (double v : s.reals()) arr.push_back(real_to_json(v));
      js["values"] = std::move(arr);
    } else {
      js["values"] = s.labels();
    }
    series.push_back(std::move(js));
  }
  j["series"] = std::move(series);
  auto ann = nlohmann::ordered_json::array();
  for (const auto& [role, value] : pd.annotations) {
    ann.push_back({{"role", role}, {"value", real_to_json(value)}});
  }
  j["annotations"] = std::move(ann);
  return j.dump() + "\n";
}

PlotData plot_from_json(const std::string& text) {
  PlotData pd;
  try {
    const auto j = nlohmann::ordered_json::parse(text);
    pd.kind = parse_plot_kind(j.at("kind").get<std::string>());
    pd.x_label = j.at("x_label").get<std::string>();
    pd.y_label = j.at("y_label").get<std::string>();
    for (const auto& js : j.at("series")) {
      const auto name = js.at("name").get<std::string>();
      if (js.at("type").get<std::string>() == "real") {
        std::vector<double> v;
        for (const auto& e : js.at("values")) v.push_back(real_from_json(e));
        pd.series.push_back(real_series(name, std::move(v)));
      } else {
        pd.series.push_back(label_series(name, js.at("values").get<std::vector<std::string>>()));
      }
    }
    for (const auto& a : j.at("annotations")) {
      pd.annotations.emplace_back(a.at("role").get<std::string>(), real_from_json(a.at("value")));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("plot json: ") + e.what());
  }
  pd.validate();
  return pd;
}

// ---- svg --------------------------------------------------------------------

namespace {

constexpr double kWidth = 800, kHeight = 600;
constexpr const char* kDivergent = "#1a9e3a";
constexpr const char* kPlain = "#3a3a3a";
constexpr const char* kObserved = "#08306b";
constexpr const char* kReplicate = "#a6c8e6";
constexpr std::array<const char*, 10> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                               "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                               "#bcbd22", "#17becf"};

struct Range {
  double lo = INFINITY, hi = -INFINITY;
  void add(double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  void add(const std::vector<double>& v) {
    for (double x : v) add(x);
  }
  Range padded() const {
    Range r = *this;
    if (!std::isfinite(r.lo)) return {0.0, 1.0};
    if (r.hi == r.lo) {
      const double d = r.lo == 0.0 ? 1.0 : 0.5 * std::abs(r.lo);
      return {r.lo - d, r.hi + d};
    }
    const double pad = 0.04 * (r.hi - r.lo);
    return {r.lo - pad, r.hi + pad};
  }
};

std::vector<double> nice_ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) {
    ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return ticks;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// Maps data coordinates of one panel to pixels.
struct Panel {
  double left, top, width, height;
  Range xr, yr;
  double sx() const { return width / (xr.hi - xr.lo); }
  double sy() const { return height / (yr.hi - yr.lo); }
  double X(double x) const { return left + (x - xr.lo) * sx(); }
  double Y(double y) const {
    if (y == INFINITY) return top;
    if (y == -INFINITY) return top + height;
    return top + height - (y - yr.lo) * sy();
  }
  // Transform placing data-unit path coordinates on this panel.
  std::string transform() const {
    return "matrix(" + fmt(sx()) + " 0 0 " + fmt(-sy()) + " " + fmt(left - xr.lo * sx()) + " " +
           fmt(top + height + yr.lo * sy()) + ")";
  }
};

class SvgWriter {
 public:
  explicit SvgWriter(const PlotData& pd) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
            "viewBox=\"0 0 800 600\" data-kind=\""
         << to_string(pd.kind) << "\">\n";
    out_ << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"#ffffff\"/>\n";
  }

  void axes(const Panel& p, const std::string& xlab, const std::string& ylab, bool x_ticks = true) {
    const double bottom = p.top + p.height, right = p.left + p.width;
    line(p.left, bottom, right, bottom, "#000000");
    line(p.left, p.top, p.left, bottom, "#000000");
    if (x_ticks) {
      for (double t : nice_ticks(p.xr.lo, p.xr.hi)) {
        line(p.X(t), bottom, p.X(t), bottom + 5, "#000000");
        text(p.X(t), bottom + 18, tick_label(t), "middle", 11);
      }
    }
    for (double t : nice_ticks(p.yr.lo, p.yr.hi)) {
      line(p.left - 5, p.Y(t), p.left, p.Y(t), "#000000");
      text(p.left - 8, p.Y(t) + 4, tick_label(t), "end", 11);
    }
    if (!xlab.empty()) text(p.left + p.width / 2, bottom + 38, xlab, "middle", 13);
    if (!ylab.empty()) {
      out_ << "<text x=\"16\" y=\"" << px(p.top + p.height / 2)
           << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
              "transform=\"rotate(-90 16 "
           << px(p.top + p.height / 2) << ")\">" << xml_escape(ylab) << "</text>\n";
    }
  }

  void line(double x1, double y1, double x2, double y2, const char* color, const char* extra = "") {
    out_ << "<line x1=\"" << px(x1) << "\" y1=\"" << px(y1) << "\" x2=\"" << px(x2) << "\" y2=\""
         << px(y2) << "\" stroke=\"" << color << "\" stroke-width=\"1\"" << extra << "/>\n";
  }

  void text(double x, double y, const std::string& s, const char* anchor, int size) {
    out_ << "<text x=\"" << px(x) << "\" y=\"" << px(y)
         << "\" font-family=\"sans-serif\" font-size=\"" << size << "\" text-anchor=\"" << anchor
         << "\">" << xml_escape(s) << "</text>\n";
  }

  // Marker in pixel space; the exact data values ride along as attributes.
  void point(const Panel& p, double x, double y, const char* color, double r, double opacity) {
    out_ << "<circle cx=\"" << px(p.X(x)) << "\" cy=\"" << px(p.Y(y)) << "\" r=\"" << px(r)
         << "\" fill=\"" << color << "\" fill-opacity=\"" << px(opacity) << "\" data-x=\"" << fmt(x)
         << "\" data-y=\"" << fmt(y) << "\"/>\n";
  }

  void begin_data_group(const Panel& p) { out_ << "<g transform=\"" << p.transform() << "\">\n"; }
  void end_group() { out_ << "</g>\n"; }

  // Polyline in data units inside a data group.
  void path(const std::vector<double>& xs, const std::vector<double>& ys, const char* color,
            double width, double opacity, const std::string& attrs = "") {
    out_ << "<path d=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      out_ << (i ? " L" : "M") << fmt(xs[i]) << ' ' << fmt(ys[i]);
    }
    out_ << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << px(width)
         << "\" stroke-opacity=\"" << px(opacity) << "\" vector-effect=\"non-scaling-stroke\""
         << attrs << "/>\n";
  }

  void rect_data(double x, double y, double w, double h, const char* color) {
    out_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
         << "\" height=\"" << fmt(h) << "\" fill=\"" << color
         << "\" stroke=\"#ffffff\" stroke-width=\"0.5\" vector-effect=\"non-scaling-stroke\"/>\n";
  }

  std::ostringstream& raw() { return out_; }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  std::ostringstream out_;
};

Panel main_panel(Range xr, Range yr) { return {70, 40, 700, 490, xr.padded(), yr.padded()}; }

std::map<std::string, const char*> label_colors(const std::vector<std::string>& labels) {
  std::vector<std::string> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::map<std::string, const char*> colors;
  for (std::size_t i = 0; i < sorted.size(); ++i) colors[sorted[i]] = kPalette[i % kPalette.size()];
  return colors;
}

void render_curves(SvgWriter& w, const PlotData& pd) {
  const auto& id = pd.at("curve").reals();
  const auto& role = pd.at("role").labels();
  const auto& x = pd.at("x").reals();
  const auto& d = pd.at("density").reals();
  Range xr, yr;
  xr.add(x);
  yr.add(d);
  yr.add(0.0);
  const Panel p = main_panel(xr, yr);
  w.axes(p, pd.x_label, pd.y_label);
  // Group rows into curves, then draw the observed curve(s) last.
  struct Curve {
    double id;
    std::string role;
    std::vector<double> x, d;
  };
  std::vector<Curve> curves;
  for (std::size_t r = 0; r < pd.length(); ++r) {
    if (curves.empty() || curves.back().id != id[r]) curves.push_back({id[r], role[r], {}, {}});
    curves.back().x.push_back(x[r]);
    curves.back().d.push_back(d[r]);
  }
  std::stable_partition(curves.begin(), curves.end(),
                        [](const Curve& c) { return c.role != "observed"; });
  w.begin_data_group(p);
  for (const auto& c : curves) {
    const bool obs = c.role == "observed";
    w.path(c.x, c.d, obs ? kObserved : kReplicate, obs ? 2.0 : 0.8, obs ? 1.0 : 0.7,
           " data-curve=\"" + fmt(c.id) + "\" data-role=\"" + c.role + "\"");
  }
  w.end_group();
}

void histogram(SvgWriter& w, const Panel& frame, const std::vector<double>& values, double observed,
               const std::string& title, const std::string& xlab) {
  Range vr;
  vr.add(values);
  vr.add(observed);
  vr = vr.padded();
  const int bins = 30;
  const double width = (vr.hi - vr.lo) / bins;
  std::vector<double> counts(bins, 0.0);
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    const int b = std::clamp(static_cast<int>((v - vr.lo) / width), 0, bins - 1);
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  Range yr;
  yr.add(0.0);
  yr.add(*std::max_element(counts.begin(), counts.end()) * 1.05);
  Panel p = frame;
  p.xr = vr;
  p.yr = yr.hi > 0 ? yr : Range{0.0, 1.0};
  w.axes(p, xlab, "");
  if (!title.empty()) w.text(p.left + p.width / 2, p.top - 6, title, "middle", 12);
  w.begin_data_group(p);
  for (int b = 0; b < bins; ++b) {
    if (counts[static_cast<std::size_t>(b)] > 0) {
      w.rect_data(vr.lo + b * width, 0.0, width, counts[static_cast<std::size_t>(b)], "#9ecae1");
    }
  }
  w.end_group();
  w.raw() << "<line x1=\"" << px(p.X(observed)) << "\" y1=\"" << px(p.top) << "\" x2=\""
          << px(p.X(observed)) << "\" y2=\"" << px(p.top + p.height) << "\" stroke=\"" << kObserved
          << "\" stroke-width=\"2\" data-x=\"" << fmt(observed) << "\" data-role=\"observed\"/>\n";
}

}  // namespace

std::string plot_to_svg(const PlotData& pd) {
  pd.validate();
  SvgWriter w(pd);
  switch (pd.kind) {
    case PlotKind::ScatterDivergences: {
      const auto& x = pd.at("x").reals();
      const auto& y = pd.at("y").reals();
      const auto& div = pd.at("divergent").reals();
      Range xr, yr;
      xr.add(x);
      yr.add(y);
      const Panel p = main_panel(xr, yr);
      w.axes(p, pd.x_label, pd.y_label);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const bool d = div[i] != 0.0;
        w.point(p, x[i], y[i], d ? kDivergent : kPlain, d ? 3.0 : 2.0, d ? 0.9 : 0.35);
      }
      break;
    }
    case PlotKind::ParallelCoordinates: {
      const auto& line = pd.at("line").reals();
      const auto& axis = pd.at("axis").labels();
      const auto& value = pd.at("value").reals();
      const auto& div = pd.at("divergent").reals();
      std::vector<std::string> axes;
      for (const auto& a : axis) {
        if (std::find(axes.begin(), axes.end(), a) == axes.end()) axes.push_back(a);
      }
      Range xr{0.0, static_cast<double>(axes.size() - 1)}, yr;
      yr.add(value);
      Panel p = main_panel(xr, yr);
      w.axes(p, "", pd.y_label, false);
      for (std::size_t a = 0; a < axes.size(); ++a) {
        const double X = p.X(static_cast<double>(a));
        w.line(X, p.top, X, p.top + p.height, "#bbbbbb");
        w.text(X, p.top + p.height + 18, axes[a], "middle", 11);
      }
      w.begin_data_group(p);
      std::size_t r = 0;
      while (r < pd.length()) {
        std::vector<double> xs, ys;
        const double id = line[r];
        const bool d = div[r] != 0.0;
        for (; r < pd.length() && line[r] == id; ++r) {
          xs.push_back(static_cast<double>(
              std::find(axes.begin(), axes.end(), axis[r]) - axes.begin()));
          ys.push_back(value[r]);
        }
        w.path(xs, ys, d ? kDivergent : kPlain, d ? 1.0 : 0.6, d ? 0.8 : 0.15);
      }
      w.end_group();
      break;
    }
    case PlotKind::DensityOverlay:
    case PlotKind::PitOverlay:
      render_curves(w, pd);
      break;
    case PlotKind::StatHistogram: {
      histogram(w, {70, 40, 700, 490, {}, {}}, pd.at("value").reals(), pd.annotation("observed"),
                "", pd.x_label);
      break;
    }
    case PlotKind::GroupedStatHistogram: {
      const auto& group = pd.at("group").labels();
      const auto& value = pd.at("value").reals();
      std::vector<std::string> groups;
      for (const auto& g : group) {
        if (groups.empty() || groups.back() != g) groups.push_back(g);
      }
      const std::size_t cols = groups.size() <= 4 ? 2 : 3;
      const std::size_t rows = (groups.size() + cols - 1) / cols;
      const double cw = (kWidth - 40) / static_cast<double>(cols);
      const double ch = (kHeight - 20) / static_cast<double>(rows);
      for (std::size_t k = 0; k < groups.size(); ++k) {
        std::vector<double> vals;
        for (std::size_t r = 0; r < pd.length(); ++r) {
          if (group[r] == groups[k]) vals.push_back(value[r]);
        }
        const double left = 20 + static_cast<double>(k % cols) * cw + 45;
        const double top = 10 + static_cast<double>(k / cols) * ch + 22;
        histogram(w, {left, top, cw - 60, ch - 60, {}, {}}, vals,
                  pd.annotation("observed:" + groups[k]), groups[k], "");
      }
      break;
    }
    case PlotKind::KhatScatter: {
      const auto& idx = pd.at("index").reals();
      const auto& k = pd.at("khat").reals();
      const auto& band = pd.at("band").labels();
      Range xr, yr;
      xr.add(idx);
      yr.add(k);
      for (const auto& [role, v] : pd.annotations) yr.add(v);
      const Panel p = main_panel(xr, yr);
      w.axes(p, pd.x_label, pd.y_label);
      for (const auto& [role, v] : pd.annotations) {
        if (role == "threshold") w.line(p.left, p.Y(v), p.left + p.width, p.Y(v), "#999999", " stroke-dasharray=\"4 3\"");
      }
      for (std::size_t i = 0; i < k.size(); ++i) {
        const char* color = band[i] == "good" ? "#4d4d4d"
                            : band[i] == "ok" ? "#e6a700"
                            : band[i] == "bad" ? "#d62728"
                                               : "#7b0000";
        w.point(p, idx[i], k[i], color, 2.5, 0.8);
      }
      break;
    }
    case PlotKind::ElpdDiffScatter:
    case PlotKind::FlipBookPage: {
      const bool elpd = pd.kind == PlotKind::ElpdDiffScatter;
      const auto& x = pd.at(elpd ? "index" : "x").reals();
      const auto& y = pd.at(elpd ? "elpd_diff" : "y").reals();
      const auto& group = pd.at("group").labels();
      Range xr, yr;
      xr.add(x);
      yr.add(y);
      if (elpd) yr.add(0.0);
      const Panel p = main_panel(xr, yr);
      w.axes(p, pd.x_label, pd.y_label);
      if (elpd) w.line(p.left, p.Y(0.0), p.left + p.width, p.Y(0.0), "#999999");
      const auto colors = label_colors(group);
      for (std::size_t i = 0; i < x.size(); ++i) w.point(p, x[i], y[i], colors.at(group[i]), 2.5, 0.7);
      break;
    }
  }
  return w.finish();
}

void emit_plot(const PlotData& pd, PlotFormat format, const std::filesystem::path& path) {
  std::string body;
  switch (format) {
    case PlotFormat::Svg: body = plot_to_svg(pd); break;
    case PlotFormat::Csv: body = plot_to_csv(pd); break;
    case PlotFormat::Json: body = plot_to_json(pd); break;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << body;
  if (!out) throw IoError("write failed for " + path.string());
}

PlotData read_plot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto ext = path.extension().string();
  if (ext == ".json") return plot_from_json(buf.str());
  if (ext == ".csv") return plot_from_csv(buf.str());
  throw ValidationError(path.string() + ": plot data must be .csv or .json");
}

}  // namespace bwf
