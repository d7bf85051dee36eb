#include <doctest.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <regex>
#include <string>

#include "bwf/data_pipeline.hpp"
#include "bwf/error.hpp"
#include "bwf/plots.hpp"
#include "bwf/ppc.hpp"
#include "bwf/sampler.hpp"
#include "helpers.hpp"

using namespace bwf;
namespace fs = std::filesystem;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

const FitResult& centered_fit() {
  static const FitResult fit = [] {
    SamplerConfig c;
    c.seed = 11;
    return run_chains(ModelSpec::make(ModelKind::EightSchoolsCentered), eight_schools_dataset(), c);
  }();
  return fit;
}

double sd_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

PlotData sample_plot() {
  PlotData pd;
  pd.kind = PlotKind::StatHistogram;
  pd.x_label = "skew";
  pd.y_label = "count";
  pd.series = {{"value", std::vector<double>{0.1, -2.5e-7, 3.0, 1.0 / 3.0}}};
  pd.annotations = {{"observed", 0.25}, {"p_upper", 0.5}, {"p_lower", 0.75}};
  return pd;
}

}  // namespace

TEST_CASE("plot data csv and json round trips") {
  const PlotData pd = sample_plot();
  CHECK(plot_from_csv(plot_to_csv(pd)) == pd);
  CHECK(plot_from_json(plot_to_json(pd)) == pd);

  PlotData labelled;
  labelled.kind = PlotKind::KhatScatter;
  labelled.series = {{"index", std::vector<double>{0, 1}},
                     {"khat", std::vector<double>{0.2, INFINITY}},
                     {"band", std::vector<std::string>{"good", "very bad"}}};
  CHECK(plot_from_csv(plot_to_csv(labelled)) == labelled);
  const auto back = plot_from_json(plot_to_json(labelled));
  CHECK(std::isinf(back.at("khat").reals()[1]));

  const auto dir = fs::temp_directory_path();
  emit_plot(pd, PlotFormat::Csv, dir / "bwf_plot.csv");
  emit_plot(pd, PlotFormat::Json, dir / "bwf_plot.json");
  CHECK(read_plot(dir / "bwf_plot.csv") == pd);
  CHECK(read_plot(dir / "bwf_plot.json") == pd);
  fs::remove(dir / "bwf_plot.csv");
  fs::remove(dir / "bwf_plot.json");
}

TEST_CASE("plot data validation") {
  PlotData pd = sample_plot();
  pd.series.push_back({"extra", std::vector<double>{1.0}});
  CHECK_THROWS_AS(pd.validate(), ValidationError);
  PlotData missing;
  missing.kind = PlotKind::ScatterDivergences;
  missing.series = {{"x", std::vector<double>{1.0}}};
  CHECK_THROWS_AS(missing.validate(), ValidationError);
  PlotData comma = sample_plot();
  comma.x_label = "a,b";
  CHECK_THROWS_AS(plot_to_csv(comma), ValidationError);
  CHECK_THROWS_AS(parse_plot_format("png"), ValidationError);
}

TEST_CASE("svg is deterministic and uses a fixed canvas") {
  const PlotData pd = sample_plot();
  const auto a = plot_to_svg(pd);
  CHECK(a == plot_to_svg(pd));
  CHECK(a.find("width=\"800\"") != std::string::npos);
  CHECK(a.find("height=\"600\"") != std::string::npos);
}

TEST_CASE("density overlay with 100 replicates renders 101 paths") {
  RngStream rng(1);
  std::vector<double> y(40);
  for (auto& v : y) v = rng.normal();
  Matrix rep(200, 40);
  for (std::size_t s = 0; s < rep.rows(); ++s) {
    for (std::size_t i = 0; i < rep.cols(); ++i) rep(s, i) = rng.normal();
  }
  const auto svg = plot_to_svg(density_overlay_data(ppc_density_overlay(y, rep, 100, 64)));
  CHECK(count(svg, "<path") == 101);
}

TEST_CASE("divergence scatter bookkeeping and svg coordinates") {
  Draws d = test::make_draws({"a", "b"}, {{1.0, 2.0}, {0.1, 1e-9}, {-3.5, 7.25}});
  d.divergent[0] = true;
  const auto pd = divergence_scatter_data(d, "a", "b");
  CHECK(pd.length() == 3);
  CHECK(pd.at("divergent").reals() == std::vector<double>{0.0, 0.0, 1.0});
  CHECK(pd.at("x").reals().back() == 1.0);

  const std::string svg = plot_to_svg(pd);
  const std::regex circle("data-x=\"([^\"]+)\" data-y=\"([^\"]+)\"");
  std::vector<std::pair<double, double>> pts;
  for (std::sregex_iterator it(svg.begin(), svg.end(), circle), end; it != end; ++it) {
    pts.emplace_back(std::stod((*it)[1]), std::stod((*it)[2]));
  }
  REQUIRE(pts.size() == 3);
  const auto& xs = pd.at("x").reals();
  const auto& ys = pd.at("y").reals();
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(pts[i].first == xs[i]);
    CHECK(pts[i].second == ys[i]);
  }
  CHECK(svg.find("#1a9e3a") != std::string::npos);

  Draws clean = test::make_draws({"a", "b"}, {{1.0, 2.0}, {0.0, 1.0}});
  const auto none = divergence_scatter_data(clean, "a", "b").at("divergent").reals();
  CHECK(std::all_of(none.begin(), none.end(), [](double v) { return v == 0.0; }));
  CHECK_THROWS_AS(divergence_scatter_data(clean, "a", "zz"), ValidationError);
}

TEST_CASE("centered 8-schools divergences sit low in the funnel") {
  const auto& fit = centered_fit();
  const auto pd = divergence_scatter_data(fit.draws, "theta[1]", "log(tau)");
  CHECK(pd.length() == 4000);
  const auto& y = pd.at("y").reals();
  const auto& div = pd.at("divergent").reals();
  double all = 0.0, d = 0.0;
  std::size_t nd = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    all += y[i];
    if (div[i] > 0) {
      d += y[i];
      ++nd;
    }
  }
  REQUIRE(nd > 0);
  CHECK(d / static_cast<double>(nd) < all / static_cast<double>(y.size()));
}

TEST_CASE("parallel coordinates") {
  Draws one = test::make_draws({"a", "b", "c"}, {{1.0, 2.0, 3.0}});
  const auto single = parcoord_data(one, {"a", "b", "c"}, false);
  CHECK(single.length() == 3);
  CHECK_THROWS_AS(parcoord_data(one, {"a"}, false), ValidationError);
  CHECK_THROWS_AS(parcoord_data(one, {"a", "zz"}, false), ValidationError);

  const auto& fit = centered_fit();
  std::vector<std::string> thetas;
  for (int j = 1; j <= 8; ++j) thetas.push_back("theta[" + std::to_string(j) + "]");

  const auto std_pd = parcoord_data(fit.draws, thetas, true);
  const auto& axis = std_pd.at("axis").labels();
  const auto& val = std_pd.at("value").reals();
  for (const auto& name : thetas) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < val.size(); ++i) {
      if (axis[i] == name) {
        sum += val[i];
        ++n;
      }
    }
    CHECK(std::abs(sum / static_cast<double>(n)) < 1e-10);
  }

  // divergent polylines are flatter than typical ones
  const auto pd = parcoord_data(fit.draws, thetas, false);
  const auto& line = pd.at("line").reals();
  const auto& v = pd.at("value").reals();
  const auto& div = pd.at("divergent").reals();
  std::vector<double> div_sd, ok_sd;
  for (std::size_t start = 0; start < line.size(); start += thetas.size()) {
    std::vector<double> poly(v.begin() + static_cast<long>(start),
                             v.begin() + static_cast<long>(start + thetas.size()));
    (div[start] > 0 ? div_sd : ok_sd).push_back(sd_of(poly));
  }
  REQUIRE(!div_sd.empty());
  std::sort(ok_sd.begin(), ok_sd.end());
  const double median_ok = ok_sd[ok_sd.size() / 2];
  double mean_div = 0.0;
  for (double s : div_sd) mean_div += s;
  mean_div /= static_cast<double>(div_sd.size());
  CHECK(mean_div < median_ok);
}

TEST_CASE("builders produce valid plot data") {
  auto book_model = ModelSpec::make(ModelKind::Pooled);
  const Dataset d = test::toy_grouped(2, 5, 3);
  RngStream rng(2);
  const auto book = prior_flipbook(book_model, d, 2, rng);
  const auto page = flipbook_page_data(book, d, 1);
  CHECK(page.annotation("page") == 1.0);
  CHECK_THROWS_AS(flipbook_page_data(book, d, 2), ValidationError);

  StatCheck c;
  c.stat = StatKind::Skew;
  c.observed = 0.3;
  c.replicated = {0.1, 0.5};
  c.p_upper = 0.5;
  c.p_lower = 0.5;
  const auto h = stat_histogram_data(c);
  CHECK(h.annotation("observed") == 0.3);
  c.group = "g1";
  const auto g = grouped_stat_histogram_data({c});
  CHECK(g.annotation("observed:g1") == 0.3);

  for (const auto& pd : {page, h, g}) {
    CHECK_NOTHROW(pd.validate());
    CHECK(plot_from_csv(plot_to_csv(pd)) == pd);
  }
}
