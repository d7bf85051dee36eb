#include "bwf/ppc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bwf/error.hpp"
#include "bwf/stats.hpp"

namespace bwf {

std::string to_string(CurveRole role) {
  switch (role) {
    case CurveRole::Observed: return "observed";
    case CurveRole::Replicate: return "replicate";
    case CurveRole::UniformReference: return "uniform-reference";
  }
  return "?";
}

std::string to_string(StatKind kind) {
  switch (kind) {
    case StatKind::Skew: return "skew";
    case StatKind::Median: return "median";
    case StatKind::Mean: return "mean";
    case StatKind::SD: return "sd";
  }
  return "?";
}

StatKind parse_stat_kind(const std::string& text) {
  for (auto k : {StatKind::Skew, StatKind::Median, StatKind::Mean, StatKind::SD}) {
    if (to_string(k) == text) return k;
  }
  throw ValidationError("unknown statistic '" + text + "' (expected skew, median, mean or sd)");
}

double silverman_bandwidth(std::span<const double> values) {
  if (values.size() < 2) throw ValidationError("kde needs at least 2 values");
  const double sd = stats::sd(values);
  const double iqr = stats::quantile(values, 0.75) - stats::quantile(values, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  const double h = 0.9 * spread * std::pow(static_cast<double>(values.size()), -0.2);
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw ValidationError("kde: zero bandwidth (input values are all equal)");
  }
  return h;
}

DensityCurve kde(std::span<const double> values, int n_grid, CurveRole label) {
  if (n_grid < 2) throw ValidationError("kde: n_grid must be at least 2");
  const double h = silverman_bandwidth(values);
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it - 3.0 * h;
  const double hi = *hi_it + 3.0 * h;
  DensityCurve curve;
  curve.label = label;
  curve.grid.resize(static_cast<std::size_t>(n_grid));
  curve.density.assign(static_cast<std::size_t>(n_grid), 0.0);
  for (int g = 0; g < n_grid; ++g) {
    curve.grid[static_cast<std::size_t>(g)] = lo + (hi - lo) * g / (n_grid - 1);
  }
  // Sorted input makes the sum independent of the input order.
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double norm = 1.0 / (static_cast<double>(sorted.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t g = 0; g < curve.grid.size(); ++g) {
    double acc = 0.0;
    for (double v : sorted) {
      const double z = (curve.grid[g] - v) / h;
      acc += std::exp(-0.5 * z * z);
    }
    curve.density[g] = acc * norm;
  }
  return curve;
}

double test_stat(std::span<const double> values, StatKind kind) {
  const std::size_t n = values.size();
  switch (kind) {
    case StatKind::Skew: {
      if (n < 3) throw ValidationError("skew needs at least 3 values");
      const double m = stats::mean(values);
      double m2 = 0.0, m3 = 0.0;
      for (double v : values) {
        const double d = v - m;
        m2 += d * d;
        m3 += d * d * d;
      }
      m2 /= static_cast<double>(n);
      m3 /= static_cast<double>(n);
      if (!(m2 > 0.0)) throw ValidationError("skew undefined for constant values");
      return m3 / std::pow(m2, 1.5);
    }
    case StatKind::Median: {
      if (n == 0) throw ValidationError("median of no values");
      std::vector<double> v(values.begin(), values.end());
      const auto mid = v.begin() + static_cast<std::ptrdiff_t>((n - 1) / 2);
      std::nth_element(v.begin(), mid, v.end());
      return *mid;
    }
    case StatKind::Mean:
      if (n == 0) throw ValidationError("mean of no values");
      return stats::mean(values);
    case StatKind::SD:
      if (n < 2) throw ValidationError("sd needs at least 2 values");
      return stats::sd(values);
  }
  return 0.0;
}

namespace {

StatCheck make_check(std::span<const double> y, const Matrix& yrep,
                     const std::vector<std::size_t>* members, StatKind kind) {
  StatCheck check;
  check.stat = kind;
  std::vector<double> buf;
  if (members) {
    buf.reserve(members->size());
    for (auto i : *members) buf.push_back(y[i]);
    check.observed = test_stat(buf, kind);
  } else {
    check.observed = test_stat(y, kind);
  }
  check.replicated.reserve(yrep.rows());
  std::size_t upper = 0, lower = 0;
  for (std::size_t s = 0; s < yrep.rows(); ++s) {
    const auto row = yrep.row(s);
    double t;
    if (members) {
      buf.clear();
      for (auto i : *members) buf.push_back(row[i]);
      t = test_stat(buf, kind);
    } else {
      t = test_stat(row, kind);
    }
    check.replicated.push_back(t);
    if (t >= check.observed) ++upper;
    if (t <= check.observed) ++lower;
  }
  const double S = static_cast<double>(yrep.rows());
  check.p_upper = static_cast<double>(upper) / S;
  check.p_lower = static_cast<double>(lower) / S;
  return check;
}

}  // namespace

PpcResult ppc_stat_check(std::span<const double> y, const Matrix& yrep, StatKind kind,
                         const std::optional<Grouping>& groups) {
  if (yrep.cols() != y.size()) {
    throw ValidationError("ppc: yrep has " + std::to_string(yrep.cols()) + " columns but y has " +
                          std::to_string(y.size()) + " values");
  }
  if (yrep.rows() == 0) throw ValidationError("ppc: no replicated datasets");
  PpcResult result;
  if (!groups) {
    result.checks.push_back(make_check(y, yrep, nullptr, kind));
    return result;
  }
  if (groups->index.size() != y.size()) {
    throw ValidationError("ppc: group index length differs from y");
  }
  std::vector<std::vector<std::size_t>> members(groups->names.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const int g = groups->index[i];
    if (g < 0 || static_cast<std::size_t>(g) >= members.size()) {
      throw ValidationError("ppc: observation " + std::to_string(i) + " has an invalid group");
    }
    members[static_cast<std::size_t>(g)].push_back(i);
  }
  const std::size_t needed = kind == StatKind::Skew ? 3 : kind == StatKind::SD ? 2 : 1;
  for (std::size_t j = 0; j < members.size(); ++j) {
    const auto& name = groups->names[j];
    if (members[j].size() < needed) {
      result.notes.push_back("group " + name + " skipped: " + std::to_string(members[j].size()) +
                             " observations, " + to_string(kind) + " needs " +
                             std::to_string(needed));
      continue;
    }
    try {
      auto check = make_check(y, yrep, &members[j], kind);
      check.group = name;
      result.checks.push_back(std::move(check));
    } catch (const ValidationError& e) {
      result.notes.push_back("group " + name + " skipped: " + e.what());
    }
  }
  return result;
}

std::vector<DensityCurve> ppc_density_overlay(std::span<const double> y, const Matrix& yrep,
                                              int n_curves, int n_grid) {
  if (yrep.cols() != y.size()) throw ValidationError("ppc: yrep columns differ from y");
  if (n_curves < 0 || static_cast<std::size_t>(n_curves) > yrep.rows()) {
    throw ValidationError("ppc: asked for " + std::to_string(n_curves) + " curves from " +
                          std::to_string(yrep.rows()) + " replicates");
  }
  std::vector<DensityCurve> curves;
  curves.push_back(kde(y, n_grid, CurveRole::Observed));
  for (int c = 0; c < n_curves; ++c) {
    const std::size_t s = static_cast<std::size_t>(c) * yrep.rows() / static_cast<std::size_t>(n_curves);
    curves.push_back(kde(yrep.row(s), n_grid, CurveRole::Replicate));
  }
  return curves;
}

std::vector<double> loo_pit(std::span<const double> y, const Matrix& yrep,
                            const Matrix& log_weights) {
  if (yrep.cols() != y.size() || log_weights.cols() != y.size() ||
      log_weights.rows() != yrep.rows()) {
    throw ValidationError("loo_pit: y, yrep and log_weights dimensions disagree");
  }
  if (yrep.rows() == 0) throw ValidationError("loo_pit: no draws");
  std::vector<double> pit(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    double max_lw = -INFINITY;
    for (std::size_t s = 0; s < yrep.rows(); ++s) max_lw = std::max(max_lw, log_weights(s, i));
    double below = 0.0, total = 0.0;
    for (std::size_t s = 0; s < yrep.rows(); ++s) {
      const double w = std::exp(log_weights(s, i) - max_lw);
      total += w;
      if (yrep(s, i) <= y[i]) below += w;
    }
    pit[i] = std::clamp(below / total, 0.0, 1.0);
  }
  return pit;
}

double ks_uniform_distance(std::span<const double> values) {
  if (values.empty()) throw ValidationError("ks: no values");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double u = std::clamp(v[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
  }
  return d;
}

std::vector<DensityCurve> uniform_reference_curves(std::size_t n, int n_curves, RngStream& rng,
                                                   int n_grid) {
  std::vector<DensityCurve> curves;
  std::vector<double> u(n);
  for (int c = 0; c < n_curves; ++c) {
    for (auto& v : u) v = rng.uniform();
    curves.push_back(kde(u, n_grid, CurveRole::UniformReference));
  }
  return curves;
}

}  // namespace bwf
