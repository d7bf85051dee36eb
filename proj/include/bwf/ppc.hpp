#ifndef BWF_PPC_HPP
#define BWF_PPC_HPP

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bwf/matrix.hpp"
#include "bwf/rng.hpp"

namespace bwf {

enum class CurveRole { Observed, Replicate, UniformReference };

std::string to_string(CurveRole role);

struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> density;
  CurveRole label = CurveRole::Observed;
};

/// Silverman bandwidth 0.9 * min(sd, IQR / 1.34) * n^(-1/5); falls back to
/// sd alone when the IQR is zero. Throws ValidationError if it is zero.
double silverman_bandwidth(std::span<const double> values);

/// Gaussian KDE on n_grid equispaced points spanning [min - 3h, max + 3h].
DensityCurve kde(std::span<const double> values, int n_grid = 256,
                 CurveRole label = CurveRole::Observed);

enum class StatKind { Skew, Median, Mean, SD };

std::string to_string(StatKind kind);
StatKind parse_stat_kind(const std::string& text);

/// Skew is m3 / m2^(3/2) with 1/n central moments, Median the lower median,
/// SD uses the n - 1 denominator.
double test_stat(std::span<const double> values, StatKind kind);

struct StatCheck {
  StatKind stat = StatKind::Mean;
  double observed = 0.0;
  std::vector<double> replicated;
  std::optional<std::string> group;
  double p_upper = 0.0;  // fraction of replicated >= observed
  double p_lower = 0.0;  // fraction of replicated <= observed

  double min_tail() const noexcept { return p_upper < p_lower ? p_upper : p_lower; }
};

/// Group index per observation plus the group labels.
struct Grouping {
  std::vector<int> index;
  std::vector<std::string> names;
};

struct PpcResult {
  std::vector<StatCheck> checks;
  std::vector<std::string> notes;  // groups that were skipped and why
};

/// One check for all of y, or one per group when `groups` is given. Rows of
/// yrep are replicated datasets aligned with y.
PpcResult ppc_stat_check(std::span<const double> y, const Matrix& yrep, StatKind kind,
                         const std::optional<Grouping>& groups = std::nullopt);

/// Observed density followed by n_curves replicate densities taken from
/// evenly spaced rows of yrep.
std::vector<DensityCurve> ppc_density_overlay(std::span<const double> y, const Matrix& yrep,
                                              int n_curves = 100, int n_grid = 256);

/// Weighted probability integral transform of each y_i under its
/// leave-one-out predictive. log_weights are PSIS-smoothed, S x n.
std::vector<double> loo_pit(std::span<const double> y, const Matrix& yrep,
                            const Matrix& log_weights);

/// Kolmogorov-Smirnov distance of a sample from Uniform(0, 1).
double ks_uniform_distance(std::span<const double> values);

/// 1% critical value 1.63 / sqrt(n).
inline double ks_critical_1pct(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

/// KDEs of n_curves uniform samples of size n, for the LOO-PIT overlay.
std::vector<DensityCurve> uniform_reference_curves(std::size_t n, int n_curves, RngStream& rng,
                                                   int n_grid = 256);

}  // namespace bwf

#endif  // BWF_PPC_HPP
