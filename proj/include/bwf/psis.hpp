#ifndef BWF_PSIS_HPP
#define BWF_PSIS_HPP

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bwf/matrix.hpp"

namespace bwf {

struct GpdFit {
  double khat = 0.0;
  double sigma = 0.0;
};

/// Zhang-Stephens fit of a generalized Pareto to exceedances (sorted
/// ascending, non-negative, at least 5 values), with the weak prior
/// k <- (M k + 5) / (M + 10). An all-equal tail gives khat = +inf.
GpdFit gpd_fit_tail(std::span<const double> tail);

enum class PsisStatus { Smoothed, InsufficientTail, Degenerate };

std::string to_string(PsisStatus status);

struct PsisResult {
  std::vector<double> log_weights;  // max is 0
  double khat = 0.0;                // +inf unless status == Smoothed
  PsisStatus status = PsisStatus::Smoothed;
};

/// Tail size ceil(min(0.2 S, 3 sqrt(S))).
std::size_t psis_tail_length(std::size_t S);

/// Pareto-smoothed importance weights from raw log ratios. Fewer than 25
/// ratios, or a flat tail, leave the weights unsmoothed.
PsisResult psis_smooth(std::span<const double> log_ratios);

enum class KhatBand { Good, Ok, Bad, VeryBad };

/// good <= 0.5 < ok <= 0.7 < bad <= 1 < very bad
KhatBand khat_band(double khat);
std::string to_string(KhatBand band);

struct LooResult {
  std::vector<double> pointwise_elpd;
  std::vector<double> khat;
  std::vector<PsisStatus> status;
  Matrix smoothed_log_weights;  // S x n
  std::vector<double> lpd;      // log mean_s p(y_i | theta_s), full-data fit
  double elpd_total = 0.0;
  double elpd_se = 0.0;

  /// lpd_i - elpd_i: how much observation i pulls on its own prediction.
  std::vector<double> influence() const;
};

/// PSIS-LOO from a matrix of pointwise log likelihoods (S draws x n points).
/// Throws ValidationError naming (s, i) on a non-finite entry.
LooResult elpd_loo(const Matrix& log_lik);

struct LooComparison {
  std::vector<double> pointwise_diff;  // b - a
  double diff_total = 0.0;
  double diff_se = 0.0;
  std::optional<std::vector<std::string>> group;
};

LooComparison loo_compare(const LooResult& a, const LooResult& b,
                          const std::optional<std::vector<std::string>>& group = std::nullopt);

/// `index,elpd,khat`
void write_loo_csv(const std::filesystem::path& path, const LooResult& loo);
/// Pointwise elpd and k-hat back from write_loo_csv (no weights or lpd).
LooResult read_loo_csv(const std::filesystem::path& path);
/// `index,elpd_diff,group`
void write_compare_csv(const std::filesystem::path& path, const LooComparison& cmp);

}  // namespace bwf

#endif  // BWF_PSIS_HPP
