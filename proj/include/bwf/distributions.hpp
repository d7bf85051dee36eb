#ifndef BWF_DISTRIBUTIONS_HPP
#define BWF_DISTRIBUTIONS_HPP

#include <array>
#include <string>

#include "bwf/rng.hpp"

namespace bwf {

enum class DistKind { Normal, HalfNormal, InvGamma, Uniform, GenPareto };

std::string to_string(DistKind kind);

/// One of the five distribution families used by the models and diagnostics.
///
/// Parameter slots by kind:
///   Normal     (mean, sd)
///   HalfNormal (sd)                  support [0, inf)
///   InvGamma   (shape, scale)        density ~ x^(-shape-1) exp(-scale/x)
///   Uniform    (lower, upper)
///   GenPareto  (location, scale, k)  k > 0 is a heavy tail
///
/// Densities need strictly positive scales. Sampling also accepts a zero
/// scale (or an empty uniform interval) and then returns the point mass.
struct DistSpec {
  DistKind kind = DistKind::Normal;
  std::array<double, 3> params{0.0, 1.0, 0.0};

  static DistSpec normal(double mean, double sd) { return {DistKind::Normal, {mean, sd, 0.0}}; }
  static DistSpec half_normal(double sd) { return {DistKind::HalfNormal, {sd, 0.0, 0.0}}; }
  static DistSpec inv_gamma(double shape, double scale) {
    return {DistKind::InvGamma, {shape, scale, 0.0}};
  }
  static DistSpec uniform(double lower, double upper) {
    return {DistKind::Uniform, {lower, upper, 0.0}};
  }
  static DistSpec gen_pareto(double location, double scale, double shape) {
    return {DistKind::GenPareto, {location, scale, shape}};
  }

  /// Human-readable form, e.g. "normal(0, 100)".
  std::string describe() const;

  friend bool operator==(const DistSpec&, const DistSpec&) = default;
};

/// Natural-log density; -infinity outside the support.
double logpdf(const DistSpec& dist, double x);

/// d/dx logpdf(dist, x); zero outside the support.
double dlogpdf(const DistSpec& dist, double x);

double sample(const DistSpec& dist, RngStream& rng);

/// Generalized Pareto quantile function, 0 <= p < 1, sigma > 0.
double gpd_inv_cdf(double k, double sigma, double location, double p);

/// Throws DomainError unless the parameters define a proper density.
void validate_density(const DistSpec& dist);

/// Weaker check used before sampling: zero scales are allowed.
void validate_sampling(const DistSpec& dist);

}  // namespace bwf

#endif  // BWF_DISTRIBUTIONS_HPP
