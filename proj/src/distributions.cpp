#include "bwf/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bwf/error.hpp"

namespace bwf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

[[noreturn]] void domain_fail(const DistSpec& dist, const char* why) {
  throw DomainError(dist.describe() + ": " + why);
}

void require_finite(const DistSpec& dist) {
  for (double p : dist.params) {
    if (!std::isfinite(p)) domain_fail(dist, "parameters must be finite");
  }
}

}  // namespace

std::string to_string(DistKind kind) {
  switch (kind) {
    case DistKind::Normal: return "normal";
    case DistKind::HalfNormal: return "half_normal";
    case DistKind::InvGamma: return "inv_gamma";
    case DistKind::Uniform: return "uniform";
    case DistKind::GenPareto: return "gen_pareto";
  }
  return "unknown";
}

std::string DistSpec::describe() const {
  std::ostringstream os;
  os << to_string(kind) << '(';
  switch (kind) {
    case DistKind::HalfNormal: os << params[0]; break;
    case DistKind::GenPareto: os << params[0] << ", " << params[1] << ", " << params[2]; break;
    default: os << params[0] << ", " << params[1]; break;
  }
  os << ')';
  return os.str();
}

void validate_density(const DistSpec& dist) {
  require_finite(dist);
  const auto& p = dist.params;
  switch (dist.kind) {
    case DistKind::Normal:
      if (!(p[1] > 0)) domain_fail(dist, "sd must be positive");
      break;
    case DistKind::HalfNormal:
      if (!(p[0] > 0)) domain_fail(dist, "sd must be positive");
      break;
    case DistKind::InvGamma:
      if (!(p[0] > 0) || !(p[1] > 0)) domain_fail(dist, "shape and scale must be positive");
      break;
    case DistKind::Uniform:
      if (!(p[1] > p[0])) domain_fail(dist, "upper bound must exceed lower bound");
      break;
    case DistKind::GenPareto:
      if (!(p[1] > 0)) domain_fail(dist, "scale must be positive");
      break;
  }
}

void validate_sampling(const DistSpec& dist) {
  require_finite(dist);
  const auto& p = dist.params;
  switch (dist.kind) {
    case DistKind::Normal:
      if (p[1] < 0) domain_fail(dist, "sd must be non-negative");
      break;
    case DistKind::HalfNormal:
      if (p[0] < 0) domain_fail(dist, "sd must be non-negative");
      break;
    case DistKind::Uniform:
      if (p[1] < p[0]) domain_fail(dist, "upper bound below lower bound");
      break;
    default:
      validate_density(dist);
  }
}

double logpdf(const DistSpec& dist, double x) {
  validate_density(dist);
  const auto& p = dist.params;
  switch (dist.kind) {
    case DistKind::Normal: {
      const double z = (x - p[0]) / p[1];
      return -0.5 * z * z - std::log(p[1]) - kLogSqrt2Pi;
    }
    case DistKind::HalfNormal: {
      if (x < 0) return kNegInf;
      const double z = x / p[0];
      return std::log(2.0) - 0.5 * z * z - std::log(p[0]) - kLogSqrt2Pi;
    }
    case DistKind::InvGamma: {
      if (x <= 0) return kNegInf;
      return p[0] * std::log(p[1]) - std::lgamma(p[0]) - (p[0] + 1.0) * std::log(x) - p[1] / x;
    }
    case DistKind::Uniform:
      if (x < p[0] || x > p[1]) return kNegInf;
      return -std::log(p[1] - p[0]);
    case DistKind::GenPareto: {
      const double z = (x - p[0]) / p[1];
      const double k = p[2];
      if (z < 0) return kNegInf;
      if (k == 0.0) return -std::log(p[1]) - z;
      if (k < 0 && z > -1.0 / k) return kNegInf;
      return -std::log(p[1]) - (1.0 + 1.0 / k) * std::log1p(k * z);
    }
  }
  return kNegInf;
}

double dlogpdf(const DistSpec& dist, double x) {
  validate_density(dist);
  const auto& p = dist.params;
  switch (dist.kind) {
    case DistKind::Normal:
      return -(x - p[0]) / (p[1] * p[1]);
    case DistKind::HalfNormal:
      return x < 0 ? 0.0 : -x / (p[0] * p[0]);
    case DistKind::InvGamma:
      return x <= 0 ? 0.0 : -(p[0] + 1.0) / x + p[1] / (x * x);
    case DistKind::Uniform:
      return 0.0;
    case DistKind::GenPareto: {
      const double z = (x - p[0]) / p[1];
      const double k = p[2];
      if (z < 0 || (k < 0 && z > -1.0 / k)) return 0.0;
      return -(1.0 + k) / (p[1] * (1.0 + k * z));
    }
  }
  return 0.0;
}

double sample(const DistSpec& dist, RngStream& rng) {
  validate_sampling(dist);
  const auto& p = dist.params;
  switch (dist.kind) {
    case DistKind::Normal:
      if (p[1] == 0.0) return p[0];
      return p[0] + p[1] * rng.normal();
    case DistKind::HalfNormal:
      if (p[0] == 0.0) return 0.0;
      return std::abs(p[0] * rng.normal());
    case DistKind::InvGamma:
      return p[1] / rng.gamma(p[0]);
    case DistKind::Uniform:
      if (p[0] == p[1]) return p[0];
      return p[0] + (p[1] - p[0]) * rng.uniform();
    case DistKind::GenPareto:
      return gpd_inv_cdf(p[2], p[1], p[0], rng.uniform());
  }
  return 0.0;
}

double gpd_inv_cdf(double k, double sigma, double location, double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw DomainError("gpd_inv_cdf: probability must lie in [0, 1)");
  }
  if (!(sigma > 0.0) || !std::isfinite(k)) {
    throw DomainError("gpd_inv_cdf: sigma must be positive and k finite");
  }
  const double log_tail = std::log1p(-p);
  if (k == 0.0) return location - sigma * log_tail;
  return location + sigma * std::expm1(-k * log_tail) / k;
}

}  // namespace bwf
