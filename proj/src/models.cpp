#include "bwf/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bwf/error.hpp"

namespace bwf {

namespace {

const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string indexed(const std::string& base, std::size_t j) {
  return base + "[" + std::to_string(j + 1) + "]";
}

// Prior on a scale parameter stored as u = log(scale). Returns the log
// density of u (prior on the scale or on its square, plus Jacobian) and
// adds d/du to `grad`.
double log_scale_prior(const DistSpec& prior, bool on_variance, double u, double& grad) {
  if (on_variance) {
    const double v = std::exp(2.0 * u);
    grad += dlogpdf(prior, v) * 2.0 * v + 2.0;
    return logpdf(prior, v) + std::log(2.0) + 2.0 * u;
  }
  const double s = std::exp(u);
  grad += dlogpdf(prior, s) * s + 1.0;
  return logpdf(prior, s) + u;
}

// Layout offsets for the regression family.
struct RegressionLayout {
  std::size_t n_groups;
  static constexpr std::size_t beta0 = 0, beta1 = 1, log_sigma = 2, log_tau0 = 3, log_tau1 = 4;
  std::size_t offset0(std::size_t j) const { return 5 + j; }
  std::size_t offset1(std::size_t j) const { return 5 + n_groups + j; }
};

double regression_lp(const ModelSpec& model, const Dataset& data, std::span<const double> u,
                     std::span<double> grad, bool want_prior, bool want_lik) {
  const bool hier = model.is_hierarchical_regression();
  const bool nc = model.non_centered();
  const std::size_t J = hier ? data.n_groups() : 0;
  const RegressionLayout at{J};
  const double beta0 = u[at.beta0];
  const double beta1 = u[at.beta1];
  const double sigma = std::exp(u[at.log_sigma]);
  double lp = 0.0;

  if (want_prior) {
    lp += logpdf(model.priors.beta0, beta0) + logpdf(model.priors.beta1, beta1);
    grad[at.beta0] += dlogpdf(model.priors.beta0, beta0);
    grad[at.beta1] += dlogpdf(model.priors.beta1, beta1);
    lp += log_scale_prior(model.priors.sigma, false, u[at.log_sigma], grad[at.log_sigma]);
  }

  std::vector<double> b0(J, 0.0), b1(J, 0.0);
  double tau0 = 0.0, tau1 = 0.0;
  if (hier) {
    tau0 = std::exp(u[at.log_tau0]);
    tau1 = std::exp(u[at.log_tau1]);
    const bool on_var = model.priors.tau_on_variance();
    if (want_prior) {
      lp += log_scale_prior(model.priors.tau, on_var, u[at.log_tau0], grad[at.log_tau0]);
      lp += log_scale_prior(model.priors.tau, on_var, u[at.log_tau1], grad[at.log_tau1]);
    }
    for (std::size_t j = 0; j < J; ++j) {
      const double r0 = u[at.offset0(j)];
      const double r1 = u[at.offset1(j)];
      if (nc) {
        b0[j] = tau0 * r0;
        b1[j] = tau1 * r1;
        if (want_prior) {
          lp += -0.5 * (r0 * r0 + r1 * r1) - 2.0 * kLogSqrt2Pi;
          grad[at.offset0(j)] -= r0;
          grad[at.offset1(j)] -= r1;
        }
      } else {
        b0[j] = r0;
        b1[j] = r1;
        if (want_prior) {
          const double z0 = r0 / tau0, z1 = r1 / tau1;
          lp += -0.5 * (z0 * z0 + z1 * z1) - u[at.log_tau0] - u[at.log_tau1] - 2.0 * kLogSqrt2Pi;
          grad[at.offset0(j)] -= r0 / (tau0 * tau0);
          grad[at.offset1(j)] -= r1 / (tau1 * tau1);
          grad[at.log_tau0] += z0 * z0 - 1.0;
          grad[at.log_tau1] += z1 * z1 - 1.0;
        }
      }
    }
  }
  if (want_lik && data.size() > 0) {
    const double inv_var = 1.0 / (sigma * sigma);
    const double n = static_cast<double>(data.size());
    double ss = 0.0;
    double g_beta0 = 0.0, g_beta1 = 0.0;
    std::vector<double> g_b0(J, 0.0), g_b1(J, 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double x = data.x[i];
      double mean = beta0 + beta1 * x;
      std::size_t g = 0;
      if (hier) {
        g = static_cast<std::size_t>(data.group[i]);
        mean += b0[g] + b1[g] * x;
      }
      const double r = data.y[i] - mean;
      ss += r * r;
      const double dr = r * inv_var;
      g_beta0 += dr;
      g_beta1 += dr * x;
      if (hier) {
        g_b0[g] += dr;
        g_b1[g] += dr * x;
      }
    }
    lp += -0.5 * ss * inv_var - n * u[at.log_sigma] - n * kLogSqrt2Pi;
    grad[at.beta0] += g_beta0;
    grad[at.beta1] += g_beta1;
    grad[at.log_sigma] += ss * inv_var - n;
    for (std::size_t j = 0; j < J; ++j) {
      if (nc) {
        grad[at.offset0(j)] += tau0 * g_b0[j];
        grad[at.offset1(j)] += tau1 * g_b1[j];
        grad[at.log_tau0] += b0[j] * g_b0[j];
        grad[at.log_tau1] += b1[j] * g_b1[j];
      } else {
        grad[at.offset0(j)] += g_b0[j];
        grad[at.offset1(j)] += g_b1[j];
      }
    }
  }
  return lp;
}

double schools_lp(const ModelSpec& model, const Dataset& data, std::span<const double> u,
                  std::span<double> grad, bool want_prior, bool want_lik) {
  const std::size_t J = data.n_groups();
  const bool nc = model.non_centered();
  const double mu = u[0];
  const double log_tau = u[1];
  const double tau = std::exp(log_tau);
  double lp = 0.0;
  if (want_prior) {
    lp += logpdf(model.priors.beta0, mu);
    grad[0] += dlogpdf(model.priors.beta0, mu);
    lp += log_scale_prior(model.priors.tau, model.priors.tau_on_variance(), log_tau, grad[1]);
  }
  std::vector<double> theta(J);
  for (std::size_t j = 0; j < J; ++j) {
    const double r = u[2 + j];
    if (nc) {
      theta[j] = mu + tau * r;
      if (want_prior) {
        lp += -0.5 * r * r - kLogSqrt2Pi;
        grad[2 + j] -= r;
      }
    } else {
      theta[j] = r;
      if (want_prior) {
        const double z = (r - mu) / tau;
        lp += -0.5 * z * z - log_tau - kLogSqrt2Pi;
        grad[2 + j] -= z / tau;
        grad[0] += z / tau;
        grad[1] += z * z - 1.0;
      }
    }
  }
  if (want_lik) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto j = static_cast<std::size_t>(data.group[i]);
      const double se = data.x[i];
      const double z = (data.y[i] - theta[j]) / se;
      lp += -0.5 * z * z - std::log(se) - kLogSqrt2Pi;
      const double dtheta = z / se;
      if (nc) {
        grad[0] += dtheta;
        grad[2 + j] += tau * dtheta;
        grad[1] += (theta[j] - mu) * dtheta;
      } else {
        grad[2 + j] += dtheta;
      }
    }
  }
  return lp;
}

double evaluate(const ModelSpec& model, const Dataset& data, std::span<const double> u,
                std::span<double> grad, bool want_prior, bool want_lik) {
  std::fill(grad.begin(), grad.end(), 0.0);
  if (model.is_eight_schools()) return schools_lp(model, data, u, grad, want_prior, want_lik);
  return regression_lp(model, data, u, grad, want_prior, want_lik);
}

void check_theta(const ModelSpec& model, const Dataset& data, std::span<const double> u) {
  const std::size_t dim = model.dimension(data.n_groups());
  if (u.size() != dim) {
    throw ValidationError("parameter vector has length " + std::to_string(u.size()) + ", model " +
                          to_string(model.kind) + " expects " + std::to_string(dim));
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i])) {
      throw EvaluationError("non-finite parameter at coordinate " + std::to_string(i), i);
    }
  }
}

std::vector<std::size_t> lookup(const Draws& draws, const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  idx.reserve(names.size());
  for (const auto& n : names) idx.push_back(draws.index_of(n));
  return idx;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Pooled: return "pooled";
    case ModelKind::HierWho: return "hier-who";
    case ModelKind::HierCluster: return "hier-cluster";
    case ModelKind::EightSchoolsCentered: return "8schools-c";
    case ModelKind::EightSchoolsNonCentered: return "8schools-nc";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& text) {
  for (auto kind : {ModelKind::Pooled, ModelKind::HierWho, ModelKind::HierCluster,
                    ModelKind::EightSchoolsCentered, ModelKind::EightSchoolsNonCentered}) {
    if (to_string(kind) == text) return kind;
  }
  throw ValidationError("unknown model '" + text + "'");
}

PriorConfig PriorConfig::vague() {
  return {"vague", DistSpec::normal(0, 100), DistSpec::normal(0, 100),
          DistSpec::inv_gamma(1, 100), DistSpec::half_normal(1)};
}

PriorConfig PriorConfig::weak() {
  return {"weak", DistSpec::normal(0, 1), DistSpec::normal(1, 1), DistSpec::half_normal(1),
          DistSpec::half_normal(1)};
}

PriorConfig PriorConfig::eight_schools() {
  return {"8schools", DistSpec::normal(0, 5), DistSpec::normal(0, 5), DistSpec::half_normal(5),
          DistSpec::half_normal(5)};
}

PriorConfig PriorConfig::named(const std::string& label) {
  if (label == "vague") return vague();
  if (label == "weak") return weak();
  if (label == "8schools") return eight_schools();
  throw ValidationError("unknown prior preset '" + label + "'");
}

ModelSpec ModelSpec::make(ModelKind kind) {
  ModelSpec spec;
  spec.kind = kind;
  switch (kind) {
    case ModelKind::EightSchoolsCentered:
      spec.priors = PriorConfig::eight_schools();
      spec.parameterization = Parameterization::Centered;
      break;
    case ModelKind::EightSchoolsNonCentered:
      spec.priors = PriorConfig::eight_schools();
      spec.parameterization = Parameterization::NonCentered;
      break;
    default:
      spec.priors = PriorConfig::weak();
      spec.parameterization = Parameterization::NonCentered;
  }
  return spec;
}

bool ModelSpec::is_regression() const noexcept { return !is_eight_schools(); }

bool ModelSpec::is_hierarchical_regression() const noexcept {
  return kind == ModelKind::HierWho || kind == ModelKind::HierCluster;
}

bool ModelSpec::is_eight_schools() const noexcept {
  return kind == ModelKind::EightSchoolsCentered || kind == ModelKind::EightSchoolsNonCentered;
}

bool ModelSpec::non_centered() const noexcept {
  if (kind == ModelKind::EightSchoolsCentered) return false;
  if (kind == ModelKind::EightSchoolsNonCentered) return true;
  return parameterization == Parameterization::NonCentered;
}

std::size_t ModelSpec::dimension(std::size_t n_groups) const {
  if (kind == ModelKind::Pooled) return 3;
  if (is_hierarchical_regression()) return 5 + 2 * n_groups;
  return 2 + n_groups;
}

std::vector<std::string> ModelSpec::unconstrained_names(std::size_t n_groups) const {
  std::vector<std::string> names;
  if (is_eight_schools()) {
    names = {"mu", "log_tau"};
    for (std::size_t j = 0; j < n_groups; ++j) {
      names.push_back(indexed(non_centered() ? "theta_tilde" : "theta", j));
    }
    return names;
  }
  names = {"beta0", "beta1", "log_sigma"};
  if (!is_hierarchical_regression()) return names;
  names.push_back("log_tau0");
  names.push_back("log_tau1");
  const char* b0 = non_centered() ? "z0" : "b0";
  const char* b1 = non_centered() ? "z1" : "b1";
  for (std::size_t j = 0; j < n_groups; ++j) names.push_back(indexed(b0, j));
  for (std::size_t j = 0; j < n_groups; ++j) names.push_back(indexed(b1, j));
  return names;
}

std::vector<std::string> ModelSpec::constrained_names(std::size_t n_groups) const {
  std::vector<std::string> names;
  if (is_eight_schools()) {
    names = {"mu", "tau"};
    if (non_centered()) {
      for (std::size_t j = 0; j < n_groups; ++j) names.push_back(indexed("theta_tilde", j));
    }
    for (std::size_t j = 0; j < n_groups; ++j) names.push_back(indexed("theta", j));
    return names;
  }
  names = {"beta0", "beta1", "sigma"};
  if (!is_hierarchical_regression()) return names;
  names.push_back("tau0");
  names.push_back("tau1");
  if (non_centered()) {
    for (std::size_t j = 0; j < n_groups; ++j) names.push_back(indexed("z0", j));
    for (std::size_t j = 0; j < n_groups; ++j) names.push_back(indexed("z1", j));
  }
  for (std::size_t j = 0; j < n_groups; ++j) names.push_back(indexed("b0", j));
  for (std::size_t j = 0; j < n_groups; ++j) names.push_back(indexed("b1", j));
  return names;
}

void ModelSpec::check_data(const Dataset& data, bool allow_empty) const {
  data.validate(allow_empty);
  if (is_eight_schools()) {
    bool one_each = data.size() == data.n_groups();
    for (std::size_t i = 0; one_each && i < data.size(); ++i) {
      one_each = data.group[i] == static_cast<int>(i);
    }
    if (!one_each) {
      throw ValidationError(to_string(kind) + " needs exactly one observation per group");
    }
    for (double se : data.x) {
      if (!(se > 0)) throw ValidationError(to_string(kind) + ": standard errors must be positive");
    }
  }
}

double NamedValues::at(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return values[i];
  }
  throw ValidationError("no parameter named '" + name + "'");
}

void NamedValues::set(const std::string& name, double value) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) {
      values[i] = value;
      return;
    }
  }
  names.push_back(name);
  values.push_back(value);
}

ParamVector make_param_vector(const ModelSpec& model, const Dataset& data,
                              std::vector<double> unconstrained) {
  ParamVector theta{std::move(unconstrained), model.unconstrained_names(data.n_groups())};
  if (theta.unconstrained.size() != theta.names.size()) {
    throw ValidationError("parameter vector has length " +
                          std::to_string(theta.unconstrained.size()) + ", model " +
                          to_string(model.kind) + " expects " + std::to_string(theta.names.size()));
  }
  return theta;
}

NamedValues constrain(const ModelSpec& model, std::size_t n_groups,
                      std::span<const double> u) {
  const std::size_t dim = model.dimension(n_groups);
  if (u.size() != dim) {
    throw ValidationError("constrain: expected " + std::to_string(dim) + " values, got " +
                          std::to_string(u.size()));
  }
  NamedValues out;
  out.names = model.constrained_names(n_groups);
  out.values.reserve(out.names.size());
  const std::size_t J = n_groups;
  if (model.is_eight_schools()) {
    const double mu = u[0], tau = std::exp(u[1]);
    out.values = {mu, tau};
    if (model.non_centered()) {
      for (std::size_t j = 0; j < J; ++j) out.values.push_back(u[2 + j]);
      for (std::size_t j = 0; j < J; ++j) out.values.push_back(mu + tau * u[2 + j]);
    } else {
      for (std::size_t j = 0; j < J; ++j) out.values.push_back(u[2 + j]);
    }
    return out;
  }
  out.values = {u[0], u[1], std::exp(u[2])};
  if (!model.is_hierarchical_regression()) return out;
  const double tau0 = std::exp(u[3]), tau1 = std::exp(u[4]);
  out.values.push_back(tau0);
  out.values.push_back(tau1);
  if (model.non_centered()) {
    for (std::size_t j = 0; j < 2 * J; ++j) out.values.push_back(u[5 + j]);
    for (std::size_t j = 0; j < J; ++j) out.values.push_back(tau0 * u[5 + j]);
    for (std::size_t j = 0; j < J; ++j) out.values.push_back(tau1 * u[5 + J + j]);
  } else {
    for (std::size_t j = 0; j < 2 * J; ++j) out.values.push_back(u[5 + j]);
  }
  return out;
}

NamedValues constrain(const ModelSpec& model, const Dataset& data, const ParamVector& theta) {
  return constrain(model, data.n_groups(), theta.unconstrained);
}

ParamVector unconstrain(const ModelSpec& model, const Dataset& data, const NamedValues& values) {
  const std::size_t J = data.n_groups();
  std::vector<double> u;
  if (model.is_eight_schools()) {
    const double mu = values.at("mu");
    const double tau = values.at("tau");
    u = {mu, std::log(tau)};
    for (std::size_t j = 0; j < J; ++j) {
      u.push_back(model.non_centered() ? values.at(indexed("theta_tilde", j))
                                       : values.at(indexed("theta", j)));
    }
  } else {
    u = {values.at("beta0"), values.at("beta1"), std::log(values.at("sigma"))};
    if (model.is_hierarchical_regression()) {
      u.push_back(std::log(values.at("tau0")));
      u.push_back(std::log(values.at("tau1")));
      const char* b0 = model.non_centered() ? "z0" : "b0";
      const char* b1 = model.non_centered() ? "z1" : "b1";
      for (std::size_t j = 0; j < J; ++j) u.push_back(values.at(indexed(b0, j)));
      for (std::size_t j = 0; j < J; ++j) u.push_back(values.at(indexed(b1, j)));
    }
  }
  return make_param_vector(model, data, std::move(u));
}

std::pair<double, std::vector<double>> log_posterior_grad(const ModelSpec& model,
                                                          const Dataset& data,
                                                          const ParamVector& theta) {
  model.check_data(data, true);
  check_theta(model, data, theta.unconstrained);
  std::vector<double> grad(theta.unconstrained.size());
  const double lp = evaluate(model, data, theta.unconstrained, grad, true, true);
  return {lp, std::move(grad)};
}

double log_posterior_grad_raw(const ModelSpec& model, const Dataset& data,
                              std::span<const double> theta, std::span<double> grad) {
  for (double v : theta) {
    if (!std::isfinite(v)) {
      std::fill(grad.begin(), grad.end(), kNaN);
      return kNaN;
    }
  }
  return evaluate(model, data, theta, grad, true, true);
}

double log_likelihood(const ModelSpec& model, const Dataset& data, const ParamVector& theta) {
  model.check_data(data, true);
  check_theta(model, data, theta.unconstrained);
  std::vector<double> grad(theta.unconstrained.size());
  return evaluate(model, data, theta.unconstrained, grad, false, true);
}

double log_prior(const ModelSpec& model, const Dataset& data, const ParamVector& theta) {
  model.check_data(data, true);
  check_theta(model, data, theta.unconstrained);
  std::vector<double> grad(theta.unconstrained.size());
  return evaluate(model, data, theta.unconstrained, grad, true, false);
}

void fitted_moments(const ModelSpec& model, const Dataset& data, const Draws& draws, Matrix& means,
                    Matrix& sds) {
  model.check_data(data);
  if (draws.size() == 0) throw ValidationError("no draws");
  const std::size_t S = draws.size(), n = data.size(), J = data.n_groups();
  means = Matrix(S, n);
  sds = Matrix(S, n);
  if (model.is_eight_schools()) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < J; ++j) names.push_back(indexed("theta", j));
    const auto idx = lookup(draws, names);
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t i = 0; i < n; ++i) {
        means(s, i) = draws.params(s, idx[static_cast<std::size_t>(data.group[i])]);
        sds(s, i) = data.x[i];
      }
    }
    return;
  }
  const std::size_t ib0 = draws.index_of("beta0"), ib1 = draws.index_of("beta1"),
                    isg = draws.index_of("sigma");
  std::vector<std::size_t> off0, off1;
  if (model.is_hierarchical_regression()) {
    std::vector<std::string> n0, n1;
    for (std::size_t j = 0; j < J; ++j) {
      n0.push_back(indexed("b0", j));
      n1.push_back(indexed("b1", j));
    }
    off0 = lookup(draws, n0);
    off1 = lookup(draws, n1);
  }
  for (std::size_t s = 0; s < S; ++s) {
    const auto row = draws.params.row(s);
    for (std::size_t i = 0; i < n; ++i) {
      double intercept = row[ib0], slope = row[ib1];
      if (!off0.empty()) {
        const auto g = static_cast<std::size_t>(data.group[i]);
        intercept += row[off0[g]];
        slope += row[off1[g]];
      }
      means(s, i) = intercept + slope * data.x[i];
      sds(s, i) = row[isg];
    }
  }
}

Matrix pointwise_log_lik(const ModelSpec& model, const Dataset& data, const Draws& draws) {
  Matrix means, sds;
  fitted_moments(model, data, draws, means, sds);
  Matrix out(means.rows(), means.cols());
  for (std::size_t s = 0; s < out.rows(); ++s) {
    for (std::size_t i = 0; i < out.cols(); ++i) {
      const double sd = sds(s, i);
      const double z = (data.y[i] - means(s, i)) / sd;
      out(s, i) = -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
    }
  }
  return out;
}

Matrix simulate_replicates(const ModelSpec& model, const Dataset& data, const Draws& draws,
                           RngStream& rng) {
  Matrix means, sds;
  fitted_moments(model, data, draws, means, sds);
  Matrix out(means.rows(), means.cols());
  for (std::size_t s = 0; s < out.rows(); ++s) {
    for (std::size_t i = 0; i < out.cols(); ++i) {
      const double sd = sds(s, i);
      out(s, i) = sd == 0.0 ? means(s, i) : means(s, i) + sd * rng.normal();
    }
  }
  return out;
}

}  // namespace bwf
