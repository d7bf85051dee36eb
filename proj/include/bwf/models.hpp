#ifndef BWF_MODELS_HPP
#define BWF_MODELS_HPP

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bwf/dataset.hpp"
#include "bwf/distributions.hpp"
#include "bwf/draws.hpp"
#include "bwf/matrix.hpp"
#include "bwf/rng.hpp"

namespace bwf {

enum class ModelKind { Pooled, HierWho, HierCluster, EightSchoolsCentered, EightSchoolsNonCentered };
enum class Parameterization { Centered, NonCentered };

/// CLI spelling: pooled, hier-who, hier-cluster, 8schools-c, 8schools-nc.
std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

/// Priors of the regression family. `tau` is shared by both group-offset
/// scales and applies to the variance tau^2 when it is an InvGamma, to the
/// sd tau otherwise. For the 8-schools models beta0 is the prior of the
/// population mean mu and tau the prior of the population sd.
struct PriorConfig {
  std::string label = "custom";
  DistSpec beta0;
  DistSpec beta1;
  DistSpec tau;
  DistSpec sigma;

  /// beta_k ~ N(0, 100), tau_k^2 ~ InvGamma(1, 100), sigma ~ N+(0, 1).
  static PriorConfig vague();
  /// beta0 ~ N(0, 1), beta1 ~ N(1, 1), tau_k ~ N+(0, 1), sigma ~ N+(0, 1).
  static PriorConfig weak();
  /// mu ~ N(0, 5), tau ~ N+(0, 5).
  static PriorConfig eight_schools();
  /// "vague" or "weak".
  static PriorConfig named(const std::string& label);

  bool tau_on_variance() const noexcept { return tau.kind == DistKind::InvGamma; }
  friend bool operator==(const PriorConfig&, const PriorConfig&) = default;
};

struct ModelSpec {
  ModelKind kind = ModelKind::Pooled;
  PriorConfig priors = PriorConfig::weak();
  Parameterization parameterization = Parameterization::NonCentered;

  /// Defaults for a kind: weak priors for the regressions, the 8-schools
  /// priors for the 8-schools models, non-centered hierarchical offsets.
  static ModelSpec make(ModelKind kind);

  bool is_regression() const noexcept;
  bool is_hierarchical_regression() const noexcept;
  bool is_eight_schools() const noexcept;
  /// Effective parameterization of the group-level quantities.
  bool non_centered() const noexcept;

  std::size_t dimension(std::size_t n_groups) const;
  std::vector<std::string> unconstrained_names(std::size_t n_groups) const;
  std::vector<std::string> constrained_names(std::size_t n_groups) const;

  /// Throws ValidationError if the model cannot be used with this data
  /// (an 8-schools model needs one observation per group).
  void check_data(const Dataset& data, bool allow_empty = false) const;
};

struct ParamVector {
  std::vector<double> unconstrained;
  std::vector<std::string> names;
};

/// Ordered name -> value record.
struct NamedValues {
  std::vector<std::string> names;
  std::vector<double> values;

  double at(const std::string& name) const;
  void set(const std::string& name, double value);
};

ParamVector make_param_vector(const ModelSpec& model, const Dataset& data,
                              std::vector<double> unconstrained);

/// Constrained values, including derived centered quantities for the
/// non-centered parameterizations.
NamedValues constrain(const ModelSpec& model, std::size_t n_groups,
                      std::span<const double> unconstrained);
NamedValues constrain(const ModelSpec& model, const Dataset& data, const ParamVector& theta);

/// Inverse of constrain; derived quantities in `values` are ignored.
ParamVector unconstrain(const ModelSpec& model, const Dataset& data, const NamedValues& values);

/// Unnormalized log posterior on the unconstrained scale (likelihood,
/// priors and log-Jacobians) together with its analytic gradient.
/// Throws EvaluationError naming the first non-finite coordinate of theta.
std::pair<double, std::vector<double>> log_posterior_grad(const ModelSpec& model,
                                                          const Dataset& data,
                                                          const ParamVector& theta);

/// Non-throwing core used by the sampler. Writes the gradient into `grad`
/// and returns the log density, which may be NaN or -inf.
double log_posterior_grad_raw(const ModelSpec& model, const Dataset& data,
                              std::span<const double> theta, std::span<double> grad);

/// Likelihood part of the log posterior.
double log_likelihood(const ModelSpec& model, const Dataset& data, const ParamVector& theta);
/// Prior plus Jacobian part of the log posterior.
double log_prior(const ModelSpec& model, const Dataset& data, const ParamVector& theta);

/// Entry (s, i) is log p(y_i | theta^(s)).
Matrix pointwise_log_lik(const ModelSpec& model, const Dataset& data, const Draws& draws);

/// Row s is one replicated dataset drawn at theta^(s).
Matrix simulate_replicates(const ModelSpec& model, const Dataset& data, const Draws& draws,
                           RngStream& rng);

/// Conditional means mean_i(theta^(s)) and observation sds.
void fitted_moments(const ModelSpec& model, const Dataset& data, const Draws& draws, Matrix& means,
                    Matrix& sds);

}  // namespace bwf

#endif  // BWF_MODELS_HPP
