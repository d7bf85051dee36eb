#ifndef BWF_SAMPLER_HPP
#define BWF_SAMPLER_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bwf/dataset.hpp"
#include "bwf/draws.hpp"
#include "bwf/models.hpp"
#include "bwf/rng.hpp"

namespace bwf {

struct SamplerConfig {
  int n_chains = 4;
  int n_warmup = 1000;
  int n_keep = 1000;
  double target_accept = 0.8;
  int max_leapfrog = 1024;
  double divergence_threshold = 1000.0;
  std::uint64_t seed = 1234;

  void validate() const;
};

/// Log density and gradient on the unconstrained scale. The return value
/// may be NaN or -inf; the sampler treats that as a divergence.
using GradientFn = std::function<double(std::span<const double> q, std::span<double> grad)>;

/// A density the sampler can explore.
class Target {
 public:
  virtual ~Target() = default;
  virtual std::size_t dimension() const = 0;
  virtual double log_density_grad(std::span<const double> q, std::span<double> grad) const = 0;
  virtual std::vector<std::string> constrained_names() const = 0;
  virtual std::vector<double> constrain(std::span<const double> q) const = 0;
  /// Used in error messages, e.g. the model kind.
  virtual std::string describe() const = 0;
};

/// Posterior of one of the library's models on a dataset.
class ModelTarget final : public Target {
 public:
  ModelTarget(ModelSpec model, Dataset data);
  std::size_t dimension() const override;
  double log_density_grad(std::span<const double> q, std::span<double> grad) const override;
  std::vector<std::string> constrained_names() const override;
  std::vector<double> constrain(std::span<const double> q) const override;
  std::string describe() const override;

 private:
  ModelSpec model_;
  Dataset data_;
};

/// Independent normals with the given means and sds; the constrained
/// scale equals the unconstrained one. Serves as a known-answer target.
class GaussianTarget final : public Target {
 public:
  GaussianTarget(std::vector<double> means, std::vector<double> sds);
  static GaussianTarget standard(std::size_t dim);
  std::size_t dimension() const override { return means_.size(); }
  double log_density_grad(std::span<const double> q, std::span<double> grad) const override;
  std::vector<std::string> constrained_names() const override;
  std::vector<double> constrain(std::span<const double> q) const override;
  std::string describe() const override;

 private:
  std::vector<double> means_;
  std::vector<double> sds_;
};

struct LeapfrogResult {
  std::vector<double> q;
  std::vector<double> p;
  int n_evals = 0;
  /// False when the log density or its gradient became non-finite.
  bool finite = true;
};

/// One leapfrog step: half kick, drift scaled by the inverse mass, half kick.
LeapfrogResult leapfrog(const GradientFn& gradfn, std::span<const double> q,
                        std::span<const double> p, double eps, std::span<const double> inv_mass);

/// Position, momentum and cached log density/gradient at the position.
struct PhasePoint {
  std::vector<double> q;
  std::vector<double> p;
  std::vector<double> grad;
  double log_density = 0.0;
};

/// -log density + kinetic energy with a diagonal inverse mass.
double hamiltonian(const PhasePoint& z, std::span<const double> inv_mass);

/// Evaluate log density and gradient at z.q.
void refresh(const GradientFn& gradfn, PhasePoint& z);

struct StepSettings {
  double eps = 0.1;
  std::vector<double> inv_mass;
  int max_steps = 1;  // trajectory length is uniform on [1, max_steps]
  double divergence_threshold = 1000.0;
};

struct Transition {
  PhasePoint state;  // accepted state; momentum is the one that reached it
  bool divergent = false;
  double energy = 0.0;  // H at the accepted state
  double accept_stat = 0.0;
  double max_energy_error = 0.0;  // max |H_t - H_0| along the trajectory
  int n_leapfrog = 0;
};

/// Static-length HMC transition with a jittered number of steps and a
/// Metropolis accept on the endpoint. A step whose energy error exceeds
/// the threshold (or is non-finite) ends the trajectory, is flagged
/// divergent and the chain stays at its starting point.
Transition hmc_transition(const PhasePoint& start, const GradientFn& gradfn,
                          const StepSettings& settings, RngStream& rng);

/// Summary of one chain's warmup.
struct ChainAdaptation {
  double step_size = 0.0;
  std::vector<double> inv_mass;
  int max_steps = 0;
  std::size_t warmup_divergences = 0;
};

struct FitResult {
  Draws draws;
  std::vector<double> max_energy_error;  // per kept draw, aligned with draws
  std::vector<int> n_leapfrog;           // per kept draw
  std::vector<ChainAdaptation> adaptation;
};

/// Run config.n_chains independent chains (stream id = chain index) with
/// dual-averaging step size and diagonal metric adaptation during warmup.
/// Throws ComputationError if every warmup transition of a chain diverged.
FitResult run_chains(const Target& target, const SamplerConfig& config);
FitResult run_chains(const ModelSpec& model, const Dataset& data, const SamplerConfig& config);

struct RhatResult {
  double value = std::numeric_limits<double>::quiet_NaN();
  std::optional<std::string> note;
};

/// Split-R-hat over the 2 * n_chains half chains of one parameter.
RhatResult split_rhat(const Draws& draws, const std::string& param);

/// Split-R-hat from explicit chains (each at least 4 draws long).
RhatResult split_rhat(const std::vector<std::vector<double>>& chains);

/// Dual averaging of log step size toward a target acceptance statistic.
class DualAveraging {
 public:
  explicit DualAveraging(double initial_step, double target_accept, double gamma = 0.05,
                         double t0 = 10.0, double kappa = 0.75);
  void update(double accept_stat);
  /// Step size to use for the next iteration.
  double current() const;
  /// Averaged step size, used once adaptation ends.
  double averaged() const;

 private:
  double mu_;
  double target_;
  double gamma_, t0_, kappa_;
  double h_bar_ = 0.0;
  double log_eps_;
  double log_eps_bar_ = 0.0;
  double count_ = 0.0;
};

}  // namespace bwf

#endif  // BWF_SAMPLER_HPP
