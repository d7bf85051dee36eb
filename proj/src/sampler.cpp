#include "bwf/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

#include "bwf/error.hpp"

namespace bwf {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Leapfrog update of z in place, reusing the cached gradient. Returns false
// if the new position has a non-finite density or gradient.
bool leapfrog_in_place(const GradientFn& gradfn, PhasePoint& z, double eps,
                       std::span<const double> inv_mass) {
  const std::size_t n = z.q.size();
  for (std::size_t i = 0; i < n; ++i) z.p[i] += 0.5 * eps * z.grad[i];
  for (std::size_t i = 0; i < n; ++i) z.q[i] += eps * inv_mass[i] * z.p[i];
  refresh(gradfn, z);
  for (std::size_t i = 0; i < n; ++i) z.p[i] += 0.5 * eps * z.grad[i];
  return std::isfinite(z.log_density) && all_finite(z.grad) && all_finite(z.q);
}

int trajectory_cap(double eps, int max_leapfrog) {
  const double steps = std::round(2.0 * std::numbers::pi / eps);
  if (!(steps >= 1.0)) return 1;
  return static_cast<int>(std::min<double>(steps, max_leapfrog));
}

void sample_momentum(PhasePoint& z, std::span<const double> inv_mass, RngStream& rng) {
  for (std::size_t i = 0; i < z.p.size(); ++i) z.p[i] = rng.normal() / std::sqrt(inv_mass[i]);
}

// Heuristic initial step size: double or halve until the one-step
// acceptance crosses 0.8.
double find_initial_step(const GradientFn& gradfn, const PhasePoint& start,
                         std::span<const double> inv_mass, double eps, RngStream& rng) {
  PhasePoint z = start;
  sample_momentum(z, inv_mass, rng);
  const double h0 = hamiltonian(z, inv_mass);
  int direction = 0;
  for (int attempt = 0; attempt < 100; ++attempt) {
    PhasePoint trial = z;
    const bool ok = leapfrog_in_place(gradfn, trial, eps, inv_mass);
    const double h1 = ok ? hamiltonian(trial, inv_mass) : INFINITY;
    const double delta = h0 - h1;
    const int want = (std::isfinite(delta) && delta > std::log(0.8)) ? 1 : -1;
    if (direction == 0) direction = want;
    if (want != direction) break;
    const double next = direction > 0 ? 2.0 * eps : 0.5 * eps;
    if (next > 1e7 || next < 1e-10) break;
    eps = next;
  }
  return eps;
}

struct ChainOutput {
  std::vector<std::vector<double>> constrained;
  std::vector<bool> divergent;
  std::vector<double> energy, accept_stat, energy_error;
  std::vector<int> n_leapfrog;
  ChainAdaptation adaptation;
};

std::vector<double> regularized_variance(const std::vector<std::vector<double>>& samples,
                                         std::size_t dim) {
  const double n = static_cast<double>(samples.size());
  std::vector<double> var(dim, 1.0);
  if (samples.size() < 3) return var;
  for (std::size_t d = 0; d < dim; ++d) {
    double m = 0.0;
    for (const auto& s : samples) m += s[d];
    m /= n;
    double ss = 0.0;
    for (const auto& s : samples) ss += (s[d] - m) * (s[d] - m);
    const double v = ss / (n - 1.0);
    var[d] = (n / (n + 5.0)) * v + 1e-3 * (5.0 / (n + 5.0));
  }
  return var;
}

ChainOutput run_one_chain(const Target& target, const SamplerConfig& config, int chain_id) {
  RngStream rng(config.seed, static_cast<std::uint64_t>(chain_id));
  const std::size_t dim = target.dimension();
  GradientFn gradfn = [&target](std::span<const double> q, std::span<double> g) {
    return target.log_density_grad(q, g);
  };

  PhasePoint z{std::vector<double>(dim), std::vector<double>(dim), std::vector<double>(dim), 0.0};
  bool initialized = false;
  for (int attempt = 0; attempt < 100 && !initialized; ++attempt) {
    for (auto& q : z.q) q = -2.0 + 4.0 * rng.uniform();
    refresh(gradfn, z);
    initialized = std::isfinite(z.log_density) && all_finite(z.grad);
  }
  if (!initialized) {
    throw ComputationError(target.describe() + ": no finite initial point after 100 attempts");
  }

  StepSettings settings;
  settings.inv_mass.assign(dim, 1.0);
  settings.divergence_threshold = config.divergence_threshold;
  double eps = find_initial_step(gradfn, z, settings.inv_mass, 1.0, rng);
  DualAveraging adapter(eps, config.target_accept);

  const int W = config.n_warmup;
  const bool windowed = W >= 20;
  const int slow_start = static_cast<int>(0.15 * W);
  const int slow_mid = static_cast<int>(0.5 * W);
  const int slow_end = static_cast<int>(0.9 * W);
  std::vector<std::vector<double>> window;
  std::size_t warmup_divergent = 0;

  for (int it = 0; it < W; ++it) {
    settings.eps = adapter.current();
    settings.max_steps = trajectory_cap(settings.eps, config.max_leapfrog);
    Transition tr = hmc_transition(z, gradfn, settings, rng);
    z = std::move(tr.state);
    if (tr.divergent) ++warmup_divergent;
    adapter.update(tr.accept_stat);
    if (windowed && it >= slow_start && it < slow_end) window.push_back(z.q);
    if (windowed && (it + 1 == slow_mid || it + 1 == slow_end)) {
      settings.inv_mass = regularized_variance(window, dim);
      window.clear();
      eps = find_initial_step(gradfn, z, settings.inv_mass, adapter.current(), rng);
      adapter = DualAveraging(eps, config.target_accept);
    }
  }
  if (W > 0 && warmup_divergent == static_cast<std::size_t>(W)) {
    std::ostringstream os;
    os << target.describe() << ": every warmup transition diverged (chain " << chain_id
       << ", step size " << adapter.current() << ")";
    throw ComputationError(os.str());
  }
  settings.eps = W > 0 ? adapter.averaged() : eps;
  settings.max_steps = trajectory_cap(settings.eps, config.max_leapfrog);

  ChainOutput out;
  out.adaptation = {settings.eps, settings.inv_mass, settings.max_steps, warmup_divergent};
  for (int it = 0; it < config.n_keep; ++it) {
    Transition tr = hmc_transition(z, gradfn, settings, rng);
    z = std::move(tr.state);
    out.constrained.push_back(target.constrain(z.q));
    out.divergent.push_back(tr.divergent);
    out.energy.push_back(tr.energy);
    out.accept_stat.push_back(tr.accept_stat);
    out.energy_error.push_back(tr.max_energy_error);
    out.n_leapfrog.push_back(tr.n_leapfrog);
  }
  return out;
}

}  // namespace

void SamplerConfig::validate() const {
  if (n_chains < 1) throw ValidationError("sampler: n_chains must be at least 1");
  if (n_warmup < 0 || n_keep < 1) throw ValidationError("sampler: need n_warmup >= 0, n_keep >= 1");
  if (!(target_accept > 0 && target_accept < 1)) {
    throw ValidationError("sampler: target_accept must lie in (0, 1)");
  }
  if (max_leapfrog < 1) throw ValidationError("sampler: max_leapfrog must be positive");
  if (!(divergence_threshold > 0)) {
    throw ValidationError("sampler: divergence_threshold must be positive");
  }
}

ModelTarget::ModelTarget(ModelSpec model, Dataset data)
    : model_(std::move(model)), data_(std::move(data)) {
  model_.check_data(data_);
}

std::size_t ModelTarget::dimension() const { return model_.dimension(data_.n_groups()); }

double ModelTarget::log_density_grad(std::span<const double> q, std::span<double> grad) const {
  return log_posterior_grad_raw(model_, data_, q, grad);
}

std::vector<std::string> ModelTarget::constrained_names() const {
  return model_.constrained_names(data_.n_groups());
}

std::vector<double> ModelTarget::constrain(std::span<const double> q) const {
  return bwf::constrain(model_, data_.n_groups(), q).values;
}

std::string ModelTarget::describe() const {
  return "model " + to_string(model_.kind) + " (" + model_.priors.label + " priors)";
}

GaussianTarget::GaussianTarget(std::vector<double> means, std::vector<double> sds)
    : means_(std::move(means)), sds_(std::move(sds)) {
  if (means_.size() != sds_.size() || means_.empty()) {
    throw ValidationError("GaussianTarget: means and sds must be non-empty and equal length");
  }
  for (double s : sds_) {
    if (!(s > 0)) throw ValidationError("GaussianTarget: sds must be positive");
  }
}

GaussianTarget GaussianTarget::standard(std::size_t dim) {
  return GaussianTarget(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0));
}

double GaussianTarget::log_density_grad(std::span<const double> q, std::span<double> grad) const {
  double lp = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double z = (q[i] - means_[i]) / sds_[i];
    lp -= 0.5 * z * z;
    grad[i] = -z / sds_[i];
  }
  return lp;
}

std::vector<std::string> GaussianTarget::constrained_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < means_.size(); ++i) names.push_back("x[" + std::to_string(i + 1) + "]");
  return names;
}

std::vector<double> GaussianTarget::constrain(std::span<const double> q) const {
  return {q.begin(), q.end()};
}

std::string GaussianTarget::describe() const {
  return std::to_string(means_.size()) + "-d Gaussian target";
}

double hamiltonian(const PhasePoint& z, std::span<const double> inv_mass) {
  double kinetic = 0.0;
  for (std::size_t i = 0; i < z.p.size(); ++i) kinetic += z.p[i] * z.p[i] * inv_mass[i];
  return -z.log_density + 0.5 * kinetic;
}

void refresh(const GradientFn& gradfn, PhasePoint& z) {
  z.grad.resize(z.q.size());
  z.log_density = gradfn(z.q, z.grad);
}

LeapfrogResult leapfrog(const GradientFn& gradfn, std::span<const double> q,
                        std::span<const double> p, double eps, std::span<const double> inv_mass) {
  if (!(eps > 0)) throw ValidationError("leapfrog: eps must be positive");
  if (q.size() != p.size() || q.size() != inv_mass.size()) {
    throw ValidationError("leapfrog: q, p and inv_mass differ in length");
  }
  PhasePoint z{{q.begin(), q.end()}, {p.begin(), p.end()}, {}, 0.0};
  refresh(gradfn, z);
  bool finite = std::isfinite(z.log_density) && all_finite(z.grad);
  finite = leapfrog_in_place(gradfn, z, eps, inv_mass) && finite;
  return {std::move(z.q), std::move(z.p), 2, finite};
}

Transition hmc_transition(const PhasePoint& start, const GradientFn& gradfn,
                          const StepSettings& settings, RngStream& rng) {
  Transition tr;
  tr.state = start;
  sample_momentum(tr.state, settings.inv_mass, rng);
  const double h0 = hamiltonian(tr.state, settings.inv_mass);
  const int cap = std::max(1, settings.max_steps);
  const int steps = std::min(cap, 1 + static_cast<int>(rng.uniform() * cap));
  const bool threshold_active = std::isfinite(settings.divergence_threshold);

  PhasePoint cur = tr.state;
  bool finite = true;
  double h_end = h0;
  for (int t = 0; t < steps; ++t) {
    finite = leapfrog_in_place(gradfn, cur, settings.eps, settings.inv_mass);
    ++tr.n_leapfrog;
    h_end = finite ? hamiltonian(cur, settings.inv_mass) : INFINITY;
    const double err = std::isfinite(h_end) ? std::abs(h_end - h0) : INFINITY;
    tr.max_energy_error = std::max(tr.max_energy_error, err);
    if (threshold_active && err > settings.divergence_threshold) {
      tr.divergent = true;
      break;
    }
    if (!std::isfinite(h_end)) break;
  }

  if (tr.divergent || !std::isfinite(h_end)) {
    tr.energy = h0;
    tr.accept_stat = 0.0;
    return tr;
  }
  tr.accept_stat = std::min(1.0, std::exp(h0 - h_end));
  if (rng.uniform() < tr.accept_stat) {
    tr.state = std::move(cur);
    tr.energy = h_end;
  } else {
    tr.energy = h0;
  }
  return tr;
}

FitResult run_chains(const Target& target, const SamplerConfig& config) {
  config.validate();
  const auto n_chains = static_cast<std::size_t>(config.n_chains);
  std::vector<ChainOutput> outputs(n_chains);
  std::vector<std::exception_ptr> errors(n_chains);
  {
    std::vector<std::jthread> workers;
    for (std::size_t c = 0; c < n_chains; ++c) {
      workers.emplace_back([&, c] {
        try {
          outputs[c] = run_one_chain(target, config, static_cast<int>(c));
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  FitResult result;
  Draws& d = result.draws;
  d.names = target.constrained_names();
  const std::size_t total = n_chains * static_cast<std::size_t>(config.n_keep);
  d.params = Matrix(total, d.names.size());
  std::size_t s = 0;
  for (std::size_t c = 0; c < n_chains; ++c) {
    auto& out = outputs[c];
    for (std::size_t it = 0; it < out.constrained.size(); ++it, ++s) {
      std::copy(out.constrained[it].begin(), out.constrained[it].end(), d.params.row(s).begin());
      d.chain.push_back(static_cast<int>(c));
      d.iteration.push_back(static_cast<int>(it));
      d.divergent.push_back(out.divergent[it]);
      d.energy.push_back(out.energy[it]);
      d.accept_stat.push_back(out.accept_stat[it]);
      result.max_energy_error.push_back(out.energy_error[it]);
      result.n_leapfrog.push_back(out.n_leapfrog[it]);
    }
    result.adaptation.push_back(std::move(out.adaptation));
  }
  return result;
}

FitResult run_chains(const ModelSpec& model, const Dataset& data, const SamplerConfig& config) {
  ModelTarget target(model, data);
  return run_chains(target, config);
}

RhatResult split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) throw ValidationError("split_rhat: no chains");
  std::vector<std::span<const double>> halves;
  for (const auto& c : chains) {
    if (c.size() < 4) throw ValidationError("split_rhat: each chain needs at least 4 draws");
    const std::size_t half = c.size() / 2;
    halves.emplace_back(c.data(), half);
    halves.emplace_back(c.data() + (c.size() - half), half);
  }
  const double N = static_cast<double>(halves.front().size());
  for (const auto& h : halves) {
    if (static_cast<double>(h.size()) != N) {
      throw ValidationError("split_rhat: chains must have equal length");
    }
  }
  const double m = static_cast<double>(halves.size());
  std::vector<double> means, vars;
  for (const auto& h : halves) {
    double mean = 0.0;
    for (double v : h) mean += v;
    mean /= N;
    double ss = 0.0;
    for (double v : h) ss += (v - mean) * (v - mean);
    means.push_back(mean);
    vars.push_back(ss / (N - 1.0));
  }
  double W = 0.0, grand = 0.0;
  for (std::size_t k = 0; k < halves.size(); ++k) {
    W += vars[k];
    grand += means[k];
  }
  W /= m;
  grand /= m;
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  const double B = N * between / (m - 1.0);
  RhatResult result;
  if (!(W > 0)) {
    result.note = "zero within-chain variance; R-hat undefined";
    return result;
  }
  result.value = std::sqrt(((N - 1.0) / N * W + B / N) / W);
  return result;
}

RhatResult split_rhat(const Draws& draws, const std::string& param) {
  const auto values = draws.column(param);
  std::map<int, std::vector<double>> by_chain;
  for (std::size_t s = 0; s < values.size(); ++s) by_chain[draws.chain[s]].push_back(values[s]);
  std::vector<std::vector<double>> chains;
  for (auto& [id, v] : by_chain) chains.push_back(std::move(v));
  return split_rhat(chains);
}

DualAveraging::DualAveraging(double initial_step, double target_accept, double gamma, double t0,
                             double kappa)
    : mu_(std::log(10.0 * initial_step)),
      target_(target_accept),
      gamma_(gamma),
      t0_(t0),
      kappa_(kappa),
      log_eps_(std::log(initial_step)) {}

void DualAveraging::update(double accept_stat) {
  if (std::isnan(accept_stat)) accept_stat = 0.0;
  count_ += 1.0;
  const double eta = 1.0 / (count_ + t0_);
  h_bar_ = (1.0 - eta) * h_bar_ + eta * (target_ - accept_stat);
  log_eps_ = mu_ - std::sqrt(count_) / gamma_ * h_bar_;
  const double weight = std::pow(count_, -kappa_);
  log_eps_bar_ = weight * log_eps_ + (1.0 - weight) * log_eps_bar_;
}

double DualAveraging::current() const { return std::exp(log_eps_); }

double DualAveraging::averaged() const {
  return count_ > 0 ? std::exp(log_eps_bar_) : std::exp(log_eps_);
}

}  // namespace bwf
