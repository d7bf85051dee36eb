#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bwf/data_pipeline.hpp"
#include "bwf/error.hpp"
#include "bwf/models.hpp"
#include "bwf/plots.hpp"
#include "bwf/ppc.hpp"
#include "bwf/prior_pred.hpp"
#include "bwf/psis.hpp"
#include "bwf/sampler.hpp"

namespace py = pybind11;
using namespace bwf;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Array to_numpy(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Matrix from_numpy(const Array& a) {
  if (a.ndim() != 2) throw ValidationError("expected a 2-d array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

std::vector<double> vec(const Array& a) {
  if (a.ndim() != 1) throw ValidationError("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

ModelSpec make_model(const std::string& kind, const std::optional<std::string>& priors) {
  ModelSpec m = ModelSpec::make(parse_model_kind(kind));
  if (priors) {
    if (m.is_eight_schools()) throw ValidationError("8-schools models use fixed priors");
    m.priors = PriorConfig::named(*priors);
  }
  return m;
}

py::dict draws_dict(const Draws& d) {
  py::dict out;
  out["names"] = d.names;
  out["params"] = to_numpy(d.params);
  out["chain"] = d.chain;
  out["iteration"] = d.iteration;
  out["divergent"] = std::vector<bool>(d.divergent.begin(), d.divergent.end());
  out["energy"] = to_numpy(d.energy);
  out["accept_stat"] = to_numpy(d.accept_stat);
  return out;
}

Draws draws_from(const py::dict& d) {
  Draws out;
  out.names = d["names"].cast<std::vector<std::string>>();
  out.params = from_numpy(d["params"].cast<Array>());
  out.chain = d["chain"].cast<std::vector<int>>();
  out.iteration = d["iteration"].cast<std::vector<int>>();
  const auto div = d["divergent"].cast<std::vector<bool>>();
  out.divergent.assign(div.begin(), div.end());
  out.energy = vec(d["energy"].cast<Array>());
  out.accept_stat = vec(d["accept_stat"].cast<Array>());
  out.validate();
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian workflow core: models, HMC, PPC and PSIS-LOO";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ComputationError>(m, "ComputationError", PyExc_RuntimeError);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def_readwrite("x", &Dataset::x)
      .def_readwrite("y", &Dataset::y)
      .def_readwrite("group", &Dataset::group)
      .def_readwrite("group_names", &Dataset::group_names)
      .def("__len__", &Dataset::size)
      .def_property_readonly("n_groups", &Dataset::n_groups)
      .def("validate", &Dataset::validate, py::arg("allow_empty") = false);

  m.def("eight_schools", &eight_schools_dataset);
  m.def(
      "load_csv",
      [](const std::string& path, const std::string& grouping) {
        return load_csv(path, grouping == "cluster" ? GroupColumn::Cluster : GroupColumn::Who);
      },
      py::arg("path"), py::arg("grouping") = "who");
  m.def(
      "simulate",
      [](std::optional<std::uint64_t> seed, const std::string& design, const std::string& grouping) {
        SynthConfig cfg = design == "grouped" ? grouped_synth_config(seed.value_or(1)) : SynthConfig{};
        if (design != "grouped" && design != "default") {
          throw ValidationError("design must be 'default' or 'grouped'");
        }
        if (seed) cfg.seed = *seed;
        const auto r = synth_generate(cfg);
        return to_dataset(r.table, grouping == "cluster" ? GroupColumn::Cluster : GroupColumn::Who);
      },
      py::arg("seed") = py::none(), py::arg("design") = "default", py::arg("grouping") = "who",
      "Synthetic monitor data as a Dataset.");
  m.def("ols_r2", [](const std::vector<double>& x, const std::vector<double>& y) {
    return ols_fit(x, y).r_squared;
  });

  m.def(
      "log_posterior",
      [](const std::string& kind, const Dataset& data, const std::vector<double>& theta,
         std::optional<std::string> priors) {
        const ModelSpec model = make_model(kind, priors);
        std::vector<double> grad(theta.size());
        if (theta.size() != model.dimension(data.n_groups())) {
          throw ValidationError("theta has the wrong dimension");
        }
        const double lp = log_posterior_grad_raw(model, data, theta, grad);
        return py::make_tuple(lp, to_numpy(grad));
      },
      py::arg("kind"), py::arg("data"), py::arg("theta"), py::arg("priors") = py::none(),
      "Unconstrained log posterior and its gradient.");
  m.def(
      "parameter_names",
      [](const std::string& kind, const Dataset& data) {
        return make_model(kind, std::nullopt).unconstrained_names(data.n_groups());
      },
      py::arg("kind"), py::arg("data"));

  m.def(
      "fit",
      [](const std::string& kind, const Dataset& data, std::optional<std::string> priors,
         int chains, int warmup, int draws, double target_accept, std::uint64_t seed) {
        SamplerConfig c;
        c.n_chains = chains;
        c.n_warmup = warmup;
        c.n_keep = draws;
        c.target_accept = target_accept;
        c.seed = seed;
        FitResult fit;
        {
          py::gil_scoped_release release;
          fit = run_chains(make_model(kind, priors), data, c);
        }
        return draws_dict(fit.draws);
      },
      py::arg("kind"), py::arg("data"), py::arg("priors") = py::none(), py::arg("chains") = 4,
      py::arg("warmup") = 1000, py::arg("draws") = 1000, py::arg("target_accept") = 0.8,
      py::arg("seed") = 1234, "Run the HMC sampler; returns a dict of draws.");
  m.def(
      "split_rhat",
      [](const std::vector<std::vector<double>>& chains) {
        const auto r = split_rhat(chains);
        return py::make_tuple(r.value, r.note ? py::cast(*r.note) : py::none());
      },
      py::arg("chains"), "Split R-hat and an optional note.");

  m.def(
      "pointwise_log_lik",
      [](const std::string& kind, const Dataset& data, const py::dict& draws) {
        return to_numpy(pointwise_log_lik(make_model(kind, std::nullopt), data, draws_from(draws)));
      },
      py::arg("kind"), py::arg("data"), py::arg("draws"));
  m.def(
      "replicates",
      [](const std::string& kind, const Dataset& data, const py::dict& draws, std::uint64_t seed) {
        RngStream rng(seed);
        return to_numpy(
            simulate_replicates(make_model(kind, std::nullopt), data, draws_from(draws), rng));
      },
      py::arg("kind"), py::arg("data"), py::arg("draws"), py::arg("seed") = 1);

  m.def(
      "prior_predictive",
      [](const std::string& kind, const Dataset& templ, int n, std::optional<std::string> priors,
         std::uint64_t seed) {
        RngStream rng(seed);
        const auto book = prior_flipbook(make_model(kind, priors), templ, n, rng);
        const auto s = prior_tail_summary(book);
        py::dict summary;
        summary["max_abs_q05"] = s.max_abs_q05;
        summary["max_abs_q50"] = s.max_abs_q50;
        summary["max_abs_q95"] = s.max_abs_q95;
        summary["datasets_exceeding"] = s.datasets_exceeding;
        summary["points_exceeding"] = s.points_exceeding;
        return py::make_tuple(book.datasets, summary);
      },
      py::arg("kind"), py::arg("template"), py::arg("n_datasets") = 1000,
      py::arg("priors") = py::none(), py::arg("seed") = 1234,
      "Simulated datasets and a summary of their tails.");

  m.def("gpd_fit", [](std::vector<double> tail) {
    const auto f = gpd_fit_tail(tail);
    return py::make_tuple(f.khat, f.sigma);
  });
  m.def(
      "psis",
      [](const std::vector<double>& log_ratios) {
        const auto r = psis_smooth(log_ratios);
        return py::make_tuple(to_numpy(r.log_weights), r.khat, to_string(r.status));
      },
      py::arg("log_ratios"), "Smoothed log weights, khat and status.");

  py::class_<LooResult>(m, "LooResult")
      .def_property_readonly("pointwise_elpd", [](const LooResult& r) { return to_numpy(r.pointwise_elpd); })
      .def_property_readonly("khat", [](const LooResult& r) { return to_numpy(r.khat); })
      .def_property_readonly("log_weights", [](const LooResult& r) { return to_numpy(r.smoothed_log_weights); })
      .def_readonly("elpd", &LooResult::elpd_total)
      .def_readonly("se", &LooResult::elpd_se)
      .def("influence", [](const LooResult& r) { return to_numpy(r.influence()); });

  m.def("loo", [](const Array& log_lik) { return elpd_loo(from_numpy(log_lik)); }, py::arg("log_lik"),
        "PSIS-LOO from an S x n pointwise log-likelihood array.");
  m.def(
      "loo_compare",
      [](const LooResult& a, const LooResult& b) {
        const auto c = loo_compare(a, b);
        return py::make_tuple(c.diff_total, c.diff_se, to_numpy(c.pointwise_diff));
      },
      py::arg("a"), py::arg("b"), "elpd(b) - elpd(a): total, se and pointwise differences.");

  m.def("test_stat", [](const std::vector<double>& v, const std::string& kind) {
    return test_stat(v, parse_stat_kind(kind));
  });
  m.def(
      "stat_check",
      [](const std::vector<double>& y, const Array& yrep, const std::string& kind) {
        const auto c = ppc_stat_check(y, from_numpy(yrep), parse_stat_kind(kind)).checks.front();
        return py::make_tuple(c.observed, c.p_upper, c.p_lower);
      },
      py::arg("y"), py::arg("yrep"), py::arg("stat"),
      "Observed statistic and the upper and lower tail fractions.");
  m.def(
      "kde",
      [](const std::vector<double>& v, int n_grid) {
        const auto c = kde(v, n_grid);
        return py::make_tuple(to_numpy(c.grid), to_numpy(c.density));
      },
      py::arg("values"), py::arg("n_grid") = 256);
  m.def(
      "loo_pit",
      [](const std::vector<double>& y, const Array& yrep, const Array& log_weights) {
        return to_numpy(loo_pit(y, from_numpy(yrep), from_numpy(log_weights)));
      },
      py::arg("y"), py::arg("yrep"), py::arg("log_weights"));
  m.def("ks_uniform", [](const std::vector<double>& v) { return ks_uniform_distance(v); });

  m.def(
      "divergence_scatter_svg",
      [](const py::dict& draws, const std::string& x, const std::string& y) {
        return plot_to_svg(divergence_scatter_data(draws_from(draws), x, y));
      },
      py::arg("draws"), py::arg("x"), py::arg("y"));
}
