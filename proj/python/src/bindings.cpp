#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "hpsfde/certificates.hpp"
#include "hpsfde/config.hpp"
#include "hpsfde/error.hpp"
#include "hpsfde/estimators.hpp"
#include "hpsfde/lyapunov.hpp"
#include "hpsfde/markov.hpp"

namespace py = pybind11;
using namespace hpsfde;

namespace {

Preset require_preset(const std::string& name) {
    const auto p = parse_preset(name);
    if (!p) throw Error(ErrorCode::InvalidArgument, "unknown preset '" + name + "'");
    return *p;
}

py::dict verdict_dict(const CertificateVerdict& v) {
    py::dict d;
    d["holds"] = v.holds;
    d["margins"] = v.margins;
    d["epsilon"] = v.epsilon;
    d["epsilon_sup"] = v.epsilon_sup;
    d["detail"] = v.detail;
    d["notes"] = v.notes;
    return d;
}

py::dict report_dict(const RateReport& r) {
    py::dict d;
    d["kind"] = std::string(to_string(r.kind));
    d["power"] = r.power;
    d["fitted_rate"] = r.fitted_rate;
    d["stderr"] = r.standard_error;
    d["window"] = py::make_tuple(r.window_start, r.window_end);
    d["n_paths_used"] = r.n_paths_used;
    d["n_exploded"] = r.n_exploded;
    d["per_path_rates"] = r.per_path_rates;
    d["t"] = r.series_t;
    d["statistic"] = r.series_value;
    return d;
}

void apply_overrides(ExperimentConfig& cfg, std::optional<std::size_t> paths, std::optional<std::uint64_t> seed,
                     std::optional<double> T, std::optional<double> dt, int workers) {
    if (paths) cfg.simulation.paths = *paths;
    if (seed) cfg.simulation.seed = *seed;
    if (T) cfg.simulation.T = *T;
    if (dt) cfg.simulation.dt = *dt;
    cfg.simulation.workers = workers;
}

SimulationBatch simulate(const std::string& config, std::optional<std::size_t> paths,
                         std::optional<std::uint64_t> seed, std::optional<double> T, std::optional<double> dt,
                         int workers) {
    auto cfg = load_config(config);
    apply_overrides(cfg, paths, seed, T, dt, workers);
    py::gil_scoped_release release;
    return run_batch(cfg.model, cfg.simulation.integrator(cfg.model), cfg.simulation.paths,
                     cfg.simulation.initial_regime, cfg.simulation.seed, workers);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Simulation and stability certificates for hybrid pantograph stochastic functional equations";

    static PyObject* error_type = PyErr_NewException("hpsfde.Error", PyExc_RuntimeError, nullptr);
    m.attr("Error") = py::handle(error_type);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::handle(error_type)(e.what());
            exc.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(error_type, exc.ptr());
        }
    });

    py::class_<SimulationBatch>(m, "Batch")
        .def_property_readonly("size", &SimulationBatch::size)
        .def_property_readonly("exploded_count", &SimulationBatch::exploded_count)
        .def_property_readonly("dt", [](const SimulationBatch& b) { return b.config.dt; })
        .def_property_readonly("T", [](const SimulationBatch& b) { return b.config.T; })
        .def("grid", &SimulationBatch::shared_grid)
        .def("times", [](const SimulationBatch& b, std::size_t i) {
            const auto t = b.results.at(i).path.times();
            return std::vector<double>(t.begin(), t.end());
        })
        .def("values", [](const SimulationBatch& b, std::size_t i) {
            const auto v = b.results.at(i).path.values();
            return std::vector<double>(v.begin(), v.end());
        })
        .def("regimes", [](const SimulationBatch& b, std::size_t i) {
            const auto r = b.results.at(i).path.regimes();
            return std::vector<int>(r.begin(), r.end());
        })
        .def("seed", [](const SimulationBatch& b, std::size_t i) { return b.results.at(i).seed; });

    m.def("presets", [] { return std::vector<std::string>{"example_3_4", "example_3_5", "example_3_7"}; });

    m.def("simulate", &simulate, py::arg("config"), py::arg("paths") = py::none(), py::arg("seed") = py::none(),
          py::arg("T") = py::none(), py::arg("dt") = py::none(), py::arg("workers") = 0,
          "Runs the experiment in a JSON config file, with optional overrides.");

    m.def(
        "estimate",
        [](const SimulationBatch& batch, const std::string& kind, int power, std::size_t min_paths) {
            EstimatorOptions opts;
            opts.min_paths = min_paths;
            py::gil_scoped_release release;
            RateReport r;
            if (kind == "moment") {
                r = estimate_moment_rate(batch, power, opts);
            } else if (kind == "as") {
                r = estimate_as_rate(batch, power, opts);
            } else if (kind == "avg") {
                r = estimate_time_average(batch, power, opts);
            } else if (kind == "poly") {
                r = estimate_polynomial_rate(batch, power, opts);
            } else {
                throw Error(ErrorCode::InvalidArgument, "kind must be moment, as, avg or poly");
            }
            py::gil_scoped_acquire acquire;
            return report_dict(r);
        },
        py::arg("batch"), py::arg("kind"), py::arg("power"), py::arg("min_paths") = 100);

    m.def(
        "check_ito",
        [](const std::string& config, std::optional<std::size_t> paths, std::optional<double> dt, int workers) {
            auto cfg = load_config(config);
            if (!cfg.lyapunov) throw Error(ErrorCode::ConfigError, "config has no Lyapunov family");
            const double t_end = cfg.ito_t_end.value_or(cfg.model.t0 + 1.0);
            apply_overrides(cfg, paths, std::nullopt, t_end, dt, workers);
            MartingaleResidual r;
            {
                py::gil_scoped_release release;
                const auto batch = run_batch(cfg.model, cfg.simulation.integrator(cfg.model), cfg.simulation.paths,
                                             cfg.simulation.initial_regime, cfg.simulation.seed, workers);
                r = martingale_residual(*cfg.lyapunov, batch, t_end, workers);
            }
            py::dict d;
            d["residual"] = r.residual;
            d["stderr"] = r.standard_error;
            d["z"] = r.z;
            d["bias_allowance"] = r.bias_allowance();
            d["n_used"] = r.n_used;
            d["passes"] = r.passes();
            return d;
        },
        py::arg("config"), py::arg("paths") = py::none(), py::arg("dt") = py::none(), py::arg("workers") = 0);

    m.def("check_existence", [](const std::string& p) { return verdict_dict(check_existence(preset_certificate(require_preset(p)))); });
    m.def("solve_epsilon_exponential",
          [](const std::string& p) { return verdict_dict(solve_epsilon_exponential(preset_certificate(require_preset(p)))); });
    m.def("solve_epsilon_polynomial",
          [](const std::string& p) { return verdict_dict(solve_epsilon_polynomial(preset_certificate(require_preset(p)))); });
    m.def("certify_exponential", [](const std::string& p, double eps) {
        return verdict_dict(certify_exponential(preset_certificate(require_preset(p)), eps));
    });

    m.def("stationary_distribution",
          [](const std::vector<std::vector<double>>& rates) { return stationary_distribution(make_generator(rates)); });
    m.def(
        "occupation_fractions",
        [](const std::vector<std::vector<double>>& rates, int i0, double t0, double T, std::uint64_t seed) {
            const auto g = make_generator(rates);
            return sample_regime_path(g, i0, t0, T, seed).occupation_fractions(g.size());
        },
        py::arg("rates"), py::arg("i0"), py::arg("t0"), py::arg("T"), py::arg("seed"));
}
