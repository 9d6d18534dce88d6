// esln_module.cpp — pybind11 bindings for the simulator core

#include "esln/config.hpp"
#include "esln/io.hpp"
#include "esln/kernels.hpp"
#include "esln/oracle.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

namespace py = pybind11;
using namespace esln;

namespace {

BathSpec make_bath(const Vector& masses, const Matrix& lambda) {
    BathSpec b;
    b.masses = masses;
    b.lambda = lambda;
    b.validate();
    return b;
}

KernelKind parse_kind(const std::string& kind) {
    if (kind == "R") return KernelKind::R;
    if (kind == "I") return KernelKind::I;
    if (kind == "e") return KernelKind::Even;
    if (kind == "o") return KernelKind::Odd;
    throw ValidationError("kind", "expected R | I | e | o, got '" + kind + "'");
}

py::array_t<cplx> stack(const std::vector<CMatrix>& series) {
    const py::ssize_t n = static_cast<py::ssize_t>(series.size());
    const py::ssize_t d = n ? static_cast<py::ssize_t>(series.front().rows()) : 0;
    py::array_t<cplx> out({n, d, d});
    auto v = out.mutable_unchecked<3>();
    for (py::ssize_t k = 0; k < n; ++k)
        for (py::ssize_t i = 0; i < d; ++i)
            for (py::ssize_t j = 0; j < d; ++j) v(k, i, j) = series[k](i, j);
    return out;
}

RunConfig with_overrides(const std::string& text, std::optional<std::size_t> n_traj,
                         std::optional<std::uint64_t> seed) {
    RunConfig cfg = parse_config_text(text);
    if (n_traj) cfg.ensemble.n_traj = *n_traj;
    if (seed) cfg.ensemble.master_seed = *seed;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Stochastic Liouville-von Neumann simulator core";

    // The module attributes own the exception types for the interpreter's lifetime.
    static PyObject* config_error = py::exception<Error>(m, "ConfigError", PyExc_ValueError).ptr();
    static PyObject* numerical_error = py::exception<Error>(m, "NumericalError", PyExc_RuntimeError).ptr();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(e.kind() == ErrorKind::Config ? config_error : numerical_error, e.what());
        }
    });

    m.def(
        "diagonalize_bath",
        [](const Vector& masses, const Matrix& lambda) {
            const NormalModes nm = diagonalize_bath(make_bath(masses, lambda));
            return py::make_tuple(nm.omegas, nm.evecs);
        },
        py::arg("masses"), py::arg("lam"), "Normal-mode frequencies (ascending) and eigenvector columns.");

    py::class_<KernelContext>(m, "KernelContext")
        .def(py::init([](const Vector& masses, const Matrix& lambda, double hbar, double beta) {
                 const BathSpec b = make_bath(masses, lambda);
                 return KernelContext(diagonalize_bath(b), b.masses, hbar, beta);
             }),
             py::arg("masses"), py::arg("lam"), py::arg("hbar") = 1.0, py::arg("beta") = 1.0)
        .def_property_readonly("omegas", [](const KernelContext& c) { return Vector(c.modes.omegas); })
        .def_property_readonly("hbar_beta", &KernelContext::hbar_beta)
        .def("k_real_r", &k_real_r, py::arg("mode"), py::arg("t"))
        .def("k_real_i", &k_real_i, py::arg("mode"), py::arg("t"))
        .def("k_imag_even", &k_imag_even, py::arg("mode"), py::arg("tau"))
        .def("k_imag_odd", &k_imag_odd, py::arg("mode"), py::arg("tau"))
        .def("k_complex", &k_complex, py::arg("mode"), py::arg("t"), py::arg("tau"))
        .def(
            "l_matrix",
            [](const KernelContext& c, const std::string& kind, double arg) { return l_matrix(c, parse_kind(kind), arg); },
            py::arg("kind"), py::arg("arg"))
        .def("l_matrix_complex", &l_matrix_complex, py::arg("t"), py::arg("tau"));

    m.def("gibbs_state", &gibbs_state, py::arg("h"), py::arg("beta"));

    m.def(
        "normalize_config",
        [](const std::string& text) { return emit_config(parse_config_text(text)).dump(); },
        py::arg("text"), "Validate a configuration document and return its canonical JSON form.");

    m.def(
        "run",
        [](const std::string& text, std::optional<std::size_t> n_traj, std::optional<std::uint64_t> seed,
           int workers) {
            const RunConfig cfg = with_overrides(text, n_traj, seed);
            std::string doc, csv;
            {
                py::gil_scoped_release release;
                const Pipeline p = cfg.prepare();
                EnsembleOptions o = cfg.ensemble_options();
                o.workers = workers;
                const EnsembleResult r = run_ensemble(p, o);
                doc = dump_document(result_document(cfg, p, r));
                csv = result_csv(r);
            }
            return py::make_tuple(doc, csv);
        },
        py::arg("text"), py::arg("n_traj") = py::none(), py::arg("seed") = py::none(), py::arg("workers") = 1,
        "Full pipeline; returns (output document JSON, series CSV).");

    m.def(
        "equilibrate",
        [](const std::string& text, std::optional<std::size_t> n_traj, std::optional<std::uint64_t> seed,
           int workers) {
            const RunConfig cfg = with_overrides(text, n_traj, seed);
            CMatrix rho0;
            cplx z;
            {
                py::gil_scoped_release release;
                const Pipeline p = cfg.prepare();
                EnsembleOptions o = cfg.ensemble_options();
                o.workers = workers;
                o.imaginary_only = true;
                const EnsembleResult r = run_ensemble(p, o);
                rho0 = r.mean_rho0;
                z = r.z_mean;
            }
            return py::make_tuple(rho0, z);
        },
        py::arg("text"), py::arg("n_traj") = py::none(), py::arg("seed") = py::none(), py::arg("workers") = 1,
        "Imaginary-time phase only; returns (mean initial density, mean weight).");

    m.def(
        "oracle",
        [](const std::string& text, std::optional<int> n_levels) {
            RunConfig cfg = parse_config_text(text);
            if (n_levels) cfg.oracle.n_levels = *n_levels;
            const TimeGrids g = TimeGrids::make(cfg.grids.t_f, cfg.grids.n_t, cfg.grids.n_tau,
                                                cfg.system.hbar * cfg.system.beta);
            OracleResult r;
            {
                py::gil_scoped_release release;
                r = exact_reduced_dynamics(cfg.system, diagonalize_bath(cfg.bath), cfg.bath, cfg.oracle, g);
            }
            return py::make_tuple(stack(r.rho_series), r.warnings);
        },
        py::arg("text"), py::arg("n_levels") = py::none(),
        "Exact reduced densities on the real-time grid, shape (n_t, d, d), and truncation warnings.");

    m.def(
        "verify_noise",
        [](const std::string& text, std::size_t samples, int points, std::optional<std::uint64_t> seed) {
            const RunConfig cfg = with_overrides(text, std::nullopt, seed);
            std::string doc;
            {
                py::gil_scoped_release release;
                const Pipeline p = cfg.prepare();
                const NoiseReport rep =
                    verify_empirical(p.factor, p.covariance, samples, cfg.ensemble.master_seed, points);
                doc = noise_report_json(rep, p.factor).dump();
            }
            return doc;
        },
        py::arg("text"), py::arg("samples") = 100000, py::arg("points") = 8, py::arg("seed") = py::none(),
        "Empirical pseudo-covariance check; returns the report as JSON.");

    m.def(
        "compare",
        [](const std::string& csv_a, const std::string& csv_b, double threshold) {
            const CompareReport r = compare_series(parse_csv(csv_a, "a"), parse_csv(csv_b, "b"), threshold);
            py::dict d;
            d["n_compared"] = r.n_compared;
            d["n_over"] = r.n_over;
            d["max_z"] = r.max_z;
            d["max_abs_diff"] = r.max_abs_diff;
            d["pass"] = r.pass();
            return d;
        },
        py::arg("csv_a"), py::arg("csv_b"), py::arg("threshold") = 5.0);

    m.def(
        "oracle_csv",
        [](const std::string& text) {
            const RunConfig cfg = parse_config_text(text);
            const TimeGrids g = TimeGrids::make(cfg.grids.t_f, cfg.grids.n_t, cfg.grids.n_tau,
                                                cfg.system.hbar * cfg.system.beta);
            return oracle_csv(g, exact_reduced_dynamics(cfg.system, diagonalize_bath(cfg.bath), cfg.bath,
                                                        cfg.oracle, g));
        },
        py::arg("text"), "Oracle series in the CSV schema shared with `run`.");
}
