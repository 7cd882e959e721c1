#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "qsk/bregman.hpp"
#include "qsk/error.hpp"
#include "qsk/harness.hpp"
#include "qsk/instances.hpp"
#include "qsk/matrix_market.hpp"
#include "qsk/quantile.hpp"
#include "qsk/solvers.hpp"
#include "qsk/theory.hpp"

namespace py = pybind11;
using namespace qsk;

namespace {

DenseMatrix to_matrix(const std::vector<std::vector<double>>& rows) { return DenseMatrix::from_rows(rows); }

std::vector<std::vector<double>> to_rows(const DenseMatrix& a) {
    std::vector<std::vector<double>> out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) out[i].assign(a.row(i).begin(), a.row(i).end());
    return out;
}

py::dict trace_dict(const ConvergenceTrace& trace) {
    std::vector<std::size_t> k, set_size;
    std::vector<double> rel, breg, quant, elapsed;
    for (const auto& r : trace) {
        k.push_back(r.k);
        rel.push_back(r.rel_error.value_or(std::numeric_limits<double>::quiet_NaN()));
        breg.push_back(r.bregman_dist.value_or(std::numeric_limits<double>::quiet_NaN()));
        quant.push_back(r.quantile);
        set_size.push_back(r.set_size);
        elapsed.push_back(r.elapsed_seconds);
    }
    py::dict d;
    d["k"] = k;
    d["rel_error"] = rel;
    d["bregman_dist"] = breg;
    d["quantile"] = quant;
    d["set_size"] = set_size;
    d["elapsed_s"] = elapsed;
    return d;
}

SolverConfig make_config(const std::string& method, std::optional<double> q, double lambda, const std::string& w,
                         std::size_t iters, std::uint64_t seed, std::size_t trace_every,
                         std::optional<double> stop_tol) {
    const auto mc = cli::parse_method(method);
    SolverConfig c;
    c.method = mc.method;
    c.lambda = mc.sparse ? lambda : 0.0;
    if (mc.quantile) c.quantile_q = q.value_or(0.7);
    c.stepsize = cli::parse_stepsize(w);
    c.max_iters = iters;
    c.seed = seed;
    c.trace_every = trace_every;
    c.stop_tol = stop_tol;
    c.record_time = false;
    return c;
}

} // namespace

PYBIND11_MODULE(_qsk, m) {
    m.doc() = "Quantile-filtered randomized sparse Kaczmarz solvers";

    py::register_exception<Error>(m, "QskError", PyExc_RuntimeError);

    m.def("soft_shrink", [](const Vector& v, double lam) { return soft_shrink(v, lam); }, py::arg("v"),
          py::arg("lam"));
    m.def("f_value", [](const Vector& x, double lam) { return f_value(x, lam); }, py::arg("x"), py::arg("lam"));
    m.def("conjugate_value", [](const Vector& x, double lam) { return conjugate_value(x, lam); },
          py::arg("x_star"), py::arg("lam"));
    m.def("exact_step", [](const Vector& xs, const Vector& a, double b, double lam) { return exact_step(xs, a, b, lam); },
          py::arg("x_star"), py::arg("a"), py::arg("b"), py::arg("lam"));
    m.def(
        "bregman_distance",
        [](const Vector& x_star, const Vector& y, double lam) {
            return bregman_distance(DualPrimalPair::from_dual(x_star, lam), y, lam);
        },
        py::arg("x_star"), py::arg("y"), py::arg("lam"),
        "D between the primal point S(x_star) with subgradient x_star and y.");
    m.def("q_quantile", [](const Vector& v, double q) { return q_quantile(v, q); }, py::arg("values"), py::arg("q"));
    m.def(
        "acceptable_set", [](const Vector& r, double q, bool strict) { return acceptable_set(r, q, strict); },
        py::arg("abs_residuals"), py::arg("threshold"), py::arg("strict") = false);
    m.def(
        "normalize_rows",
        [](const std::vector<std::vector<double>>& rows) {
            const auto nr = normalize_rows(to_matrix(rows));
            return py::make_tuple(to_rows(nr.matrix), nr.scales);
        },
        py::arg("a"));

    py::class_<ProblemInstance>(m, "ProblemInstance")
        .def_property_readonly("a", [](const ProblemInstance& p) { return to_rows(p.a); })
        .def_readonly("b_clean", &ProblemInstance::b_clean)
        .def_readonly("b_corrupt", &ProblemInstance::b_corrupt)
        .def_readonly("noise", &ProblemInstance::noise)
        .def_readonly("b_observed", &ProblemInstance::b_observed)
        .def_readonly("x_hat", &ProblemInstance::x_hat)
        .def_readonly("corrupted_rows", &ProblemInstance::corrupted_rows)
        .def_property_readonly("m", &ProblemInstance::rows)
        .def_property_readonly("n", &ProblemInstance::cols)
        .def("save", [](const ProblemInstance& p, const std::filesystem::path& dir) { save_bundle(p, dir); });

    m.def(
        "generate_gaussian",
        [](std::size_t m_, std::size_t n, std::size_t s, double beta, double k, double noise, std::uint64_t seed) {
            return generate_gaussian({m_, n, s, beta, k, noise, seed});
        },
        py::arg("m"), py::arg("n"), py::arg("s"), py::arg("beta") = 0.0, py::arg("corruption") = 0.0,
        py::arg("noise") = 0.0, py::arg("seed") = 0);
    m.def(
        "make_instance",
        [](const std::vector<std::vector<double>>& a, std::optional<Vector> x_hat, std::optional<Vector> rhs,
           double beta, double k, double noise, std::uint64_t seed) {
            return make_instance(to_matrix(a), std::move(x_hat), std::move(rhs), beta, k, noise, seed);
        },
        py::arg("a"), py::arg("x_hat") = std::nullopt, py::arg("rhs") = std::nullopt, py::arg("beta") = 0.0,
        py::arg("corruption") = 0.0, py::arg("noise") = 0.0, py::arg("seed") = 0);
    m.def("load_bundle", &load_bundle, py::arg("path"));

    m.def(
        "solve",
        [](const ProblemInstance& inst, const std::string& method, std::optional<double> q, double lam,
           const std::string& w, std::size_t iters, std::uint64_t seed, std::size_t trace_every,
           std::optional<double> stop_tol) {
            const auto res = run(inst, make_config(method, q, lam, w, iters, seed, trace_every, stop_tol));
            py::dict d;
            d["x"] = res.state.pair.x;
            d["x_star"] = res.state.pair.x_star;
            d["iterations"] = res.state.k;
            d["reached_tol"] = res.reached_tol;
            d["trace"] = trace_dict(res.trace);
            return d;
        },
        py::arg("instance"), py::arg("method") = "quantile-raska", py::arg("q") = std::nullopt,
        py::arg("lam") = 1.0, py::arg("w") = "1", py::arg("iters") = 1000, py::arg("seed") = 0,
        py::arg("trace_every") = 1, py::arg("stop_tol") = std::nullopt);

    py::class_<SpectralReport>(m, "SpectralReport")
        .def_readonly("sigma_max", &SpectralReport::sigma_max)
        .def_readonly("sigma_min", &SpectralReport::sigma_min)
        .def_readonly("sigma_tilde_min", &SpectralReport::sigma_tilde_min)
        .def_readonly("sigma_q_beta_min_rowcol", &SpectralReport::sigma_q_beta_min_rowcol)
        .def_readonly("sigma_q_beta_min_rows", &SpectralReport::sigma_q_beta_min_rows)
        .def_readonly("subset_rows", &SpectralReport::subset_rows)
        .def_readonly("samples", &SpectralReport::samples);
    m.def(
        "spectral_constants",
        [](const std::vector<std::vector<double>>& a, double q, double beta, bool sampled, std::size_t samples,
           double budget, std::uint64_t seed) {
            SpectralOptions o;
            o.mode = sampled ? SpectralMode::Sampled : SpectralMode::Exact;
            o.samples = samples;
            o.budget = budget;
            o.seed = seed;
            return spectral_constants(to_matrix(a), q, beta, o);
        },
        py::arg("a"), py::arg("q"), py::arg("beta"), py::arg("sampled") = false, py::arg("samples") = 1000,
        py::arg("budget") = 2e6, py::arg("seed") = 0);
    m.def("rask_rate", py::overload_cast<double, double, double, double>(&rask_rate), py::arg("frobenius"),
          py::arg("sigma_tilde_min"), py::arg("x_hat_min"), py::arg("lam"));

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::vector<const char*> argv{"qsk"};
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
