// Acceptance run: one [PASS]/[FAIL] line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracles.hpp"
#include "qsk/bregman.hpp"
#include "qsk/error.hpp"
#include "qsk/harness.hpp"
#include "qsk/instances.hpp"
#include "qsk/quantile.hpp"
#include "qsk/solvers.hpp"
#include "qsk/theory.hpp"

using namespace qsk;
namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double time_limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = o.pass;
    if (time_limit_s > 0 && secs > time_limit_s) {
        pass = false;
        o.detail += " (over time limit)";
    }
    if (!pass) ++failures;
    std::printf("[%s] %2d %s: %s [%.1fs]\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

SolverConfig config(Method m, double lambda, std::optional<double> q, std::size_t iters, std::uint64_t seed) {
    SolverConfig c;
    c.method = m;
    c.lambda = lambda;
    c.quantile_q = q;
    c.max_iters = iters;
    c.seed = seed;
    c.trace_every = iters;
    c.record_time = false;
    return c;
}

double value_at(const cli::ExperimentOutput& out, std::size_t row, std::size_t col) {
    return out.rows.at(row).values.at(col);
}

// --- 1 ---------------------------------------------------------------------

Outcome sparse_correctness() {
    const auto inst = generate_gaussian({200, 50, 5, 0.0, 0.0, 0.0, 101});
    const Vector ref = oracle::linearized_bregman(inst.a, inst.b_observed, 1.0);
    const auto res = run(inst, config(Method::SingleRowInexact, 1.0, std::nullopt, 50000, 7));
    const double err = distance(res.state.pair.x, ref) / norm2(ref);
    return {err <= 1e-3, "rel_error vs oracle " + fmt("%.3g", err)};
}

// --- 2 ---------------------------------------------------------------------

Outcome corruption_robustness() {
    const std::size_t trials = 21, iters = 20000;
    const InstanceFactory factory = [](std::uint64_t seed) {
        return generate_gaussian({2000, 100, 10, 0.2, 100.0, 0.0, seed});
    };
    const auto quantile = median_of_trials(factory, config(Method::SingleRowInexact, 1.0, 0.7, iters, 0), trials);
    const auto plain = median_of_trials(factory, config(Method::SingleRowInexact, 1.0, std::nullopt, iters, 0), trials);
    const double eq = *quantile.back().rel_error, ep = *plain.back().rel_error;
    return {eq <= 1e-2 && ep >= 1e-1,
            "median rel_error Quantile-RaSK " + fmt("%.3g", eq) + ", RaSK " + fmt("%.3g", ep)};
}

// --- 3 ---------------------------------------------------------------------

Outcome block_acceleration() {
    cli::ExperimentOptions o;
    o.preset = "method-compare";
    o.n_list = {100};
    o.iters = 1500;
    const auto out = cli::run_experiment(o);
    double erask = kNaN, raska = kNaN;
    for (std::size_t r = 0; r < out.rows.size(); ++r) {
        const double v = std::isnan(value_at(out, r, 0)) ? std::numeric_limits<double>::infinity() : value_at(out, r, 0);
        if (out.rows[r].label == "quantile-erask") erask = v;
        if (out.rows[r].label == "quantile-raska") raska = v;
    }
    const bool pass = std::isfinite(raska) && erask >= 10.0 * raska;
    return {pass, "iterations to 1e-2: Quantile-ERaSK " + fmt("%g", erask) + ", Quantile-RaSKA " + fmt("%g", raska)};
}

// --- 4 ---------------------------------------------------------------------

Outcome stepsize_scaling() {
    cli::ExperimentOptions o;
    o.preset = "stepsize-sweep";
    o.n_list = {50, 100};
    const auto out = cli::run_experiment(o);
    std::map<double, double> best; // n -> optimal w / n
    for (const auto& r : out.rows) best[r.values[0]] = r.values[4];
    const double c50 = best.at(50), c100 = best.at(100);
    const double w50 = c50 * 50, w100 = c100 * 100;
    const bool in_range = c50 >= 1.0 && c50 <= 2.6 && c100 >= 1.0 && c100 <= 2.6;
    const double ratio = w100 / (2.0 * w50);
    const bool scaled = ratio >= 0.5 && ratio <= 2.0;
    return {in_range && scaled, "optimal w: n=50 " + fmt("%.3g", c50) + "n, n=100 " + fmt("%.3g", c100) +
                                    "n, w100/(2 w50) = " + fmt("%.3g", ratio)};
}

// --- 5 ---------------------------------------------------------------------

Outcome q_vs_beta() {
    cli::ExperimentOptions o;
    o.preset = "qbeta-grid";
    o.beta_list = {0.2};
    const auto out = cli::run_experiment(o);
    double best_q = kNaN, best_err = std::numeric_limits<double>::infinity();
    for (const auto& r : out.rows) {
        if (r.values[1] > 0.9 + 1e-12) continue;
        if (r.values[2] < best_err) {
            best_err = r.values[2];
            best_q = r.values[1];
        }
    }
    const bool pass = std::abs(best_q - 0.7) < 1e-9 || std::abs(best_q - 0.8) < 1e-9;
    return {pass, "minimum-error q " + fmt("%g", best_q) + " (rel_error " + fmt("%.3g", best_err) + ")"};
}

// --- 6 ---------------------------------------------------------------------

Outcome corruption_scale() {
    cli::ExperimentOptions o;
    o.preset = "corruption-scale";
    const auto out = cli::run_experiment(o);
    std::map<std::string, std::vector<double>> counts;
    for (const auto& r : out.rows)
        counts[r.label].push_back(std::isnan(r.values[1]) ? std::numeric_limits<double>::infinity() : r.values[1]);
    bool pass = !counts.empty();
    std::string detail;
    for (const auto& [method, c] : counts) {
        detail += method + " [";
        for (std::size_t i = 0; i < c.size(); ++i) {
            detail += (i ? " " : "") + fmt("%g", c[i]);
            if (!std::isfinite(c[i])) pass = false;
            if (i > 0 && c[i] > 1.1 * c[i - 1]) pass = false;
        }
        detail += "] ";
    }
    return {pass, detail + "for k = 1, 10, 100"};
}

// --- 7 ---------------------------------------------------------------------

Outcome quantile_bound() {
    std::size_t checks = 0, fails = 0;
    const Method methods[] = {Method::SingleRowInexact, Method::SingleRowExact, Method::AveragedBlock};
    std::uint64_t seed = 1000;
    for (std::size_t m : {50, 120, 300})
        for (double beta : {0.05, 0.1, 0.2})
            for (double noise : {0.0, 0.02, 0.5})
                for (const Method method : methods) {
                    ++seed;
                    const auto inst = generate_gaussian({m, m / 5, 3, beta, 100.0, noise, seed});
                    const double q = 0.5 + 0.1 * static_cast<double>(seed % 3);
                    SolverConfig c = config(method, 1.0, q, 1300, seed);
                    c.stepsize = Stepsize::times_n(1.0);
                    c.lemma31_sigma_max = largest_singular_value(inst.a);
                    const auto res = run(inst, c);
                    checks += res.lemma31_checks;
                    fails += res.lemma31_failures;
                }
    return {checks >= 100000 && fails == 0,
            std::to_string(checks) + " checks, " + std::to_string(fails) + " failures"};
}

// --- 8 ---------------------------------------------------------------------

Outcome bregman_properties() {
    Rng rng(808);
    const int cases = 2000;
    std::size_t sandwich = 0, descent = 0, membership = 0, fenchel = 0;
    for (int t = 0; t < cases; ++t) {
        const std::size_t n = 1 + rng.uniform_index(10);
        const double lambda = rng.uniform(0.0, 2.0);
        const auto pair = DualPrimalPair::from_dual(oracle::random_vector(rng, n, 2.0), lambda);

        // Fenchel: f(x) + f*(x*) = <x, x*>
        if (std::abs(f_value(pair.x, lambda) + conjugate_value(pair.x_star, lambda) - dot(pair.x, pair.x_star)) > 1e-10)
            ++fenchel;

        // sandwich: 1/2 |x - y|^2 <= D <= |x* - y*| |x - y| for any y* in the subdifferential at y
        Vector y = oracle::random_vector(rng, n);
        for (double& v : y)
            if (rng.uniform01() < 0.3) v = 0.0;
        Vector ys(n);
        for (std::size_t j = 0; j < n; ++j) ys[j] = y[j] + lambda * ((y[j] > 0) - (y[j] < 0));
        const double d = bregman_distance(pair, y, lambda), dist = distance(pair.x, y);
        if (0.5 * dist * dist > d + 1e-10 || d > distance(pair.x_star, ys) * dist + 1e-10) ++sandwich;

        // exact step lands on the hyperplane; the projection decreases D to any point of it
        const Vector a = oracle::random_vector(rng, n);
        const double b = rng.normal();
        const auto z = bregman_project_hyperplane(pair, a, b, lambda);
        if (std::abs(dot(a, z.x) - b) > 1e-9) ++membership;
        const double r = dot(a, pair.x) - b, aa = dot(a, a);
        Vector on = oracle::random_vector(rng, n);
        const double off = (dot(a, on) - b) / aa;
        for (std::size_t j = 0; j < n; ++j) on[j] -= off * a[j];
        if (bregman_distance(z, on, lambda) > bregman_distance(pair, on, lambda) - 0.5 * r * r / aa + 1e-9) ++descent;
    }
    const bool pass = sandwich + descent + membership + fenchel == 0;
    return {pass, std::to_string(cases) + " cases each; failures sandwich " + std::to_string(sandwich) + ", descent " +
                      std::to_string(descent) + ", hyperplane " + std::to_string(membership) + ", Fenchel " +
                      std::to_string(fenchel)};
}

// --- 9 ---------------------------------------------------------------------

Outcome quantile_oracle() {
    Rng rng(909);
    const int inputs = 10000;
    int mismatches = 0;
    for (int t = 0; t < inputs; ++t) {
        const std::size_t n = 1 + rng.uniform_index(60);
        Vector v(n);
        const bool ties = rng.uniform01() < 0.5;
        for (double& x : v) x = ties ? static_cast<double>(rng.uniform_index(6)) : rng.normal();
        const auto num = static_cast<std::int64_t>(1 + rng.uniform_index(100));
        if (q_quantile(v, static_cast<double>(num) / 100.0) != oracle::quantile_rational(v, num, 100)) ++mismatches;
    }
    return {mismatches == 0, std::to_string(inputs) + " inputs, " + std::to_string(mismatches) + " mismatches"};
}

// --- 10 --------------------------------------------------------------------

Outcome spectral_enumeration() {
    Rng rng(1010);
    const int count = 50;
    int mismatches = 0, order = 0;
    double worst = 0.0;
    for (int t = 0; t < count; ++t) {
        const std::size_t m = 3 + rng.uniform_index(6), n = 2 + rng.uniform_index(4);
        const auto a = normalize_rows(oracle::random_matrix(rng, m, n)).matrix;
        const double beta = 0.1 * static_cast<double>(rng.uniform_index(3));
        const double q = beta + 0.2 + 0.1 * static_cast<double>(rng.uniform_index(3));
        const auto rep = spectral_constants(a, q, beta);
        const auto ref = oracle::enumerate(a, rep.subset_rows);
        const double e1 = std::abs(rep.sigma_q_beta_min_rowcol - ref.tilde_rowcol);
        const double e2 = std::abs(rep.sigma_q_beta_min_rows - ref.rows_only);
        worst = std::max({worst, e1, e2});
        if (e1 > 1e-9 || e2 > 1e-9) ++mismatches;
        if (rep.sigma_q_beta_min_rowcol > rep.sigma_q_beta_min_rows + 1e-12) ++order;
    }
    return {mismatches == 0 && order == 0, std::to_string(count) + " matrices, " + std::to_string(mismatches) +
                                               " mismatches (max diff " + fmt("%.2g", worst) + "), " +
                                               std::to_string(order) + " ordering violations"};
}

// --- 11 --------------------------------------------------------------------

Vector abs_residuals(const ProblemInstance& inst, const Vector& x) {
    Vector r(inst.rows());
    for (std::size_t i = 0; i < inst.rows(); ++i) {
        double s = -inst.b_observed[i];
        for (std::size_t j = 0; j < inst.cols(); ++j) s += inst.a(i, j) * x[j];
        r[i] = std::abs(s);
    }
    return r;
}

void kaczmarz_update(const ProblemInstance& inst, std::size_t i, double w, Vector& xs, double lambda) {
    double r = -inst.b_observed[i];
    Vector x(xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j) x[j] = oracle::shrink(xs[j], lambda);
    for (std::size_t j = 0; j < xs.size(); ++j) r += inst.a(i, j) * x[j];
    for (std::size_t j = 0; j < xs.size(); ++j) xs[j] -= w * r * inst.a(i, j);
}

// Quantile-RK: sample uniformly among rows with |r_i| <= Q and project.
Vector quantile_rk(const ProblemInstance& inst, std::int64_t q_pct, std::size_t iters, std::uint64_t seed) {
    Rng rng(seed);
    Vector x(inst.cols(), 0.0);
    for (std::size_t k = 0; k < iters; ++k) {
        const Vector r = abs_residuals(inst, x);
        const double Q = oracle::quantile_rational(r, q_pct, 100);
        IndexSet set;
        for (std::size_t i = 0; i < r.size(); ++i)
            if (r[i] <= Q) set.push_back(i);
        kaczmarz_update(inst, set[rng.uniform_index(set.size())], 1.0, x, 0.0);
    }
    return x;
}

// RaSK: uniform row, dual step, shrink.
Vector rask(const ProblemInstance& inst, double lambda, std::size_t iters, std::uint64_t seed) {
    Rng rng(seed);
    Vector xs(inst.cols(), 0.0);
    for (std::size_t k = 0; k < iters; ++k) kaczmarz_update(inst, rng.uniform_index(inst.rows()), 1.0, xs, lambda);
    return soft_shrink(xs, lambda);
}

Outcome reductions() {
    const std::size_t iters = 1000;
    double d_qrk = 0.0, d_rask = 0.0, d_block = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto inst = generate_gaussian({150, 20, 4, 0.2, 100.0, 0.01, 500 + seed});
        const auto a = run(inst, config(Method::SingleRowInexact, 0.0, 0.7, iters, seed));
        d_qrk = std::max(d_qrk, distance(a.state.pair.x, quantile_rk(inst, 70, iters, seed)));

        const auto clean = generate_gaussian({150, 20, 4, 0.0, 0.0, 0.0, 600 + seed});
        const auto b = run(clean, config(Method::SingleRowInexact, 1.0, std::nullopt, iters, seed));
        d_rask = std::max(d_rask, distance(b.state.pair.x, rask(clean, 1.0, iters, seed)));

        // Two rows and q = 1/2 give T = {row with the smaller residual}, so eta = 1.
        Rng rng(700 + seed);
        const auto a2 = normalize_rows(oracle::random_matrix(rng, 2, 6)).matrix;
        const auto pair = make_instance(a2, std::nullopt, oracle::random_vector(rng, 2), 0.0, 0.0, 0.0, 0);
        const double w = rng.uniform(0.3, 1.9);
        SolverConfig c = config(Method::AveragedBlock, 0.0, 0.5, iters, seed);
        c.stepsize = Stepsize::constant(w);
        auto st = IterateState::zeros(6);
        Vector ref(6, 0.0);
        for (std::size_t k = 0; k < iters; ++k) {
            const Vector r = abs_residuals(pair, ref);
            const auto info = step_averaged_block(st, pair, c);
            if (r[0] == r[1]) break;
            if (info.set_size != 1) return {false, "block set was not a singleton"};
            kaczmarz_update(pair, r[0] < r[1] ? 0 : 1, w, ref, 0.0);
            d_block = std::max(d_block, distance(st.pair.x, ref));
        }
    }
    const bool pass = d_qrk <= 1e-12 && d_rask <= 1e-12 && d_block <= 1e-12;
    return {pass, "max difference Quantile-RK " + fmt("%.2g", d_qrk) + ", RaSK " + fmt("%.2g", d_rask) +
                      ", singleton block " + fmt("%.2g", d_block)};
}

// --- 12 --------------------------------------------------------------------

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        files[fs::relative(e.path(), root).string()] =
            std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    return files;
}

Outcome cli_reproducibility() {
    const fs::path work = fs::temp_directory_path() / ("qsk_accept_" + std::to_string(::getpid()));
    fs::remove_all(work);
    const fs::path out = work / "out";
    const std::string cli = QSK_CLI_PATH;
    const std::string o = out.string();
    const std::vector<std::string> commands = {
        "generate --m 300 --n 30 --s 4 --beta 0.2 --corruption 50 --noise 0.01 --seed 9 --out " + o + "/bundle",
        "generate --m 8 --n 4 --s 2 --beta 0.125 --corruption 10 --seed 4 --out " + o + "/tiny",
        "solve --instance " + o + "/bundle --method quantile-raska --w 1.7n --iters 200 --seed 3 --out " + o +
            "/raska.csv --x-out " + o + "/raska_x.mtx",
        "solve --m 200 --n 20 --s 3 --beta 0.1 --corruption 100 --method quantile-erask --iters 300 --trials 3 "
        "--seed 5 --out " + o + "/erask.csv",
        "experiment method-compare --m 300 --n 30 --trials 3 --iters 100 --seed 2 --out " + o + "/compare",
        "spectral --instance " + o + "/tiny --q 0.6 --out " + o + "/tiny_spectral.txt",
        "spectral --instance " + o + "/bundle --q 0.7 --sampled --samples 30 --seed 8 --out " + o + "/spectral.txt",
    };
    auto run_all = [&]() -> std::string {
        fs::create_directories(out);
        for (const auto& c : commands) {
            const std::string line = "\"" + cli + "\" " + c + " > /dev/null 2>&1";
            if (std::system(line.c_str()) != 0) return "command failed: qsk " + c;
        }
        return {};
    };
    if (auto e = run_all(); !e.empty()) return {false, e};
    const auto first = read_tree(out);
    fs::remove_all(out);
    if (auto e = run_all(); !e.empty()) return {false, e};
    const auto second = read_tree(out);
    fs::remove_all(work);

    std::size_t differing = 0;
    for (const auto& [name, bytes] : first) {
        const auto it = second.find(name);
        if (it == second.end() || it->second != bytes) ++differing;
    }
    const bool pass = first.size() == second.size() && differing == 0 && first.size() >= 10;
    return {pass, std::to_string(commands.size()) + " invocations, " + std::to_string(first.size()) + " files, " +
                      std::to_string(differing) + " differing"};
}

} // namespace

int main() {
    criterion(1, "sparse-solution correctness", 10, sparse_correctness);
    criterion(2, "corruption robustness", 120, corruption_robustness);
    criterion(3, "block acceleration", 120, block_acceleration);
    criterion(4, "stepsize scaling", 300, stepsize_scaling);
    criterion(5, "q vs beta", 300, q_vs_beta);
    criterion(6, "corruption-scale effect", 180, corruption_scale);
    criterion(7, "quantile bound along runs", 0, quantile_bound);
    criterion(8, "Bregman geometry", 0, bregman_properties);
    criterion(9, "quantile oracle", 0, quantile_oracle);
    criterion(10, "spectral brute force", 0, spectral_enumeration);
    criterion(11, "reduction equivalences", 0, reductions);
    criterion(12, "CLI reproducibility", 0, cli_reproducibility);
    std::printf("%d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
