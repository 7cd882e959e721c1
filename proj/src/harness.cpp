#include "qsk/harness.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "qsk/error.hpp"
#include "qsk/instances.hpp"
#include "qsk/matrix_market.hpp"
#include "qsk/theory.hpp"

namespace qsk::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigInvalid, msg); }

} // namespace

MethodChoice parse_method(const std::string& name) {
    static const std::map<std::string, std::pair<Method, bool>> base = {
        {"rk", {Method::SingleRowInexact, false}},   {"rask", {Method::SingleRowInexact, true}},
        {"erask", {Method::SingleRowExact, true}},   {"rka", {Method::AveragedBlock, false}},
        {"raska", {Method::AveragedBlock, true}},
    };
    MethodChoice out;
    out.name = name;
    std::string stem = name;
    if (stem.rfind("quantile-", 0) == 0) {
        out.quantile = true;
        stem = stem.substr(9);
    }
    const auto it = base.find(stem);
    if (it == base.end()) config_error("unknown method '" + name + "'");
    out.method = it->second.first;
    out.sparse = it->second.second;
    return out;
}

Stepsize parse_stepsize(const std::string& text) {
    std::string body = text;
    const bool times_n = !body.empty() && body.back() == 'n';
    if (times_n) body.pop_back();
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(body, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (body.empty() || used != body.size() || !(value > 0.0) || !std::isfinite(value))
        config_error("bad stepsize '" + text + "'; expected e.g. 1.7n or 2");
    return times_n ? Stepsize::times_n(value) : Stepsize::constant(value);
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trace_csv(const ConvergenceTrace& trace) {
    std::string out = "k,rel_error,bregman_dist,quantile,set_size,elapsed_s\n";
    for (const auto& r : trace) {
        out += std::to_string(r.k) + ',' + format_double(r.rel_error.value_or(kNaN)) + ',' +
               format_double(r.bregman_dist.value_or(kNaN)) + ',' + format_double(r.quantile) + ',' +
               std::to_string(r.set_size) + ',' + format_double(r.elapsed_seconds) + '\n';
    }
    return out;
}

std::optional<std::size_t> iterations_to_reach(const ConvergenceTrace& trace, double tol) {
    for (const auto& r : trace)
        if (r.rel_error && *r.rel_error <= tol) return r.k;
    return std::nullopt;
}

namespace {

struct Setup {
    std::size_t m, n, s, trials;
    double beta, q, lambda, k, noise;
};

SolverConfig solver_config(const MethodChoice& mc, double q, double lambda, const Stepsize& w,
                           std::size_t iters, const ExperimentOptions& o) {
    SolverConfig c;
    c.method = mc.method;
    c.lambda = mc.sparse ? lambda : 0.0;
    if (mc.quantile) c.quantile_q = q;
    c.stepsize = w;
    c.max_iters = iters;
    c.seed = o.seed;
    c.trace_every = o.trace_every;
    c.record_time = o.timing;
    return c;
}

InstanceFactory gaussian_factory(const Setup& s) {
    return [s](std::uint64_t seed) {
        GeneratorSpec g{s.m, s.n, s.s, s.beta, s.k, s.noise, seed};
        return generate_gaussian(g);
    };
}

double final_error(const ConvergenceTrace& t) {
    return t.empty() ? kNaN : t.back().rel_error.value_or(kNaN);
}

double count_or_nan(std::optional<std::size_t> v) { return v ? static_cast<double>(*v) : kNaN; }

std::string tag(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// i / 10 for i = 1..n, computed from integers so grid points print cleanly.
std::vector<double> tenths(int from, int to) {
    std::vector<double> out;
    for (int i = from; i <= to; ++i) out.push_back(i / 10.0);
    return out;
}

ExperimentOutput corruption_scale(const ExperimentOptions& o) {
    Setup s{o.m.value_or(o.full ? 10000 : 2000), o.n_list.empty() ? (o.full ? 500u : 100u) : o.n_list[0],
            o.s.value_or(o.full ? 40 : 10), o.trials.value_or(o.full ? 100 : 21),
            o.beta_list.empty() ? 0.2 : o.beta_list[0], o.q.value_or(0.7), o.lambda.value_or(1.0),
            0.0, o.noise.value_or(0.02)};
    const std::vector<double> ks = o.k_list.empty() ? std::vector<double>{1, 10, 100} : o.k_list;
    const double tol = o.tol.value_or(5e-2);
    ExperimentOutput out;
    out.columns = {"method", "k", "iterations_to_tol", "final_rel_error"};
    struct Run {
        const char* name;
        std::size_t iters;
    };
    const Run runs[] = {{"quantile-erask", o.iters.value_or(o.full ? 20000 : 8000)},
                        {"quantile-raska", o.iters.value_or(o.full ? 1000 : 300)}};
    for (const Run& r : runs) {
        const MethodChoice mc = parse_method(r.name);
        for (double k : ks) {
            Setup sk = s;
            sk.k = k;
            const auto trace = median_of_trials(
                gaussian_factory(sk), solver_config(mc, s.q, s.lambda, Stepsize::times_n(1.5), r.iters, o),
                s.trials, o.jobs);
            out.rows.push_back({r.name, {k, count_or_nan(iterations_to_reach(trace, tol)), final_error(trace)}});
            out.traces.emplace_back(std::string(r.name) + "_k" + tag(k), trace);
        }
    }
    return out;
}

ExperimentOutput stepsize_sweep(const ExperimentOptions& o) {
    const std::vector<std::size_t> ns =
        !o.n_list.empty() ? o.n_list
                          : (o.full ? std::vector<std::size_t>{100, 200, 300, 400} : std::vector<std::size_t>{50, 100});
    const double noise = o.noise.value_or(0.0);
    const std::size_t iters = o.iters.value_or(noise > 0.0 ? 1000 : 20);
    const MethodChoice mc = parse_method(o.method.value_or("quantile-raska"));
    ExperimentOutput out;
    out.columns = {"method", "n", "w_over_n", "w", "rel_error", "optimal_w_over_n"};
    for (std::size_t n : ns) {
        Setup s{o.m.value_or(o.full ? 10000 : 2000), n, o.s.value_or(10), o.trials.value_or(o.full ? 100 : 21),
                o.beta_list.empty() ? 0.2 : o.beta_list[0], o.q.value_or(0.7), o.lambda.value_or(1.0),
                o.k_list.empty() ? 100.0 : o.k_list[0], noise};
        std::vector<SummaryRow> rows;
        std::size_t best = 0;
        for (int i = 1; i <= 15; ++i) {
            const double c = i / 5.0;
            const auto trace = median_of_trials(gaussian_factory(s),
                                                solver_config(mc, s.q, s.lambda, Stepsize::times_n(c), iters, o),
                                                s.trials, o.jobs);
            const double err = final_error(trace);
            rows.push_back({mc.name, {static_cast<double>(n), c, c * static_cast<double>(n), err, 0.0}});
            if (err < rows[best].values[3]) best = rows.size() - 1;
            out.traces.emplace_back(mc.name + "_n" + std::to_string(n) + "_w" + tag(c) + "n", trace);
        }
        for (auto& r : rows) r.values[4] = rows[best].values[1];
        out.rows.insert(out.rows.end(), rows.begin(), rows.end());
        out.notes.push_back("n=" + std::to_string(n) + " optimal_w=" + format_double(rows[best].values[1]) + "n");
    }
    return out;
}

ExperimentOutput qbeta_grid(const ExperimentOptions& o) {
    const MethodChoice mc = parse_method(o.method.value_or("quantile-raska"));
    const bool block = mc.method == Method::AveragedBlock;
    const std::size_t iters = o.iters.value_or(block ? 40 : 2000);
    const std::vector<double> betas = o.beta_list.empty() ? tenths(1, 5) : o.beta_list;
    ExperimentOutput out;
    out.columns = {"method", "beta", "q", "rel_error", "is_min"};
    for (double beta : betas) {
        Setup s{o.m.value_or(o.full ? 10000 : 2000), o.n_list.empty() ? (o.full ? 200u : 100u) : o.n_list[0],
                o.s.value_or(10), o.trials.value_or(o.full ? 100 : 21), beta, 0.0, o.lambda.value_or(1.0),
                o.k_list.empty() ? 100.0 : o.k_list[0], o.noise.value_or(0.0)};
        std::vector<SummaryRow> rows;
        std::size_t best = 0;
        for (double q : tenths(1, 10)) {
            const auto trace = median_of_trials(
                gaussian_factory(s), solver_config(mc, q, s.lambda, Stepsize::times_n(1.7), iters, o), s.trials,
                o.jobs);
            rows.push_back({mc.name, {beta, q, final_error(trace), 0.0}});
            if (rows.back().values[2] < rows[best].values[2]) best = rows.size() - 1;
            out.traces.emplace_back(mc.name + "_beta" + tag(beta) + "_q" + tag(q), trace);
        }
        rows[best].values[3] = 1.0;
        out.notes.push_back("beta=" + tag(beta) + " min_error_q=" + tag(rows[best].values[1]));
        out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    }
    return out;
}

ExperimentOutput method_compare(const ExperimentOptions& o) {
    // beta = 0.2, q = 0.7; the reverse assignment would violate beta < q < 1 - beta.
    Setup s{o.m.value_or(2000), o.n_list.empty() ? 200u : o.n_list[0], o.s.value_or(10),
            o.trials.value_or(o.full ? 100 : 21), o.beta_list.empty() ? 0.2 : o.beta_list[0], o.q.value_or(0.7),
            o.lambda.value_or(1.0), o.k_list.empty() ? 100.0 : o.k_list[0], o.noise.value_or(0.0)};
    const std::size_t iters = o.iters.value_or(3000);
    const double tol = o.tol.value_or(1e-2);
    ExperimentOutput out;
    out.columns = {"method", "iterations_to_tol", "final_rel_error"};
    for (const char* name : {"quantile-rka", "quantile-erask", "quantile-raska"}) {
        const MethodChoice mc = parse_method(name);
        const auto trace = median_of_trials(
            gaussian_factory(s), solver_config(mc, s.q, s.lambda, Stepsize::times_n(1.7), iters, o), s.trials,
            o.jobs);
        out.rows.push_back({name, {count_or_nan(iterations_to_reach(trace, tol)), final_error(trace)}});
        out.traces.emplace_back(name, trace);
    }
    return out;
}

ExperimentOutput realdata(const ExperimentOptions& o) {
    if (!o.matrix || !o.xhat) config_error("realdata needs --matrix and --xhat");
    const double beta = o.beta_list.empty() ? 0.2 : o.beta_list[0];
    const double k = o.k_list.empty() ? 100.0 : o.k_list[0];
    const double noise = o.noise.value_or(0.02);
    const double q = o.q.value_or(0.7), lambda = o.lambda.value_or(1.0);
    const std::size_t iters = o.iters.value_or(2000);
    const std::size_t trials = o.trials.value_or(1);
    const DenseMatrix a = mm_read(*o.matrix);
    const Vector x_hat = mm_read_vector(*o.xhat);
    const InstanceFactory factory = [&](std::uint64_t seed) {
        return make_instance(a, x_hat, std::nullopt, beta, k, noise, seed);
    };

    ExperimentOutput out;
    out.columns = {"method", "w", "final_rel_error"};
    struct Run {
        const char* name;
        double w;
    };
    for (const Run& r : {Run{"quantile-rka", 1.0}, Run{"quantile-erask", 1.0}, Run{"quantile-raska", 1.0},
                         Run{"quantile-raska", 2.0}}) {
        const MethodChoice mc = parse_method(r.name);
        const SolverConfig cfg = solver_config(mc, q, lambda, Stepsize::constant(r.w), iters, o);
        const std::string stem = std::string(r.name) + (mc.method == Method::AveragedBlock ? "_w" + tag(r.w) : "");
        const auto trace = median_of_trials(factory, cfg, trials, o.jobs);
        out.rows.push_back({r.name, {mc.method == Method::AveragedBlock ? r.w : kNaN, final_error(trace)}});
        out.traces.emplace_back(stem, trace);
        out.solutions.emplace_back(stem + "_x", run(factory(o.seed), cfg).state.pair.x);
    }
    return out;
}

} // namespace

std::vector<std::string> preset_names() {
    return {"corruption-scale", "stepsize-sweep", "qbeta-grid", "method-compare", "realdata"};
}

ExperimentOutput run_experiment(const ExperimentOptions& o) {
    if (o.preset == "corruption-scale") return corruption_scale(o);
    if (o.preset == "stepsize-sweep") return stepsize_sweep(o);
    if (o.preset == "qbeta-grid") return qbeta_grid(o);
    if (o.preset == "method-compare") return method_compare(o);
    if (o.preset == "realdata") return realdata(o);
    throw Error(ErrorCode::SpecInvalid, "unknown preset '" + o.preset + "'");
}

std::string summary_csv(const ExperimentOutput& out, const std::string& command) {
    std::string text = "# cmd: " + command + "\n";
    for (std::size_t c = 0; c < out.columns.size(); ++c) text += (c ? "," : "") + out.columns[c];
    text += '\n';
    for (const auto& row : out.rows) {
        text += row.label;
        for (double v : row.values) text += ',' + format_double(v);
        text += '\n';
    }
    return text;
}

namespace {

std::string join_command(int argc, const char* const* argv) {
    std::string cmd;
    for (int i = 0; i < argc; ++i) cmd += (i ? " " : "") + std::string(argv[i]);
    return cmd;
}

struct GenFlags {
    std::size_t m = 0, n = 0, s = 0;
    double beta = 0.0, corruption = 0.0, noise = 0.0;
};

void add_generator_flags(CLI::App* sub, GenFlags& g) {
    sub->add_option("--m", g.m, "rows");
    sub->add_option("--n", g.n, "columns");
    sub->add_option("--s", g.s, "nonzeros of x_hat");
    sub->add_option("--beta", g.beta, "corrupted fraction");
    sub->add_option("--corruption", g.corruption, "corruption scale k, b^c ~ U(-k, k)");
    sub->add_option("--noise", g.noise, "noise bound, r ~ U(-noise, noise)");
}

GeneratorSpec to_spec(const GenFlags& g, std::uint64_t seed) {
    return {g.m, g.n, g.s, g.beta, g.corruption, g.noise, seed};
}

// Inserts "--key=value" for each line of a --config file directly after the
// subcommand name, so flags given on the command line come later and win.
std::vector<std::string> expand_config(int argc, const char* const* argv) {
    std::vector<std::string> args(argv, argv + argc);
    std::optional<std::string> file;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) file = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) file = args[i].substr(9);
    }
    if (!file || args.size() < 2) return args;
    std::ifstream in(*file);
    if (!in) throw Error(ErrorCode::IoError, "cannot read config file " + *file);
    std::vector<std::string> extra;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ConfigInvalid, "expected key=value", lineno);
        auto trim = [](std::string v) {
            const auto b = v.find_first_not_of(" \t\r");
            const auto e = v.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty() || key == "config") throw Error(ErrorCode::ConfigInvalid, "bad config key", lineno);
        extra.push_back("--" + key + "=" + value);
    }
    args.insert(args.begin() + 2, extra.begin(), extra.end());
    return args;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    write_file_atomic(path, text);
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quantile-filtered randomized sparse Kaczmarz solvers"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    std::uint64_t seed = 0;
    std::size_t jobs = 1, trials = 1, trace_every = 1;
    std::optional<std::size_t> iters;
    std::string out_path;
    bool timing = false;
    std::string config_path;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key=value file; explicit flags win");
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--out", out_path, "output path");
    };

    // generate
    GenFlags gen;
    auto* g = app.add_subcommand("generate", "write a Gaussian instance bundle");
    add_common(g);
    add_generator_flags(g, gen);
    g->get_option("--out")->required();

    // solve
    GenFlags sgen;
    std::string instance_dir, method_name = "quantile-raska", w_text = "1";
    double q = 0.7, lambda = 1.0;
    std::optional<double> stop_tol;
    std::string x_out;
    bool check_bound = false;
    auto* sv = app.add_subcommand("solve", "run one method and write its trace");
    add_common(sv);
    add_generator_flags(sv, sgen);
    sv->add_option("--instance", instance_dir, "bundle directory written by generate");
    sv->add_option("--method", method_name, "rk, rask, erask, rka, raska, or quantile-<name>");
    sv->add_option("--q", q, "quantile level");
    sv->add_option("--lambda", lambda, "sparsity weight");
    sv->add_option("--w", w_text, "block stepsize, e.g. 1.7n or 2");
    sv->add_option("--iters", iters, "iteration budget");
    sv->add_option("--trace-every", trace_every, "record every k-th iterate");
    sv->add_option("--trials", trials, "median over this many seeded trials");
    sv->add_option("--jobs", jobs, "worker threads for trials");
    sv->add_option("--stop-tol", stop_tol, "stop at this relative error; exit 2 if missed");
    sv->add_option("--x-out", x_out, "write the final iterate as Matrix Market");
    sv->add_flag("--timing", timing, "record wall time in elapsed_s");
    sv->add_flag("--check-quantile-bound", check_bound, "count violations of the quantile bound");

    // experiment
    ExperimentOptions eo;
    std::string matrix_path, xhat_path;
    auto* ex = app.add_subcommand("experiment", "run a preset grid");
    add_common(ex);
    ex->get_option("--out")->required();
    ex->add_option("preset", eo.preset, "corruption-scale | stepsize-sweep | qbeta-grid | method-compare | realdata")
        ->required();
    ex->add_flag("--full", eo.full, "large problem sizes and 100 trials");
    ex->add_option("--m", eo.m);
    ex->add_option("--n", eo.n_list)->delimiter(',');
    ex->add_option("--s", eo.s);
    ex->add_option("--beta", eo.beta_list)->delimiter(',');
    ex->add_option("--corruption", eo.k_list)->delimiter(',');
    ex->add_option("--noise", eo.noise);
    ex->add_option("--q", eo.q);
    ex->add_option("--lambda", eo.lambda);
    ex->add_option("--tol", eo.tol, "relative error for iteration counts");
    ex->add_option("--method", eo.method);
    ex->add_option("--matrix", matrix_path);
    ex->add_option("--xhat", xhat_path);
    ex->add_option("--iters", eo.iters);
    ex->add_option("--trials", eo.trials);
    ex->add_option("--trace-every", eo.trace_every);
    ex->add_option("--jobs", eo.jobs);
    ex->add_flag("--timing", eo.timing);
    // Vector options must replace, not append, when both file and flag set them.
    for (const char* name : {"--n", "--beta", "--corruption"})
        ex->get_option(name)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

    // spectral
    std::string sp_matrix;
    std::optional<double> sp_beta, sp_xw;
    double sp_q = 0.7, sp_lambda = 1.0;
    std::string sp_w = "1.7n";
    bool sampled = false;
    std::size_t samples = 1000;
    double budget = 2e6;
    auto* sp = app.add_subcommand("spectral", "spectral constants and convergence rates");
    add_common(sp);
    sp->add_option("--instance", instance_dir, "bundle directory");
    sp->add_option("--matrix", sp_matrix, "Matrix Market file (rows are normalized)");
    sp->add_option("--q", sp_q);
    sp->add_option("--beta", sp_beta, "defaults to the bundle's realized fraction");
    sp->add_option("--lambda", sp_lambda);
    sp->add_option("--w", sp_w, "block stepsize for the block rates");
    sp->add_flag("--sampled", sampled, "random candidate subsets instead of enumeration");
    sp->add_option("--samples", samples);
    sp->add_option("--budget", budget, "max SVDs in exact mode");

    std::vector<std::string> args;
    try {
        args = expand_config(argc, argv);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    try {
        // CLI11 parses a reversed argument vector.
        std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    const std::string command = join_command(argc, argv);
    try {
        if (g->parsed()) {
            const ProblemInstance inst = generate_gaussian(to_spec(gen, seed));
            save_bundle(inst, out_path);
            out << "seed=" << seed << " corrupted_rows=" << inst.corrupted_rows.size()
                << " noise_inf=" << format_double(norm_inf(inst.noise)) << '\n';
            return 0;
        }

        if (sv->parsed()) {
            const MethodChoice mc = parse_method(method_name);
            SolverConfig cfg;
            cfg.method = mc.method;
            cfg.lambda = mc.sparse ? lambda : 0.0;
            if (mc.quantile) cfg.quantile_q = q;
            cfg.stepsize = parse_stepsize(w_text);
            cfg.max_iters = iters.value_or(1000);
            cfg.seed = seed;
            cfg.trace_every = trace_every;
            cfg.stop_tol = stop_tol;
            cfg.record_time = timing;

            InstanceFactory factory;
            if (!instance_dir.empty()) {
                const ProblemInstance inst = load_bundle(instance_dir);
                factory = [inst](std::uint64_t) { return inst; };
            } else {
                const GenFlags copy = sgen;
                factory = [copy](std::uint64_t s) { return generate_gaussian(to_spec(copy, s)); };
            }
            if (check_bound) {
                const ProblemInstance probe = factory(seed);
                cfg.lemma31_sigma_max = largest_singular_value(probe.a);
            }

            const auto start = std::chrono::steady_clock::now();
            ConvergenceTrace trace;
            std::optional<Vector> x_final;
            std::size_t checks = 0, failures = 0;
            if (trials <= 1) {
                const RunResult res = run(factory(seed), cfg);
                trace = res.trace;
                x_final = res.state.pair.x;
                checks = res.lemma31_checks;
                failures = res.lemma31_failures;
            } else {
                if (cfg.lemma31_sigma_max) config_error("--check-quantile-bound needs a single trial");
                trace = median_of_trials(factory, cfg, trials, jobs);
            }
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

            const std::string csv = trace_csv(trace);
            if (out_path.empty())
                out << csv;
            else
                write_text(out_path, csv);
            if (!x_out.empty()) {
                if (!x_final) config_error("--x-out needs a single trial");
                mm_write(x_out, *x_final);
            }
            const double rel = final_error(trace);
            std::ostream& info = out_path.empty() ? err : out;
            info << "method=" << mc.name << " iterations=" << (trace.empty() ? 0 : trace.back().k)
                 << " rel_error=" << format_double(rel) << " wall_s=" << format_double(wall);
            if (cfg.lemma31_sigma_max) info << " bound_checks=" << checks << " bound_failures=" << failures;
            info << '\n';
            if (stop_tol && !(rel <= *stop_tol)) return 2;
            return 0;
        }

        if (ex->parsed()) {
            eo.seed = seed;
            if (!matrix_path.empty()) eo.matrix = matrix_path;
            if (!xhat_path.empty()) eo.xhat = xhat_path;
            const ExperimentOutput res = run_experiment(eo);
            const std::filesystem::path dir = out_path;
            std::filesystem::create_directories(dir);
            for (const auto& [stem, trace] : res.traces) write_text(dir / (stem + ".csv"), trace_csv(trace));
            for (const auto& [stem, x] : res.solutions) mm_write(dir / (stem + ".mtx"), x);
            write_text(dir / "summary.csv", summary_csv(res, command));
            for (const auto& note : res.notes) out << note << '\n';
            out << "wrote " << res.traces.size() << " traces and summary.csv to " << dir.string() << '\n';
            return 0;
        }

        if (sp->parsed()) {
            std::optional<ProblemInstance> inst;
            DenseMatrix a = DenseMatrix::identity(1);
            if (!instance_dir.empty()) {
                inst = load_bundle(instance_dir);
                a = inst->a;
            } else if (!sp_matrix.empty()) {
                a = normalize_rows(mm_read(sp_matrix)).matrix;
            } else {
                config_error("spectral needs --instance or --matrix");
            }
            const double beta = sp_beta.value_or(inst ? inst->realized_beta() : 0.0);
            SpectralOptions opts;
            opts.mode = sampled ? SpectralMode::Sampled : SpectralMode::Exact;
            opts.samples = samples;
            opts.budget = budget;
            opts.seed = seed;
            SpectralReport rep;
            try {
                rep = spectral_constants(a, sp_q, beta, opts);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::BudgetExceeded)
                    err << "error: " << e.what() << "\nhint: rerun with --sampled\n";
                else
                    err << "error: " << e.what() << '\n';
                return 1;
            }

            std::ostringstream os;
            auto kv = [&](const std::string& k, double v) { os << k << '=' << format_double(v) << '\n'; };
            auto kb = [&](const std::string& k, bool v) { os << k << '=' << (v ? "true" : "false") << '\n'; };
            os << "mode=" << (sampled ? "sampled" : "exact") << '\n';
            os << "subset_rows=" << rep.subset_rows << '\n';
            os << "samples=" << rep.samples << '\n';
            kv("sigma_max", rep.sigma_max);
            kv("sigma_min", rep.sigma_min);
            kv("sigma_tilde_min", rep.sigma_tilde_min);
            kv("sigma_tilde_q_beta_min", rep.sigma_q_beta_min_rowcol);
            kv("sigma_q_beta_min", rep.sigma_q_beta_min_rows);
            std::vector<std::string> failed;
            if (inst && inst->x_hat) {
                const Stepsize w = parse_stepsize(sp_w);
                const TheoremConstants t =
                    theorem_constants(a, rep, *inst->x_hat, sp_lambda, sp_q, beta, w.weight(0, a.cols()));
                kv("alpha", t.alpha);
                kv("kappa_tilde", t.kappa_tilde);
                kv("gamma", t.gamma);
                kv("rask_rate", t.rask_rate);
                kb("order_ok", t.order_ok);
                kv("C1", t.th32.c1);
                kv("C1_alt", t.th32_alt.c1);
                kv("C2", t.th32.c2);
                kb("condition2", t.th32.condition_holds);
                kv("C_noiseless", t.th33.c);
                kb("condition_noiseless", t.th33.condition_holds);
                kv("block_rate", t.raska.rate);
                kb("condition_block", t.raska.condition_holds);
                kv("block_noisy_factor", t.raska_noisy.factor);
                kv("block_noisy_noise_coeff", t.raska_noisy.noise_coeff);
                kv("block_noisy_w_star", t.raska_noisy.w_star);
                kb("condition_block_noisy", t.raska_noisy.condition_holds);
                if (!t.th32.condition_holds) failed.push_back("condition2");
                if (!t.th33.condition_holds) failed.push_back("condition_noiseless");
                if (!t.raska.condition_holds) failed.push_back("condition_block");
                if (!t.raska_noisy.condition_holds) failed.push_back("condition_block_noisy");
            }
            out << os.str();
            if (!out_path.empty()) write_text(out_path, os.str());
            for (const auto& f : failed) err << "warning: " << f << "=false, the rate bound is not a contraction\n";
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

} // namespace qsk::cli
