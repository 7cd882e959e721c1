#include "qsk/solvers.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "qsk/error.hpp"
#include "qsk/quantile.hpp"
#include "qsk/theory.hpp"

namespace qsk {

std::string_view to_string(Method m) noexcept {
    switch (m) {
    case Method::SingleRowInexact: return "single-row-inexact";
    case Method::SingleRowExact: return "single-row-exact";
    case Method::AveragedBlock: return "averaged-block";
    }
    return "unknown";
}

double Stepsize::weight(std::size_t i, std::size_t n) const noexcept {
    switch (kind) {
    case Kind::Constant: return value;
    case Kind::TimesN: return value * static_cast<double>(n);
    case Kind::PerRow: return weights[i];
    }
    return value;
}

void SolverConfig::validate(std::size_t rows) const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigInvalid, msg); };
    if (max_iters < 1) fail("max_iters must be at least 1");
    if (trace_every < 1) fail("trace_every must be at least 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda must be finite and nonnegative");
    if (quantile_q && !(*quantile_q > 0.0 && *quantile_q <= 1.0)) fail("q must lie in (0, 1]");
    if (stop_tol && !(*stop_tol >= 0.0)) fail("stop_tol must be nonnegative");
    switch (stepsize.kind) {
    case Stepsize::Kind::Constant:
    case Stepsize::Kind::TimesN:
        if (!(stepsize.value > 0.0) || !std::isfinite(stepsize.value)) fail("stepsize must be positive");
        break;
    case Stepsize::Kind::PerRow:
        if (stepsize.weights.size() != rows) fail("need one stepsize weight per row");
        for (double w : stepsize.weights)
            if (!(w > 0.0) || !std::isfinite(w)) fail("stepsize weights must be positive");
        break;
    }
}

namespace {

void shrink_into(DualPrimalPair& pair, double lambda) {
    for (std::size_t j = 0; j < pair.x.size(); ++j) pair.x[j] = soft_shrink(pair.x_star[j], lambda);
}

void debug_check_pair([[maybe_unused]] const DualPrimalPair& pair, [[maybe_unused]] double lambda) {
#ifndef NDEBUG
    if (!is_valid_pair(pair.x, pair.x_star, lambda))
        throw Error(ErrorCode::InvalidDualPair, "iterate left the subdifferential");
#endif
}

} // namespace

StepInfo step_single(IterateState& state, const ProblemInstance& inst, const SolverConfig& config,
                     Rng& rng) {
    const DenseMatrix& a = inst.a;
    const auto& b = inst.b_observed;
    StepInfo info;

    if (config.quantile_q) {
        Vector abs_r(a.rows());
        for (std::size_t i = 0; i < a.rows(); ++i) abs_r[i] = std::abs(dot(a.row(i), state.pair.x) - b[i]);
        info.quantile = q_quantile(abs_r, *config.quantile_q);
        const IndexSet eligible = acceptable_set(abs_r, info.quantile, config.strict());
        info.set_size = eligible.size();
        info.row = eligible[rng.uniform_index(eligible.size())];
    } else {
        info.quantile = std::numeric_limits<double>::quiet_NaN();
        info.set_size = a.rows();
        info.row = rng.uniform_index(a.rows());
    }

    const auto row = a.row(info.row);
    if (config.method == Method::SingleRowExact)
        info.step = exact_step(state.pair.x_star, row, b[info.row], config.lambda);
    else
        info.step = dot(row, state.pair.x) - b[info.row];

    for (std::size_t j = 0; j < row.size(); ++j) state.pair.x_star[j] -= info.step * row[j];
    shrink_into(state.pair, config.lambda);
    ++state.k;
    debug_check_pair(state.pair, config.lambda);
    return info;
}

StepInfo step_averaged_block(IterateState& state, const ProblemInstance& inst,
                             const SolverConfig& config) {
    const DenseMatrix& a = inst.a;
    const auto& b = inst.b_observed;
    const std::size_t m = a.rows();
    StepInfo info;

    Vector r(m), abs_r(m);
    bool all_zero = true;
    for (std::size_t i = 0; i < m; ++i) {
        r[i] = dot(a.row(i), state.pair.x) - b[i];
        abs_r[i] = std::abs(r[i]);
        all_zero = all_zero && r[i] == 0.0;
    }

    IndexSet block;
    if (config.quantile_q) {
        info.quantile = q_quantile(abs_r, *config.quantile_q);
        if (all_zero && config.strict()) {
            info.all_residuals_zero = true;
            return info;
        }
        block = acceptable_set(abs_r, info.quantile, config.strict());
    } else {
        info.quantile = std::numeric_limits<double>::quiet_NaN();
        block.resize(m);
        for (std::size_t i = 0; i < m; ++i) block[i] = i;
    }
    info.set_size = block.size();
    info.all_residuals_zero = all_zero;

    Vector direction(a.cols(), 0.0);
    for (std::size_t i : block) {
        const double c = config.stepsize.weight(i, a.cols()) * r[i];
        const auto row = a.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) direction[j] += c * row[j];
    }
    const double eta = static_cast<double>(block.size());
    for (std::size_t j = 0; j < direction.size(); ++j) state.pair.x_star[j] -= direction[j] / eta;
    shrink_into(state.pair, config.lambda);
    ++state.k;
    debug_check_pair(state.pair, config.lambda);
    return info;
}

RunResult run(const ProblemInstance& inst, const SolverConfig& config, const StepObserver& observer) {
    config.validate(inst.rows());
    if (!rows_are_unit(inst.a)) throw Error(ErrorCode::NotNormalized, "solver expects unit-norm rows");
    if (inst.b_observed.size() != inst.rows())
        throw Error(ErrorCode::DimensionMismatch, "right-hand side length does not match A");
    if (config.stop_tol && !inst.x_hat)
        throw Error(ErrorCode::ConfigInvalid, "stop_tol needs a ground truth");
    if (config.lemma31_sigma_max && (!inst.x_hat || !config.quantile_q))
        throw Error(ErrorCode::ConfigInvalid, "the quantile bound check needs x_hat and a quantile");

    RunResult result;
    result.state = IterateState::zeros(inst.cols());
    Rng rng(config.seed);
    const auto start = std::chrono::steady_clock::now();
    const double x_hat_norm = inst.x_hat ? norm2(*inst.x_hat) : 0.0;
    const bool keep_pre_step = static_cast<bool>(observer) || config.lemma31_sigma_max.has_value();

    auto rel_error = [&](const Vector& x) {
        const double d = distance(x, *inst.x_hat);
        return x_hat_norm > 0.0 ? d / x_hat_norm : d;
    };
    auto record = [&](const StepInfo& info) {
        if (!result.trace.empty() && result.trace.back().k == result.state.k) return;
        TraceRecord rec;
        rec.k = result.state.k;
        if (inst.x_hat) {
            rec.rel_error = rel_error(result.state.pair.x);
            rec.bregman_dist = bregman_distance(result.state.pair, *inst.x_hat, config.lambda);
        }
        rec.quantile = info.quantile;
        rec.set_size = info.set_size;
        if (config.record_time)
            rec.elapsed_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.trace.push_back(rec);
    };

    Vector x_pre;
    for (std::size_t iter = 0; iter < config.max_iters; ++iter) {
        if (keep_pre_step) x_pre = result.state.pair.x;
        const std::size_t k_before = result.state.k;
        const StepInfo info = config.method == Method::AveragedBlock
                                  ? step_averaged_block(result.state, inst, config)
                                  : step_single(result.state, inst, config, rng);

        if (config.lemma31_sigma_max) {
            ++result.lemma31_checks;
            if (!lemma31_check(x_pre, inst, *config.quantile_q, info.quantile, *config.lemma31_sigma_max))
                ++result.lemma31_failures;
        }
        if (observer) observer(k_before, x_pre, info);

        if (info.all_residuals_zero && result.state.k == k_before) {
            result.converged_exactly = true;
            record(info);
            break;
        }
        const bool last = iter + 1 == config.max_iters;
        bool stop = false;
        if (config.stop_tol && rel_error(result.state.pair.x) <= *config.stop_tol) {
            result.reached_tol = true;
            stop = true;
        }
        if (last || stop || result.state.k % config.trace_every == 0) record(info);
        if (stop) break;
    }
    return result;
}

double median(std::vector<double> values) {
    if (values.empty()) throw Error(ErrorCode::EmptyInput, "median of an empty sample");
    for (double v : values)
        if (std::isnan(v)) return v;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t n_threads = std::min(jobs, count);
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

ConvergenceTrace median_of_trials(const InstanceFactory& factory, const SolverConfig& config,
                                  std::size_t trials, std::size_t jobs) {
    if (trials < 1) throw Error(ErrorCode::ConfigInvalid, "trials must be at least 1");
    std::vector<ConvergenceTrace> traces(trials);
    parallel_for(trials, jobs, [&](std::size_t t) {
        SolverConfig cfg = config;
        cfg.seed = config.seed + t;
        traces[t] = run(factory(cfg.seed), cfg).trace;
    });
    if (trials == 1) return traces.front();

    std::size_t longest = 0;
    for (std::size_t t = 1; t < trials; ++t)
        if (traces[t].size() > traces[longest].size()) longest = t;

    ConvergenceTrace out;
    out.reserve(traces[longest].size());
    for (std::size_t idx = 0; idx < traces[longest].size(); ++idx) {
        std::vector<double> rel, breg, quant, size, elapsed;
        bool have_truth = true;
        for (const auto& tr : traces) {
            const TraceRecord& rec = tr[std::min(idx, tr.size() - 1)];
            if (rec.rel_error && rec.bregman_dist) {
                rel.push_back(*rec.rel_error);
                breg.push_back(*rec.bregman_dist);
            } else {
                have_truth = false;
            }
            quant.push_back(rec.quantile);
            size.push_back(static_cast<double>(rec.set_size));
            elapsed.push_back(rec.elapsed_seconds);
        }
        TraceRecord rec;
        rec.k = traces[longest][idx].k;
        if (have_truth) {
            rec.rel_error = median(rel);
            rec.bregman_dist = median(breg);
        }
        rec.quantile = median(quant);
        rec.set_size = static_cast<std::size_t>(std::llround(median(size)));
        rec.elapsed_seconds = median(elapsed);
        out.push_back(rec);
    }
    return out;
}

} // namespace qsk
