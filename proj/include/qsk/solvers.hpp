#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qsk/bregman.hpp"
#include "qsk/instances.hpp"
#include "qsk/matrix.hpp"
#include "qsk/rng.hpp"

namespace qsk {

enum class Method {
    SingleRowInexact, ///< RK / RaSK / Quantile-RaSK
    SingleRowExact,   ///< ERaSK / Quantile-ERaSK
    AveragedBlock,    ///< RKA / RaSKA / Quantile-RaSKA
};

std::string_view to_string(Method m) noexcept;

/// Stepsize for the averaged-block update. Single-row methods take full
/// (inexact or exact) steps and ignore it.
struct Stepsize {
    enum class Kind { Constant, TimesN, PerRow };
    Kind kind = Kind::Constant;
    double value = 1.0;         ///< w, or the coefficient c in w = c*n
    std::vector<double> weights; ///< w_i for Kind::PerRow, one per row

    static Stepsize constant(double w) { return {Kind::Constant, w, {}}; }
    static Stepsize times_n(double c) { return {Kind::TimesN, c, {}}; }
    static Stepsize per_row(std::vector<double> w) { return {Kind::PerRow, 0.0, std::move(w)}; }

    /// Weight of row i for a system with n columns.
    double weight(std::size_t i, std::size_t n) const noexcept;
};

struct SolverConfig {
    Method method = Method::SingleRowInexact;
    double lambda = 0.0;
    std::optional<double> quantile_q; ///< nullopt disables corruption filtering
    Stepsize stepsize;
    std::size_t max_iters = 1;
    std::uint64_t seed = 0;
    std::size_t trace_every = 1;
    std::optional<double> stop_tol; ///< on relative error; needs x_hat
    bool record_time = true;
    /// When set, checks the quantile bound Q_k <= ... sigma_max ||x_k - x_hat||
    /// + ... ||r||_inf at every iteration using this sigma_max.
    std::optional<double> lemma31_sigma_max;
    /// Set-membership comparison; defaults to <= for single-row, < for block.
    std::optional<bool> strict_override;

    void validate(std::size_t rows) const;
    bool strict() const noexcept {
        return strict_override.value_or(method == Method::AveragedBlock);
    }
};

struct IterateState {
    DualPrimalPair pair;
    std::size_t k = 0;

    static IterateState zeros(std::size_t n) { return {DualPrimalPair::zeros(n), 0}; }
};

/// What a step observed at x_k before moving.
struct StepInfo {
    double quantile = 0.0;       ///< Q_k; NaN when filtering is disabled
    std::size_t set_size = 0;    ///< |N2| or |T|
    std::size_t row = 0;         ///< sampled row (single-row methods)
    double step = 0.0;           ///< t_k (single-row methods)
    bool all_residuals_zero = false; ///< block step found nothing to do
};

struct TraceRecord {
    std::size_t k = 0;
    std::optional<double> rel_error;
    std::optional<double> bregman_dist;
    double quantile = 0.0;
    std::size_t set_size = 0;
    double elapsed_seconds = 0.0;
};

using ConvergenceTrace = std::vector<TraceRecord>;

struct RunResult {
    IterateState state;
    ConvergenceTrace trace;
    bool reached_tol = false;
    bool converged_exactly = false; ///< block method hit all-zero residuals
    std::size_t lemma31_checks = 0;
    std::size_t lemma31_failures = 0;
};

/// One Algorithm-1 iteration: residuals, Q_k, the acceptable set, uniform
/// sampling over it, inexact t = <a,x> - b or exact line search, then the
/// dual update and shrinkage. Without filtering every row is eligible.
StepInfo step_single(IterateState& state, const ProblemInstance& inst, const SolverConfig& config,
                     Rng& rng);

/// One averaged-block iteration over T = {i : |r_i| < Q_k}:
/// x* <- x* - (1/|T|) sum_{i in T} w_i r_i a_i, summed in ascending row order.
/// An empty T with every residual zero leaves the state unchanged and sets
/// `all_residuals_zero`; any other empty T throws EmptyAcceptableSet.
StepInfo step_averaged_block(IterateState& state, const ProblemInstance& inst,
                             const SolverConfig& config);

/// Called after each step with the iteration index k, the pre-step iterate
/// x_k and what the step observed.
using StepObserver = std::function<void(std::size_t, std::span<const double>, const StepInfo&)>;

/// Iterates from x0 = x0* = 0 for `max_iters` steps or until the relative
/// error reaches `stop_tol`. Records every `trace_every` steps and at the
/// last one. Identical (instance, config) inputs give identical traces
/// apart from elapsed time (which is zero when `record_time` is false).
RunResult run(const ProblemInstance& inst, const SolverConfig& config,
              const StepObserver& observer = {});

using InstanceFactory = std::function<ProblemInstance(std::uint64_t seed)>;

/// Runs trial t on factory(config.seed + t) with solver seed config.seed + t
/// and returns the per-record componentwise median (mean of the two middle
/// values for even counts). Runs that stop early contribute their last
/// record to later iterations. `jobs` > 1 runs trials on worker threads.
ConvergenceTrace median_of_trials(const InstanceFactory& factory, const SolverConfig& config,
                                  std::size_t trials, std::size_t jobs = 1);

/// Median of a nonempty sample, mean of the two middle values when even.
double median(std::vector<double> values);

/// Runs `count` independent tasks on up to `jobs` threads. Task i writes only
/// its own output slot, so results do not depend on scheduling.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task);

} // namespace qsk
