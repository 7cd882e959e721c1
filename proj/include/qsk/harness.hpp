#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qsk/solvers.hpp"

namespace qsk::cli {

/// A named method from the command line, e.g. "quantile-raska".
struct MethodChoice {
    std::string name;
    Method method = Method::SingleRowInexact;
    bool quantile = false; ///< quantile-* names filter rows
    bool sparse = true;    ///< rk / rka force lambda = 0
};

/// Accepts rk, rask, erask, rka, raska and their quantile- prefixed forms.
/// ConfigInvalid otherwise.
MethodChoice parse_method(const std::string& name);

/// "1.7n" is 1.7 times the column count, "2" a plain constant.
Stepsize parse_stepsize(const std::string& text);

/// Shortest decimal that reads back to the same double ("%.17g").
std::string format_double(double v);

/// CSV with header k,rel_error,bregman_dist,quantile,set_size,elapsed_s.
/// Missing ground-truth columns print as nan.
std::string trace_csv(const ConvergenceTrace& trace);

/// First recorded k whose rel_error is <= tol.
std::optional<std::size_t> iterations_to_reach(const ConvergenceTrace& trace, double tol);

struct ExperimentOptions {
    std::string preset;
    bool full = false;
    std::optional<std::size_t> m, s, trials, iters;
    std::vector<std::size_t> n_list;
    std::vector<double> beta_list;
    std::vector<double> k_list;
    std::optional<double> noise, q, lambda, tol;
    std::optional<std::string> method;
    std::optional<std::filesystem::path> matrix, xhat;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::size_t trace_every = 1;
    bool timing = false;
};

struct SummaryRow {
    std::string label;
    std::vector<double> values;
};

struct ExperimentOutput {
    std::vector<std::string> columns; ///< columns[0] names the label
    std::vector<SummaryRow> rows;
    std::vector<std::pair<std::string, ConvergenceTrace>> traces; ///< file stem, trace
    std::vector<std::pair<std::string, Vector>> solutions;        ///< file stem, final x
    std::vector<std::string> notes;                               ///< printed to stdout
};

/// Preset names: corruption-scale, stepsize-sweep, qbeta-grid, method-compare, realdata.
std::vector<std::string> preset_names();

/// Runs a preset. Unset options take the desk-scale defaults, or the
/// large sizes with `full`. SpecInvalid for an unknown preset.
ExperimentOutput run_experiment(const ExperimentOptions& options);

/// Summary CSV text, starting with "# cmd: <command>".
std::string summary_csv(const ExperimentOutput& out, const std::string& command);

/// Entry point of the `qsk` tool. Exit codes: 0 success, 1 usage, config or
/// IO error, 2 when --stop-tol was set and not reached.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace qsk::cli
