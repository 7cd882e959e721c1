#include "qsk/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "qsk/error.hpp"
#include "qsk/rng.hpp"

namespace qsk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::MatrixXd to_eigen(const DenseMatrix& a) {
    Eigen::MatrixXd out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
    return out;
}

double smallest_sv(const Eigen::MatrixXd& m) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    return sv(sv.size() - 1);
}

double largest_sv(const Eigen::MatrixXd& m) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(0);
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& a, std::span<const std::size_t> rows,
                       std::span<const std::size_t> cols) {
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                a(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(cols[c]));
    return out;
}

IndexSet mask_columns(std::uint64_t mask, std::size_t n) {
    IndexSet cols;
    for (std::size_t j = 0; j < n; ++j)
        if (mask & (std::uint64_t{1} << j)) cols.push_back(j);
    return cols;
}

double binomial(std::size_t m, std::size_t p) {
    double out = 1.0;
    p = std::min(p, m - p);
    for (std::size_t k = 1; k <= p; ++k) out = out * static_cast<double>(m - p + k) / static_cast<double>(k);
    return out;
}

// Advances `idx` (strictly increasing, values < m) to the next combination.
bool next_combination(IndexSet& idx, std::size_t m) {
    const std::size_t p = idx.size();
    for (std::size_t k = p; k-- > 0;) {
        if (idx[k] < m - p + k) {
            ++idx[k];
            for (std::size_t l = k + 1; l < p; ++l) idx[l] = idx[l - 1] + 1;
            return true;
        }
    }
    return false;
}

IndexSet random_subset(Rng& rng, std::size_t n, std::size_t count) {
    IndexSet pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t k = 0; k < count; ++k) std::swap(pool[k], pool[k + rng.uniform_index(n - k)]);
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

IndexSet random_nonempty_columns(Rng& rng, std::size_t n) {
    for (;;) {
        IndexSet cols;
        for (std::size_t j = 0; j < n; ++j)
            if (rng.next_u64() >> 63) cols.push_back(j);
        if (!cols.empty()) return cols;
    }
}

std::string format_count(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

void check_order(double q, double beta) {
    if (!(beta >= 0.0 && beta < q && q < 1.0 - beta))
        throw Error(ErrorCode::ParameterOrderViolation, "need 0 <= beta < q < 1 - beta");
}

} // namespace

double smallest_singular_value(const DenseMatrix& a) { return smallest_sv(to_eigen(a)); }
double largest_singular_value(const DenseMatrix& a) { return largest_sv(to_eigen(a)); }

std::size_t quantile_row_count(double q, double beta, std::size_t m) {
    const double p = std::round((q - beta) * static_cast<double>(m));
    if (!(p >= 1.0) || p > static_cast<double>(m))
        throw Error(ErrorCode::DegenerateSelection, "(q - beta) m must round to a value in [1, m]");
    return static_cast<std::size_t>(p);
}

SpectralReport spectral_constants(const DenseMatrix& a, double q, double beta,
                                  const SpectralOptions& options) {
    return spectral_constants_rows(a, quantile_row_count(q, beta, a.rows()), options);
}

SpectralReport spectral_constants_rows(const DenseMatrix& a, std::size_t p, const SpectralOptions& options) {
    const std::size_t m = a.rows(), n = a.cols();
    if (p < 1 || p > m) throw Error(ErrorCode::DegenerateSelection, "row subset size out of range");

    const Eigen::MatrixXd full = to_eigen(a);
    SpectralReport rep;
    rep.mode = options.mode;
    rep.subset_rows = p;
    {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(full);
        const auto& sv = svd.singularValues();
        rep.sigma_max = sv(0);
        rep.sigma_min = sv(sv.size() - 1);
    }

    IndexSet all_rows(m), all_cols(n);
    std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
    std::iota(all_cols.begin(), all_cols.end(), std::size_t{0});

    double tilde = std::numeric_limits<double>::infinity();
    double rowcol = tilde, rows_only = tilde;

    if (options.mode == SpectralMode::Exact) {
        const double col_subsets = n >= 63 ? std::numeric_limits<double>::infinity()
                                           : std::ldexp(1.0, static_cast<int>(n)) - 1.0;
        const double count = binomial(m, p) * col_subsets;
        if (!(count <= options.budget))
            throw Error(ErrorCode::BudgetExceeded,
                        "exact enumeration needs " + format_count(count) + " SVDs, budget " + format_count(options.budget));
        const std::uint64_t masks = (std::uint64_t{1} << n);
        for (std::uint64_t mask = 1; mask < masks; ++mask)
            tilde = std::min(tilde, smallest_sv(gather(full, all_rows, mask_columns(mask, n))));

        IndexSet rows(p);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        do {
            for (std::uint64_t mask = 1; mask < masks; ++mask) {
                const double s = smallest_sv(gather(full, rows, mask_columns(mask, n)));
                rowcol = std::min(rowcol, s);
                if (mask == masks - 1) rows_only = std::min(rows_only, s);
            }
        } while (next_combination(rows, m));
        rep.samples = static_cast<std::size_t>(count);
    } else {
        Rng rng(options.seed);
        // every single column and the full matrix are cheap exact candidates
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t col[1] = {j};
            tilde = std::min(tilde, smallest_sv(gather(full, all_rows, col)));
        }
        tilde = std::min(tilde, rep.sigma_min);
        for (std::size_t s = 0; s < options.samples; ++s)
            tilde = std::min(tilde, smallest_sv(gather(full, all_rows, random_nonempty_columns(rng, n))));
        for (std::size_t s = 0; s < options.samples; ++s) {
            const IndexSet rows = random_subset(rng, m, p);
            const double s_rows = smallest_sv(gather(full, rows, all_cols));
            rows_only = std::min(rows_only, s_rows);
            rowcol = std::min({rowcol, s_rows,
                               smallest_sv(gather(full, rows, random_nonempty_columns(rng, n)))});
        }
        rep.samples = options.samples;
    }
    rep.sigma_tilde_min = tilde;
    rep.sigma_q_beta_min_rowcol = rowcol;
    rep.sigma_q_beta_min_rows = rows_only;
    return rep;
}

double x_hat_min_abs(std::span<const double> x_hat) {
    double best = std::numeric_limits<double>::infinity();
    for (double v : x_hat)
        if (v != 0.0) best = std::min(best, std::abs(v));
    if (!std::isfinite(best)) throw Error(ErrorCode::ZeroGroundTruth, "x_hat has empty support");
    return best;
}

double alpha_factor(std::span<const double> x_hat, double lambda) {
    const double xm = x_hat_min_abs(x_hat);
    return xm / (xm + 2.0 * lambda);
}

double gamma_factor(double sigma_tilde_min, double alpha) noexcept {
    return 1.0 / (sigma_tilde_min * sigma_tilde_min * alpha);
}

double rask_rate(double frobenius, double sigma_tilde_min, double x_hat_min, double lambda) {
    if (!(x_hat_min > 0.0)) throw Error(ErrorCode::ZeroGroundTruth, "|x_hat|_min must be positive");
    const double kappa = frobenius / sigma_tilde_min;
    const double alpha = x_hat_min / (x_hat_min + 2.0 * lambda);
    return std::clamp(1.0 - 0.5 / (kappa * kappa) * alpha, 0.0, 1.0);
}

double rask_rate(const DenseMatrix& a, const SpectralReport& s, std::span<const double> x_hat,
                 double lambda) {
    return rask_rate(frobenius_norm(a), s.sigma_tilde_min, x_hat_min_abs(x_hat), lambda);
}

Theorem32 theorem32_constants(const SpectralReport& s, std::size_t m_count, std::size_t n_count,
                              double q, double beta, double alpha, C1Form form) {
    check_order(q, beta);
    const double m = static_cast<double>(m_count), n = static_cast<double>(n_count);
    const double smax = s.sigma_max;
    const double st2 = s.sigma_q_beta_min_rowcol * s.sigma_q_beta_min_rowcol;
    const double gap = 1.0 - beta - q;
    const double sb1b = std::sqrt(beta * (1.0 - beta));
    const double root1b = std::sqrt(1.0 - beta);
    const double cross = smax / std::sqrt(m * n);

    Theorem32 out;
    const double lead = alpha * (q - beta) / (2.0 * q * q) * st2 / m;
    if (form == C1Form::Primary) {
        out.c1 = lead - 2.0 * sb1b / (q * gap) * (smax * smax / m + root1b * cross) -
                 beta * (1.0 - beta) / (q * gap * gap) * (smax * smax / m + 2.0 * root1b * cross);
    } else {
        out.c1 = lead - 2.0 * sb1b / (q * gap) * (smax * smax / m + cross) -
                 beta * (1.0 - beta) / (q * gap * gap) * (smax * smax / m + root1b * cross);
    }
    out.c2 = std::sqrt(beta) * (1.0 - beta) / (q * gap) * (1.0 + sb1b / gap) * std::sqrt(n / m) * smax +
             0.5 * beta * (1.0 - beta) * (1.0 - beta) / (q * gap * gap) + 0.5;

    const double tall = std::sqrt((1.0 - beta) * m / n);
    out.condition_lhs = 2.0 * sb1b / gap * (smax + tall) +
                        beta * (1.0 - beta) / (gap * gap) * (smax + 2.0 * tall);
    out.condition_rhs = alpha * (q - beta) / (2.0 * q) * st2 / smax;
    out.condition_holds = out.condition_lhs < out.condition_rhs;
    return out;
}

Theorem33 theorem33_constant(const SpectralReport& s, std::size_t m_count, double q, double beta,
                             double alpha) {
    check_order(q, beta);
    const double m = static_cast<double>(m_count);
    const double st2 = s.sigma_q_beta_min_rowcol * s.sigma_q_beta_min_rowcol;
    const double smax2 = s.sigma_max * s.sigma_max;
    const double leak = 2.0 * std::sqrt(beta) / std::sqrt(1.0 - q - beta) + beta / (1.0 - q - beta);

    Theorem33 out;
    out.c = (q - beta) / (2.0 * q * q * m) * alpha * st2 - leak * smax2 / (q * m);
    out.condition_lhs = 2.0 * q / (q - beta) * leak / alpha;
    out.condition_rhs = st2 / smax2;
    out.condition_holds = out.condition_lhs < out.condition_rhs;
    return out;
}

BlockRate raska_rate_corrupted(const SpectralReport& s, std::size_t m_count, double q, double beta,
                               double gamma, double w) {
    check_order(q, beta);
    if (!(w >= 0.0)) throw Error(ErrorCode::ParameterOrderViolation, "stepsize must be nonnegative");
    const double m = static_cast<double>(m_count);
    const double smax2 = s.sigma_max * s.sigma_max;
    const double sq2 = s.sigma_q_beta_min_rows * s.sigma_q_beta_min_rows;
    const double rho = std::sqrt(beta) / std::sqrt(1.0 - q - beta);

    const double decrease = w / (gamma * q * m) * (sq2 / smax2 - rho) -
                            w * w * smax2 / (gamma * q * q * m * m) * (1.0 + rho) * (1.0 + rho);
    return {1.0 - decrease, decrease > 0.0 && decrease < 1.0};
}

NoisyBlockRate raska_rate_noisy(const SpectralReport& s, std::size_t m_count, std::size_t n_count,
                                double q, double beta, double alpha, double w) {
    check_order(q, beta);
    if (!(w >= 0.0)) throw Error(ErrorCode::ParameterOrderViolation, "stepsize must be nonnegative");
    const double m = static_cast<double>(m_count), n = static_cast<double>(n_count);
    const double gap = 1.0 - beta - q;
    const double smax = s.sigma_max;
    const double st2 = s.sigma_tilde_min * s.sigma_tilde_min;
    const double sq2 = s.sigma_q_beta_min_rows * s.sigma_q_beta_min_rows;

    // Coefficients read off the two bounds combined in the proof:
    //   inner product:  (-w/(qm) sq^2 + w sqrt((1-b)b)/((1-b-q)qm) smax^2) ||e||^2
    //                   + (w/sqrt(qm) + (1-b)/(1-b-q) w sqrt(b)/(q sqrt(m))) smax ||r|| ||e||
    //   quadratic term: w^2/(qm)^2 smax^4 u^2 ||e||^2 + w^2/(qm) smax^2 v^2 ||r||^2
    //                   + w^2/(qm)^{3/2} smax^3 u v ||e|| ||r||
    // with u = 1 + sqrt((1-b)b)/(1-b-q), v = 1 + (1-b) sqrt(b)/((1-b-q) sqrt(q)),
    // matched against c1 w/m sq^2, c2 w/m smax^2, c3 w^2/m^2 smax^4,
    // c4 w/sqrt(m) smax, c5 w^2/m^{3/2} smax^3, c6 w^2/m smax^2.
    const double u = 1.0 + std::sqrt((1.0 - beta) * beta) / gap;
    const double v = 1.0 + (1.0 - beta) * std::sqrt(beta) / (gap * std::sqrt(q));

    NoisyBlockRate out;
    out.c[0] = 1.0 / q;
    out.c[1] = std::sqrt((1.0 - beta) * beta) / (gap * q);
    out.c[2] = u * u / (q * q);
    out.c[3] = 1.0 / std::sqrt(q) + (1.0 - beta) / gap * std::sqrt(beta) / q;
    out.c[4] = u * v / std::pow(q, 1.5);
    out.c[5] = v * v / q;
    const auto& c = out.c;

    out.c1s = c[0] * alpha * st2 * sq2 / (m * smax * smax) - c[1] * alpha * st2 / m -
              c[3] * alpha * st2 / (2.0 * std::sqrt(m * n) * smax);
    out.c2s = c[2] * alpha * st2 * smax * smax / (m * m) +
              c[4] * alpha * st2 * smax / (2.0 * std::pow(m, 1.5) * std::sqrt(n));
    out.c3s = c[3] * std::sqrt(n) * smax / (2.0 * std::sqrt(m));
    out.c4s = c[4] * std::sqrt(n) * smax * smax * smax / (2.0 * std::pow(m, 1.5)) + c[5] * smax * smax / m;

    out.factor = 1.0 - out.c1s * w + out.c2s * w * w;
    out.noise_coeff = out.c3s * w + out.c4s * w * w;
    out.w_star = out.c1s / (2.0 * out.c2s);
    const double decrease = out.c1s * w - out.c2s * w * w;
    out.condition_holds = out.c1s > 0.0 && decrease > 0.0 && decrease < 1.0;
    return out;
}

double lemma31_bound(std::span<const double> x_k, const ProblemInstance& inst, double q,
                     double sigma_max) {
    if (!inst.x_hat) throw Error(ErrorCode::MissingGroundTruth, "the quantile bound needs x_hat");
    const double beta = inst.realized_beta();
    check_order(q, beta);
    const double m = static_cast<double>(inst.rows());
    const double gap = 1.0 - beta - q;
    return std::sqrt(1.0 - beta) / (gap * std::sqrt(m)) * sigma_max * distance(x_k, *inst.x_hat) +
           (1.0 - beta) / gap * norm_inf(inst.noise);
}

bool lemma31_check(std::span<const double> x_k, const ProblemInstance& inst, double q, double q_value,
                   double sigma_max) {
    return q_value <= lemma31_bound(x_k, inst, q, sigma_max) + 1e-9;
}

TheoremConstants theorem_constants(const DenseMatrix& a, const SpectralReport& s,
                                   std::span<const double> x_hat, double lambda, double q,
                                   double beta, double w) {
    TheoremConstants out;
    out.alpha = alpha_factor(x_hat, lambda);
    out.kappa_tilde = frobenius_norm(a) / s.sigma_tilde_min;
    out.gamma = gamma_factor(s.sigma_tilde_min, out.alpha);
    out.rask_rate = rask_rate(a, s, x_hat, lambda);
    out.order_ok = beta >= 0.0 && beta < q && q < 1.0 - beta;
    if (out.order_ok) {
        out.th32 = theorem32_constants(s, a.rows(), a.cols(), q, beta, out.alpha);
        out.th32_alt = theorem32_constants(s, a.rows(), a.cols(), q, beta, out.alpha, C1Form::Alternate);
        out.th33 = theorem33_constant(s, a.rows(), q, beta, out.alpha);
        out.raska = raska_rate_corrupted(s, a.rows(), q, beta, out.gamma, w);
        out.raska_noisy = raska_rate_noisy(s, a.rows(), a.cols(), q, beta, out.alpha, w);
    } else {
        out.th32 = {kNaN, kNaN, kNaN, kNaN, false};
        out.th32_alt = out.th32;
        out.th33 = {kNaN, kNaN, kNaN, false};
        out.raska = {kNaN, false};
        out.raska_noisy.factor = out.raska_noisy.noise_coeff = out.raska_noisy.w_star = kNaN;
    }
    return out;
}

} // namespace qsk
