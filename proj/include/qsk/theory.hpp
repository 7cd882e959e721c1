#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "qsk/instances.hpp"
#include "qsk/matrix.hpp"

namespace qsk {

/// Singular values use the compact SVD: the smallest value of an r x c
/// matrix is its min(r, c)-th singular value, so wide submatrices do not
/// collapse to zero.
double smallest_singular_value(const DenseMatrix& a);
double largest_singular_value(const DenseMatrix& a);

enum class SpectralMode { Exact, Sampled };

struct SpectralOptions {
    SpectralMode mode = SpectralMode::Exact;
    double budget = 2e6;      ///< max submatrix SVDs in exact mode
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
};

/// Minimum-singular-value constants of a row-normalized matrix.
/// In sampled mode the min-constants are minima over the drawn candidates,
/// hence upper estimates of the true minima.
struct SpectralReport {
    double sigma_max = 0.0;
    double sigma_min = 0.0;
    double sigma_tilde_min = 0.0;          ///< min over column subsets J
    double sigma_q_beta_min_rowcol = 0.0;  ///< min over |I| = p and all J
    double sigma_q_beta_min_rows = 0.0;    ///< min over |I| = p, all columns
    SpectralMode mode = SpectralMode::Exact;
    std::size_t samples = 0;
    std::size_t subset_rows = 0; ///< p = round((q - beta) m)
};

/// p = round((q - beta) * m); DegenerateSelection unless 1 <= p <= m.
std::size_t quantile_row_count(double q, double beta, std::size_t m);

/// Exact mode enumerates every (I, J) with |I| = p and throws BudgetExceeded
/// when C(m, p) * (2^n - 1) exceeds the budget.
SpectralReport spectral_constants(const DenseMatrix& a, double q, double beta,
                                  const SpectralOptions& options = {});
SpectralReport spectral_constants_rows(const DenseMatrix& a, std::size_t subset_rows,
                                       const SpectralOptions& options = {});

/// |x_hat|_min over the support. ZeroGroundTruth when x_hat = 0.
double x_hat_min_abs(std::span<const double> x_hat);
/// alpha = |x_hat|_min / (|x_hat|_min + 2 lambda)
double alpha_factor(std::span<const double> x_hat, double lambda);
/// gamma = 1 / (sigma_tilde_min^2 * alpha)
double gamma_factor(double sigma_tilde_min, double alpha) noexcept;

/// 1 - (1/2)(1/kappa~^2) alpha with kappa~ = ||A||_F / sigma_tilde_min.
double rask_rate(double frobenius, double sigma_tilde_min, double x_hat_min, double lambda);
double rask_rate(const DenseMatrix& a, const SpectralReport& s, std::span<const double> x_hat,
                 double lambda);

enum class C1Form {
    Primary,   ///< cross terms weighted sqrt(1-b) and 2 sqrt(1-b)
    Alternate, ///< cross terms weighted 1 and sqrt(1-b)
};

struct Theorem32 {
    double c1 = 0.0;
    double c2 = 0.0;
    double condition_lhs = 0.0;
    double condition_rhs = 0.0;
    bool condition_holds = false;
};

/// Contraction 1 - C1 and noise coefficient C2 for Quantile-RaSK on
/// corrupted noisy systems, plus the sufficient condition for convergence.
/// ParameterOrderViolation unless 0 <= beta < q < 1 - beta.
Theorem32 theorem32_constants(const SpectralReport& s, std::size_t m, std::size_t n, double q,
                              double beta, double alpha, C1Form form = C1Form::Primary);

struct Theorem33 {
    double c = 0.0;
    double condition_lhs = 0.0;
    double condition_rhs = 0.0;
    bool condition_holds = false;
};

/// Contraction 1 - C for Quantile-RaSK on corrupted noiseless systems.
Theorem33 theorem33_constant(const SpectralReport& s, std::size_t m, double q, double beta,
                             double alpha);

struct BlockRate {
    double rate = 1.0;
    bool condition_holds = false;
};

/// Per-iteration factor of Quantile-RaSKA with constant stepsize w on a
/// corrupted noiseless system:
///   1 - w/(gamma q m) (sigma_{q-b}^2/sigma_max^2 - rho) + w^2 sigma_max^2/(gamma q^2 m^2) (1 + rho)^2
/// with rho = sqrt(beta)/sqrt(1 - q - beta). The condition asks the
/// decrease to lie in (0, 1).
BlockRate raska_rate_corrupted(const SpectralReport& s, std::size_t m, double q, double beta,
                               double gamma, double w);

struct NoisyBlockRate {
    std::array<double, 6> c{};        ///< c_1 .. c_6, functions of (q, beta) only
    double c1s = 0.0, c2s = 0.0, c3s = 0.0, c4s = 0.0; ///< c_1* .. c_4*
    double factor = 1.0;              ///< 1 - c1* w + c2* w^2
    double noise_coeff = 0.0;         ///< c3* w + c4* w^2
    double w_star = 0.0;              ///< c1* / (2 c2*)
    bool condition_holds = false;     ///< 0 < c1* w - c2* w^2 < 1 and c1* > 0
};

/// Quantile-RaSKA on corrupted noisy systems: D_{k+1} <= factor D_k +
/// noise_coeff ||r||_inf^2, with the stepsize-optimal w*.
NoisyBlockRate raska_rate_noisy(const SpectralReport& s, std::size_t m, std::size_t n, double q,
                                double beta, double alpha, double w);

/// Right-hand side of the quantile bound
///   Q_k <= sqrt(1-b)/((1-b-q) sqrt(m)) sigma_max ||x_k - x_hat|| + (1-b)/(1-b-q) ||r||_inf
double lemma31_bound(std::span<const double> x_k, const ProblemInstance& inst, double q,
                     double sigma_max);

/// True iff Q_k <= lemma31_bound(...) + 1e-9. beta is the realized corrupted
/// fraction of `inst`. MissingGroundTruth without x_hat.
bool lemma31_check(std::span<const double> x_k, const ProblemInstance& inst, double q, double q_value,
                   double sigma_max);

/// Every theorem quantity for one (instance, q, beta, lambda, w) setting.
/// Evaluators whose parameter ordering fails leave NaN and a false flag.
struct TheoremConstants {
    double alpha = 0.0;
    double kappa_tilde = 0.0;
    double gamma = 0.0;
    double rask_rate = 0.0;
    Theorem32 th32;
    Theorem32 th32_alt;
    Theorem33 th33;
    BlockRate raska;
    NoisyBlockRate raska_noisy;
    bool order_ok = false; ///< beta < q < 1 - beta
};

TheoremConstants theorem_constants(const DenseMatrix& a, const SpectralReport& s,
                                   std::span<const double> x_hat, double lambda, double q,
                                   double beta, double w);

} // namespace qsk
