#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>

#include "qsk/matrix.hpp"

namespace qsk {

/// Corrupted, noisy system b = b_clean + b_corrupt + noise with unit-norm rows.
struct ProblemInstance {
    DenseMatrix a;
    Vector b_clean;
    Vector b_corrupt;
    Vector noise;
    Vector b_observed;
    std::optional<Vector> x_hat;
    IndexSet corrupted_rows; ///< ascending; the sampled corruption support
    double beta = 0.0;
    double corruption_scale = 0.0;
    double noise_bound = 0.0;
    std::uint64_t seed = 0;

    std::size_t rows() const noexcept { return a.rows(); }
    std::size_t cols() const noexcept { return a.cols(); }

    /// Fraction of rows actually corrupted, |corrupted_rows| / m.
    double realized_beta() const noexcept;
};

struct GeneratorSpec {
    std::size_t m = 0;
    std::size_t n = 0;
    std::size_t sparsity = 0;
    double beta = 0.0;
    double corruption_scale = 0.0;
    double noise_bound = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// round(beta * m), the number of rows that receive a corruption.
std::size_t corruption_count(double beta, std::size_t m) noexcept;

/// Gaussian model. Random draws happen in this fixed order from one stream
/// seeded with `spec.seed`: m*n standard normals (row-major), the support of
/// x_hat (partial Fisher-Yates on 0..n-1, then sorted), s standard normal
/// values in ascending support order, round(beta*m) corruption rows (partial
/// Fisher-Yates on 0..m-1, then sorted), one U(-k, k) per corrupted row in
/// ascending row order, and m draws U(-noise_bound, noise_bound).
ProblemInstance generate_gaussian(const GeneratorSpec& spec);

/// Builds an instance around an imported matrix. Rows are normalized; with
/// `x_hat` the clean side is A_normalized * x_hat, otherwise `rhs` divided by
/// the row scales. Corruption and noise are injected with the same draw
/// order as generate_gaussian (corruption rows, values, noise).
ProblemInstance make_instance(const DenseMatrix& a, std::optional<Vector> x_hat,
                              std::optional<Vector> rhs, double beta, double corruption_scale,
                              double noise_bound, std::uint64_t seed);

/// make_instance over Matrix Market files; `vector_path` is x_hat when
/// `vector_is_x_hat`, otherwise the right-hand side.
ProblemInstance from_files(const std::filesystem::path& matrix_path,
                           const std::filesystem::path& vector_path, bool vector_is_x_hat,
                           double beta, double corruption_scale, double noise_bound,
                           std::uint64_t seed);

/// Bundle directory: A.mtx, b.mtx (observed), btilde.mtx, bc.mtx, r.mtx,
/// xhat.mtx (when known) and meta.txt with key=value lines
/// (m, n, beta, corruption_scale, noise_bound, seed, corrupted_count,
/// noise_inf, has_xhat, corrupted_rows as a comma list).
void save_bundle(const ProblemInstance& inst, const std::filesystem::path& dir);
ProblemInstance load_bundle(const std::filesystem::path& dir);

IndexSet corruption_mask(const ProblemInstance& inst);

struct DetectionCounts {
    std::size_t corrupted_in_set = 0;
    std::size_t clean_in_set = 0;
};

DetectionCounts is_detected(const ProblemInstance& inst, std::span<const std::size_t> acceptable);

} // namespace qsk
