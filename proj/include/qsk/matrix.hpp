#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace qsk {

using Vector = std::vector<double>;
using IndexSet = std::vector<std::size_t>;

/// Dense real matrix, row-major. Rows are the unit of access for every
/// row-action method in this library, so `row(i)` is a contiguous span.
class DenseMatrix {
public:
    DenseMatrix() = default;

    /// Zero-filled m x n matrix. Throws DimensionMismatch if m or n is zero.
    DenseMatrix(std::size_t rows, std::size_t cols);

    /// Takes ownership of row-major `entries` (length rows*cols, all finite).
    DenseMatrix(std::size_t rows, std::size_t cols, Vector entries);

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix from_rows(const std::vector<Vector>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vector data_;
};

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double norm2(std::span<const double> v) noexcept;
double norm1(std::span<const double> v) noexcept;
double norm_inf(std::span<const double> v) noexcept;
/// ||a - b||_2
double distance(std::span<const double> a, std::span<const double> b) noexcept;

struct NormalizedRows {
    DenseMatrix matrix;
    Vector scales; ///< original row norms
};

/// Scales every row to unit Euclidean norm. A row whose norm is at most
/// `zero_row_tol` (default: 1e-14 times the largest row norm) raises
/// ZeroRow(index). Right-hand sides must be divided by `scales` by the caller.
NormalizedRows normalize_rows(const DenseMatrix& a, double zero_row_tol = -1.0);

/// Signed residuals <a_i, x> - b_i.
Vector residuals(const DenseMatrix& a, std::span<const double> x, std::span<const double> b);

Vector matvec(const DenseMatrix& a, std::span<const double> x);

/// sqrt(sum_i ||a_i||_1^2)
double one_two_norm(const DenseMatrix& a) noexcept;
double frobenius_norm(const DenseMatrix& a) noexcept;

/// Rows indexed by `row_idx`, columns by `col_idx`, in the given order.
DenseMatrix submatrix(const DenseMatrix& a, std::span<const std::size_t> row_idx,
                      std::span<const std::size_t> col_idx);

bool rows_are_unit(const DenseMatrix& a, double tol = 1e-10) noexcept;

} // namespace qsk
