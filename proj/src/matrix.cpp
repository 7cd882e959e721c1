#include "qsk/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qsk/error.hpp"

namespace qsk {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : DenseMatrix(rows, cols, Vector(rows * cols, 0.0)) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, Vector entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (rows == 0 || cols == 0)
        throw Error(ErrorCode::DimensionMismatch, "matrix dimensions must be positive");
    if (data_.size() != rows * cols)
        throw Error(ErrorCode::DimensionMismatch,
                    "expected " + std::to_string(rows * cols) + " entries, got " +
                        std::to_string(data_.size()));
    for (std::size_t k = 0; k < data_.size(); ++k)
        if (!std::isfinite(data_[k]))
            throw Error(ErrorCode::NonFinite, "matrix entry is not finite", k);
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
    return out;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<Vector>& rows) {
    if (rows.empty()) throw Error(ErrorCode::DimensionMismatch, "no rows");
    const std::size_t n = rows.front().size();
    Vector entries;
    entries.reserve(rows.size() * n);
    for (const auto& r : rows) {
        if (r.size() != n) throw Error(ErrorCode::DimensionMismatch, "ragged rows");
        entries.insert(entries.end(), r.begin(), r.end());
    }
    return DenseMatrix(rows.size(), n, std::move(entries));
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    // four interleaved partial sums, combined in a fixed order
    const std::size_t n = a.size();
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        s0 += a[j] * b[j];
        s1 += a[j + 1] * b[j + 1];
        s2 += a[j + 2] * b[j + 2];
        s3 += a[j + 3] * b[j + 3];
    }
    for (; j < n; ++j) s0 += a[j] * b[j];
    return (s0 + s1) + (s2 + s3);
}

double norm2(std::span<const double> v) noexcept { return std::sqrt(dot(v, v)); }

double norm1(std::span<const double> v) noexcept {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

double norm_inf(std::span<const double> v) noexcept {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

double distance(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return std::sqrt(s);
}

NormalizedRows normalize_rows(const DenseMatrix& a, double zero_row_tol) {
    Vector scales(a.rows());
    double max_norm = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        scales[i] = norm2(a.row(i));
        max_norm = std::max(max_norm, scales[i]);
    }
    const double tol = zero_row_tol >= 0.0 ? zero_row_tol : 1e-14 * max_norm;
    DenseMatrix out = a;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        if (scales[i] <= tol || scales[i] == 0.0)
            throw Error(ErrorCode::ZeroRow, "row norm below threshold", i);
        for (double& v : out.row(i)) v /= scales[i];
    }
    return {std::move(out), std::move(scales)};
}

Vector residuals(const DenseMatrix& a, std::span<const double> x, std::span<const double> b) {
    if (x.size() != a.cols() || b.size() != a.rows())
        throw Error(ErrorCode::DimensionMismatch, "residuals: A, x, b do not conform");
    Vector r(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) r[i] = dot(a.row(i), x) - b[i];
    return r;
}

Vector matvec(const DenseMatrix& a, std::span<const double> x) {
    if (x.size() != a.cols()) throw Error(ErrorCode::DimensionMismatch, "matvec: A, x do not conform");
    Vector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
    return y;
}

double one_two_norm(const DenseMatrix& a) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double r = norm1(a.row(i));
        s += r * r;
    }
    return std::sqrt(s);
}

double frobenius_norm(const DenseMatrix& a) noexcept { return norm2(a.data()); }

DenseMatrix submatrix(const DenseMatrix& a, std::span<const std::size_t> row_idx,
                      std::span<const std::size_t> col_idx) {
    if (row_idx.empty() || col_idx.empty())
        throw Error(ErrorCode::EmptySelection, "submatrix needs at least one row and one column");
    for (std::size_t i : row_idx)
        if (i >= a.rows()) throw Error(ErrorCode::IndexOutOfRange, "row index", i);
    for (std::size_t j : col_idx)
        if (j >= a.cols()) throw Error(ErrorCode::IndexOutOfRange, "column index", j);
    DenseMatrix out(row_idx.size(), col_idx.size());
    for (std::size_t r = 0; r < row_idx.size(); ++r)
        for (std::size_t c = 0; c < col_idx.size(); ++c) out(r, c) = a(row_idx[r], col_idx[c]);
    return out;
}

bool rows_are_unit(const DenseMatrix& a, double tol) noexcept {
    for (std::size_t i = 0; i < a.rows(); ++i)
        if (std::abs(norm2(a.row(i)) - 1.0) > tol) return false;
    return true;
}

} // namespace qsk
