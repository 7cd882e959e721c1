#include "qsk/quantile.hpp"

#include <algorithm>
#include <cmath>

#include "qsk/error.hpp"

namespace qsk {

double q_quantile(std::span<const double> values, double q) {
    if (values.empty()) throw Error(ErrorCode::EmptyInput, "q_quantile of an empty sequence");
    if (!(q > 0.0 && q <= 1.0)) throw Error(ErrorCode::InvalidQuantile, "q must lie in (0, 1]");

    Vector y(values.begin(), values.end());
    const std::size_t n = y.size();
    // 0-based k-th order statistic; after it is placed, y_(k) is the largest
    // element to its left
    auto select = [&](std::size_t k) {
        std::nth_element(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(k), y.end());
        return y[k];
    };

    const double nq = static_cast<double>(n) * q;
    const double nearest = std::round(nq);
    const bool integral = nearest >= 1.0 && std::abs(nq - nearest) <= 1e-9 * std::max(1.0, nq);
    if (!integral) {
        // 1-based y_([nq]+1) is 0-based index floor(nq)
        return select(std::min(static_cast<std::size_t>(std::floor(nq)), n - 1));
    }
    const auto k = static_cast<std::size_t>(nearest);
    if (k >= n) return *std::max_element(y.begin(), y.end());
    const double upper = select(k);
    const double lower = *std::max_element(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(k));
    return (lower + upper) / 2.0;
}

double residual_quantile(const DenseMatrix& a, std::span<const double> x, std::span<const double> b,
                         double q) {
    Vector r = residuals(a, x, b);
    for (double& v : r) v = std::abs(v);
    return q_quantile(r, q);
}

IndexSet acceptable_set(std::span<const double> abs_residuals, double q_value, bool strict) {
    IndexSet out;
    for (std::size_t i = 0; i < abs_residuals.size(); ++i) {
        const double r = abs_residuals[i];
        if (strict ? r < q_value : r <= q_value) out.push_back(i);
    }
    if (out.empty()) throw Error(ErrorCode::EmptyAcceptableSet, "no residual within the quantile");
    return out;
}

} // namespace qsk
