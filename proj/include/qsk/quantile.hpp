#pragma once

#include <span>

#include "qsk/matrix.hpp"

namespace qsk {

/// Order-statistic quantile (selection, not a full sort) over ascending y_(1) <= ... <= y_(n):
///   nq not an integer: y_([nq] + 1)
///   nq an integer:     (y_(nq) + y_(nq+1)) / 2, and y_(n) when nq = n.
/// nq is treated as an integer when it lies within 1e-9 * max(1, nq) of one.
/// Throws EmptyInput for an empty input and InvalidQuantile unless 0 < q <= 1.
double q_quantile(std::span<const double> values, double q);

/// q-quantile of |<a_i, x> - b_i| over all rows.
double residual_quantile(const DenseMatrix& a, std::span<const double> x, std::span<const double> b,
                         double q);

/// Ascending indices i with abs_residuals[i] <= q_value (strict = false) or
/// < q_value (strict = true). Throws EmptyAcceptableSet when nothing qualifies.
IndexSet acceptable_set(std::span<const double> abs_residuals, double q_value, bool strict);

} // namespace qsk
