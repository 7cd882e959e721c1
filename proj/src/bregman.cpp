#include "qsk/bregman.hpp"

#include <algorithm>
#include <cmath>

#include "qsk/error.hpp"

namespace qsk {

DualPrimalPair DualPrimalPair::from_dual(Vector x_star, double lambda) {
    Vector x = soft_shrink(x_star, lambda);
    return {std::move(x), std::move(x_star)};
}

double soft_shrink(double v, double lambda) noexcept {
    const double m = std::abs(v) - lambda;
    if (m <= 0.0) return 0.0;
    return v > 0.0 ? m : -m;
}

Vector soft_shrink(std::span<const double> v, double lambda) {
    Vector out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) out[j] = soft_shrink(v[j], lambda);
    return out;
}

double f_value(std::span<const double> x, double lambda) noexcept {
    return lambda * norm1(x) + 0.5 * dot(x, x);
}

double conjugate_value(std::span<const double> x_star, double lambda) noexcept {
    double s = 0.0;
    for (double v : x_star) {
        const double z = soft_shrink(v, lambda);
        s += z * z;
    }
    return 0.5 * s;
}

bool is_valid_pair(std::span<const double> x, std::span<const double> x_star, double lambda) noexcept {
    if (x.size() != x_star.size()) return false;
    const double tol = 1e-12 * (1.0 + norm_inf(x_star));
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double gap = x_star[j] - x[j];
        if (std::abs(gap) > lambda + tol) return false;
        if (x[j] != 0.0) {
            const double expected = x[j] > 0.0 ? lambda : -lambda;
            if (std::abs(gap - expected) > tol) return false;
        }
    }
    return true;
}

double bregman_distance(const DualPrimalPair& pair, std::span<const double> y, double lambda) {
    if (y.size() != pair.x.size()) throw Error(ErrorCode::DimensionMismatch, "bregman_distance");
    if (!is_valid_pair(pair.x, pair.x_star, lambda))
        throw Error(ErrorCode::InvalidDualPair, "x_star is not a subgradient of f at x");
    double inner = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) inner += pair.x_star[j] * (y[j] - pair.x[j]);
    const double d = f_value(y, lambda) - f_value(pair.x, lambda) - inner;
    return std::max(d, 0.0);
}

namespace {

double g_value(std::span<const double> x_star, std::span<const double> a, double b, double lambda,
               double t) noexcept {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j)
        if (a[j] != 0.0) s += a[j] * soft_shrink(x_star[j] - t * a[j], lambda);
    return s - b;
}

} // namespace

double exact_step(std::span<const double> x_star, std::span<const double> a, double b, double lambda) {
    if (x_star.size() != a.size()) throw Error(ErrorCode::DimensionMismatch, "exact_step");
    Vector kinks;
    kinks.reserve(2 * a.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (a[j] == 0.0) continue;
        kinks.push_back((x_star[j] - lambda) / a[j]);
        kinks.push_back((x_star[j] + lambda) / a[j]);
    }
    if (kinks.empty()) throw Error(ErrorCode::DegenerateDirection, "exact_step with a = 0");
    std::sort(kinks.begin(), kinks.end());
    kinks.erase(std::unique(kinks.begin(), kinks.end()), kinks.end());

    // first kink with g <= 0 (g nonincreasing)
    std::size_t lo = 0, hi = kinks.size();
    double g_at = 0.0;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (g_value(x_star, a, b, lambda, kinks[mid]) <= 0.0)
            hi = mid;
        else
            lo = mid + 1;
    }
    if (lo < kinks.size()) {
        g_at = g_value(x_star, a, b, lambda, kinks[lo]);
        if (g_at == 0.0) return kinks[lo];
    }

    double seg_lo = 0.0, seg_hi = 0.0, probe = 0.0;
    if (lo == 0) {
        seg_lo = -INFINITY;
        seg_hi = kinks.front();
        probe = kinks.front() - 1.0;
    } else if (lo == kinks.size()) {
        seg_lo = kinks.back();
        seg_hi = INFINITY;
        probe = kinks.back() + 1.0;
    } else {
        seg_lo = kinks[lo - 1];
        seg_hi = kinks[lo];
        probe = 0.5 * (seg_lo + seg_hi);
    }

    // On the segment g(t) = sum_active a_j (x*_j - s_j*lambda) - t * sum_active a_j^2 - b.
    double intercept = 0.0, slope = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (a[j] == 0.0) continue;
        const double u = x_star[j] - probe * a[j];
        if (u > lambda) {
            intercept += a[j] * (x_star[j] - lambda);
            slope += a[j] * a[j];
        } else if (u < -lambda) {
            intercept += a[j] * (x_star[j] + lambda);
            slope += a[j] * a[j];
        }
    }
    if (slope <= 0.0) throw Error(ErrorCode::NoRoot, "g is flat on the bracketing segment");
    const double t = (intercept - b) / slope;
    return std::clamp(t, seg_lo, seg_hi);
}

DualPrimalPair bregman_project_hyperplane(const DualPrimalPair& pair, std::span<const double> a,
                                          double b, double lambda) {
    const double t = exact_step(pair.x_star, a, b, lambda);
    Vector z_star = pair.x_star;
    for (std::size_t j = 0; j < a.size(); ++j) z_star[j] -= t * a[j];
    return DualPrimalPair::from_dual(std::move(z_star), lambda);
}

} // namespace qsk
