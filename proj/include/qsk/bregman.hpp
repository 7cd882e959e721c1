#pragma once

#include <span>

#include "qsk/matrix.hpp"

namespace qsk {

/// Regularizer f(x) = lambda*||x||_1 + 0.5*||x||^2. lambda = 0 is the
/// Euclidean case in which every Bregman quantity is the squared distance.
struct Regularizer {
    double lambda = 0.0;
};

/// Primal/dual iterate with x = S_lambda(x_star), hence x_star in the
/// subdifferential of f at x.
struct DualPrimalPair {
    Vector x;
    Vector x_star;

    static DualPrimalPair zeros(std::size_t n) { return {Vector(n, 0.0), Vector(n, 0.0)}; }
    static DualPrimalPair from_dual(Vector x_star, double lambda);
};

/// Componentwise max(|v| - lambda, 0) * sign(v).
Vector soft_shrink(std::span<const double> v, double lambda);
double soft_shrink(double v, double lambda) noexcept;

double f_value(std::span<const double> x, double lambda) noexcept;

/// f*(y) = 0.5*||S_lambda(y)||^2, the closed form of sup_z <y,z> - f(z).
double conjugate_value(std::span<const double> x_star, double lambda) noexcept;

/// True when x_star is a subgradient of f at x, to tolerance
/// 1e-12 * (1 + ||x_star||_inf).
bool is_valid_pair(std::span<const double> x, std::span<const double> x_star, double lambda) noexcept;

/// D_f^{x*}(x, y) = f(y) - f(x) - <x*, y - x>. Throws InvalidDualPair when the
/// pair fails the subgradient test.
double bregman_distance(const DualPrimalPair& pair, std::span<const double> y, double lambda);

/// Root t of g(t) = <a, S_lambda(x_star - t*a)> - b.
///
/// g is continuous, nonincreasing and piecewise linear with kinks where
/// x_star_j - t*a_j = +-lambda. The kinks are sorted, the bracketing segment
/// found by binary search on g, and the linear piece on that segment solved
/// in closed form. A root landing exactly on a kink returns the kink.
double exact_step(std::span<const double> x_star, std::span<const double> a, double b, double lambda);

/// Bregman projection of `pair` onto H(a, b) = {z : <a, z> = b}.
DualPrimalPair bregman_project_hyperplane(const DualPrimalPair& pair, std::span<const double> a,
                                          double b, double lambda);

} // namespace qsk
