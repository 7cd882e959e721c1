#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qsk/bregman.hpp"
#include "qsk/error.hpp"

using namespace qsk;

namespace {

DualPrimalPair random_pair(Rng& rng, std::size_t n, double lambda) {
    return DualPrimalPair::from_dual(oracle::random_vector(rng, n, 2.0), lambda);
}

} // namespace

TEST_CASE("soft_shrink") {
    CHECK(soft_shrink(Vector{2.5, -0.5, 1.0}, 1.0) == Vector{1.5, 0, 0});
    CHECK(soft_shrink(Vector{2, -2}, 3.0) == Vector{0, 0});
    Rng rng(1);
    for (int t = 0; t < 100; ++t) {
        const Vector u = oracle::random_vector(rng, 6), v = oracle::random_vector(rng, 6);
        CHECK(soft_shrink(u, 0.0) == u);
        const double lambda = rng.uniform(0, 2);
        CHECK(distance(soft_shrink(u, lambda), soft_shrink(v, lambda)) <= distance(u, v) + 1e-15);
    }
}

TEST_CASE("f and its conjugate") {
    CHECK(f_value(Vector{0, 0}, 1.0) == 0.0);
    CHECK(conjugate_value(Vector{0}, 1.0) == 0.0);
    CHECK(f_value(Vector{1, -2}, 1.0) == 5.5);
    CHECK(conjugate_value(Vector{3}, 1.0) == 2.0);

    // grid maximization of y z - f(z) over z in [-10, 10]
    for (double y : {3.0, -0.4, 1.7, -6.2}) {
        double best = -1e300;
        for (long i = -100000; i <= 100000; ++i) {
            const double z = i * 1e-4;
            best = std::max(best, y * z - (std::abs(z) + 0.5 * z * z));
        }
        CHECK(conjugate_value(Vector{y}, 1.0) == doctest::Approx(best).epsilon(1e-7));
    }
}

TEST_CASE("Fenchel identity on random pairs") {
    Rng rng(17);
    for (int t = 0; t < 1000; ++t) {
        const double lambda = rng.uniform(0, 2);
        const auto p = random_pair(rng, 1 + rng.uniform_index(10), lambda);
        CHECK(is_valid_pair(p.x, p.x_star, lambda));
        CHECK(std::abs(f_value(p.x, lambda) + conjugate_value(p.x_star, lambda) - dot(p.x, p.x_star)) <= 1e-10);
    }
}

TEST_CASE("bregman_distance") {
    Rng rng(23);
    const auto p = random_pair(rng, 5, 0.7);
    CHECK(bregman_distance(p, p.x, 0.7) == doctest::Approx(0.0));

    const auto e = random_pair(rng, 5, 0.0);
    const Vector y = oracle::random_vector(rng, 5);
    CHECK(bregman_distance(e, y, 0.0) == doctest::Approx(0.5 * distance(e.x, y) * distance(e.x, y)).epsilon(1e-12));

    DualPrimalPair broken = p;
    broken.x_star[0] += 5.0;
    CHECK_THROWS_AS(bregman_distance(broken, y, 0.7), Error);

    for (int t = 0; t < 1000; ++t) {
        const double lambda = rng.uniform(0, 2);
        const std::size_t n = 1 + rng.uniform_index(8);
        const auto pair = random_pair(rng, n, lambda);
        Vector yy = oracle::random_vector(rng, n);
        for (std::size_t j = 0; j < n; ++j)
            if (rng.uniform01() < 0.3) yy[j] = 0.0;
        const double d = bregman_distance(pair, yy, lambda);

        // closed form: 1/2 ||y - x||^2 + lambda (||y||_1 - <s, y>) with x* = x + lambda s
        double closed = 0.5 * distance(yy, pair.x) * distance(yy, pair.x);
        if (lambda > 0.0) {
            double s_dot_y = 0.0;
            for (std::size_t j = 0; j < n; ++j) s_dot_y += (pair.x_star[j] - pair.x[j]) / lambda * yy[j];
            closed += lambda * (norm1(yy) - s_dot_y);
        }
        CHECK(std::abs(d - closed) <= 1e-10 * (1.0 + closed));

        // sandwich with y* = y + lambda sign(y) (0 where y = 0)
        Vector ys(n);
        for (std::size_t j = 0; j < n; ++j) ys[j] = yy[j] + lambda * ((yy[j] > 0) - (yy[j] < 0));
        const double dist = distance(pair.x, yy);
        CHECK(0.5 * dist * dist <= d + 1e-10);
        CHECK(d <= distance(pair.x_star, ys) * dist + 1e-10);
    }
}

TEST_CASE("exact_step") {
    SUBCASE("quadratic case is the inexact step") {
        Rng rng(4);
        for (int t = 0; t < 50; ++t) {
            Vector a = oracle::random_vector(rng, 5);
            const double na = norm2(a);
            for (double& v : a) v /= na;
            const Vector xs = oracle::random_vector(rng, 5);
            const double b = rng.normal();
            CHECK(exact_step(xs, a, b, 0.0) == doctest::Approx(dot(a, xs) - b).epsilon(1e-12));
        }
    }
    SUBCASE("one-dimensional hand example") {
        CHECK(exact_step(Vector{0}, Vector{1}, 2.0, 1.0) == -3.0);
        const auto z = bregman_project_hyperplane(DualPrimalPair::zeros(1), Vector{1}, 2.0, 1.0);
        CHECK(z.x_star == Vector{3});
        CHECK(z.x == Vector{2});
    }
    SUBCASE("zero direction") {
        CHECK_THROWS_AS(exact_step(Vector{1, 2}, Vector{0, 0}, 1.0, 1.0), Error);
    }
    SUBCASE("agrees with bisection and brackets the root") {
        Rng rng(31);
        for (int t = 0; t < 1000; ++t) {
            const std::size_t n = 1 + rng.uniform_index(12);
            const double lambda = rng.uniform(0, 2);
            const Vector xs = oracle::random_vector(rng, n, 2.0);
            Vector a = oracle::random_vector(rng, n);
            if (n > 2 && rng.uniform01() < 0.3) a[0] = 0.0;
            const double b = 3.0 * rng.normal();
            const double t_hat = exact_step(xs, a, b, lambda);
            const double t_bis = oracle::bisect_step(xs, a, b, lambda);
            // g can be flat at the root only when b = 0 and the whole row is shrunk
            const double g_hat = oracle::g_line(xs, a, b, lambda, t_hat);
            CHECK(std::abs(g_hat) <= 1e-10 * (1.0 + std::abs(b)));
            if (b != 0.0) CHECK(std::abs(t_hat - t_bis) <= 1e-10 * (1.0 + std::abs(t_bis)));
            const double eps = 1e-8 * (1.0 + std::abs(t_hat));
            CHECK(oracle::g_line(xs, a, b, lambda, t_hat - eps) >= -1e-12);
            CHECK(oracle::g_line(xs, a, b, lambda, t_hat + eps) <= 1e-12);

            // hyperplane membership after the projection
            const auto z = bregman_project_hyperplane(DualPrimalPair::from_dual(xs, lambda), a, b, lambda);
            CHECK(std::abs(dot(a, z.x) - b) <= 1e-9 * (1.0 + std::abs(b)));
        }
    }
}

TEST_CASE("hyperplane projection: fixed points and descent") {
    Rng rng(41);
    const double lambda = 0.8;
    auto p = random_pair(rng, 4, lambda);
    const Vector a = oracle::random_vector(rng, 4);
    const double b_on = dot(a, p.x);
    const auto same = bregman_project_hyperplane(p, a, b_on, lambda);
    CHECK(distance(same.x, p.x) <= 1e-12);
    CHECK(distance(same.x_star, p.x_star) <= 1e-12);

    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng.uniform_index(6);
        const double lam = rng.uniform(0, 1.5);
        const auto pair = random_pair(rng, n, lam);
        const Vector row = oracle::random_vector(rng, n);
        const double b = rng.normal();
        const auto z = bregman_project_hyperplane(pair, row, b, lam);
        const double r = dot(row, pair.x) - b, na2 = dot(row, row);
        for (int k = 0; k < 100; ++k) {
            Vector y = oracle::random_vector(rng, n);
            const double off = (dot(row, y) - b) / na2;
            for (std::size_t j = 0; j < n; ++j) y[j] -= off * row[j];
            CHECK(bregman_distance(z, y, lam) <= bregman_distance(pair, y, lam) - 0.5 * r * r / na2 + 1e-9);
        }
    }
}
