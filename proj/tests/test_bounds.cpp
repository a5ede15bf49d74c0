#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "swsynth/bounds.hpp"

using namespace swsynth;

namespace {

GaussianProcess random_gp(std::mt19937_64& rng, int m, const Kernel& k) {
    std::uniform_real_distribution<double> u(-1, 2);
    Eigen::MatrixXd x(m, 2);
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) {
        x(i, 0) = u(rng);
        x(i, 1) = u(rng);
        y[i] = std::sin(2 * x(i, 0)) * std::cos(x(i, 1)) + 0.3 * u(rng);
    }
    return GaussianProcess::fit(x, y, k);
}

Box random_box(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1, 1.5), w(0, 0.6);
    const double a = u(rng), b = u(rng);
    return Box({a, b}, {a + w(rng), b + w(rng)});
}

}  // namespace

TEST_CASE("degenerate box collapses the mean interval") {
    std::mt19937_64 rng(1);
    const auto gp = random_gp(rng, 30, Kernel{1.0, {0.5}});
    const Vector x{0.3, 0.4};
    const Interval r = mean_range_over_box(gp, Box(x, x));
    CHECK(r.lo == doctest::Approx(gp.mean(x)).epsilon(1e-12));
    CHECK(r.hi == doctest::Approx(gp.mean(x)).epsilon(1e-12));
}

TEST_CASE("empty posterior gives prior bounds") {
    const GaussianProcess gp(Kernel{2.0, {1.0}}, 2);
    const Box q({0, 0}, {1, 1});
    const Interval r = mean_range_over_box(gp, q);
    CHECK(r.lo == 0.0);
    CHECK(r.hi == 0.0);
    CHECK(sigma_sup_over_box(gp, q) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("sampled posterior values stay inside the bounds") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u01(0, 1);
    long violations = 0, checks = 0;
    for (int model = 0; model < 10; ++model) {
        const Kernel k{0.5 + 2 * u01(rng), {0.3 + u01(rng)}};
        const auto gp = random_gp(rng, 40, k);
        for (LambdaMaxMode lm : {LambdaMaxMode::row_sum, LambdaMaxMode::exact}) {
            const PosteriorBounder pb(gp, {2, lm});
            for (int b = 0; b < 10; ++b) {
                const Box q = random_box(rng);
                const Interval r = pb.mean_range(q);
                const double s = pb.sigma_sup(q);
                for (int t = 0; t < 500; ++t) {
                    const Vector x{q.lower(0) + u01(rng) * q.width(0), q.lower(1) + u01(rng) * q.width(1)};
                    const double mu = gp.mean(x);
                    violations += (mu < r.lo - 1e-12) + (mu > r.hi + 1e-12);
                    violations += std::sqrt(gp.variance(x)) > s + 1e-12;
                    ++checks;
                }
            }
        }
    }
    CHECK(checks == 100000);
    CHECK(violations == 0);
}

TEST_CASE("sigma bound at a training input is at least the exact value") {
    std::mt19937_64 rng(9);
    const auto gp = random_gp(rng, 200, Kernel{1.0, {0.6}});
    for (int i = 0; i < 20; ++i) {
        const Vector x{gp.inputs()(i, 0), gp.inputs()(i, 1)};
        CHECK(sigma_sup_over_box(gp, Box(x, x)) >= std::sqrt(gp.variance(x)) - 1e-12);
    }
}

TEST_CASE("refinement never widens and sub-boxes give sub-intervals") {
    std::mt19937_64 rng(3);
    const auto gp = random_gp(rng, 50, Kernel{1.0, {0.4}});
    for (int b = 0; b < 50; ++b) {
        const Box q = random_box(rng);
        Interval prev{-1e300, 1e300};
        double prev_s = 1e300;
        for (int depth = 0; depth <= 4; ++depth) {
            const PosteriorBounder pb(gp, {depth, LambdaMaxMode::row_sum});
            const Interval r = pb.mean_range(q);
            const double s = pb.sigma_sup(q);
            CHECK(r.lo >= prev.lo);
            CHECK(r.hi <= prev.hi);
            CHECK(s <= prev_s);
            prev = r;
            prev_s = s;
        }
        const PosteriorBounder pb(gp, {});
        const Box sub({q.lower(0), q.lower(1)}, {q.lower(0) + 0.5 * q.width(0), q.upper(1)});
        const Interval r = pb.kernel_interval(q), rs = pb.kernel_interval(sub);
        CHECK(rs.lo >= r.lo);
        CHECK(rs.hi <= r.hi);
    }
}

TEST_CASE("exact lambda_max never exceeds the row-sum bound") {
    std::mt19937_64 rng(4);
    const auto gp = random_gp(rng, 60, Kernel{1.0, {0.5}});
    CHECK(gram_lambda_max(gp, LambdaMaxMode::exact) <= gram_lambda_max(gp, LambdaMaxMode::row_sum));
}

TEST_CASE("image of a cell under a linear mode") {
    Eigen::MatrixXd a1(2, 2);
    a1 << 0.4, 0.1, 0.0, 0.5;
    const KnownMap f = KnownMap::linear(a1);
    LearnedMode zero_fit;
    zero_fit.theta = 0.01;
    for (int i = 0; i < 2; ++i) zero_fit.outputs.push_back({GaussianProcess(Kernel{}, 2)});
    const Box q({0, 0}, {0.125, 0.125});
    const Box im = image(q, f, zero_fit);
    CHECK(im.lower(0) == 0.0);
    CHECK(im.lower(1) == 0.0);
    CHECK(im.upper(0) == doctest::Approx(0.0625));
    CHECK(im.upper(1) == doctest::Approx(0.0625));

    const Box g = image(q, KnownMap::zero(2), zero_fit);
    CHECK(g == Box({0, 0}, {0, 0}));
}

TEST_CASE("bounds stay sound with large signal variance and length scale") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u01(0, 1), ux(-2, 2);
    long violations = 0;
    for (double s2 : {100.0, 1000.0}) {
        Eigen::MatrixXd x(200, 2);
        Eigen::VectorXd y(200);
        for (int i = 0; i < 200; ++i) {
            x(i, 0) = ux(rng);
            x(i, 1) = ux(rng);
            y[i] = 0.4 * x(i, 0) + 0.5 * x(i, 1) + 0.01 * (u01(rng) - 0.5);
        }
        const auto gp = GaussianProcess::fit(x, y, Kernel{s2, {3.0}});
        const PosteriorBounder pb(gp, {});
        for (int b = 0; b < 100; ++b) {
            const double a = ux(rng), c = ux(rng);
            const Box q({a, c}, {a + 0.125, c + 0.125});
            const Interval r = pb.mean_range(q);
            const double s = pb.sigma_sup(q);
            CHECK(r.hi - r.lo < 0.2);
            for (int t = 0; t < 200; ++t) {
                const Vector p{a + u01(rng) * 0.125, c + u01(rng) * 0.125};
                const double mu = gp.mean(p);
                violations += (mu < r.lo) + (mu > r.hi) + (std::sqrt(gp.variance(p)) > s);
            }
        }
    }
    CHECK(violations == 0);
}
