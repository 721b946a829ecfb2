#include <doctest.h>

#include <cmath>

#include "bdsde/quadrature.hpp"
#include "bdsde/stats.hpp"
#include "bdsde/weighted_space.hpp"

using namespace bdsde;

TEST_CASE("weight evaluation") {
    WeightedSpace s1(1, 4.0, 2.5);
    double x0 = 0.0;
    CHECK(s1.weight({&x0, 1}) == doctest::Approx(1.0));
    double x1 = 1.0;
    CHECK(s1.weight({&x1, 1}) == doctest::Approx(16.0));

    WeightedSpace s5(1, 5.0, 3.0);
    double xm = -1.0;
    CHECK(s5.weight({&xm, 1}) == doctest::Approx(32.0));
}

TEST_CASE("normalizer matches the closed form") {
    // d=1: Z = 2/(q-1); d=2: Z = 2 pi / ((q-1)(q-2))
    WeightedSpace s1(1, 4.0, 2.5);
    CHECK(s1.normalizer() == doctest::Approx(2.0 / 3.0).epsilon(1e-7));
    WeightedSpace s2(2, 5.0, 2.5);
    CHECK(s2.normalizer() == doctest::Approx(2.0 * M_PI / 12.0).epsilon(1e-7));
}

TEST_CASE("moment integral is finite and quadrature-stable") {
    // int |x|^3 (1+|x|)^{-5} dx at two quadrature resolutions
    const auto f = [](double x) { return std::pow(std::abs(x), 3.0) * std::pow(1.0 + std::abs(x), -5.0); };
    const double coarse = adaptive_simpson(f, -200.0, 200.0, 1e-6);
    const double fine = adaptive_simpson(f, -200.0, 200.0, 1e-10);
    CHECK(std::isfinite(coarse));
    CHECK(coarse == doctest::Approx(fine).epsilon(1e-4));
}

TEST_CASE("space parameter validation") {
    CHECK_THROWS_AS(WeightedSpace(1, 2.5, 2.2), std::invalid_argument);  // q <= 3
    CHECK_THROWS_AS(WeightedSpace(1, 4.0, 1.5), std::invalid_argument);  // p <= 2
    CHECK_THROWS_AS(WeightedSpace(1, 4.0, 3.5), std::invalid_argument);  // p >= q-1
    CHECK_THROWS_AS(WeightedSpace(3, 5.0, 2.5), std::runtime_error);     // d > 2
}

TEST_CASE("reference cloud sampling") {
    WeightedSpace space(1, 4.0, 2.5);
    const std::size_t m = 100000;
    auto cloud = sample_reference_cloud(m, space, 7);

    SUBCASE("determinism") {
        auto again = sample_reference_cloud(m, space, 7);
        CHECK(cloud.points == again.points);
        auto other = sample_reference_cloud(m, space, 8);
        CHECK(cloud.points != other.points);
    }

    SUBCASE("mean is near zero by symmetry") {
        auto s = summarize(cloud.points);
        CHECK(std::abs(s.mean) <= 3.0 * s.std_error);
    }

    SUBCASE("tail fraction matches the quadrature oracle") {
        // P(|x| > 2) = (1+2)^{1-q} = 3^{-3}
        const double oracle = std::pow(3.0, -3.0);
        double frac = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (std::abs(cloud.points[i]) > 2.0) frac += 1.0;
        }
        frac /= static_cast<double>(m);
        const double se = std::sqrt(oracle * (1.0 - oracle) / static_cast<double>(m));
        CHECK(std::abs(frac - oracle) <= 3.0 * se);
    }

    SUBCASE("weights sum to one") {
        double w = 0.0;
        for (double v : cloud.weights) w += v;
        CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("cloud sampling in two dimensions") {
    WeightedSpace space(2, 5.0, 2.5);
    auto cloud = sample_reference_cloud(20000, space, 11);
    // radial tail: P(|X| > r) = (q-1)(1+r)^{2-q} - (q-2)(1+r)^{1-q}
    const double q = 5.0, r = 1.5;
    const double oracle = (q - 1.0) * std::pow(1.0 + r, 2.0 - q) -
                          (q - 2.0) * std::pow(1.0 + r, 1.0 - q);
    double frac = 0.0;
    for (std::size_t i = 0; i < cloud.size; ++i) {
        auto p = cloud.point(i);
        if (std::hypot(p[0], p[1]) > r) frac += 1.0;
    }
    frac /= static_cast<double>(cloud.size);
    const double se = std::sqrt(oracle * (1.0 - oracle) / static_cast<double>(cloud.size));
    CHECK(std::abs(frac - oracle) <= 3.5 * se);
}

TEST_CASE("weighted L2 norm") {
    WeightedSpace space(1, 5.0, 3.0);
    auto cloud = sample_reference_cloud(100000, space, 3);

    SUBCASE("zero and constant fields") {
        std::vector<double> zero(cloud.size, 0.0);
        CHECK(weighted_l2_norm(zero, cloud, space) == 0.0);
        std::vector<double> c(cloud.size, -2.5);
        CHECK(weighted_l2_norm(c, cloud, space) ==
              doctest::Approx(2.5 * std::sqrt(space.normalizer())).epsilon(1e-12));
    }

    SUBCASE("length mismatch throws") {
        std::vector<double> bad(cloud.size - 1, 0.0);
        CHECK_THROWS_AS(weighted_l2_norm(bad, cloud, space), std::invalid_argument);
    }

    SUBCASE("identity field matches the quadrature oracle") {
        const double oracle = std::sqrt(integrate_real_line(
            [](double x) { return x * x * std::pow(1.0 + std::abs(x), -5.0); }, 1e-10));
        std::vector<double> field(cloud.points);
        const double est = weighted_l2_norm(field, cloud, space);
        // moment-based standard error of the squared estimate
        double m4 = 0.0, m2 = 0.0;
        for (double v : field) {
            m2 += v * v;
            m4 += v * v * v * v;
        }
        m2 /= static_cast<double>(cloud.size);
        m4 /= static_cast<double>(cloud.size);
        const double se_sq = space.normalizer() *
                             std::sqrt((m4 - m2 * m2) / static_cast<double>(cloud.size));
        const double se = se_sq / (2.0 * est);
        CHECK(std::abs(est - oracle) <= 3.0 * se);
    }

    SUBCASE("absolute homogeneity") {
        std::vector<double> field(cloud.points);
        const double base = weighted_l2_norm(field, cloud, space);
        for (auto& v : field) v *= -3.0;
        CHECK(weighted_l2_norm(field, cloud, space) == doctest::Approx(3.0 * base).epsilon(1e-13));
    }
}

TEST_CASE("triangle inequality on random field pairs") {
    WeightedSpace space(1, 4.0, 2.5);
    auto cloud = sample_reference_cloud(2000, space, 5);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> a(cloud.size), b(cloud.size), sum(cloud.size);
        for (std::size_t i = 0; i < cloud.size; ++i) {
            a[i] = std::sin(0.1 * (rep + 1) * cloud.points[i]) + 0.01 * rep;
            b[i] = std::cos(0.05 * (rep + 2) * cloud.points[i]) * cloud.points[i];
            sum[i] = a[i] + b[i];
        }
        CHECK(weighted_l2_norm(sum, cloud, space) <=
              weighted_l2_norm(a, cloud, space) + weighted_l2_norm(b, cloud, space) + 1e-12);
    }
}

TEST_CASE("Monte Carlo norm converges at the square-root rate") {
    WeightedSpace space(1, 5.0, 3.0);
    const double truth = std::sqrt(integrate_real_line(
        [](double x) { return std::exp(-x * x) * std::pow(1.0 + std::abs(x), -5.0); }, 1e-10));
    std::vector<double> logm, logerr;
    for (std::size_t m : {1000ul, 10000ul, 100000ul}) {
        // average the error over a few independent clouds to steady the slope
        double err = 0.0;
        const int reps = 8;
        for (int r = 0; r < reps; ++r) {
            auto cloud = sample_reference_cloud(m, space, 50 + static_cast<std::uint64_t>(r));
            std::vector<double> field(cloud.size);
            for (std::size_t i = 0; i < cloud.size; ++i) {
                field[i] = std::exp(-0.5 * cloud.points[i] * cloud.points[i]);
            }
            err += std::abs(weighted_l2_norm(field, cloud, space) - truth);
        }
        logm.push_back(std::log(static_cast<double>(m)));
        logerr.push_back(std::log(err / reps));
    }
    const double slope = fit_line(logm, logerr).slope;
    CHECK(slope >= -0.65);
    CHECK(slope <= -0.35);
}

TEST_CASE("discounted process norms") {
    WeightedSpace space(1, 4.0, 2.5);
    auto cloud = sample_reference_cloud(400, space, 9);
    const double K = 0.7, T = 2.0, dt = 0.01;
    std::vector<double> grid;
    for (double t = 0.0; t <= T + 1e-12; t += dt) grid.push_back(t);
    DiscountedNormSpec spec(K, grid);

    SUBCASE("zero process") {
        std::vector<std::vector<double>> zero(grid.size(),
                                              std::vector<double>(cloud.size, 0.0));
        CHECK(discounted_l2_process_norm(zero, spec, cloud, space).value == 0.0);
        CHECK(discounted_sup_norm(zero, spec, cloud, space) == 0.0);
    }

    SUBCASE("constant process matches the closed form") {
        const double c = 1.5;
        std::vector<std::vector<double>> proc(grid.size(),
                                              std::vector<double>(cloud.size, c));
        const double expected = c * c * space.normalizer() * (1.0 - std::exp(-K * T)) / K;
        const auto got = discounted_l2_process_norm(proc, spec, cloud, space);
        CHECK(got.value == doctest::Approx(expected).epsilon(2e-4));  // trapezoid O(dt^2)
        CHECK_FALSE(got.diverging);
        // sup attained at s = 0
        CHECK(discounted_sup_norm(proc, spec, cloud, space) ==
              doctest::Approx(c * c * space.normalizer()).epsilon(1e-12));
    }

    SUBCASE("growing process raises the divergence flag") {
        std::vector<std::vector<double>> proc(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) {
            proc[k].assign(cloud.size, std::exp(0.5 * K * grid[k]));
        }
        const auto got = discounted_l2_process_norm(proc, spec, cloud, space);
        CHECK(got.diverging);
        // integrand is constant, so the integral grows linearly in T
        CHECK(got.value == doctest::Approx(space.normalizer() * T).epsilon(1e-6));
        // monotone growing discounted sup equals the start value
        CHECK(discounted_sup_norm(proc, spec, cloud, space) ==
              doctest::Approx(space.normalizer()).epsilon(1e-12));
    }

    SUBCASE("grid validation") {
        CHECK_THROWS_AS(DiscountedNormSpec(0.0, {0.0, 1.0}), std::invalid_argument);
        CHECK_THROWS_AS(DiscountedNormSpec(1.0, {0.0, 0.0}), std::invalid_argument);
    }
}
