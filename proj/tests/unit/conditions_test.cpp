#include <doctest.h>

#include <cmath>

#include "bdsde/bank.hpp"
#include "bdsde/conditions.hpp"

using namespace bdsde;

namespace {

BDSDEProblem base_problem() {
    return make_bank_problem("monotone_ode");  // f = -y + 1
}

}  // namespace

TEST_CASE("finite validator on the bank problems") {
    WeightedSpace space(1, 4.0, 2.5);
    for (const auto& entry : bank_entries()) {
        auto problem = make_bank_problem(entry.id);
        auto rep = validate_conditions_finite(problem, space);
        INFO("problem ", entry.id);
        CHECK(rep.all_hard_checks_pass);
    }
}

TEST_CASE("monotonicity probe accepts f = -y with margin -1") {
    WeightedSpace space(1, 4.0, 2.5);
    auto problem = base_problem();
    auto rep = validate_conditions_finite(problem, space);
    CHECK(rep.passed("H.5"));
}

TEST_CASE("alpha sum at or above one half fails the noise condition") {
    WeightedSpace space(1, 4.0, 2.5);
    auto problem = base_problem();
    problem.z_gain = {0.4, 0.2};
    problem.y_lipschitz = {0.0, 0.0};
    problem.x_gain = {0.0, 0.0};
    problem.noise_g.push_back(problem.noise_g[0]);
    problem.noise.modes = 2;
    problem.noise.lambdas = {1.0, 1.0};
    auto rep = validate_conditions_finite(problem, space);
    CHECK_FALSE(rep.passed("H.2"));
    CHECK(rep.find("H.2")->value == doctest::Approx(0.6));
    auto repi = validate_conditions_infinite(problem, space, 2.5, 0.1);
    CHECK_FALSE(repi.passed("A.1"));
}

TEST_CASE("cubic growth beats any linear bound") {
    WeightedSpace space(1, 4.0, 2.5);
    auto problem = base_problem();
    problem.drift_f = [](double, std::span<const double>, double y, std::span<const double>) {
        return y * y * y;
    };
    problem.growth_bound = 50.0;
    ProbeSettings probe;
    probe.range = 10.0;  // |f| = 1000 at |y| = 10 exceeds 50 * 11
    auto rep = validate_conditions_finite(problem, space, probe);
    CHECK_FALSE(rep.passed("H.4"));
    CHECK_FALSE(rep.passed("H.5"));  // cubic is also anti-monotone
}

TEST_CASE("infinite-horizon margins") {
    WeightedSpace space(1, 4.0, 2.5);

    SUBCASE("comfortable margin passes") {
        auto problem = base_problem();
        problem.monotonicity = -2.0;  // mu = 2
        problem.drift_f = [](double, std::span<const double>, double y,
                             std::span<const double>) { return -2.0 * y; };
        problem.growth_bound = 2.0;
        auto rep = validate_conditions_infinite(problem, space, 2.5, 0.1);
        CHECK(rep.passed("A.4"));
        CHECK(rep.find("A.4")->value == doctest::Approx(2.0 * 2.0 - 2.5 * 0.1));
        CHECK(rep.passed("A.6"));
        CHECK(rep.find("A.6")->value == doctest::Approx(0.1));
    }

    SUBCASE("weak monotonicity against a large discount fails") {
        auto problem = base_problem();
        problem.monotonicity = -0.1;
        problem.drift_f = [](double, std::span<const double>, double y,
                             std::span<const double>) { return -0.1 * y; };
        auto rep = validate_conditions_infinite(problem, space, 3.0, 1.0);
        CHECK_FALSE(rep.passed("A.4"));
        CHECK(rep.find("A.4")->value == doctest::Approx(0.2 - 3.0));
    }

    SUBCASE("coefficient Lipschitz margin") {
        auto problem = base_problem();
        problem.diffusion.lipschitz = 0.2;
        // K - pL - p(p-1)/2 L^2 at p = 2.5, K = 0.1: 0.1 - 0.5 - 0.075 < 0
        auto rep = validate_conditions_infinite(problem, space, 2.5, 0.1);
        CHECK_FALSE(rep.passed("A.6"));
    }
}

TEST_CASE("default discount rate honors both margins with headroom") {
    auto problem = make_bank_problem("ou_additive");
    const double p = 2.5;
    const double k = default_discount_rate(problem, p);
    // admissible interval is (0, 2 mu / p) = (0, 0.8); 10% headroom
    CHECK(k == doctest::Approx(0.08).epsilon(1e-6));

    auto lip = problem;
    lip.diffusion.lipschitz = 0.1;
    const double k2 = default_discount_rate(lip, p);
    const double lo = p * 0.1 + 0.5 * p * (p - 1.0) * 0.01;
    CHECK(k2 == doctest::Approx(lo + 0.1 * (0.8 - lo)).epsilon(1e-5));

    auto bad = problem;
    bad.monotonicity = 0.0;  // no strict margin available
    CHECK_THROWS_AS(default_discount_rate(bad, p), std::runtime_error);
}

TEST_CASE("validator fixture table classifies twelve configurations") {
    WeightedSpace space(1, 4.0, 2.5);
    struct Fixture {
        const char* name;
        bool expect_pass;
        bool infinite;
        std::function<BDSDEProblem()> build;
        double p = 2.5;
        double K = 0.1;
    };
    auto monotone = [](double mu, double growth) {
        auto pb = make_bank_problem("monotone_ode", {{"mu", mu}});
        pb.growth_bound = std::max(growth, std::abs(pb.growth_bound));
        return pb;
    };
    const std::vector<Fixture> fixtures = {
        {"pass/finite-ode", true, false, [&] { return monotone(1.0, 1.0); }},
        {"pass/finite-linear-g", true, false, [] { return make_bank_problem("linear_g"); }},
        {"pass/finite-heat", true, false, [] { return make_bank_problem("heat_bump"); }},
        {"pass/infinite-ou", true, true, [] { return make_bank_problem("ou_additive"); }},
        {"pass/infinite-strong-mu", true, true, [&] { return monotone(2.0, 2.0); }},
        {"pass/infinite-gy", true, true,
         [] {
             auto pb = make_bank_problem("linear_gy");
             return pb;
         }},
        {"fail/H2-alpha-sum", false, false,
         [] {
             auto pb = make_bank_problem("linear_g", {{"az", 0.6}});
             return pb;
         }},
        {"fail/H4-growth", false, false,
         [] {
             auto pb = make_bank_problem("monotone_ode");
             pb.drift_f = [](double, std::span<const double>, double y,
                             std::span<const double>) { return y * y * y; };
             return pb;
         }},
        {"fail/H5-antimonotone", false, false,
         [] {
             auto pb = make_bank_problem("monotone_ode");
             pb.drift_f = [](double, std::span<const double>, double y,
                             std::span<const double>) { return +2.0 * y; };
             pb.growth_bound = 2.0;
             return pb;
         }},
        {"fail/A4-margin", false, true,
         [&] { return monotone(0.1, 1.0); }, 3.0, 1.0},
        {"fail/A4-sign", false, true,
         [] {
             auto pb = make_bank_problem("monotone_ode", {{"mu", -0.5}});
             pb.growth_bound = 1.5;
             return pb;
         }},
        {"fail/A6-lipschitz", false, true,
         [] {
             auto pb = make_bank_problem("ou_additive");
             pb.diffusion.lipschitz = 0.2;
             pb.diffusion.drift = [](std::span<const double> x, std::span<double> out) {
                 for (std::size_t c = 0; c < out.size(); ++c) out[c] = -0.2 * x[c];
             };
             return pb;
         },
         2.5, 0.1},
    };
    int misclassified = 0;
    for (const auto& fx : fixtures) {
        auto problem = fx.build();
        const auto rep = fx.infinite
                             ? validate_conditions_infinite(problem, space, fx.p, fx.K)
                             : validate_conditions_finite(problem, space);
        INFO(fx.name);
        if (rep.all_hard_checks_pass != fx.expect_pass) ++misclassified;
        CHECK(rep.all_hard_checks_pass == fx.expect_pass);
    }
    CHECK(misclassified == 0);
}
