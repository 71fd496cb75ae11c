#include <doctest.h>

#include <cmath>
#include <string>

#include "membrane_pme/errors.hpp"
#include "membrane_pme/model.hpp"

using namespace membrane_pme;

namespace {

ModelParams params_with(double gamma) {
    ModelParams p;
    p.gamma = gamma;
    return p;
}

}  // namespace

TEST_CASE("pressure") {
    const ModelParams p2 = params_with(2.0);
    CHECK(pressure(0.0, p2) == 0.0);
    CHECK(pressure(0.5, p2) == doctest::Approx(0.25).epsilon(1e-15));

    ModelParams p = params_with(3.0);
    p.p_homeostatic = 2.5;
    CHECK(pressure(p.u_homeostatic(), p) == doctest::Approx(2.5).epsilon(1e-14));

    CHECK_THROWS_AS(pressure(-1e-3, p2), DomainError);
}

TEST_CASE("pi_of_u") {
    CHECK(pi_of_u(0.0, params_with(2.0)) == 0.0);
    CHECK(pi_of_u(1.0, params_with(1.0)) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(pi_of_u(-0.1, params_with(2.0)), DomainError);

    SUBCASE("central difference matches u p'(u)") {
        const ModelParams p = params_with(2.0);
        const double u = 0.7, h = 1e-6;
        const double fd = (pi_of_u(u + h, p) - pi_of_u(u - h, p)) / (2.0 * h);
        const double exact = u * p.gamma * std::pow(u, p.gamma - 1.0);
        CHECK(std::abs(fd - exact) / exact <= 1e-8);
    }

    SUBCASE("u_of_pi inverts pi_of_u") {
        for (double g : {1.0, 1.5, 2.0, 3.0}) {
            const ModelParams p = params_with(g);
            for (double u : {0.0, 0.1, 0.5, 1.0, 1.7}) CHECK(u_of_pi(pi_of_u(u, p), p) == doctest::Approx(u).epsilon(1e-13));
        }
    }
}

TEST_CASE("growth") {
    ModelParams p;
    p.g_max = 1.0;
    p.p_homeostatic = 1.0;
    CHECK(growth(0.0, p) == doctest::Approx(p.g_max));
    CHECK(growth(p.p_homeostatic, p) == doctest::Approx(0.0));
    CHECK(growth(0.5, p) == doctest::Approx(0.5));
    CHECK_THROWS_AS(growth(-0.5, p), DomainError);

    SUBCASE("table law") {
        ModelParams q;
        q.g_max = 2.0;
        q.p_homeostatic = 1.0;
        q.growth_law = GrowthLaw::table({0.0, 0.5, 1.0}, {2.0, 0.5, 0.0});
        CHECK_NOTHROW(q.validate());
        CHECK(growth(0.25, q) == doctest::Approx(1.25));
        CHECK(growth(1.0, q) == doctest::Approx(0.0));
    }

    SUBCASE("tables violating the growth assumptions are rejected") {
        CHECK_THROWS_AS(GrowthLaw::table({0.0, 0.5, 1.0}, {2.0, 2.0, 0.0}), ConfigError);  // not decreasing
        CHECK_THROWS_AS(GrowthLaw::table({0.1, 0.5, 1.0}, {2.0, 1.0, 0.0}), ConfigError);  // no p = 0 node
        CHECK_THROWS_AS(GrowthLaw::table({0.0, 1.0, 0.5}, {2.0, 1.0, 0.0}), ConfigError);

        ModelParams q;
        q.g_max = 1.0;
        q.p_homeostatic = 1.0;
        q.growth_law = GrowthLaw::table({0.0, 1.0}, {2.0, 0.0});  // G(0) != G_M
        CHECK_THROWS_AS(q.validate(), ConfigError);
        q.growth_law = GrowthLaw::table({0.0, 2.0}, {1.0, 0.5});  // G(p_H) != 0
        CHECK_THROWS_AS(q.validate(), ConfigError);
    }
}

TEST_CASE("realize_mobilities") {
    ModelParams p;
    p.mu1 = 1.5;
    p.mu3 = 0.7;
    p.mu13 = 2.0;
    const auto a = realize_mobilities(p, 0.1);
    CHECK(a.mu2_eps == doctest::Approx(0.2).epsilon(1e-15));
    const auto b = realize_mobilities(p, 0.05);
    CHECK(b.mu2_eps == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(a.mu2_eps / a.epsilon == doctest::Approx(b.mu2_eps / b.epsilon).epsilon(1e-15));
    for (double eps : {0.4, 0.1, 1e-3}) {
        const auto r = realize_mobilities(p, eps);
        CHECK(r.mu1_eps == 1.5);
        CHECK(r.mu3_eps == 0.7);
    }
    CHECK_THROWS_AS(realize_mobilities(p, 0.0), DomainError);
    CHECK_THROWS_AS(realize_mobilities(p, -0.1), DomainError);
}

TEST_CASE("ModelParams validation names the field") {
    ModelParams p;
    p.gamma = 0.5;
    try {
        p.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.path() == "model.gamma");
        CHECK(std::string(e.what()).find("gamma >= 1") != std::string::npos);
    }
    for (auto field : {&ModelParams::p_homeostatic, &ModelParams::g_max, &ModelParams::mu1, &ModelParams::mu3,
                       &ModelParams::mu13}) {
        ModelParams q;
        q.*field = 0.0;
        CHECK_THROWS_AS(q.validate(), ConfigError);
    }
    ModelParams ok;
    CHECK_NOTHROW(ok.validate());
    CHECK(ok.u_homeostatic() == doctest::Approx(1.0));

    ModelParams g1;
    g1.gamma = 1.0;
    CHECK_NOTHROW(g1.validate());
    CHECK_FALSE(g1.energy_check_enabled());
}

TEST_CASE("constant growth law is test-only") {
    ModelParams p;
    p.g_max = 0.0;
    p.growth_law = GrowthLaw::constant_for_testing(0.0);
    CHECK(p.growth_law.is_test_only());
    CHECK_NOTHROW(p.validate());
    CHECK(growth(0.3, p) == 0.0);
}

TEST_CASE("properties over the admissible range") {
    for (double g : {1.0, 1.5, 2.0, 3.0}) {
        ModelParams p;
        p.gamma = g;
        p.p_homeostatic = 2.0;
        const double u_h = p.u_homeostatic();
        double prev_p = -1.0, prev_pi = -1.0, prev_slope = -1.0, prev_g = 1e300;
        for (int i = 0; i <= 200; ++i) {
            const double u = u_h * i / 200.0;
            const double pr = pressure(u, p);
            CHECK(pr >= 0.0);
            CHECK(pr <= p.p_homeostatic * (1.0 + 1e-14));
            CHECK(pr > prev_p);
            const double pi = pi_of_u(u, p);
            CHECK(pi > prev_pi);
            if (i > 0) {
                const double slope = (pi - prev_pi) / (u_h / 200.0);
                CHECK(slope >= prev_slope);  // convexity
                prev_slope = slope;
            }
            const double gr = growth(pr, p);
            CHECK(gr <= prev_g);
            if (pr < p.p_homeostatic * (1.0 - 1e-12)) CHECK(gr > 0.0);
            prev_p = pr;
            prev_pi = pi;
            prev_g = gr;
        }
        CHECK(pi_of_u(0.0, p) == 0.0);
    }
    ModelParams p;
    p.mu13 = 3.0;
    for (double a : {0.5, 2.0, 10.0}) {
        CHECK(realize_mobilities(p, a * 0.01).mu2_eps == doctest::Approx(a * realize_mobilities(p, 0.01).mu2_eps));
    }
}
