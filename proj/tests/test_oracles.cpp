#include <doctest.h>

#include <cmath>

#include "membrane_pme/bridge.hpp"
#include "membrane_pme/errors.hpp"
#include "membrane_pme/model.hpp"
#include "membrane_pme/oracles.hpp"
#include "membrane_pme/validation.hpp"

using namespace membrane_pme;

namespace {

// ∫ u(t, x) dx over the support via x = R sin θ, which removes the front singularity.
double mass_by_quadrature(const BarenblattProfile& b, double t) {
    const double r = b.support_radius(t);
    const int n = 200000;
    const double h = M_PI / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double th = -M_PI / 2 + (i + 0.5) * h;
        sum += b.value(t, r * std::sin(th)) * r * std::cos(th);
    }
    return sum * h;
}

// Outermost x with u > 0, located by bisection independent of support_radius.
double front_by_bisection(const BarenblattProfile& b, double t) {
    double lo = 0.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (b.value(t, mid) > 0.0 ? lo : hi) = mid;
    }
    return lo;
}

double l1_vs_profile(const Trajectory& tr, const BarenblattProfile& prof, double t0) {
    const Mesh& m = tr.mesh();
    const auto f = m.faces();
    const Field& fin = tr.final_state();
    double l1 = 0.0;
    for (std::size_t j = 0; j < m.num_cells(); ++j)
        l1 += std::abs(fin.u[j] - prof.cell_average(t0 + fin.t, f[j], f[j + 1])) * (f[j + 1] - f[j]);
    return l1;
}

}  // namespace

TEST_CASE("Barenblatt: mass") {
    for (double g : {1.0, 2.0, 3.0}) {
        const BarenblattProfile b(0.5, g, 1.0, 0.01);
        for (double t : {0.01, 0.02, 0.04}) CHECK(std::abs(mass_by_quadrature(b, t) - 0.5) <= 1e-6);
        const double r = b.support_radius(0.02);
        CHECK(std::abs(b.cell_average(0.02, -r, r) * 2 * r - 0.5) <= 1e-6);
    }
}

TEST_CASE("Barenblatt: finite-difference PDE residual") {
    for (double g : {1.0, 2.0, 3.0}) {
        for (double mu : {1.0, 0.5}) {
            const BarenblattProfile b(0.5, g, mu, 0.01);
            const double kappa = g * mu / (g + 1.0);
            const double hx = 1e-4, ht = 1e-6;
            auto w = [&](double t, double x) { return std::pow(b.value(t, x), g + 1.0); };
            for (double t : {0.02, 0.04}) {
                const double r = b.support_radius(t);
                for (double frac : {0.0, 0.2, 0.45, 0.7, 0.8}) {
                    const double x = frac * r;
                    const double dt = (b.value(t + ht, x) - b.value(t - ht, x)) / (2 * ht);
                    const double dxx = (w(t, x + hx) - 2 * w(t, x) + w(t, x - hx)) / (hx * hx);
                    CHECK(std::abs(dt - kappa * dxx) <= 1e-4 * std::max(1.0, std::abs(dt)));
                }
            }
        }
    }
}

TEST_CASE("Barenblatt: support growth, symmetry, domain") {
    const BarenblattProfile b(0.5, 2.0, 1.0, 0.01);
    const double r1 = front_by_bisection(b, 0.01), r4 = front_by_bisection(b, 0.04);
    const double slope = std::log(r4 / r1) / std::log(4.0);
    CHECK(std::abs(slope - b.alpha()) <= 0.02 * b.alpha());
    CHECK(b.alpha() == doctest::Approx(0.25));
    CHECK(b.support_radius(0.04) == doctest::Approx(r4).epsilon(1e-10));
    CHECK(b.value(0.02, 1.5 * b.support_radius(0.02)) == 0.0);

    double prev = b.value(0.03, 0.0);
    for (int i = 1; i <= 50; ++i) {
        const double x = 0.01 * i;
        CHECK(b.value(0.03, x) == b.value(0.03, -x));
        CHECK(b.value(0.03, x) <= prev);
        prev = b.value(0.03, x);
    }
    CHECK(barenblatt(0.02, 0.1, b) == b.value(0.02, 0.1));
    CHECK_THROWS_AS(barenblatt(0.005, 0.0, b), DomainError);
}

TEST_CASE("steady_two_region") {
    ModelParams p;
    p.gamma = 1.0;
    const SteadyTwoRegion s = steady_two_region(0.0, 2.0, p, 2.0);
    CHECK(s.pi_left_bc == 0.0);
    CHECK(s.pi_right_bc == doctest::Approx(2.0));
    CHECK(s.flux == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(s.pi_zero_left == doctest::Approx(2.0 / 3.0));
    CHECK(s.pi_zero_right == doctest::Approx(4.0 / 3.0));
    CHECK(s.pi_zero_right - s.pi_zero_left == doctest::Approx(s.flux / p.mu13));
    CHECK(s.u_at(1.0) == doctest::Approx(2.0));
    CHECK(s.u_at(-1.0) == doctest::Approx(0.0));
    CHECK(pi_of_u(s.u_at(-0.5), p) == doctest::Approx(s.pi_at(-0.5)));

    const SteadyTwoRegion c = steady_two_region(0.7, 0.7, p, 2.0);
    CHECK(c.flux == 0.0);
    for (double x : {-0.8, -0.1, 0.3}) CHECK(c.u_at(x) == doctest::Approx(0.7));

    SUBCASE("monotone in permeability and in the potential gap, with the open-membrane limit") {
        ModelParams q;
        q.mu1 = 1.0;
        q.mu3 = 0.5;
        double prev = 0.0;
        for (double mu13 : {0.1, 1.0, 10.0, 1e3, 1e8}) {
            q.mu13 = mu13;
            const double f = steady_two_region(0.2, 1.0, q, 2.0).flux;
            CHECK(f > prev);
            prev = f;
        }
        const double dpi = pi_of_u(1.0, q) - pi_of_u(0.2, q);
        CHECK(prev == doctest::Approx(dpi / (1.0 * (1.0 / 1.0 + 1.0 / 0.5))).epsilon(1e-7));
        q.mu13 = 1.0;
        CHECK(steady_two_region(0.2, 1.2, q, 2.0).flux > steady_two_region(0.2, 1.0, q, 2.0).flux);
    }
}

TEST_CASE("fine_reference") {
    SUBCASE("zero data") {
        RunSpec s;
        s.t_final = 0.01;
        const Trajectory a = execute(s);
        const Trajectory f = fine_reference(s);
        CHECK(f.final_state().max_value() == 0.0);
        CHECK(a.final_state().max_value() == 0.0);
        CHECK(f.mesh().num_cells() == 4 * a.mesh().num_cells());
    }
    SUBCASE("Barenblatt sandwich and self-refinement") {
        const RunSpec s1 = barenblatt_spec(1);
        const RunSpec s2 = barenblatt_spec(2);
        const BarenblattProfile prof(0.5, 2.0, 1.0, 0.01);
        const Trajectory base = execute(s1), fine = fine_reference(s1);
        CHECK(l1_vs_profile(fine, prof, 0.01) < l1_vs_profile(base, prof, 0.01));

        const double e1 = restrict_compare(base.final_state(), fine.final_state()).l1;
        const double e2 = restrict_compare(execute(s2).final_state(), fine_reference(s2).final_state()).l1;
        CHECK(e1 > 0.0);
        CHECK(e2 < e1);
    }
}
