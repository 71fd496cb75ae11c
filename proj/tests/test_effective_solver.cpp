#include <doctest.h>

#include <cmath>

#include "membrane_pme/bridge.hpp"
#include "membrane_pme/effective_solver.hpp"
#include "membrane_pme/errors.hpp"
#include "membrane_pme/oracles.hpp"
#include "membrane_pme/run_spec.hpp"
#include "membrane_pme/validation.hpp"

using namespace membrane_pme;

namespace {

RunSpec eff_run() {
    RunSpec s;
    s.problem = ProblemKind::Effective;
    s.mesh.n_side = 40;
    s.params.mu3 = 0.5;
    s.initial.shape = InitialData::Bump{-0.35, 0.3, 0.9};
    s.t_final = 0.1;
    s.snapshots = SnapshotSchedule(uniform_times(0.1, 4));
    return s;
}

double side_mass(const Field& f, bool right) {
    double m = 0.0;
    const auto c = f.mesh->centers();
    const auto w = f.mesh->widths();
    for (std::size_t j = 0; j < f.u.size(); ++j)
        if ((c[j] > 0) == right) m += f.u[j] * w[j];
    return m;
}

}  // namespace

TEST_CASE("interface_flux") {
    ModelParams p;
    CHECK(interface_flux(0.3, 0.3, p).flux_q == 0.0);

    ModelParams g1;
    g1.gamma = 1.0;
    g1.mu13 = 2.0;
    const InterfaceState s = interface_flux(0.0, 1.0, g1);
    CHECK(s.pi_left == 0.0);
    CHECK(s.pi_right == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.flux_q == doctest::Approx(1.0).epsilon(1e-15));

    ModelParams g2 = g1;
    g2.mu13 = 4.0;
    CHECK(interface_flux(0.2, 0.7, g2).flux_q == doctest::Approx(2.0 * interface_flux(0.2, 0.7, g1).flux_q));
    CHECK(interface_flux(0.7, 0.2, g1).flux_q < 0.0);
    CHECK_THROWS_AS(interface_flux(-0.1, 0.2, g1), DomainError);
}

TEST_CASE("effective run: conservation and the KK law along the ledger") {
    const RunSpec s = eff_run();
    const Trajectory tr = execute(s);
    REQUIRE(tr.ledger.size() > 3);
    for (const auto& r : tr.ledger) {
        REQUIRE(r.interface.has_value());
        const auto& q = *r.interface;
        CHECK(q.flux_q == doctest::Approx(s.params.mu13 * (q.pi_right - q.pi_left)).epsilon(1e-15));
        if (q.pi_right != q.pi_left) CHECK((q.flux_q > 0) == (q.pi_right > q.pi_left));
        CHECK(r.max_u <= s.params.u_homeostatic() * (1 + 1e-10));
        CHECK(r.mass <= std::exp(s.params.g_max * r.t) * tr.ledger.front().mass * (1 + 1e-8));
    }
    for (std::size_t i = 1; i < tr.ledger.size(); ++i) {
        const auto& prev = tr.ledger[i - 1];
        const auto& cur = tr.ledger[i];
        CHECK(std::abs(cur.mass - prev.mass - cur.dt * (prev.boundary_flux + prev.reaction_integral)) <= 1e-14);
    }
    // mass entered the right half only through the interface
    CHECK(side_mass(tr.final_state(), true) > 0.0);
}

TEST_CASE("step_effective: interface transfer is exact") {
    RunSpec s = eff_run();
    s.params.g_max = 0.0;
    s.params.growth_law = GrowthLaw::constant_for_testing(0.0);
    const auto mesh = build_mesh(s);
    Field f{mesh, std::vector<double>(mesh->num_cells(), 0.0), 0.0};
    const std::size_t k = mesh->interface_faces()[0];
    f.u[k - 1] = 0.8;
    f.u[k - 2] = 0.8;
    const double dt = 1e-5;
    const Field g = step_effective(f, s.control, s.params, dt);
    const double q = interface_flux(0.8, 0.0, s.params).flux_q;
    CHECK(side_mass(g, true) == doctest::Approx(-q * dt).epsilon(1e-13));
    CHECK(g.mass() == doctest::Approx(f.mass()).epsilon(1e-14));
}

TEST_CASE("zero data and T = 0") {
    RunSpec s = eff_run();
    s.initial.shape = InitialData::Zero{};
    const Trajectory tr = execute(s);
    CHECK(tr.final_state().max_value() == 0.0);
    s.t_final = 0.0;
    s.snapshots = SnapshotSchedule{};
    CHECK(execute(s).snapshots.size() == 1);
}

TEST_CASE("symmetric data gives zero interface flux") {
    RunSpec s = eff_run();
    s.params.mu3 = 1.0;
    s.initial.shape = InitialData::BumpSum{{{-0.3, 0.25, 0.7}, {0.3, 0.25, 0.7}}};
    const Trajectory tr = execute(s);
    for (const auto& r : tr.ledger) CHECK(r.interface->flux_q == 0.0);
}

TEST_CASE("small permeability nearly isolates the halves") {
    RunSpec s = eff_run();
    s.params.mu13 = 1e-6;
    const Trajectory tr = execute(s);
    double bound = 0.0;
    for (std::size_t i = 1; i < tr.ledger.size(); ++i)
        bound += tr.ledger[i].dt * std::abs(tr.ledger[i - 1].interface->flux_q);
    const double right = side_mass(tr.final_state(), true);
    CHECK(right <= bound * std::exp(s.params.g_max * s.t_final) + 1e-15);
    CHECK(right < 1e-6);
}

TEST_CASE("large permeability approaches the single-domain run") {
    RunSpec s = eff_run();
    s.params.mu3 = 1.0;
    s.control.mode = StepMode::Implicit;
    s.control.dt_max = 2e-3;
    const auto mesh = build_mesh(s);
    const Field u0 = initial_field(s, mesh);
    const Trajectory ref = run_single_domain(s.params, u0, s.t_final, s.control, s.snapshots);
    double prev = 1e300;
    for (double mu13 : {0.1, 1.0, 10.0}) {
        s.params.mu13 = mu13;
        const double d = restrict_compare(run_effective(s.params, u0, s.t_final, s.control, s.snapshots).final_state(),
                                          ref.final_state())
                             .l1;
        CHECK(d < prev);
        prev = d;
    }
    s.params.mu13 = 1e6;
    CHECK_NOTHROW(run_effective(s.params, u0, s.t_final, s.control, s.snapshots));
}

TEST_CASE("pinned steady state matches the two-region profile") {
    ModelParams p;
    p.gamma = 1.0;
    p.p_homeostatic = 4.0;
    p.g_max = 0.0;
    p.growth_law = GrowthLaw::constant_for_testing(0.0);
    const SteadyStudy st = steady_study(p, 2.0, 0.0, 2.0, 200);
    CHECK(st.flux_exact == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(st.flux_rel_error < 0.01);
    CHECK(st.profile_rel_linf < 0.01);

    const SteadyStudy faulty = steady_study(p, 2.0, 0.0, 2.0, 200, 0.5);
    CHECK(faulty.flux_rel_error > 0.05);
}

TEST_CASE("extrapolated traces are available") {
    RunSpec s = eff_run();
    s.effective.trace_mode = TraceMode::Extrapolated;
    const Trajectory tr = execute(s);
    CHECK(tr.final_state().min_value() >= 0.0);
    CHECK(tr.ledger.back().interface.has_value());
}

TEST_CASE("effective solver refuses a thin mesh") {
    const auto thin = build_thin_mesh(2.0, 0.2, 4, 9);
    const Field f{thin, std::vector<double>(thin->num_cells(), 0.0), 0.0};
    CHECK_THROWS_AS(step_effective(f, StepControl{}, ModelParams{}, 1e-4), UsageError);
}
