#include "membrane_pme/effective_solver.hpp"

#include <algorithm>
#include <cmath>

#include "membrane_pme/errors.hpp"
#include "transport.hpp"

namespace membrane_pme {

namespace {

detail::TransportOperator make_effective_operator(const Field& field, const ModelParams& params,
                                                  const EffectiveOptions& options, bool couple = true) {
    if (!field.mesh || field.mesh->kind() != MeshKind::Effective) {
        throw UsageError("effective solver: effective mesh required");
    }
    detail::TransportSetup setup;
    setup.mesh = field.mesh;
    setup.mobility = effective_mobility_per_cell(*field.mesh, params);
    setup.params = params;
    setup.kedem_katchalsky = couple;
    setup.trace_mode = options.trace_mode;
    setup.kk_flux_scale = options.fault_flux_scale;
    if (options.pinned_dirichlet) {
        if (options.pinned_dirichlet->left < 0.0 || options.pinned_dirichlet->right < 0.0) {
            throw DomainError("pinned Dirichlet densities must be >= 0");
        }
        setup.bc_left = options.pinned_dirichlet->left;
        setup.bc_right = options.pinned_dirichlet->right;
    }
    return detail::TransportOperator(std::move(setup));
}

}  // namespace

InterfaceState interface_flux(double u_cell_left, double u_cell_right, const ModelParams& params) {
    InterfaceState s;
    s.pi_left = pi_of_u(u_cell_left, params);
    s.pi_right = pi_of_u(u_cell_right, params);
    s.flux_q = params.mu13 * (s.pi_right - s.pi_left);
    return s;
}

Field step_effective(const Field& field, const StepControl& control, const ModelParams& params, double dt,
                     const EffectiveOptions& options) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("step_effective: dt must be finite and > 0");
    auto op = make_effective_operator(field, params, options);
    detail::State s = detail::make_state(op, field);
    op.step(s, dt, control);
    return Field{field.mesh, std::move(s.u), field.t + dt};
}

Trajectory run_effective(const ModelParams& params, const Field& u0, double t_final, const StepControl& control,
                         const SnapshotSchedule& snapshot_times, const EffectiveOptions& options) {
    params.validate();
    detail::check_initial_admissible(u0, params);
    auto op = make_effective_operator(u0, params, options);
    return detail::run_transport(op, u0, t_final, control, snapshot_times);
}

Trajectory run_single_domain(const ModelParams& params, const Field& u0, double t_final,
                             const StepControl& control, const SnapshotSchedule& snapshot_times) {
    params.validate();
    detail::check_initial_admissible(u0, params);
    auto op = make_effective_operator(u0, params, {}, false);
    return detail::run_transport(op, u0, t_final, control, snapshot_times);
}

SteadyStateResult march_effective_to_steady(const ModelParams& params, const Field& u0, double tolerance,
                                            const EffectiveOptions& options, double dt_initial,
                                            std::size_t max_steps) {
    params.validate();
    auto op = make_effective_operator(u0, params, options);
    StepControl control;
    control.mode = StepMode::Implicit;
    control.newton_tol = std::min(1e-13, 1e-3 * tolerance);
    control.newton_max_iter = 60;
    detail::State s = detail::make_state(op, u0);
    double dt = dt_initial;
    double t = u0.t;
    SteadyStateResult out{u0, {}, op.steady_residual(s), 0};
    while (out.residual >= tolerance) {
        if (out.steps >= max_steps) throw StepFailure("steady state not reached within the step budget");
        detail::State backup = s;
        try {
            op.step(s, dt, control);
        } catch (const StepFailure&) {
            // retreat and retry with a smaller step
            s = std::move(backup);
            dt *= 0.25;
            if (dt < 1e-14) throw;
            continue;
        }
        t += dt;
        ++out.steps;
        out.residual = op.steady_residual(s);
        dt = std::min(dt * 2.0, 1e8);
    }
    out.field = Field{u0.mesh, s.u, t};
    out.interface = op.interface_state(s);
    return out;
}

}  // namespace membrane_pme
