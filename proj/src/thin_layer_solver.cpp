#include "membrane_pme/thin_layer_solver.hpp"

#include <cmath>

#include "membrane_pme/errors.hpp"
#include "transport.hpp"

namespace membrane_pme {

namespace {

detail::TransportOperator make_operator(const Field& field, std::span<const double> mobilities,
                                        const ModelParams& params) {
    if (!field.mesh) throw UsageError("field has no mesh");
    detail::TransportSetup setup;
    setup.mesh = field.mesh;
    setup.mobility.assign(mobilities.begin(), mobilities.end());
    setup.params = params;
    return detail::TransportOperator(std::move(setup));
}

}  // namespace

double harmonic_mobility(double mu_left, double mu_right, double dx_left, double dx_right) {
    return (dx_left + dx_right) / (dx_left / mu_left + dx_right / mu_right);
}

double face_flux(double u_left, double u_right, double mu_left, double mu_right, double dx_left,
                 double dx_right, const ModelParams& params) {
    for (double v : {u_left, u_right, mu_left, mu_right, dx_left, dx_right}) {
        if (!std::isfinite(v)) throw NumericError("face_flux: non-finite input");
    }
    if (u_left < 0.0 || u_right < 0.0) throw DomainError("face_flux: densities must be >= 0");
    if (!(mu_left > 0.0 && mu_right > 0.0)) throw DomainError("face_flux: mobilities must be > 0");
    if (!(dx_left > 0.0 && dx_right > 0.0)) throw DomainError("face_flux: widths must be > 0");
    const double g = params.gamma;
    const double d = 0.5 * (dx_left + dx_right);
    const double mu_eff = harmonic_mobility(mu_left, mu_right, dx_left, dx_right);
    return g / (g + 1.0) * mu_eff * (std::pow(u_right, g + 1.0) - std::pow(u_left, g + 1.0)) / d;
}

double stable_dt(const Field& field, std::span<const double> mobilities, const StepControl& control,
                 const ModelParams& params) {
    auto op = make_operator(field, mobilities, params);
    return op.stable_dt(detail::make_state(op, field), control);
}

Field step(const Field& field, std::span<const double> mobilities, const StepControl& control,
           const ModelParams& params, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("step: dt must be finite and > 0");
    auto op = make_operator(field, mobilities, params);
    detail::State s = detail::make_state(op, field);
    op.step(s, dt, control);
    return Field{field.mesh, std::move(s.u), field.t + dt};
}

Trajectory run_thin(const ModelParams& params, const MobilityRealization& real, const Field& u0,
                    double t_final, const StepControl& control, const SnapshotSchedule& snapshot_times) {
    params.validate();
    if (!u0.mesh || u0.mesh->kind() != MeshKind::ThinLayer) {
        throw UsageError("run_thin: thin-layer mesh required");
    }
    const auto eps = u0.mesh->epsilon();
    if (!eps || std::abs(*eps - real.epsilon) > 1e-12 * u0.mesh->length()) {
        throw UsageError("run_thin: mobility realization and mesh disagree on epsilon");
    }
    detail::check_initial_admissible(u0, params);
    auto op = make_operator(u0, mobility_per_cell(*u0.mesh, real), params);
    return detail::run_transport(op, u0, t_final, control, snapshot_times);
}

}  // namespace membrane_pme
