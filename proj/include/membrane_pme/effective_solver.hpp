#pragma once

#include <optional>

#include "membrane_pme/mesh.hpp"
#include "membrane_pme/model.hpp"
#include "membrane_pme/trajectory.hpp"

namespace membrane_pme {

/// Non-zero Dirichlet densities at ±L/2. Test-only: the physical problem is homogeneous.
struct PinnedDirichlet {
    double left = 0.0;
    double right = 0.0;
};

struct EffectiveOptions {
    TraceMode trace_mode = TraceMode::CellAverage;
    std::optional<PinnedDirichlet> pinned_dirichlet;
    /// Multiplies the interface flux. Anything but 1 is a deliberate fault used by the
    /// validation suite's negative control.
    double fault_flux_scale = 1.0;
};

/// Kedem-Katchalsky coupling from the two traces: flux_q = μ̃1,3 (Π(u_right) - Π(u_left)).
/// flux_q is μ u ∂x p at 0 with normal +x, so mass moves from right to left when
/// Π(u_right) > Π(u_left).
InterfaceState interface_flux(double u_cell_left, double u_cell_right, const ModelParams& params);

/// One step of the effective problem: two-point fluxes in the bulk, the interface
/// flux at 0, both adjacent cells receiving the same flux_q.
Field step_effective(const Field& field, const StepControl& control, const ModelParams& params, double dt,
                     const EffectiveOptions& options = {});

/// Integrate the effective problem to T_final. The ledger carries the InterfaceState of
/// every recorded state.
Trajectory run_effective(const ModelParams& params, const Field& u0, double t_final, const StepControl& control,
                         const SnapshotSchedule& snapshot_times, const EffectiveOptions& options = {});

/// Same bulk dynamics on the effective mesh but with an ordinary two-point face at 0
/// (no membrane). Reference for the μ̃1,3 → ∞ limit.
Trajectory run_single_domain(const ModelParams& params, const Field& u0, double t_final,
                             const StepControl& control, const SnapshotSchedule& snapshot_times);

struct SteadyStateResult {
    Field field;
    InterfaceState interface;
    double residual = 0.0;
    std::size_t steps = 0;
};

/// March the effective problem with backward Euler and growing steps until the steady
/// residual max_j |(Φ_{j+1} - Φ_j)/Δx_j + u_j G_j| drops below `tolerance`. Intended for
/// the pinned-Dirichlet steady oracle.
SteadyStateResult march_effective_to_steady(const ModelParams& params, const Field& u0, double tolerance,
                                            const EffectiveOptions& options, double dt_initial = 1e-3,
                                            std::size_t max_steps = 10'000);

}  // namespace membrane_pme
