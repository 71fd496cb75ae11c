#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "membrane_pme/mesh.hpp"

namespace membrane_pme {

enum class StepMode { Explicit, Implicit };

/// How the effective solver reads the one-sided traces at the interface: the adjacent
/// cell averages, or a one-sided linear extrapolation from the two nearest cells.
enum class TraceMode { CellAverage, Extrapolated };

/// Time-stepping controls shared by both solvers.
struct StepControl {
    StepMode mode = StepMode::Explicit;
    double cfl_safety = 0.4;  ///< fraction of the explicit stability limit, in (0, 1)
    double dt_max = 1e-2;     ///< ceiling; the fixed step in implicit mode
    double newton_tol = 1e-12;
    int newton_max_iter = 50;
    std::size_t max_steps = 200'000'000;

    void validate() const;
};

/// Kedem-Katchalsky interface state of the effective problem: the Π-traces at 0⁻ and
/// 0⁺ and the common flux μ̃1,3 (pi_right - pi_left), normal +x.
struct InterfaceState {
    double pi_left = 0.0;
    double pi_right = 0.0;
    double flux_q = 0.0;
};

/// Flux and one-sided values at a membrane face of the thin-layer mesh. `u_face` is
/// the continuous face value implied by the two-point flux (exact for a profile
/// piecewise linear in u^{γ+1}).
struct FaceProbe {
    std::size_t face = 0;
    double flux = 0.0;
    double u_left = 0.0;
    double u_right = 0.0;
    double u_face = 0.0;
};

/// Diagnostics of one state along a run. Rates (boundary_flux, reaction_integral) are
/// evaluated at the recorded state; `dt` is the step that produced it (0 for t = 0).
struct StepRecord {
    double t = 0.0;
    double dt = 0.0;
    double mass = 0.0;              ///< Σ u Δx
    double max_u = 0.0;
    double min_u = 0.0;
    double dissipation = 0.0;       ///< Σ_faces μ_f |∇p|² d_f  ≈ ∫ μ |∂x p|²
    double production = 0.0;        ///< ∫ p G(p)
    double pressure_integral = 0.0; ///< ∫ p
    double boundary_flux = 0.0;     ///< Φ at +L/2 minus Φ at -L/2
    double reaction_integral = 0.0; ///< ∫ u G(p)
    int newton_iterations = 0;
    std::vector<FaceProbe> probes;
    std::optional<InterfaceState> interface;
};

/// Ordered snapshots (first at t = 0) plus the per-step ledger.
struct Trajectory {
    std::vector<Field> snapshots;
    std::vector<StepRecord> ledger;

    const Mesh& mesh() const { return *snapshots.front().mesh; }
    const Field& final_state() const { return snapshots.back(); }
};

/// Requested output times. Steps are shortened so that every requested time in
/// (0, T_final] and T_final itself are hit exactly.
struct SnapshotSchedule {
    std::vector<double> times;
    bool every_step = false;

    SnapshotSchedule() = default;
    SnapshotSchedule(std::vector<double> t) : times(std::move(t)) {}  // NOLINT(implicit)
    static SnapshotSchedule all_steps() {
        SnapshotSchedule s;
        s.every_step = true;
        return s;
    }
};

/// Evenly spaced times k T / n, k = 1..n.
std::vector<double> uniform_times(double t_final, std::size_t n);

}  // namespace membrane_pme
