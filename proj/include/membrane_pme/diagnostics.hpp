#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "membrane_pme/bridge.hpp"
#include "membrane_pme/model.hpp"
#include "membrane_pme/trajectory.hpp"

namespace membrane_pme {

/// Outcome of one estimate check. `margin` is positive on a pass and negative on a
/// failure; its meaning is check-specific and spelled out in `detail`.
struct CheckResult {
    bool ok = false;
    bool skipped = false;
    double margin = 0.0;
    std::string detail;
};

struct EnergyCheck {
    CheckResult result;
    double lhs = 0.0;  ///< ∫₀ᵀ Σ μ |∂x p|²
    double rhs = 0.0;  ///< γ/(γ-1) ∫₀ᵀ ∫ p G(p) + 1/(γ-1) ∫ p⁰
};

struct DtL1Sample {
    double t0 = 0.0;
    double t1 = 0.0;
    double value = 0.0;  ///< Σ_j |u_j(t1) - u_j(t0)| / (t1 - t0) Δx_j
};

struct EstimateReport {
    CheckResult linf;
    CheckResult mass_gronwall;
    EnergyCheck energy_inequality;
    std::vector<DtL1Sample> dt_u_l1_series;
    std::vector<std::string> notes;

    /// Skipped checks count as passing.
    bool all_ok() const noexcept;
};

inline constexpr double kLinfTolerance = 1e-10;
inline constexpr double kGronwallTolerance = 1e-8;
inline constexpr double kEnergySlack = 0.05;

/// -tol·u_H ≤ u ≤ u_H (1 + tol) on every snapshot, tol = 1e-10. Margin: u_H - max u, or
/// min u + tol·u_H when the lower bound is the one violated.
CheckResult check_linf(const Trajectory& traj, const ModelParams& params);

/// M(t) ≤ e^{G_M t} M(0) (1 + 1e-8) on every snapshot. Margin: 1 - worst ratio, the
/// ratio being M(t) / (e^{G_M t} M(0) (1 + 1e-8)).
CheckResult check_mass_gronwall(const Trajectory& traj, const ModelParams& params);

/// Energy inequality from the ledger with trapezoidal time quadrature; passes when
/// LHS ≤ RHS (1 + 5%). Margin: RHS (1 + 5%) - LHS. Skipped for γ = 1.
EnergyCheck check_energy_inequality(const Trajectory& traj, const ModelParams& params);

/// Σ |Δu| / Δt Δx between consecutive snapshots. Reported only.
std::vector<DtL1Sample> monitor_dt_l1(const Trajectory& traj);

/// All of the above. With `boundary_influx` (pinned boundary data) the mass and energy
/// bounds do not apply and are reported as skipped.
EstimateReport estimate_report(const Trajectory& traj, const ModelParams& params, bool boundary_influx = false);

/// Discrete weak-form residual, split by term. `value` is the signed sum.
struct WeakResidual {
    double value = 0.0;
    double time_term = 0.0;      ///< -∫∫ u ∂t ψ - ∫ u⁰ ψ(0)
    double flux_term = 0.0;      ///< ∫∫ μ u ∂x p ∂x ψ
    double reaction_term = 0.0;  ///< -∫∫ u G(p) ψ
    double jump_term = 0.0;      ///< ∫ μ̃1,3 ⟦Π⟧ (ψ(0⁺) - ψ(0⁻)); effective problem only
    double magnitude() const noexcept { return value < 0.0 ? -value : value; }
};

/// Residual of the thin-layer weak form tested with ψ = φ L_ε(v).
///
/// Space: ∫ u ψ and ∫ u G ψ pair cell averages with exact cell integrals of ψ. The flux
/// term uses the nodes {±L/2, cell centres, membrane faces}; on each gap [a, b]
/// μ u ∂x p ≈ μ (Π(u_b) - Π(u_a)) / (b - a), paired with ψ(b) - ψ(a). Membrane-face
/// values are the flux-consistent reconstruction. Time: u piecewise linear between
/// snapshots, integrated against φ and φ' with Gauss quadrature. The snapshots must end
/// at w's T; use SnapshotSchedule::all_steps() for an accurate time integral.
WeakResidual weak_residual_thin(const Trajectory& traj, std::span<const double> mobilities,
                                const ModelParams& params, const TestFunction& w, double epsilon);

/// Residual of the effective weak form, same quadrature, nodes {±L/2, cell centres, 0⁻,
/// 0⁺}. Traces at 0± follow `trace_mode`; the jump term uses the same traces.
WeakResidual weak_residual_effective(const Trajectory& traj, const ModelParams& params, const TestFunction& w,
                                     TraceMode trace_mode = TraceMode::CellAverage);

}  // namespace membrane_pme
