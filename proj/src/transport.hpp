#pragma once

// Finite-volume core shared by the thin-layer and effective solvers.
//
// Unknowns are cell averages u_j. With w = u^{γ+1} and κ = γ/(γ+1) every face carries
// Φ_f = T_f (w_R - w_L), where T_f = κ μ_f / d_f for an ordinary two-point face and
// T_f = κ μ̃1,3 for the Kedem-Katchalsky face of the effective mesh. Φ is the value
// of μ u ∂x p at the face (normal +x), so
//     du_j/dt = (Φ_{j+1} - Φ_j) / Δx_j + u_j G(p_j).

#include <memory>
#include <span>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "membrane_pme/mesh.hpp"
#include "membrane_pme/model.hpp"
#include "membrane_pme/trajectory.hpp"

namespace membrane_pme {

namespace detail {

struct TransportSetup {
    std::shared_ptr<const Mesh> mesh;
    std::vector<double> mobility;   // per cell
    ModelParams params;
    double bc_left = 0.0;           // ghost densities at ±L/2
    double bc_right = 0.0;
    bool kedem_katchalsky = false;  // couple the first interface face by ⟦Π⟧
    TraceMode trace_mode = TraceMode::CellAverage;
    double kk_flux_scale = 1.0;     // fault injection; 1 in production
};

// Cached per-state arrays: everything a step or a ledger record needs.
struct State {
    std::vector<double> u, p, w, g, phi;
};

class TransportOperator {
public:
    explicit TransportOperator(TransportSetup setup);

    const Mesh& mesh() const { return *setup_.mesh; }
    const std::shared_ptr<const Mesh>& mesh_ptr() const { return setup_.mesh; }
    const ModelParams& params() const { return setup_.params; }
    const TransportSetup& setup() const { return setup_; }

    // Fill p, w, g and phi from s.u.
    void evaluate(State& s) const;

    double stable_dt(const State& s, const StepControl& control) const;

    // Advance s by dt; s is re-evaluated afterwards. Returns Newton iterations (0 when explicit).
    int step(State& s, double dt, const StepControl& control);

    StepRecord record(const State& s, double t, double dt) const;

    // max_j |(Φ_{j+1} - Φ_j)/Δx_j + u_j G_j|, the steady-state residual.
    double steady_residual(const State& s) const;

    InterfaceState interface_state(const State& s) const;

private:
    void explicit_update(State& s, double dt) const;
    int implicit_update(State& s, double dt, const StepControl& control);
    void fluxes(std::span<const double> w, std::span<double> phi) const;
    double trace_w_left(std::span<const double> w) const;
    double trace_w_right(std::span<const double> w) const;
    double kk_flux(double w_left, double w_right) const;

    TransportSetup setup_;
    double kappa_ = 0.0;
    double w_bc_left_ = 0.0, w_bc_right_ = 0.0;
    double p_bc_left_ = 0.0, p_bc_right_ = 0.0;
    std::size_t kk_face_ = 0;
    double extrap_left_ = 0.0, extrap_right_ = 0.0;  // one-sided extrapolation weights
    std::vector<double> trans_;      // per face
    std::vector<double> mu_face_;    // per face, harmonic for interior faces
    std::vector<double> dist_face_;  // per face, centre-to-centre (half cell at the boundary)
    double reaction_bound_ = 0.0;

    // Newton workspace
    std::vector<double> res_, trial_, w_tmp_, phi_tmp_, dw_;
    Eigen::SparseMatrix<double> jac_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
    bool pattern_ready_ = false;
};

// Fill a State from a field and evaluate it.
State make_state(const TransportOperator& op, const Field& field);

// Shared time loop: snapshots at t = 0, every requested time and T_final; one ledger
// record per completed step plus the initial state.
Trajectory run_transport(TransportOperator& op, const Field& u0, double t_final,
                         const StepControl& control, const SnapshotSchedule& schedule);

// Reject initial data outside 0 ≤ u0 ≤ u_H (relative tolerance 1e-12).
void check_initial_admissible(const Field& u0, const ModelParams& params);

}  // namespace detail
}  // namespace membrane_pme
