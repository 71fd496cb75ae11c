#pragma once

#include <span>
#include <vector>

#include "membrane_pme/mesh.hpp"
#include "membrane_pme/model.hpp"
#include "membrane_pme/trajectory.hpp"

namespace membrane_pme {

/// Two-point flux Φ = κ μ_eff (u_R^{γ+1} - u_L^{γ+1}) / d with κ = γ/(γ+1),
/// d = (dx_L + dx_R)/2 and μ_eff the distance-weighted harmonic mean of the two
/// mobilities. Φ is μ u ∂x p at the face with normal +x; it is continuous across a
/// mobility jump for a profile piecewise linear in u^{γ+1}.
double face_flux(double u_left, double u_right, double mu_left, double mu_right, double dx_left,
                 double dx_right, const ModelParams& params);

/// Distance-weighted harmonic mean (dx_L + dx_R) / (dx_L/μ_L + dx_R/μ_R).
double harmonic_mobility(double mu_left, double mu_right, double dx_left, double dx_right);

/// Explicit stability limit cfl_safety · min_j Δx_j² / (2 D_j), D_j = γ μ_j ū_j^γ, where
/// ū_j is the largest density among cell j and its neighbours. Non-uniform spacing,
/// mobility jumps and the half-cell boundary distance enter through the actual face
/// transmissibilities. Also bounded by the reaction rate and by dt_max; dt_max when u ≡ 0.
double stable_dt(const Field& field, std::span<const double> mobilities, const StepControl& control,
                 const ModelParams& params);

/// One explicit (conservative forward Euler) or implicit (backward Euler, damped Newton)
/// step of the thin-layer problem with homogeneous Dirichlet data. The reaction term is
/// explicit in both modes.
Field step(const Field& field, std::span<const double> mobilities, const StepControl& control,
           const ModelParams& params, double dt);

/// Integrate the thin-layer problem to T_final. Requires 0 ≤ u0 ≤ u_H and a thin-layer mesh.
Trajectory run_thin(const ModelParams& params, const MobilityRealization& real, const Field& u0,
                    double t_final, const StepControl& control, const SnapshotSchedule& snapshot_times);

}  // namespace membrane_pme
