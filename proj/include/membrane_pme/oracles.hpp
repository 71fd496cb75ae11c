#pragma once

#include <functional>

#include "membrane_pme/mesh.hpp"
#include "membrane_pme/model.hpp"
#include "membrane_pme/run_spec.hpp"
#include "membrane_pme/trajectory.hpp"

namespace membrane_pme {

/// Source-type solution of ∂t u = κ ∂xx u^m with m = γ + 1 and κ = γμ/(γ+1), released
/// from a point mass at time 0 and used from t0 > 0 on.
///
/// With s = κ t: v(s, x) = s^{-α} (C - k x² s^{-2α})₊^{1/(m-1)}, α = 1/(m+1),
/// k = (m-1) α / (2m), and C fixed by the mass.
class BarenblattProfile {
public:
    BarenblattProfile(double mass, double gamma, double mobility, double t0 = 0.01);

    double mass() const noexcept { return mass_; }
    double exponent_m() const noexcept { return m_; }
    double kappa() const noexcept { return kappa_; }
    double t0() const noexcept { return t0_; }
    double alpha() const noexcept { return alpha_; }
    double constant_c() const noexcept { return c_; }

    double value(double t, double x) const;
    /// Front position: the profile vanishes for |x| ≥ support_radius(t).
    double support_radius(double t) const;
    /// (1/(b-a)) ∫_a^b u(t, x) dx.
    double cell_average(double t, double a, double b) const;

private:
    void check_time(double t) const;

    double mass_, m_, kappa_, t0_;
    double alpha_, k_, q_, c_;
};

/// u(t, x) of the profile; DomainError for t < t0.
double barenblatt(double t, double x, const BarenblattProfile& profile);

/// Closed-form steady state of the effective problem with G ≡ 0 and Dirichlet data
/// u(-L/2) = u_left_bc, u(L/2) = u_right_bc.
struct SteadyTwoRegion {
    double flux = 0.0;       ///< common value of μ u ∂x p, normal +x
    double pi_left_bc = 0.0;
    double pi_right_bc = 0.0;
    double pi_zero_left = 0.0;
    double pi_zero_right = 0.0;
    double length = 0.0;
    double mu1 = 0.0, mu3 = 0.0;
    ModelParams params;

    double pi_at(double x) const;  ///< x < 0 uses the left branch, x ≥ 0 the right
    double u_at(double x) const;
};

SteadyTwoRegion steady_two_region(double u_left_bc, double u_right_bc, const ModelParams& params, double length);

/// The same run at 4x spatial and 4x temporal resolution (dt_max / 4; explicit steps
/// shrink with the stability limit by a further factor).
Trajectory fine_reference(const RunSpec& spec);

}  // namespace membrane_pme
