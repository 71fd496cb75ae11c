#include "membrane_pme/oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "membrane_pme/errors.hpp"

namespace membrane_pme {

BarenblattProfile::BarenblattProfile(double mass, double gamma, double mobility, double t0)
    : mass_(mass), m_(gamma + 1.0), kappa_(gamma * mobility / (gamma + 1.0)), t0_(t0) {
    if (!(mass > 0.0)) throw DomainError("Barenblatt: mass must be > 0");
    if (!(gamma >= 1.0)) throw DomainError("Barenblatt: gamma >= 1 required");
    if (!(mobility > 0.0)) throw DomainError("Barenblatt: mobility must be > 0");
    if (!(t0 > 0.0)) throw DomainError("Barenblatt: t0 must be > 0");
    alpha_ = 1.0 / (m_ + 1.0);
    k_ = (m_ - 1.0) * alpha_ / (2.0 * m_);
    q_ = 1.0 / (m_ - 1.0);
    // ∫ (C - k y²)₊^q dy = C^{q+1/2} k^{-1/2} B(1/2, q+1)
    const double beta = std::exp(std::lgamma(0.5) + std::lgamma(q_ + 1.0) - std::lgamma(q_ + 1.5));
    c_ = std::pow(mass * std::sqrt(k_) / beta, 1.0 / (q_ + 0.5));
}

void BarenblattProfile::check_time(double t) const {
    if (!(t >= t0_)) throw DomainError("Barenblatt: t < t0");
}

double BarenblattProfile::value(double t, double x) const {
    check_time(t);
    const double s = kappa_ * t;
    const double sa = std::pow(s, -alpha_);
    const double base = c_ - k_ * x * x * sa * sa;
    return base > 0.0 ? sa * std::pow(base, q_) : 0.0;
}

double BarenblattProfile::support_radius(double t) const {
    check_time(t);
    return std::sqrt(c_ / k_) * std::pow(kappa_ * t, alpha_);
}

double BarenblattProfile::cell_average(double t, double a, double b) const {
    if (!(b > a)) throw DomainError("Barenblatt: empty cell");
    const double r = support_radius(t);
    const double lo = std::max(a, -r), hi = std::min(b, r);
    if (!(hi > lo)) return 0.0;
    static constexpr std::array<double, 5> gx{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                             0.9061798459386640};
    static constexpr std::array<double, 5> gw{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                             0.4786286704993665, 0.2369268850561891};
    // x = r sin θ absorbs the square-root-type behaviour at the front
    const double th_lo = std::asin(std::clamp(lo / r, -1.0, 1.0)), th_hi = std::asin(std::clamp(hi / r, -1.0, 1.0));
    constexpr int pieces = 16;
    const double h = (th_hi - th_lo) / pieces;
    double sum = 0.0;
    for (int p = 0; p < pieces; ++p) {
        const double c = th_lo + (p + 0.5) * h;
        for (std::size_t i = 0; i < gx.size(); ++i) {
            const double th = c + 0.5 * h * gx[i];
            sum += gw[i] * value(t, r * std::sin(th)) * r * std::cos(th);
        }
    }
    return sum * 0.5 * h / (b - a);
}

double barenblatt(double t, double x, const BarenblattProfile& profile) { return profile.value(t, x); }

double SteadyTwoRegion::pi_at(double x) const {
    const double half_l = 0.5 * length;
    if (x < 0.0) return pi_left_bc + flux / mu1 * (x + half_l);
    return pi_right_bc - flux / mu3 * (half_l - x);
}

double SteadyTwoRegion::u_at(double x) const { return u_of_pi(std::max(0.0, pi_at(x)), params); }

SteadyTwoRegion steady_two_region(double u_left_bc, double u_right_bc, const ModelParams& params, double length) {
    if (u_left_bc < 0.0 || u_right_bc < 0.0) throw DomainError("steady_two_region: densities must be >= 0");
    if (!(length > 0.0)) throw DomainError("steady_two_region: length must be > 0");
    SteadyTwoRegion s;
    s.params = params;
    s.length = length;
    s.mu1 = params.mu1;
    s.mu3 = params.mu3;
    s.pi_left_bc = pi_of_u(u_left_bc, params);
    s.pi_right_bc = pi_of_u(u_right_bc, params);
    const double half_l = 0.5 * length;
    s.flux = params.mu13 * (s.pi_right_bc - s.pi_left_bc) /
             (1.0 + params.mu13 * half_l * (1.0 / params.mu1 + 1.0 / params.mu3));
    s.pi_zero_left = s.pi_left_bc + s.flux * half_l / params.mu1;
    s.pi_zero_right = s.pi_right_bc - s.flux * half_l / params.mu3;
    return s;
}

Trajectory fine_reference(const RunSpec& spec) { return execute(refined(spec, 4, 4)); }

}  // namespace membrane_pme
