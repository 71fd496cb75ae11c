#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "membrane_pme/mesh.hpp"
#include "membrane_pme/model.hpp"

namespace membrane_pme {

/// Separable test function ψ(t, x) = φ(t) v(x) on [0, T] × [-L/2, L/2].
///
/// v is smooth on [-L/2, 0) and on (0, L/2], vanishes at ±L/2 and may jump at 0;
/// φ(T) = 0. `breakpoints` lists the points where v or v' may be non-smooth, so that
/// quadrature can split there.
class TestFunction {
public:
    using Fn = std::function<double(double)>;

    struct TimePart {
        Fn value;
        Fn derivative;
    };
    struct SpacePart {
        Fn value;       ///< at x != 0; one-sided limits at 0 are given separately
        Fn derivative;
        double at_zero_left = 0.0;
        double at_zero_right = 0.0;
        std::vector<double> breakpoints;
    };

    /// Checks φ(T) = 0 and v(±L/2) = 0 (absolute tolerance 1e-12); UsageError otherwise.
    TestFunction(double t_final, double length, TimePart phi, SpacePart v);

    /// φ(t) = 1 - t/T.
    static TimePart linear_decay(double t_final);

    /// v(x) = (4 (x-a)(b-x) / (b-a)²)³ on (a, b), zero elsewhere. (a, b) must not contain 0.
    static TestFunction bump(double t_final, double length, double a, double b);

    /// v(x) = sgn(x) cos(π x / L) / 2: unit jump at 0, vanishing at ±L/2.
    static TestFunction unit_jump(double t_final, double length);

    static TestFunction zero(double t_final, double length);

    /// Pointwise sum; both must share T, L and the time part's values.
    static TestFunction sum(const TestFunction& a, const TestFunction& b);

    double t_final() const noexcept { return t_final_; }
    double length() const noexcept { return length_; }

    double phi(double t) const { return phi_.value(t); }
    double dphi(double t) const { return phi_.derivative(t); }
    double v(double x) const;
    double dv(double x) const { return v_.derivative(x); }
    double v_zero_left() const noexcept { return v_.at_zero_left; }
    double v_zero_right() const noexcept { return v_.at_zero_right; }
    double jump_at_zero() const noexcept { return v_.at_zero_right - v_.at_zero_left; }
    const std::vector<double>& breakpoints() const noexcept { return v_.breakpoints; }

    /// ∫_a^b v dx, Gauss-Legendre split at the breakpoints. a and b on the same side of 0
    /// (or touching it).
    double integrate_v(double a, double b) const;

    /// v evaluated as a one-sided limit: side < 0 takes 0⁻ at x = 0, side > 0 takes 0⁺.
    double v_sided(double x, int side) const;

    const TimePart& time_part() const noexcept { return phi_; }
    const SpacePart& space_part() const noexcept { return v_; }

private:
    double t_final_;
    double length_;
    TimePart phi_;
    SpacePart v_;
};

/// Reflection of the outside solution into the membrane: cells with centre in (-ε/2, 0]
/// take the value of the cell containing -ε - x, cells in (0, ε/2) the value at ε - x.
/// Values outside the membrane are unchanged.
Field extend(const Field& field, double epsilon);

/// L_ε(w): w outside (-ε/2, ε/2), the affine interpolant between w(-ε/2) and w(ε/2)
/// inside. The result is continuous and has the same time part.
TestFunction lift(const TestFunction& w, double epsilon);

/// (left-cell value, right-cell value) at each face coordinate. The outer boundary
/// contributes the homogeneous Dirichlet value 0 on its outside.
std::vector<std::pair<double, double>> traces(const Field& field, std::span<const double> locations);

/// Face value of u implied by the two-point flux: u^{γ+1} at the face is the
/// transmissibility-weighted mean of the two cell values.
double reconstructed_face_value(const Field& field, std::size_t face, std::span<const double> mobilities,
                                const ModelParams& params);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;  ///< empty when hi <= lo
    bool empty() const noexcept { return !(hi > lo); }
    bool contains(double x) const noexcept { return x > lo && x < hi; }
};

struct ErrorNorms {
    double l1 = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
    double measure = 0.0;  ///< length of the compared region
};

/// Norms of a - b, both read as piecewise constant, on the common refinement of the two
/// meshes minus the exclusion interval. Exact for piecewise-constant data.
ErrorNorms restrict_compare(const Field& a, const Field& b, Interval exclusion = {});

}  // namespace membrane_pme
