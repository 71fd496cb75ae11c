#include "membrane_pme/bridge.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "membrane_pme/errors.hpp"

namespace membrane_pme {

namespace {

// 5-point Gauss-Legendre on [-1, 1]
constexpr std::array<double, 5> kGaussX{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                        0.9061798459386640};
constexpr std::array<double, 5> kGaussW{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                        0.4786286704993665, 0.2369268850561891};

template <class F>
double gauss(const F& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < kGaussX.size(); ++i) s += kGaussW[i] * f(c + h * kGaussX[i]);
    return s * h;
}

}  // namespace

TestFunction::TestFunction(double t_final, double length, TimePart phi, SpacePart v)
    : t_final_(t_final), length_(length), phi_(std::move(phi)), v_(std::move(v)) {
    if (!(t_final > 0.0) || !(length > 0.0)) throw UsageError("test function: T and L must be > 0");
    if (!phi_.value || !phi_.derivative || !v_.value || !v_.derivative) {
        throw UsageError("test function: missing evaluator");
    }
    if (std::abs(phi_.value(t_final)) > 1e-12) throw UsageError("test function: phi(T) must vanish");
    if (std::abs(v_.value(-0.5 * length)) > 1e-12 || std::abs(v_.value(0.5 * length)) > 1e-12) {
        throw UsageError("test function: v(+-L/2) must vanish");
    }
    std::sort(v_.breakpoints.begin(), v_.breakpoints.end());
}

TestFunction::TimePart TestFunction::linear_decay(double t_final) {
    return {[t_final](double t) { return 1.0 - t / t_final; }, [t_final](double) { return -1.0 / t_final; }};
}

TestFunction TestFunction::bump(double t_final, double length, double a, double b) {
    if (!(a < b) || a < -0.5 * length || b > 0.5 * length) throw UsageError("bump: bad support");
    if (a < 0.0 && b > 0.0) throw UsageError("bump: support must not contain 0");
    const double s = 4.0 / ((b - a) * (b - a));
    SpacePart v;
    v.value = [=](double x) {
        if (x <= a || x >= b) return 0.0;
        const double q = s * (x - a) * (b - x);
        return q * q * q;
    };
    v.derivative = [=](double x) {
        if (x <= a || x >= b) return 0.0;
        const double q = s * (x - a) * (b - x);
        return 3.0 * q * q * s * (a + b - 2.0 * x);
    };
    v.at_zero_left = v.value(0.0);
    v.at_zero_right = v.value(0.0);
    v.breakpoints = {a, b};
    return TestFunction(t_final, length, linear_decay(t_final), std::move(v));
}

TestFunction TestFunction::unit_jump(double t_final, double length) {
    const double k = std::numbers::pi / length;
    SpacePart v;
    v.value = [=](double x) { return (x < 0.0 ? -0.5 : 0.5) * std::cos(k * x); };
    v.derivative = [=](double x) { return (x < 0.0 ? 0.5 : -0.5) * k * std::sin(k * x); };
    v.at_zero_left = -0.5;
    v.at_zero_right = 0.5;
    v.breakpoints = {0.0};
    return TestFunction(t_final, length, linear_decay(t_final), std::move(v));
}

TestFunction TestFunction::zero(double t_final, double length) {
    SpacePart v;
    v.value = [](double) { return 0.0; };
    v.derivative = [](double) { return 0.0; };
    return TestFunction(t_final, length, linear_decay(t_final), std::move(v));
}

TestFunction TestFunction::sum(const TestFunction& a, const TestFunction& b) {
    if (a.t_final_ != b.t_final_ || a.length_ != b.length_) throw UsageError("sum: incompatible test functions");
    for (double t : {0.0, 0.3 * a.t_final_, 0.7 * a.t_final_}) {
        if (a.phi(t) != b.phi(t)) throw UsageError("sum: time parts differ");
    }
    SpacePart v;
    v.value = [fa = a.v_.value, fb = b.v_.value](double x) { return fa(x) + fb(x); };
    v.derivative = [fa = a.v_.derivative, fb = b.v_.derivative](double x) { return fa(x) + fb(x); };
    v.at_zero_left = a.v_.at_zero_left + b.v_.at_zero_left;
    v.at_zero_right = a.v_.at_zero_right + b.v_.at_zero_right;
    v.breakpoints = a.v_.breakpoints;
    v.breakpoints.insert(v.breakpoints.end(), b.v_.breakpoints.begin(), b.v_.breakpoints.end());
    return TestFunction(a.t_final_, a.length_, a.phi_, std::move(v));
}

double TestFunction::v(double x) const {
    if (x == 0.0) {
        if (v_.at_zero_left != v_.at_zero_right) throw UsageError("v(0) is two-valued; use v_sided");
        return v_.at_zero_left;
    }
    return v_.value(x);
}

double TestFunction::v_sided(double x, int side) const {
    if (x == 0.0) return side < 0 ? v_.at_zero_left : v_.at_zero_right;
    return v_.value(x);
}

double TestFunction::integrate_v(double a, double b) const {
    if (!(b > a)) return 0.0;
    double total = 0.0;
    double lo = a;
    auto piece = [&](double x0, double x1) {
        if (x1 > x0) total += gauss([this](double x) { return v_.value(x); }, x0, x1);
    };
    for (double bp : v_.breakpoints) {
        if (bp > lo && bp < b) {
            piece(lo, bp);
            lo = bp;
        }
    }
    piece(lo, b);
    return total;
}

Field extend(const Field& field, double epsilon) {
    if (!field.mesh || field.mesh->kind() != MeshKind::ThinLayer) throw UsageError("extend: thin-layer mesh required");
    const Mesh& m = *field.mesh;
    if (!m.epsilon() || std::abs(*m.epsilon() - epsilon) > 1e-12 * m.length()) {
        throw UsageError("extend: epsilon does not match the mesh membrane");
    }
    const double half_l = 0.5 * m.length();
    Field out = field;
    const auto x = m.centers();
    const auto tags = m.regions();
    for (std::size_t j = 0; j < m.num_cells(); ++j) {
        if (tags[j] != Region::Membrane) continue;
        double xr = x[j] <= 0.0 ? -epsilon - x[j] : epsilon - x[j];
        xr = std::clamp(xr, -half_l, half_l);
        out.u[j] = field.u[m.cell_containing(xr)];
    }
    return out;
}

TestFunction lift(const TestFunction& w, double epsilon) {
    if (!(epsilon > 0.0)) throw DomainError("lift: epsilon must be > 0");
    const double h = 0.5 * epsilon;
    if (h >= 0.5 * w.length()) throw GeometryError("lift: membrane wider than the domain");
    const double wl = w.v(-h), wr = w.v(h);
    const double mid = 0.5 * (wl + wr), slope = (wr - wl) / epsilon;
    auto base_v = w.space_part().value;
    auto base_dv = w.space_part().derivative;
    TestFunction::SpacePart v;
    v.value = [=](double x) { return (x > -h && x < h) ? mid + slope * x : base_v(x); };
    v.derivative = [=](double x) { return (x > -h && x < h) ? slope : base_dv(x); };
    v.at_zero_left = mid;
    v.at_zero_right = mid;
    for (double bp : w.breakpoints()) {
        if (bp <= -h || bp >= h) v.breakpoints.push_back(bp);
    }
    v.breakpoints.push_back(-h);
    v.breakpoints.push_back(h);
    return TestFunction(w.t_final(), w.length(), w.time_part(), std::move(v));
}

std::vector<std::pair<double, double>> traces(const Field& field, std::span<const double> locations) {
    if (!field.mesh) throw UsageError("traces: field has no mesh");
    const Mesh& m = *field.mesh;
    std::vector<std::pair<double, double>> out;
    out.reserve(locations.size());
    for (double x : locations) {
        const auto f = m.find_face(x);
        if (!f) throw UsageError("traces: location " + std::to_string(x) + " is not a mesh face");
        const double left = *f == 0 ? 0.0 : field.u[*f - 1];
        const double right = *f == m.num_cells() ? 0.0 : field.u[*f];
        out.emplace_back(left, right);
    }
    return out;
}

double reconstructed_face_value(const Field& field, std::size_t face, std::span<const double> mobilities,
                                const ModelParams& params) {
    const Mesh& m = *field.mesh;
    if (face == 0 || face >= m.num_cells()) throw UsageError("reconstructed_face_value: interior face required");
    const auto dx = m.widths();
    const double g = params.gamma;
    const double al = mobilities[face - 1] / (0.5 * dx[face - 1]);
    const double ar = mobilities[face] / (0.5 * dx[face]);
    const double wl = std::pow(field.u[face - 1], g + 1.0), wr = std::pow(field.u[face], g + 1.0);
    return std::pow((al * wl + ar * wr) / (al + ar), 1.0 / (g + 1.0));
}

ErrorNorms restrict_compare(const Field& a, const Field& b, Interval exclusion) {
    if (!a.mesh || !b.mesh) throw UsageError("restrict_compare: field has no mesh");
    const Mesh& ma = *a.mesh;
    const Mesh& mb = *b.mesh;
    const double tol = 1e-12 * std::max(ma.length(), mb.length());
    if (std::abs(ma.faces().front() - mb.faces().front()) > tol || std::abs(ma.faces().back() - mb.faces().back()) > tol) {
        throw UsageError("restrict_compare: domains differ");
    }
    std::vector<double> pts(ma.faces().begin(), ma.faces().end());
    pts.insert(pts.end(), mb.faces().begin(), mb.faces().end());
    const double lo = ma.faces().front(), hi = ma.faces().back();
    if (!exclusion.empty()) {
        for (double e : {exclusion.lo, exclusion.hi}) {
            if (e > lo && e < hi) pts.push_back(e);
        }
    }
    std::sort(pts.begin(), pts.end());

    ErrorNorms n;
    double sq = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double len = pts[i + 1] - pts[i];
        if (len <= tol) continue;
        const double mid = 0.5 * (pts[i] + pts[i + 1]);
        if (!exclusion.empty() && exclusion.contains(mid)) continue;
        const double d = std::abs(a.u[ma.cell_containing(mid)] - b.u[mb.cell_containing(mid)]);
        n.l1 += d * len;
        sq += d * d * len;
        n.linf = std::max(n.linf, d);
        n.measure += len;
    }
    n.l2 = std::sqrt(sq);
    return n;
}

}  // namespace membrane_pme
