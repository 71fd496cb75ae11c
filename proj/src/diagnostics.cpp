#include "membrane_pme/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "membrane_pme/errors.hpp"

namespace membrane_pme {

namespace {

void require_nonempty(const Trajectory& traj) {
    if (traj.snapshots.empty()) throw UsageError("empty trajectory");
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

// Integral over [t0, t1] of a linear interpolant times f, 5-point Gauss.
template <class F>
double linear_times(double t0, double t1, double a0, double a1, const F& f) {
    static constexpr std::array<double, 5> x{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                            0.9061798459386640};
    static constexpr std::array<double, 5> wts{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                              0.4786286704993665, 0.2369268850561891};
    const double c = 0.5 * (t0 + t1), h = 0.5 * (t1 - t0);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lam = 0.5 * (1.0 + x[i]);
        s += wts[i] * ((1.0 - lam) * a0 + lam * a1) * f(c + h * x[i]);
    }
    return s * h;
}

// Node of the flux quadrature. `cell` >= 0 reads the cell average; otherwise the value is
// supplied by the caller (`slot` indexes the special values).
struct Node {
    double x;
    int side;  // which one-sided value of v applies at x = 0
    long cell;
    int slot;
};

struct FluxStencil {
    std::vector<Node> nodes;
    std::vector<double> mu;       // per gap
    std::vector<double> dv;       // v(b) - v(a) per gap
    std::vector<double> inv_len;  // per gap
};

// Nodes: -L/2, cell centres, `extra` points inserted in order. Gap mobility is the
// mobility of the cell containing the gap midpoint; zero-length gaps are dropped.
FluxStencil make_stencil(const Mesh& m, std::span<const double> mobility, const std::vector<Node>& extra,
                         const TestFunction& v) {
    FluxStencil s;
    const auto xc = m.centers();
    const double half_l = 0.5 * m.length();
    s.nodes.push_back({-half_l, 0, -1, -1});
    std::size_t e = 0;
    for (std::size_t j = 0; j < m.num_cells(); ++j) {
        while (e < extra.size() && extra[e].x < xc[j]) s.nodes.push_back(extra[e++]);
        s.nodes.push_back({xc[j], xc[j] < 0.0 ? -1 : 1, static_cast<long>(j), -1});
    }
    while (e < extra.size()) s.nodes.push_back(extra[e++]);
    s.nodes.push_back({half_l, 0, -1, -2});
    for (std::size_t i = 0; i + 1 < s.nodes.size(); ++i) {
        const Node& a = s.nodes[i];
        const Node& b = s.nodes[i + 1];
        const double len = b.x - a.x;
        if (len <= 0.0) {
            s.mu.push_back(0.0);
            s.dv.push_back(0.0);
            s.inv_len.push_back(0.0);
            continue;
        }
        s.mu.push_back(mobility[m.cell_containing(0.5 * (a.x + b.x))]);
        s.dv.push_back(v.v_sided(b.x, b.side) - v.v_sided(a.x, a.side));
        s.inv_len.push_back(1.0 / len);
    }
    return s;
}

// Shared time/space assembly. `special(k, slot)` returns Π at special nodes of snapshot k;
// `jump(k)` returns the jump-term integrand at snapshot k (0 for the thin problem).
template <class Special, class Jump>
WeakResidual assemble(const Trajectory& traj, const ModelParams& params, const TestFunction& v,
                      const FluxStencil& st, const Special& special, const Jump& jump) {
    require_nonempty(traj);
    const double t_final = v.t_final();
    if (std::abs(traj.snapshots.back().t - t_final) > 1e-12 * std::max(1.0, t_final)) {
        throw UsageError("weak residual: trajectory must end at the test function's T");
    }
    if (std::abs(v.phi(t_final)) > 1e-12) throw UsageError("weak residual: phi(T) must vanish");
    const Mesh& m = traj.mesh();
    const auto f = m.faces();
    const std::size_t n = m.num_cells();
    std::vector<double> vc(n);
    for (std::size_t j = 0; j < n; ++j) vc[j] = v.integrate_v(f[j], f[j + 1]);

    const std::size_t ns = traj.snapshots.size();
    std::vector<double> mass(ns), flux(ns), reac(ns), jmp(ns);
    std::vector<double> pi_node(st.nodes.size());
    for (std::size_t k = 0; k < ns; ++k) {
        const auto& u = traj.snapshots[k].u;
        double mk = 0.0, rk = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            mk += u[j] * vc[j];
            rk += u[j] * growth(pressure(u[j], params), params) * vc[j];
        }
        for (std::size_t i = 0; i < st.nodes.size(); ++i) {
            const Node& nd = st.nodes[i];
            if (nd.cell >= 0) {
                pi_node[i] = pi_of_u(u[static_cast<std::size_t>(nd.cell)], params);
            } else if (nd.slot < 0) {
                pi_node[i] = 0.0;  // homogeneous Dirichlet
            } else {
                pi_node[i] = special(k, nd.slot);
            }
        }
        double fk = 0.0;
        for (std::size_t i = 0; i + 1 < st.nodes.size(); ++i) {
            fk += st.mu[i] * (pi_node[i + 1] - pi_node[i]) * st.inv_len[i] * st.dv[i];
        }
        mass[k] = mk;
        flux[k] = fk;
        reac[k] = rk;
        jmp[k] = jump(k);
    }

    WeakResidual r;
    const auto phi = [&v](double t) { return v.phi(t); };
    const auto dphi = [&v](double t) { return v.dphi(t); };
    r.time_term = -mass[0] * v.phi(traj.snapshots[0].t);
    for (std::size_t k = 0; k + 1 < ns; ++k) {
        const double t0 = traj.snapshots[k].t, t1 = traj.snapshots[k + 1].t;
        r.time_term -= linear_times(t0, t1, mass[k], mass[k + 1], dphi);
        r.flux_term += linear_times(t0, t1, flux[k], flux[k + 1], phi);
        r.reaction_term -= linear_times(t0, t1, reac[k], reac[k + 1], phi);
        r.jump_term += linear_times(t0, t1, jmp[k], jmp[k + 1], phi);
    }
    r.value = r.time_term + r.flux_term + r.reaction_term + r.jump_term;
    return r;
}

}  // namespace

bool EstimateReport::all_ok() const noexcept {
    auto pass = [](const CheckResult& c) { return c.ok || c.skipped; };
    return pass(linf) && pass(mass_gronwall) && pass(energy_inequality.result);
}

CheckResult check_linf(const Trajectory& traj, const ModelParams& params) {
    require_nonempty(traj);
    const double u_h = params.u_homeostatic();
    double max_u = -std::numeric_limits<double>::infinity();
    double min_u = std::numeric_limits<double>::infinity();
    for (const Field& s : traj.snapshots) {
        for (double v : s.u) {
            max_u = std::max(max_u, v);
            min_u = std::min(min_u, v);
        }
    }
    CheckResult c;
    const double upper = u_h * (1.0 + kLinfTolerance);
    const double lower = -kLinfTolerance * u_h;
    c.ok = max_u <= upper && min_u >= lower && std::isfinite(max_u) && std::isfinite(min_u);
    c.margin = min_u < lower ? min_u - lower : u_h - max_u;
    c.detail = "max u = " + fmt(max_u) + ", min u = " + fmt(min_u) + ", u_H = " + fmt(u_h);
    return c;
}

CheckResult check_mass_gronwall(const Trajectory& traj, const ModelParams& params) {
    require_nonempty(traj);
    const double m0 = traj.snapshots.front().mass();
    const double t0 = traj.snapshots.front().t;
    double worst = 0.0;
    double worst_t = t0;
    for (const Field& s : traj.snapshots) {
        const double bound = std::exp(params.g_max * (s.t - t0)) * m0 * (1.0 + kGronwallTolerance);
        const double m = s.mass();
        double ratio;
        if (bound > 0.0) {
            ratio = m / bound;
        } else {
            ratio = m > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        }
        if (ratio > worst) {
            worst = ratio;
            worst_t = s.t;
        }
    }
    CheckResult c;
    c.ok = worst <= 1.0;
    c.margin = 1.0 - worst;
    c.detail = "worst M(t) / (e^{G_M t} M(0) (1 + 1e-8)) = " + fmt(worst) + " at t = " + fmt(worst_t);
    return c;
}

EnergyCheck check_energy_inequality(const Trajectory& traj, const ModelParams& params) {
    require_nonempty(traj);
    EnergyCheck e;
    if (!params.energy_check_enabled()) {
        e.result.skipped = true;
        e.result.ok = false;
        e.result.detail = "skipped: the bound divides by gamma - 1 and is undefined for gamma = 1";
        return e;
    }
    if (traj.ledger.empty()) throw UsageError("energy check: empty ledger");
    const double g = params.gamma;
    double diss = 0.0, prod = 0.0;
    for (std::size_t k = 0; k + 1 < traj.ledger.size(); ++k) {
        const StepRecord& a = traj.ledger[k];
        const StepRecord& b = traj.ledger[k + 1];
        const double dt = b.t - a.t;
        diss += 0.5 * dt * (a.dissipation + b.dissipation);
        prod += 0.5 * dt * (a.production + b.production);
    }
    e.lhs = diss;
    e.rhs = g / (g - 1.0) * prod + traj.ledger.front().pressure_integral / (g - 1.0);
    const double allowed = e.rhs * (1.0 + kEnergySlack);
    e.result.ok = e.lhs <= allowed;
    e.result.margin = allowed - e.lhs;
    e.result.detail = "LHS = " + fmt(e.lhs) + ", RHS = " + fmt(e.rhs) + ", LHS/RHS = " +
                      (e.rhs > 0.0 ? fmt(e.lhs / e.rhs) : std::string("n/a"));
    return e;
}

std::vector<DtL1Sample> monitor_dt_l1(const Trajectory& traj) {
    if (traj.snapshots.size() < 2) throw UsageError("monitor_dt_l1: at least two snapshots required");
    const auto dx = traj.mesh().widths();
    std::vector<DtL1Sample> out;
    out.reserve(traj.snapshots.size() - 1);
    for (std::size_t k = 0; k + 1 < traj.snapshots.size(); ++k) {
        const Field& a = traj.snapshots[k];
        const Field& b = traj.snapshots[k + 1];
        const double dt = b.t - a.t;
        double s = 0.0;
        for (std::size_t j = 0; j < a.u.size(); ++j) s += std::abs(b.u[j] - a.u[j]) * dx[j];
        out.push_back({a.t, b.t, dt > 0.0 ? s / dt : 0.0});
    }
    return out;
}

EstimateReport estimate_report(const Trajectory& traj, const ModelParams& params, bool boundary_influx) {
    EstimateReport r;
    r.linf = check_linf(traj, params);
    if (boundary_influx) {
        const CheckResult skip{false, true, 0.0, "skipped: pinned boundary data supplies mass"};
        r.mass_gronwall = skip;
        r.energy_inequality.result = skip;
        r.notes.push_back("mass and energy bounds assume no-influx boundaries");
    } else {
        r.mass_gronwall = check_mass_gronwall(traj, params);
        r.energy_inequality = check_energy_inequality(traj, params);
    }
    if (traj.snapshots.size() >= 2) r.dt_u_l1_series = monitor_dt_l1(traj);
    if (!params.energy_check_enabled()) r.notes.push_back("energy inequality not certified for gamma = 1");
    if (params.growth_law.is_test_only()) r.notes.push_back("test-only constant growth law");
    r.notes.push_back("dt_u_l1 is monitored, not asserted");
    return r;
}

WeakResidual weak_residual_thin(const Trajectory& traj, std::span<const double> mobilities,
                                const ModelParams& params, const TestFunction& w, double epsilon) {
    require_nonempty(traj);
    const Mesh& m = traj.mesh();
    if (m.kind() != MeshKind::ThinLayer) throw UsageError("weak_residual_thin: thin-layer trajectory required");
    if (mobilities.size() != m.num_cells()) throw UsageError("weak_residual_thin: mobility array mismatch");
    const TestFunction psi = lift(w, epsilon);
    const auto faces = m.interface_faces();
    std::vector<Node> extra;
    for (std::size_t i = 0; i < faces.size(); ++i) {
        const double x = m.faces()[faces[i]];
        extra.push_back({x, x < 0.0 ? -1 : 1, -1, static_cast<int>(i)});
    }
    const FluxStencil st = make_stencil(m, mobilities, extra, psi);
    auto special = [&](std::size_t k, int slot) {
        const double uf = reconstructed_face_value(traj.snapshots[k], faces[static_cast<std::size_t>(slot)],
                                                   mobilities, params);
        return pi_of_u(uf, params);
    };
    return assemble(traj, params, psi, st, special, [](std::size_t) { return 0.0; });
}

WeakResidual weak_residual_effective(const Trajectory& traj, const ModelParams& params, const TestFunction& w,
                                     TraceMode trace_mode) {
    require_nonempty(traj);
    const Mesh& m = traj.mesh();
    if (m.kind() != MeshKind::Effective) throw UsageError("weak_residual_effective: effective trajectory required");
    const std::size_t k0 = m.interface_faces()[0];
    const auto dx = m.widths();
    const double el = dx[k0 - 1] / (dx[k0 - 1] + dx[k0 - 2]);
    const double er = dx[k0] / (dx[k0] + dx[k0 + 1]);
    const double g = params.gamma;
    // Π-traces at 0⁻ (slot 0) and 0⁺ (slot 1)
    auto trace_pi = [&](std::size_t k, int slot) {
        const auto& u = traj.snapshots[k].u;
        const double kap = g / (g + 1.0);
        auto w_of = [&](std::size_t j) { return std::pow(u[j], g + 1.0); };
        double wt;
        if (slot == 0) {
            wt = trace_mode == TraceMode::CellAverage ? w_of(k0 - 1)
                                                      : std::max(0.0, w_of(k0 - 1) + el * (w_of(k0 - 1) - w_of(k0 - 2)));
        } else {
            wt = trace_mode == TraceMode::CellAverage ? w_of(k0)
                                                      : std::max(0.0, w_of(k0) + er * (w_of(k0) - w_of(k0 + 1)));
        }
        return kap * wt;
    };
    const std::vector<double> mob = effective_mobility_per_cell(m, params);
    const std::vector<Node> extra{{0.0, -1, -1, 0}, {0.0, 1, -1, 1}};
    const FluxStencil st = make_stencil(m, mob, extra, w);
    const double jump_v = w.jump_at_zero();
    auto jump = [&](std::size_t k) { return params.mu13 * (trace_pi(k, 1) - trace_pi(k, 0)) * jump_v; };
    return assemble(traj, params, w, st, trace_pi, jump);
}

}  // namespace membrane_pme
