// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only if all pass.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "membrane_pme/bridge.hpp"
#include "membrane_pme/diagnostics.hpp"
#include "membrane_pme/harness.hpp"
#include "membrane_pme/run_spec.hpp"
#include "membrane_pme/validation.hpp"

using namespace membrane_pme;

namespace {

constexpr std::size_t kRandomRuns = 21;
constexpr std::uint64_t kSeed = 20240917;
constexpr double kOrderMin = 0.9;
constexpr double kSteadyRes = 1e-10;
constexpr double kSteadyFluxTol = 0.01;

struct Line {
    int id;
    bool pass;
    std::string text;
};

// Everything a criterion computes, serialized, so two passes can be compared byte for byte.
struct Outcome {
    std::vector<Line> lines;
    std::string bytes;
    void add(int id, bool pass, const std::string& text) { lines.push_back({id, pass, text}); }
    void record(const std::string& s) { bytes += s; }
    void record(double v) { bytes += format_double(v) + ";"; }
};

std::string fd(double v) { return format_double(v); }

// Random admissible bumps: support inside the domain, amplitude below u_H.
std::vector<RunSpec> random_runs() {
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> center(-0.6, 0.6), width(0.08, 0.3), amp(0.2, 1.0);
    const double gammas[] = {1.5, 2.0, 3.0};
    std::vector<RunSpec> out;
    for (std::size_t i = 0; i < kRandomRuns; ++i) {
        RunSpec s;
        s.problem = i % 2 == 0 ? ProblemKind::Thin : ProblemKind::Effective;
        s.params.gamma = gammas[i % 3];
        s.params.mu3 = 0.5;
        s.mesh = MeshSpec{2.0, 0.2, 8, 36, 40};
        const double c = center(rng), w = width(rng);
        s.initial.shape = InitialData::Bump{c, w, amp(rng) * s.params.u_homeostatic()};
        s.t_final = 0.25;
        s.snapshots = SnapshotSchedule(uniform_times(0.25, 10));
        out.push_back(s);
    }
    return out;
}

void estimates_criteria(Outcome& o, std::vector<std::pair<Trajectory, ModelParams>>& energy_runs) {
    double worst_linf = -1e300, worst_gron = -1e300;
    bool linf_ok = true, gron_ok = true;
    for (const RunSpec& s : random_runs()) {
        Trajectory tr = execute(s);
        const double uh = s.params.u_homeostatic();
        const double m0 = tr.snapshots.front().mass();
        for (const Field& f : tr.snapshots) {
            const double r = f.max_value() / (uh * (1 + kLinfTolerance));
            worst_linf = std::max(worst_linf, r);
            linf_ok = linf_ok && r <= 1.0;
            const double g = f.mass() / (std::exp(s.params.g_max * f.t) * m0 * (1 + kGronwallTolerance));
            worst_gron = std::max(worst_gron, g);
            gron_ok = gron_ok && g <= 1.0;
        }
        o.record(snapshots_csv(tr, s.params));
        energy_runs.emplace_back(std::move(tr), s.params);
    }
    o.record(worst_linf);
    o.record(worst_gron);
    o.add(1, linf_ok,
          "L-infinity bound over " + std::to_string(kRandomRuns) +
              " random bumps: worst max u / (u_H (1 + 1e-10)) = " + fd(worst_linf) + " <= 1");
    o.add(2, gron_ok, "Gronwall mass bound on the same runs: worst M(t) / (e^{G_M t} M(0) (1 + 1e-8)) = " +
                          fd(worst_gron) + " <= 1");
}

void barenblatt_criterion(Outcome& o, std::vector<std::pair<Trajectory, ModelParams>>& energy_runs) {
    const std::vector<std::size_t> levels{2, 4, 8};
    const BarenblattStudy st = barenblatt_study(levels);
    for (double e : st.l1_errors) o.record(e);
    const double order = *std::min_element(st.orders.begin(), st.orders.end());
    const bool dec = st.l1_errors[1] < st.l1_errors[0] && st.l1_errors[2] < st.l1_errors[1];
    o.add(4, dec && order >= kOrderMin,
          "Barenblatt L1 errors " + fd(st.l1_errors[0]) + " " + fd(st.l1_errors[1]) + " " + fd(st.l1_errors[2]) +
              ", min observed order " + fd(order) + " >= 0.9");
    for (std::size_t r : levels) {
        const RunSpec s = barenblatt_spec(r);
        energy_runs.emplace_back(execute(s), s.params);
    }
}

void steady_criterion(Outcome& o) {
    ModelParams g1;
    g1.gamma = 1.0;
    g1.p_homeostatic = 4.0;
    ModelParams g2;
    g2.gamma = 2.0;
    g2.p_homeostatic = 4.0;
    g2.mu3 = 0.5;
    g2.mu13 = 2.0;
    struct Case {
        ModelParams p;
        double ul, ur;
    };
    bool ok = true;
    std::string text = "pinned steady state on 400 cells:";
    for (const Case& c : {Case{g1, 0.0, 2.0}, Case{g2, 0.5, 1.5}}) {
        const SteadyStudy st = steady_study(c.p, 2.0, c.ul, c.ur, 200);
        o.record(st.flux_numeric);
        o.record(st.residual);
        ok = ok && st.residual < kSteadyRes && st.flux_rel_error <= kSteadyFluxTol;
        text += " gamma " + fd(c.p.gamma) + " residual " + fd(st.residual) + ", flux " + fd(st.flux_numeric) +
                " vs " + fd(st.flux_exact) + " (rel. error " + fd(st.flux_rel_error) + ");";
    }
    o.add(5, ok, text + " residual < 1e-10, flux within 1%");
}

void sweep_criteria(Outcome& o) {
    const Config c = load_config(std::filesystem::path(MEMBRANE_PME_SOURCE_DIR) / "configs" / "sweep.json");
    const ConvergenceReport rep = run_convergence(*c.sweep, 4);
    o.record(rep.to_json().dump());
    std::string e_txt, d_txt, t_txt;
    bool runs_ok = rep.reference_ok;
    for (const auto& e : rep.entries) {
        runs_ok = runs_ok && e.ok;
        e_txt += " " + fd(e.error);
        d_txt += " " + fd(e.flux_jump);
        t_txt += " " + fd(e.trace_gap);
    }
    o.add(6, runs_ok && rep.error_strictly_decreasing && rep.error_halved && rep.flux_jump_decreasing,
          "epsilon sweep: e =" + e_txt + " (strictly decreasing, halved), d =" + d_txt + " (decreasing)");
    o.add(7, runs_ok && rep.trace_decreasing, "trace gap along the sweep:" + t_txt + " (decreasing)");
}

// Implicit run refined by r in both Δx and dt.
RunSpec residual_run(ProblemKind kind, std::size_t r) {
    RunSpec s;
    s.problem = kind;
    s.params.mu3 = 0.5;
    s.mesh = MeshSpec{2.0, 0.2, 4 * r, 18 * r, 20 * r};
    s.initial.shape = InitialData::Bump{-0.3, 0.35, 0.9};
    s.t_final = 0.1;
    s.snapshots = SnapshotSchedule::all_steps();
    s.control.mode = StepMode::Implicit;
    s.control.dt_max = 0.005 / static_cast<double>(r);
    return s;
}

void weak_residual_criterion(Outcome& o, std::vector<std::pair<Trajectory, ModelParams>>& energy_runs) {
    const std::vector<std::size_t> levels{8, 16, 32};
    bool ok = true;
    std::string text = "weak residual orders:";
    for (ProblemKind k : {ProblemKind::Thin, ProblemKind::Effective}) {
        const bool thin = k == ProblemKind::Thin;
        std::vector<double> bump_res, jump_res;
        for (std::size_t r : levels) {
            const RunSpec s = residual_run(k, r);
            Trajectory tr = execute(s);
            const TestFunction fb = TestFunction::bump(s.t_final, s.mesh.length, -0.8, -0.15);
            const TestFunction fj = TestFunction::unit_jump(s.t_final, s.mesh.length);
            if (thin) {
                const auto mob = run_mobilities(s, tr.mesh());
                bump_res.push_back(weak_residual_thin(tr, mob, s.params, fb, s.mesh.epsilon).magnitude());
                jump_res.push_back(weak_residual_thin(tr, mob, s.params, fj, s.mesh.epsilon).magnitude());
            } else {
                bump_res.push_back(weak_residual_effective(tr, s.params, fb).magnitude());
                const WeakResidual wj = weak_residual_effective(tr, s.params, fj);
                ok = ok && wj.jump_term != 0.0;
                jump_res.push_back(wj.magnitude());
            }
            if (r == levels.back()) energy_runs.emplace_back(std::move(tr), s.params);
        }
        for (auto* res : {&bump_res, &jump_res}) {
            for (std::size_t i = 0; i + 1 < res->size(); ++i) {
                const double order = std::log2((*res)[i] / (*res)[i + 1]);
                o.record((*res)[i]);
                ok = ok && order >= kOrderMin;
                text += " " + std::string(thin ? "thin/" : "effective/") + (res == &bump_res ? "bump " : "jump ") + fd(order);
            }
            o.record(res->back());
        }
    }
    o.add(8, ok, text + " (each >= 0.9)");
}

void energy_criterion(Outcome& o, const std::vector<std::pair<Trajectory, ModelParams>>& runs) {
    double worst = 0.0;
    std::size_t checked = 0;
    bool ok = true;
    for (const auto& [tr, p] : runs) {
        if (!p.energy_check_enabled()) continue;
        const EnergyCheck e = check_energy_inequality(tr, p);
        o.record(e.lhs);
        o.record(e.rhs);
        ++checked;
        const double ratio = e.rhs > 0.0 ? e.lhs / e.rhs : (e.lhs > 0.0 ? 1e300 : 0.0);
        worst = std::max(worst, ratio);
        ok = ok && e.lhs <= e.rhs * (1 + kEnergySlack);
    }
    o.add(3, ok && checked > 0,
          "energy inequality on " + std::to_string(checked) + " runs with gamma > 1: worst LHS/RHS = " + fd(worst) +
              " <= 1.05");
}

Outcome run_all() {
    Outcome o;
    std::vector<std::pair<Trajectory, ModelParams>> energy_runs;
    estimates_criteria(o, energy_runs);
    barenblatt_criterion(o, energy_runs);
    steady_criterion(o);
    sweep_criteria(o);
    weak_residual_criterion(o, energy_runs);
    energy_criterion(o, energy_runs);
    std::sort(o.lines.begin(), o.lines.end(), [](const Line& a, const Line& b) { return a.id < b.id; });
    return o;
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome first, second;
    try {
        first = run_all();
        second = run_all();
    } catch (const std::exception& e) {
        std::printf("acceptance aborted: %s\n", e.what());
        return 1;
    }
    const bool same = first.bytes == second.bytes && first.lines.size() == second.lines.size();
    first.add(9, same,
              "determinism: two executions of criteria 1-8 produced " + std::to_string(first.bytes.size()) +
                  " serialized bytes each, " + (same ? "identical" : "DIFFERENT"));

    bool all = true;
    for (const Line& l : first.lines) {
        all = all && l.pass;
        std::printf("criterion %d: %s  %s\n", l.id, l.pass ? "PASS" : "FAIL", l.text.c_str());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("acceptance: %s (%.1f s)\n", all ? "all criteria passed" : "FAILED", secs);
    return all ? 0 : 1;
}
