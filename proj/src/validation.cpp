#include "membrane_pme/validation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "membrane_pme/diagnostics.hpp"
#include "membrane_pme/effective_solver.hpp"
#include "membrane_pme/errors.hpp"
#include "membrane_pme/harness.hpp"
#include "membrane_pme/thin_layer_solver.hpp"

namespace membrane_pme {

namespace {

ModelParams pure_diffusion(double gamma, double mu) {
    ModelParams p;
    p.gamma = gamma;
    p.p_homeostatic = 100.0;
    p.g_max = 0.0;
    p.mu1 = mu;
    p.mu3 = mu;
    p.mu13 = 1.0;
    p.growth_law = GrowthLaw::constant_for_testing(0.0);
    return p;
}

RunSpec bump_spec(ProblemKind problem, double gamma, double center, double mu3) {
    RunSpec s;
    s.problem = problem;
    s.params.gamma = gamma;
    s.params.mu3 = mu3;
    s.mesh.length = 2.0;
    s.mesh.epsilon = 0.2;
    s.mesh.n_membrane = 4;
    s.mesh.n_outer = 45;
    s.mesh.n_side = 50;
    s.initial.shape = InitialData::Bump{center, 0.3, 0.8};
    s.t_final = 0.2;
    s.snapshots = SnapshotSchedule(uniform_times(s.t_final, 20));
    return s;
}

ValidationCase estimates_case(const std::string& name, const RunSpec& spec) {
    ValidationCase c;
    c.name = name;
    try {
        const Trajectory tr = execute(spec);
        const EstimateReport r = estimate_report(tr, spec.params, spec.effective.pinned_dirichlet.has_value());
        c.passed = r.all_ok();
        c.metric = std::min(r.linf.margin, r.mass_gronwall.margin);
        c.detail = "linf: " + r.linf.detail + "; gronwall: " + r.mass_gronwall.detail + "; energy: " +
                   r.energy_inequality.result.detail;
    } catch (const std::exception& e) {
        c.detail = std::string("run failed: ") + e.what();
    }
    return c;
}

}  // namespace

RunSpec barenblatt_spec(std::size_t refinement, double gamma) {
    RunSpec s;
    s.problem = ProblemKind::Thin;
    s.params = pure_diffusion(gamma, 1.0);
    s.mesh.length = 2.0;
    s.mesh.epsilon = 0.2;
    s.params.mu13 = s.params.mu1 / s.mesh.epsilon;  // μ2,ε = μ1: no membrane
    s.mesh.n_membrane = 4 * refinement;
    s.mesh.n_outer = 18 * refinement;
    s.initial.shape = InitialData::Barenblatt{0.5, 0.01};
    s.t_final = 0.04;
    s.snapshots = SnapshotSchedule(std::vector<double>{});
    return s;
}

BarenblattStudy barenblatt_study(const std::vector<std::size_t>& refinements, double gamma) {
    BarenblattStudy st;
    for (std::size_t r : refinements) {
        const RunSpec s = barenblatt_spec(r, gamma);
        const Trajectory tr = execute(s);
        const auto& b = std::get<InitialData::Barenblatt>(s.initial.shape);
        const BarenblattProfile prof(b.mass, s.params.gamma, s.params.mu1, b.t0);
        const Mesh& m = tr.mesh();
        const auto f = m.faces();
        const Field& fin = tr.final_state();
        double l1 = 0.0;
        for (std::size_t j = 0; j < m.num_cells(); ++j) {
            l1 += std::abs(fin.u[j] - prof.cell_average(b.t0 + fin.t, f[j], f[j + 1])) * (f[j + 1] - f[j]);
        }
        st.dx.push_back(m.widths()[0]);
        st.l1_errors.push_back(l1);
    }
    for (std::size_t i = 0; i + 1 < st.l1_errors.size(); ++i) {
        st.orders.push_back(std::log(st.l1_errors[i] / st.l1_errors[i + 1]) / std::log(st.dx[i] / st.dx[i + 1]));
    }
    return st;
}

SteadyStudy steady_study(const ModelParams& params_in, double length, double u_left, double u_right,
                         std::size_t n_side, double fault_flux_scale) {
    ModelParams params = params_in;
    params.growth_law = GrowthLaw::constant_for_testing(0.0);
    params.g_max = 0.0;
    const auto mesh = build_effective_mesh(length, n_side);
    EffectiveOptions opt;
    opt.pinned_dirichlet = PinnedDirichlet{u_left, u_right};
    opt.fault_flux_scale = fault_flux_scale;
    // linear-in-x start between the two boundary values
    std::vector<double> u0(mesh->num_cells());
    const auto xc = mesh->centers();
    for (std::size_t j = 0; j < u0.size(); ++j) {
        u0[j] = u_left + (u_right - u_left) * (xc[j] / length + 0.5);
    }
    const SteadyStateResult res = march_effective_to_steady(params, Field{mesh, u0, 0.0}, 1e-10, opt);
    const SteadyTwoRegion exact = steady_two_region(u_left, u_right, params, length);
    SteadyStudy st;
    st.flux_numeric = res.interface.flux_q;
    st.flux_exact = exact.flux;
    st.flux_rel_error = exact.flux != 0.0 ? std::abs(st.flux_numeric - exact.flux) / std::abs(exact.flux)
                                          : std::abs(st.flux_numeric);
    const double scale = std::max(u_left, u_right);
    for (std::size_t j = 0; j < u0.size(); ++j) {
        st.profile_rel_linf = std::max(st.profile_rel_linf, std::abs(res.field.u[j] - exact.u_at(xc[j])) / scale);
    }
    st.residual = res.residual;
    st.steps = res.steps;
    return st;
}

std::vector<ValidationCase> run_validation_suite(const ValidationOptions& options) {
    std::vector<ValidationCase> out;

    {
        ValidationCase c{"barenblatt_l1_order", false, false, 0.0, 0.9, ""};
        try {
            const auto st = barenblatt_study({2, 4, 8});
            c.metric = *std::min_element(st.orders.begin(), st.orders.end());
            c.passed = c.metric >= c.threshold;
            c.detail = "L1 errors";
            for (double e : st.l1_errors) c.detail += " " + format_double(e);
        } catch (const std::exception& e) {
            c.detail = e.what();
        }
        out.push_back(c);
    }

    const double fault = options.fault_inject_interface ? 0.5 : 1.0;
    auto steady_case = [&](const std::string& name, const ModelParams& p, double ul, double ur) {
        ValidationCase c{name, false, false, 0.0, 0.01, ""};
        try {
            const auto st = steady_study(p, 2.0, ul, ur, 200, fault);
            c.metric = std::max(st.flux_rel_error, st.profile_rel_linf);
            c.passed = c.metric < c.threshold;
            c.detail = "flux " + format_double(st.flux_numeric) + " vs " + format_double(st.flux_exact) +
                       ", profile rel. Linf " + format_double(st.profile_rel_linf);
        } catch (const std::exception& e) {
            c.detail = e.what();
        }
        out.push_back(c);
    };
    {
        ModelParams p;
        p.gamma = 1.0;
        p.p_homeostatic = 4.0;
        steady_case("steady_two_region_gamma1", p, 0.0, 2.0);
        ModelParams q;
        q.gamma = 2.0;
        q.p_homeostatic = 4.0;
        q.mu1 = 1.0;
        q.mu3 = 0.5;
        q.mu13 = 2.0;
        steady_case("steady_two_region_gamma2", q, 0.5, 1.5);
    }

    {
        ValidationCase c{"mirror_symmetry_thin", false, false, 0.0, 1e-12, ""};
        try {
            const RunSpec s = bump_spec(ProblemKind::Thin, 2.0, 0.0, 1.0);
            const Trajectory tr = execute(s);
            const auto& u = tr.final_state().u;
            double worst = 0.0;
            for (std::size_t j = 0; j < u.size(); ++j) worst = std::max(worst, std::abs(u[j] - u[u.size() - 1 - j]));
            c.metric = worst;
            c.passed = worst <= c.threshold;
            c.detail = "max |u(x) - u(-x)| at T";
        } catch (const std::exception& e) {
            c.detail = e.what();
        }
        out.push_back(c);
    }
    {
        ValidationCase c{"symmetric_interface_flux", false, false, 0.0, 1e-14, ""};
        try {
            const RunSpec s = bump_spec(ProblemKind::Effective, 2.0, 0.0, 1.0);
            const Trajectory tr = execute(s);
            double worst = 0.0;
            for (const auto& r : tr.ledger) worst = std::max(worst, std::abs(r.interface->flux_q));
            c.metric = worst;
            c.passed = worst <= c.threshold;
            c.detail = "max |flux_q| over all steps";
        } catch (const std::exception& e) {
            c.detail = e.what();
        }
        out.push_back(c);
    }
    {
        ValidationCase c{"large_permeability_limit", false, false, 0.0, 0.0, ""};
        try {
            RunSpec s = bump_spec(ProblemKind::Effective, 2.0, -0.3, 1.0);
            s.control.mode = StepMode::Implicit;
            s.control.dt_max = 2e-3;
            auto mesh = build_mesh(s);
            const Field u0 = initial_field(s, mesh);
            const Trajectory ref = run_single_domain(s.params, u0, s.t_final, s.control, s.snapshots);
            std::vector<double> dist;
            for (double mu13 : {1.0, 10.0, 100.0, 1e4, 1e6}) {
                s.params.mu13 = mu13;
                const Trajectory tr = run_effective(s.params, u0, s.t_final, s.control, s.snapshots);
                dist.push_back(restrict_compare(tr.final_state(), ref.final_state()).l1);
            }
            // With cell-average traces an infinitely permeable face merges its two neighbour
            // cells, which is not the two-point face of the single-domain run; the distance
            // therefore levels off at a mesh-dependent plateau instead of reaching zero.
            const double plateau = 1.05 * dist.back();
            bool mono = true;
            for (std::size_t i = 1; i < dist.size(); ++i) mono = mono && dist[i] <= std::max(dist[i - 1], plateau);
            c.threshold = 0.1 * dist.front();
            c.passed = mono && dist.back() <= c.threshold;
            c.metric = dist.back();
            c.detail = "L1 distance to the single-domain run for mu13 = 1 .. 1e6:";
            for (double d : dist) c.detail += " " + format_double(d);
        } catch (const std::exception& e) {
            c.detail = e.what();
        }
        out.push_back(c);
    }

    out.push_back(estimates_case("estimates_thin_gamma2", bump_spec(ProblemKind::Thin, 2.0, -0.4, 0.5)));
    out.push_back(estimates_case("estimates_effective_gamma2", bump_spec(ProblemKind::Effective, 2.0, -0.4, 0.5)));
    out.push_back(estimates_case("estimates_thin_gamma3", bump_spec(ProblemKind::Thin, 3.0, 0.2, 2.0)));
    {
        ValidationCase c = estimates_case("estimates_thin_gamma1", bump_spec(ProblemKind::Thin, 1.0, -0.4, 0.5));
        c.detail += " (energy inequality skipped for gamma = 1)";
        out.push_back(c);
    }
    if (options.extra_run) {
        const RunSpec& s = *options.extra_run;
        ValidationCase c = estimates_case(std::string("estimates_config_") + problem_name(s.problem), s);
        if (!s.params.energy_check_enabled()) c.detail += " (energy inequality skipped for gamma = 1)";
        out.push_back(c);
    }
    return out;
}

int cmd_validate(const ValidateOptions& options, const std::filesystem::path& out_dir, std::ostream& log,
                 std::ostream& err) {
    ValidationOptions vo;
    vo.fault_inject_interface = options.fault_inject_interface;
    if (options.extra_config) vo.extra_run = options.extra_config->run;
    std::vector<ValidationCase> cases;
    try {
        cases = run_validation_suite(vo);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitSolver;
    }
    bool all = true;
    nlohmann::json j = nlohmann::json::array();
    for (const auto& c : cases) {
        all = all && (c.passed || c.skipped);
        log << (c.skipped ? "SKIP" : c.passed ? "PASS" : "FAIL") << "  " << c.name << "  metric=" << format_double(c.metric)
            << "  threshold=" << format_double(c.threshold) << "  " << c.detail << "\n";
        j.push_back(nlohmann::json{{"name", c.name},
                                   {"passed", c.passed},
                                   {"skipped", c.skipped},
                                   {"metric", c.metric},
                                   {"threshold", c.threshold},
                                   {"detail", c.detail}});
    }
    log << (all ? "validation: all passed" : "validation: FAILED") << "\n";
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream(out_dir / "validation.json", std::ios::binary)
            << nlohmann::json{{"schema_version", kConfigSchemaVersion}, {"cases", j}, {"all_passed", all}}.dump(2)
            << "\n";
    }
    return all ? kExitOk : kExitVerdict;
}

}  // namespace membrane_pme
