#include "transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "membrane_pme/errors.hpp"

namespace membrane_pme {

void StepControl::validate() const {
    if (!(cfl_safety > 0.0 && cfl_safety < 1.0)) throw ConfigError("step.cfl_safety", "must lie in (0, 1)");
    if (!(dt_max > 0.0) || !std::isfinite(dt_max)) throw ConfigError("step.dt_max", "must be finite and > 0");
    if (!(newton_tol > 0.0)) throw ConfigError("step.newton_tol", "must be > 0");
    if (newton_max_iter < 1) throw ConfigError("step.newton_max_iter", "must be >= 1");
    if (max_steps < 1) throw ConfigError("step.max_steps", "must be >= 1");
}

std::vector<double> uniform_times(double t_final, std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) {
        t[k] = (k + 1 == n) ? t_final : t_final * static_cast<double>(k + 1) / static_cast<double>(n);
    }
    return t;
}

namespace detail {

namespace {

inline double fast_pow(double u, double gamma) {
    if (gamma == 2.0) return u * u;
    if (gamma == 1.0) return u;
    if (gamma == 3.0) return u * u * u;
    return std::pow(u, gamma);
}

}  // namespace

TransportOperator::TransportOperator(TransportSetup setup) : setup_(std::move(setup)) {
    const Mesh& m = *setup_.mesh;
    const std::size_t n = m.num_cells();
    if (setup_.mobility.size() != n) throw UsageError("mobility array does not match the mesh");
    for (double mu : setup_.mobility) {
        if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("mobilities must be finite and > 0");
    }
    const double g = setup_.params.gamma;
    kappa_ = g / (g + 1.0);
    w_bc_left_ = std::pow(setup_.bc_left, g + 1.0);
    w_bc_right_ = std::pow(setup_.bc_right, g + 1.0);
    p_bc_left_ = std::pow(setup_.bc_left, g);
    p_bc_right_ = std::pow(setup_.bc_right, g);

    const auto dx = m.widths();
    const auto& mu = setup_.mobility;
    trans_.assign(n + 1, 0.0);
    mu_face_.assign(n + 1, 0.0);
    dist_face_.assign(n + 1, 0.0);
    mu_face_[0] = mu[0];
    dist_face_[0] = 0.5 * dx[0];
    mu_face_[n] = mu[n - 1];
    dist_face_[n] = 0.5 * dx[n - 1];
    for (std::size_t f = 1; f < n; ++f) {
        dist_face_[f] = 0.5 * (dx[f - 1] + dx[f]);
        mu_face_[f] = (dx[f - 1] + dx[f]) / (dx[f - 1] / mu[f - 1] + dx[f] / mu[f]);
    }
    for (std::size_t f = 0; f <= n; ++f) trans_[f] = kappa_ * mu_face_[f] / dist_face_[f];

    if (setup_.kedem_katchalsky) {
        if (m.interface_faces().size() != 1) throw UsageError("Kedem-Katchalsky coupling needs exactly one interface face");
        kk_face_ = m.interface_faces()[0];
        if (kk_face_ < 2 || kk_face_ + 2 > n) throw UsageError("interface face too close to the boundary");
        trans_[kk_face_] = kappa_ * setup_.params.mu13 * setup_.kk_flux_scale;
        extrap_left_ = dx[kk_face_ - 1] / (dx[kk_face_ - 1] + dx[kk_face_ - 2]);
        extrap_right_ = dx[kk_face_] / (dx[kk_face_] + dx[kk_face_ + 1]);
    }
    reaction_bound_ = setup_.params.growth_law.reaction_rate_bound(g, setup_.params.g_max,
                                                                   setup_.params.p_homeostatic);
}

double TransportOperator::trace_w_left(std::span<const double> w) const {
    const std::size_t j = kk_face_ - 1;
    if (setup_.trace_mode == TraceMode::CellAverage) return w[j];
    return std::max(0.0, w[j] + extrap_left_ * (w[j] - w[j - 1]));
}

double TransportOperator::trace_w_right(std::span<const double> w) const {
    const std::size_t j = kk_face_;
    if (setup_.trace_mode == TraceMode::CellAverage) return w[j];
    return std::max(0.0, w[j] + extrap_right_ * (w[j] - w[j + 1]));
}

double TransportOperator::kk_flux(double w_left, double w_right) const {
    // μ̃1,3 (Π_R - Π_L), written so that InterfaceState::flux_q matches bit for bit
    return setup_.kk_flux_scale * (setup_.params.mu13 * (kappa_ * w_right - kappa_ * w_left));
}

void TransportOperator::fluxes(std::span<const double> w, std::span<double> phi) const {
    const std::size_t n = w.size();
    phi[0] = trans_[0] * (w[0] - w_bc_left_);
    for (std::size_t f = 1; f < n; ++f) phi[f] = trans_[f] * (w[f] - w[f - 1]);
    phi[n] = trans_[n] * (w_bc_right_ - w[n - 1]);
    if (setup_.kedem_katchalsky) phi[kk_face_] = kk_flux(trace_w_left(w), trace_w_right(w));
}

void TransportOperator::evaluate(State& s) const {
    const std::size_t n = s.u.size();
    const double g = setup_.params.gamma;
    const auto& law = setup_.params.growth_law;
    const double gm = setup_.params.g_max, ph = setup_.params.p_homeostatic;
    s.p.resize(n);
    s.w.resize(n);
    s.g.resize(n);
    s.phi.resize(n + 1);
    for (std::size_t j = 0; j < n; ++j) {
        const double uj = std::max(0.0, s.u[j]);
        s.p[j] = fast_pow(uj, g);
        s.w[j] = s.p[j] * uj;
        s.g[j] = law.evaluate(s.p[j], gm, ph);
    }
    fluxes(s.w, s.phi);
}

double TransportOperator::stable_dt(const State& s, const StepControl& control) const {
    const std::size_t n = s.u.size();
    const auto dx = mesh().widths();
    const double g = setup_.params.gamma;
    double dt = std::numeric_limits<double>::infinity();
    bool any_mass = false;
    for (std::size_t j = 0; j < n; ++j) {
        double pmax = s.p[j];
        if (j > 0) pmax = std::max(pmax, s.p[j - 1]);
        if (j + 1 < n) pmax = std::max(pmax, s.p[j + 1]);
        if (!(pmax > 0.0)) continue;
        any_mass = true;
        double t_sum = trans_[j] + trans_[j + 1];
        if (setup_.kedem_katchalsky && setup_.trace_mode == TraceMode::Extrapolated &&
            (j + 1 == kk_face_ || j == kk_face_ || j + 2 == kk_face_ || j == kk_face_ + 1)) {
            t_sum += 2.0 * trans_[kk_face_];
        }
        // uniform interior cells: Δx / ((γ+1) u^γ · 2κμ/Δx) = Δx² / (2 γ μ u^γ)
        dt = std::min(dt, dx[j] / ((g + 1.0) * pmax * t_sum));
    }
    if (!any_mass) return control.dt_max;
    dt *= control.cfl_safety;
    if (reaction_bound_ > 0.0) dt = std::min(dt, control.cfl_safety / reaction_bound_);
    return std::min(dt, control.dt_max);
}

void TransportOperator::explicit_update(State& s, double dt) const {
    const auto dx = mesh().widths();
    const std::size_t n = s.u.size();
    for (std::size_t j = 0; j < n; ++j) {
        s.u[j] += dt / dx[j] * (s.phi[j + 1] - s.phi[j]) + dt * s.u[j] * s.g[j];
    }
}

int TransportOperator::implicit_update(State& s, double dt, const StepControl& control) {
    const Mesh& m = mesh();
    const auto dx = m.widths();
    const std::size_t n = s.u.size();
    const double g = setup_.params.gamma;
    const std::vector<double> u_old = s.u;
    std::vector<double> reaction(n);
    for (std::size_t j = 0; j < n; ++j) reaction[j] = dt * u_old[j] * s.g[j];

    res_.resize(n);
    trial_.resize(n);
    w_tmp_.resize(n);
    phi_tmp_.resize(n + 1);
    dw_.resize(n);

    // Round-off level of the residual: with a very stiff face the flux terms are large
    // and cancel, so an absolute tolerance alone can be out of reach. Below this level
    // an iteration that no longer halves the residual ends the solve.
    double floor = 0.0;
    auto residual = [&](const std::vector<double>& u, std::vector<double>& r) {
        for (std::size_t j = 0; j < n; ++j) {
            const double uj = std::max(0.0, u[j]);
            w_tmp_[j] = fast_pow(uj, g) * uj;
        }
        fluxes(w_tmp_, phi_tmp_);
        double norm = 0.0;
        floor = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double c = dt / dx[j];
            r[j] = u[j] - u_old[j] - c * (phi_tmp_[j + 1] - phi_tmp_[j]) - reaction[j];
            norm = std::max(norm, std::abs(r[j]));
            // gross size of the face terms before cancellation
            const double wl = j > 0 ? w_tmp_[j - 1] : 0.0, wr = j + 1 < n ? w_tmp_[j + 1] : 0.0;
            const double gross = trans_[j] * (wl + w_tmp_[j]) + trans_[j + 1] * (w_tmp_[j] + wr);
            floor = std::max(floor, std::abs(u[j]) + std::abs(u_old[j]) + c * gross + std::abs(reaction[j]));
        }
        floor *= 64.0 * std::numeric_limits<double>::epsilon();
        return norm;
    };

    std::vector<double> u = u_old;
    std::vector<double> r_trial(n);
    double norm = residual(u, res_);
    std::vector<double> trace{norm};
    int iter = 0;
    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> triplets;
    triplets.reserve(7 * n);
    Eigen::VectorXd rhs(n);

    double prev_norm = std::numeric_limits<double>::infinity();
    while (norm > control.newton_tol && !(norm <= floor && norm > 0.5 * prev_norm)) {
        if (iter >= control.newton_max_iter) {
            throw StepFailure("Newton did not converge in " + std::to_string(iter) + " iterations (dt = " +
                                  std::to_string(dt) + ")",
                              trace);
        }
        ++iter;
        for (std::size_t j = 0; j < n; ++j) {
            const double uj = std::max(0.0, u[j]);
            dw_[j] = (g + 1.0) * fast_pow(uj, g);
        }
        // d(Φ_{j+1} - Φ_j)/du for two-point faces; the KK face is patched below
        triplets.clear();
        for (std::size_t j = 0; j < n; ++j) {
            const double c = dt / dx[j];
            double diag = 1.0;
            const std::size_t fl = j, fr = j + 1;
            const bool kk_l = setup_.kedem_katchalsky && fl == kk_face_;
            const bool kk_r = setup_.kedem_katchalsky && fr == kk_face_;
            if (!kk_r) {
                diag += c * trans_[fr] * dw_[j];
                if (j + 1 < n) triplets.emplace_back(j, j + 1, -c * trans_[fr] * dw_[j + 1]);
            }
            if (!kk_l) {
                diag += c * trans_[fl] * dw_[j];
                if (j > 0) triplets.emplace_back(j, j - 1, -c * trans_[fl] * dw_[j - 1]);
            }
            triplets.emplace_back(j, j, diag);
        }
        if (setup_.kedem_katchalsky) {
            // Φ_k = s κ μ̃13 (ŵ_R - ŵ_L); ŵ depends on u_{k-2}, u_{k-1} (left) and u_k, u_{k+1} (right)
            const std::size_t k = kk_face_;
            const double tk = trans_[k];
            std::vector<std::pair<std::size_t, double>> dphi;  // ∂Φ_k/∂u_i
            if (setup_.trace_mode == TraceMode::CellAverage) {
                dphi = {{k - 1, -tk * dw_[k - 1]}, {k, tk * dw_[k]}};
            } else {
                const double wl = w_tmp_[k - 1] + extrap_left_ * (w_tmp_[k - 1] - w_tmp_[k - 2]);
                const double wr = w_tmp_[k] + extrap_right_ * (w_tmp_[k] - w_tmp_[k + 1]);
                if (wl > 0.0) {
                    dphi.push_back({k - 1, -tk * (1.0 + extrap_left_) * dw_[k - 1]});
                    dphi.push_back({k - 2, tk * extrap_left_ * dw_[k - 2]});
                }
                if (wr > 0.0) {
                    dphi.push_back({k, tk * (1.0 + extrap_right_) * dw_[k]});
                    dphi.push_back({k + 1, -tk * extrap_right_ * dw_[k + 1]});
                }
            }
            // cell k-1 sees +Φ_k, cell k sees -Φ_k
            for (const auto& [i, d] : dphi) {
                triplets.emplace_back(k - 1, i, -dt / dx[k - 1] * d);
                triplets.emplace_back(k, i, dt / dx[k] * d);
            }
        }
        jac_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        jac_.setFromTriplets(triplets.begin(), triplets.end());
        if (!pattern_ready_) {
            lu_.analyzePattern(jac_);
            pattern_ready_ = true;
        }
        lu_.factorize(jac_);
        if (lu_.info() != Eigen::Success) throw StepFailure("singular Newton Jacobian", trace);
        for (std::size_t j = 0; j < n; ++j) rhs[static_cast<Eigen::Index>(j)] = -res_[j];
        const Eigen::VectorXd delta = lu_.solve(rhs);

        // damped update with projection onto u >= 0
        double lambda = 1.0;
        double trial_norm = 0.0;
        for (int ls = 0;; ++ls) {
            for (std::size_t j = 0; j < n; ++j) {
                trial_[j] = std::max(0.0, u[j] + lambda * delta[static_cast<Eigen::Index>(j)]);
            }
            trial_norm = residual(trial_, r_trial);
            if (trial_norm < norm || ls >= 30) break;
            lambda *= 0.5;
        }
        if (!std::isfinite(trial_norm)) throw StepFailure("Newton produced a non-finite residual", trace);
        u.swap(trial_);
        res_.swap(r_trial);
        prev_norm = norm;
        norm = trial_norm;
        trace.push_back(norm);
    }
    s.u = std::move(u);
    return iter;
}

int TransportOperator::step(State& s, double dt, const StepControl& control) {
    int iters = 0;
    if (control.mode == StepMode::Explicit) {
        explicit_update(s, dt);
    } else {
        iters = implicit_update(s, dt, control);
    }
    for (std::size_t j = 0; j < s.u.size(); ++j) {
        if (!std::isfinite(s.u[j])) {
            throw NumericError("non-finite density in cell " + std::to_string(j), static_cast<long>(j));
        }
    }
    evaluate(s);
    return iters;
}

InterfaceState TransportOperator::interface_state(const State& s) const {
    if (!setup_.kedem_katchalsky) return {};
    const double wl = trace_w_left(s.w), wr = trace_w_right(s.w);
    return InterfaceState{kappa_ * wl, kappa_ * wr, kk_flux(wl, wr)};
}

double TransportOperator::steady_residual(const State& s) const {
    const auto dx = mesh().widths();
    double r = 0.0;
    for (std::size_t j = 0; j < s.u.size(); ++j) {
        r = std::max(r, std::abs((s.phi[j + 1] - s.phi[j]) / dx[j] + s.u[j] * s.g[j]));
    }
    return r;
}

StepRecord TransportOperator::record(const State& s, double t, double dt) const {
    const Mesh& m = mesh();
    const auto dx = m.widths();
    const std::size_t n = s.u.size();
    StepRecord r;
    r.t = t;
    r.dt = dt;
    r.max_u = -std::numeric_limits<double>::infinity();
    r.min_u = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        r.mass += s.u[j] * dx[j];
        r.max_u = std::max(r.max_u, s.u[j]);
        r.min_u = std::min(r.min_u, s.u[j]);
        r.production += s.p[j] * s.g[j] * dx[j];
        r.pressure_integral += s.p[j] * dx[j];
        r.reaction_integral += s.u[j] * s.g[j] * dx[j];
    }
    auto add_dissipation = [&](std::size_t f, double dp) {
        const double grad = dp / dist_face_[f];
        r.dissipation += mu_face_[f] * grad * grad * dist_face_[f];
    };
    add_dissipation(0, s.p[0] - p_bc_left_);
    add_dissipation(n, p_bc_right_ - s.p[n - 1]);
    for (std::size_t f = 1; f < n; ++f) {
        if (setup_.kedem_katchalsky && f == kk_face_) continue;  // bulk terms only
        add_dissipation(f, s.p[f] - s.p[f - 1]);
    }
    r.boundary_flux = s.phi[n] - s.phi[0];
    if (setup_.kedem_katchalsky) {
        r.interface = interface_state(s);
    } else {
        const double g = setup_.params.gamma;
        const auto& mu = setup_.mobility;
        for (std::size_t f : m.interface_faces()) {
            const double al = mu[f - 1] / (0.5 * dx[f - 1]);
            const double ar = mu[f] / (0.5 * dx[f]);
            const double wf = (al * s.w[f - 1] + ar * s.w[f]) / (al + ar);
            r.probes.push_back(FaceProbe{f, s.phi[f], s.u[f - 1], s.u[f], std::pow(wf, 1.0 / (g + 1.0))});
        }
    }
    return r;
}

State make_state(const TransportOperator& op, const Field& field) {
    State s;
    s.u = field.u;
    op.evaluate(s);
    return s;
}

void check_initial_admissible(const Field& u0, const ModelParams& params) {
    const double u_h = params.u_homeostatic();
    for (std::size_t j = 0; j < u0.u.size(); ++j) {
        const double v = u0.u[j];
        if (!std::isfinite(v) || v < 0.0 || v > u_h * (1.0 + 1e-12)) {
            throw ConfigError("initial", "initial density must satisfy 0 <= u0 <= u_H = " + std::to_string(u_h) +
                                             " (cell " + std::to_string(j) + ")");
        }
    }
}

Trajectory run_transport(TransportOperator& op, const Field& u0, double t_final, const StepControl& control,
                         const SnapshotSchedule& schedule) {
    control.validate();
    if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw ConfigError("time.t_final", "must be finite and >= 0");
    if (u0.mesh.get() != &op.mesh()) throw UsageError("initial field lives on a different mesh");

    std::vector<double> targets;
    for (double t : schedule.times) {
        if (t > 0.0 && t < t_final) targets.push_back(t);
    }
    if (t_final > 0.0) targets.push_back(t_final);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

    Trajectory traj;
    State s = make_state(op, u0);
    traj.snapshots.push_back(Field{op.mesh_ptr(), s.u, 0.0});
    traj.ledger.push_back(op.record(s, 0.0, 0.0));

    double t = 0.0;
    std::size_t next = 0;
    std::size_t steps = 0;
    // Implicit steps that fail are retried at half the size; the size then recovers
    // by doubling back towards dt_max.
    double implicit_dt = control.dt_max;
    constexpr int kMaxHalvings = 30;
    while (next < targets.size()) {
        const double target = targets[next];
        double dt = control.mode == StepMode::Explicit ? op.stable_dt(s, control) : implicit_dt;
        bool hit = false;
        if (t + dt >= target - 1e-12 * std::max(1.0, target)) {
            dt = target - t;
            hit = true;
        }
        int iters = 0;
        if (control.mode == StepMode::Explicit) {
            iters = op.step(s, dt, control);
        } else {
            for (int halvings = 0;; ++halvings) {
                State backup = s;
                try {
                    iters = op.step(s, dt, control);
                    break;
                } catch (const StepFailure&) {
                    if (halvings >= kMaxHalvings) throw;
                    s = std::move(backup);
                    dt *= 0.5;
                    hit = false;
                }
            }
            implicit_dt = std::min(control.dt_max, 2.0 * dt);
        }
        t = hit ? target : t + dt;
        if (++steps > control.max_steps) throw StepFailure("step budget exhausted at t = " + std::to_string(t));
        StepRecord rec = op.record(s, t, dt);
        rec.newton_iterations = iters;
        traj.ledger.push_back(std::move(rec));
        if (hit || schedule.every_step) traj.snapshots.push_back(Field{op.mesh_ptr(), s.u, t});
        if (hit) ++next;
    }
    return traj;
}

}  // namespace detail
}  // namespace membrane_pme
