#include "membrane_pme/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <ostream>
#include <sstream>
#include <thread>

#include "membrane_pme/errors.hpp"
#include "membrane_pme/oracles.hpp"
#include "membrane_pme/thin_layer_solver.hpp"

namespace membrane_pme {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- config reading

class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "$" : path_, "expected an object");
    }

    std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key); }

    void allow_only(std::initializer_list<const char*> keys) const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
                throw ConfigError(sub(it.key()), "unknown key");
            }
        }
    }

    Reader object(const std::string& key) const {
        if (!has(key)) throw ConfigError(sub(key), "required");
        return Reader(j_.at(key), sub(key));
    }

    double number(const std::string& key) const {
        if (!has(key)) throw ConfigError(sub(key), "required");
        const json& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(sub(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(sub(key), "must be finite");
        return d;
    }
    double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::size_t count(const std::string& key, std::size_t fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(sub(key), "expected a non-negative integer");
        return static_cast<std::size_t>(v.get<long long>());
    }

    std::string text(const std::string& key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(sub(key), "expected a string");
        return v.get<std::string>();
    }

    bool flag(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(sub(key), "expected true or false");
        return v.get<bool>();
    }

    std::vector<double> numbers(const std::string& key) const {
        if (!has(key)) throw ConfigError(sub(key), "required");
        const json& v = j_.at(key);
        if (!v.is_array()) throw ConfigError(sub(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigError(sub(key) + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    const json& raw() const { return j_; }
    const std::string& path() const { return path_; }

private:
    const json& j_;
    std::string path_;
};

ModelParams read_model(const Reader& r) {
    r.allow_only({"gamma", "p_homeostatic", "g_max", "mu1", "mu3", "mu13", "growth_law"});
    ModelParams p;
    p.gamma = r.number("gamma");
    p.p_homeostatic = r.number("p_homeostatic");
    p.g_max = r.number("g_max");
    p.mu1 = r.number("mu1");
    p.mu3 = r.number("mu3");
    p.mu13 = r.number("mu13");
    if (r.has("growth_law")) {
        const Reader g = r.object("growth_law");
        const std::string kind = g.text("kind", "affine");
        if (kind == "affine") {
            g.allow_only({"kind"});
            p.growth_law = GrowthLaw::affine();
        } else if (kind == "table") {
            g.allow_only({"kind", "pressures", "rates"});
            try {
                p.growth_law = GrowthLaw::table(g.numbers("pressures"), g.numbers("rates"));
            } catch (const ConfigError& e) {
                throw ConfigError(g.path(), e.what());
            }
        } else if (kind == "constant") {
            g.allow_only({"kind", "value", "test_only"});
            if (!g.flag("test_only", false)) {
                throw ConfigError(g.sub("test_only"), "the constant growth law violates the growth assumptions; "
                                                      "set test_only = true to use it");
            }
            p.growth_law = GrowthLaw::constant_for_testing(g.number("value"));
        } else {
            throw ConfigError(g.sub("kind"), "expected affine, table or constant");
        }
    }
    p.validate();
    return p;
}

InitialData::Bump read_bump(const Reader& r) {
    InitialData::Bump b;
    b.center = r.number("center");
    b.half_width = r.number("half_width");
    b.amplitude = r.number("amplitude");
    if (!(b.half_width > 0.0)) throw ConfigError(r.sub("half_width"), "must be > 0");
    if (b.amplitude < 0.0) throw ConfigError(r.sub("amplitude"), "must be >= 0");
    return b;
}

InitialData read_initial(const Reader& r, double length) {
    const std::string kind = r.text("kind", "zero");
    InitialData d;
    const double half_l = 0.5 * length;
    auto check_support = [&](const InitialData::Bump& b, const std::string& path) {
        if (b.center - b.half_width <= -half_l || b.center + b.half_width >= half_l) {
            throw ConfigError(path, "bump support must stay inside the domain");
        }
    };
    if (kind == "zero") {
        r.allow_only({"kind"});
        d.shape = InitialData::Zero{};
    } else if (kind == "constant") {
        r.allow_only({"kind", "value"});
        const double v = r.number("value");
        if (v < 0.0) throw ConfigError(r.sub("value"), "must be >= 0");
        d.shape = InitialData::Constant{v};
    } else if (kind == "bump") {
        r.allow_only({"kind", "center", "half_width", "amplitude"});
        const auto b = read_bump(r);
        check_support(b, r.path());
        d.shape = b;
    } else if (kind == "bumps") {
        r.allow_only({"kind", "bumps"});
        if (!r.raw().contains("bumps") || !r.raw().at("bumps").is_array()) {
            throw ConfigError(r.sub("bumps"), "expected an array of bumps");
        }
        InitialData::BumpSum s;
        const json& arr = r.raw().at("bumps");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const Reader br(arr[i], r.sub("bumps") + "[" + std::to_string(i) + "]");
            br.allow_only({"center", "half_width", "amplitude"});
            s.bumps.push_back(read_bump(br));
            check_support(s.bumps.back(), br.path());
        }
        d.shape = s;
    } else if (kind == "barenblatt") {
        r.allow_only({"kind", "mass", "t0"});
        InitialData::Barenblatt b;
        b.mass = r.number("mass", b.mass);
        b.t0 = r.number("t0", b.t0);
        if (!(b.mass > 0.0)) throw ConfigError(r.sub("mass"), "must be > 0");
        if (!(b.t0 > 0.0)) throw ConfigError(r.sub("t0"), "must be > 0");
        d.shape = b;
    } else {
        throw ConfigError(r.sub("kind"), "expected zero, constant, bump, bumps or barenblatt");
    }
    return d;
}

StepControl read_step(const Reader& r) {
    r.allow_only({"mode", "cfl_safety", "dt_max", "newton_tol", "newton_max_iter", "max_steps"});
    StepControl c;
    const std::string mode = r.text("mode", "explicit");
    if (mode == "explicit") {
        c.mode = StepMode::Explicit;
    } else if (mode == "implicit") {
        c.mode = StepMode::Implicit;
    } else {
        throw ConfigError(r.sub("mode"), "expected explicit or implicit");
    }
    c.cfl_safety = r.number("cfl_safety", c.cfl_safety);
    c.dt_max = r.number("dt_max", c.dt_max);
    c.newton_tol = r.number("newton_tol", c.newton_tol);
    c.newton_max_iter = static_cast<int>(r.count("newton_max_iter", static_cast<std::size_t>(c.newton_max_iter)));
    c.max_steps = r.count("max_steps", c.max_steps);
    c.validate();
    return c;
}

EffectiveOptions read_effective(const Reader& r) {
    r.allow_only({"trace_mode", "pinned_dirichlet"});
    EffectiveOptions o;
    const std::string mode = r.text("trace_mode", "cell_average");
    if (mode == "cell_average") {
        o.trace_mode = TraceMode::CellAverage;
    } else if (mode == "extrapolated") {
        o.trace_mode = TraceMode::Extrapolated;
    } else {
        throw ConfigError(r.sub("trace_mode"), "expected cell_average or extrapolated");
    }
    if (r.has("pinned_dirichlet")) {
        const Reader d = r.object("pinned_dirichlet");
        d.allow_only({"left", "right", "test_only"});
        if (!d.flag("test_only", false)) {
            throw ConfigError(d.sub("test_only"), "pinned Dirichlet data is a test-only mode; set test_only = true");
        }
        PinnedDirichlet pd{d.number("left"), d.number("right")};
        if (pd.left < 0.0) throw ConfigError(d.sub("left"), "must be >= 0");
        if (pd.right < 0.0) throw ConfigError(d.sub("right"), "must be >= 0");
        o.pinned_dirichlet = pd;
    }
    return o;
}

SnapshotSchedule read_time(const Reader& r, double& t_final) {
    r.allow_only({"t_final", "snapshots", "n_snapshots"});
    t_final = r.number("t_final");
    if (!(t_final >= 0.0)) throw ConfigError(r.sub("t_final"), "must be >= 0");
    if (r.has("snapshots") && r.has("n_snapshots")) {
        throw ConfigError(r.path(), "give either snapshots or n_snapshots, not both");
    }
    if (r.has("snapshots")) {
        const auto t = r.numbers("snapshots");
        for (std::size_t i = 0; i < t.size(); ++i) {
            const std::string p = r.sub("snapshots") + "[" + std::to_string(i) + "]";
            if (!(t[i] > 0.0) || t[i] > t_final) throw ConfigError(p, "snapshot times must lie in (0, t_final]");
            if (i > 0 && !(t[i] > t[i - 1])) throw ConfigError(p, "snapshot times must be strictly increasing");
        }
        return SnapshotSchedule(t);
    }
    const std::size_t n = r.count("n_snapshots", 10);
    if (n == 0 || t_final == 0.0) return SnapshotSchedule(std::vector<double>{});
    return SnapshotSchedule(uniform_times(t_final, n));
}

SweepConfig read_sweep(const Reader& r, const RunSpec& base) {
    r.allow_only({"epsilon_list", "n_membrane", "outer_dx", "norm", "n_compare_times", "flux_floor_fraction"});
    SweepConfig s;
    s.base = base;
    s.epsilon_list = r.numbers("epsilon_list");
    const double half_l = 0.5 * base.mesh.length;
    if (s.epsilon_list.empty()) throw ConfigError(r.sub("epsilon_list"), "must not be empty");
    for (std::size_t i = 0; i < s.epsilon_list.size(); ++i) {
        const std::string p = r.sub("epsilon_list") + "[" + std::to_string(i) + "]";
        const double e = s.epsilon_list[i];
        if (!(e > 0.0) || !(e < half_l)) throw ConfigError(p, "each epsilon must lie in (0, L/2)");
        if (i > 0 && !(e < s.epsilon_list[i - 1])) throw ConfigError(p, "epsilon_list must be strictly decreasing");
    }
    s.n_membrane = r.count("n_membrane", s.n_membrane);
    if (s.n_membrane < kMinMembraneCells) throw ConfigError(r.sub("n_membrane"), "at least 4 membrane cells required");
    s.outer_dx = r.number("outer_dx", s.outer_dx);
    if (!(s.outer_dx > 0.0)) throw ConfigError(r.sub("outer_dx"), "must be > 0");
    const std::string norm = r.text("norm", "l1");
    if (norm == "l1") {
        s.norm = NormKind::L1;
    } else if (norm == "l2") {
        s.norm = NormKind::L2;
    } else if (norm == "linf") {
        s.norm = NormKind::Linf;
    } else {
        throw ConfigError(r.sub("norm"), "expected l1, l2 or linf");
    }
    s.n_compare_times = r.count("n_compare_times", s.n_compare_times);
    if (s.n_compare_times < 1) throw ConfigError(r.sub("n_compare_times"), "must be >= 1");
    s.flux_floor_fraction = r.number("flux_floor_fraction", s.flux_floor_fraction);
    if (!(s.flux_floor_fraction > 0.0)) throw ConfigError(r.sub("flux_floor_fraction"), "must be > 0");
    if (s.outer_cells(s.epsilon_list.front()) < kMinOuterCells || s.side_cells() < kMinSideCells) {
        throw ConfigError(r.sub("outer_dx"), "too coarse for the minimum cell counts");
    }
    return s;
}

// ---------------------------------------------------------------- helpers

double norm_of(const ErrorNorms& n, NormKind k) {
    switch (k) {
        case NormKind::L1: return n.l1;
        case NormKind::L2: return n.l2;
        case NormKind::Linf: return n.linf;
    }
    return n.l1;
}

const char* norm_name(NormKind k) {
    switch (k) {
        case NormKind::L1: return "l1";
        case NormKind::L2: return "l2";
        case NormKind::Linf: return "linf";
    }
    return "l1";
}

// Least-squares slope of log y against log x over the positive pairs.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    if (lx.size() < 2) return 0.0;
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double den = n * sxx - sx * sx;
    return den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
}

json check_json(const CheckResult& c) {
    return json{{"ok", c.ok}, {"skipped", c.skipped}, {"margin", c.margin}, {"detail", c.detail}};
}

json report_json(const EstimateReport& r) {
    json series = json::array();
    for (const auto& s : r.dt_u_l1_series) series.push_back(json{{"t0", s.t0}, {"t1", s.t1}, {"value", s.value}});
    json energy = check_json(r.energy_inequality.result);
    energy["lhs"] = r.energy_inequality.lhs;
    energy["rhs"] = r.energy_inequality.rhs;
    return json{{"linf", check_json(r.linf)},
                {"mass_gronwall", check_json(r.mass_gronwall)},
                {"energy_inequality", energy},
                {"dt_u_l1_series", series},
                {"notes", r.notes},
                {"all_ok", r.all_ok()}};
}

json params_json(const ModelParams& p) {
    json law;
    if (p.growth_law.is_affine()) {
        law = json{{"kind", "affine"}};
    } else if (p.growth_law.is_table()) {
        const auto& t = std::get<GrowthLaw::Table>(p.growth_law.definition());
        law = json{{"kind", "table"}, {"pressures", t.pressures}, {"rates", t.rates}};
    } else {
        law = json{{"kind", "constant"},
                   {"value", std::get<GrowthLaw::Constant>(p.growth_law.definition()).value},
                   {"test_only", true}};
    }
    return json{{"gamma", p.gamma},     {"p_homeostatic", p.p_homeostatic}, {"g_max", p.g_max},
                {"mu1", p.mu1},         {"mu3", p.mu3},                     {"mu13", p.mu13},
                {"u_homeostatic", p.u_homeostatic()}, {"growth_law", law}};
}

// Evenly spread indices 0..n-1, at most `keep`, always including the last.
std::vector<std::size_t> downsample(std::size_t n, std::size_t keep) {
    std::vector<std::size_t> idx;
    if (n == 0) return idx;
    if (n <= keep) {
        for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
        return idx;
    }
    for (std::size_t k = 0; k < keep; ++k) idx.push_back(k * (n - 1) / (keep - 1));
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("--out", "cannot write " + p.string());
    f << content;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Thin-run quantities at the membrane faces for one snapshot: (Π(u_f⁻), Π(u_f⁺)).
std::pair<double, double> thin_face_pis(const Field& f, std::span<const double> mobilities, const ModelParams& params) {
    const auto faces = f.mesh->interface_faces();
    const double lo = reconstructed_face_value(f, faces[0], mobilities, params);
    const double hi = reconstructed_face_value(f, faces[1], mobilities, params);
    return {pi_of_u(lo, params), pi_of_u(hi, params)};
}

template <class F>
int guarded(std::ostream& err, const std::filesystem::path& out_dir, F&& body) {
    auto fail = [&](int code, const std::string& kind, const std::string& what, const json& extra) {
        err << "error (" << kind << "): " << what << "\n";
        if (!out_dir.empty()) {
            json j{{"error", what}, {"kind", kind}, {"exit_code", code}};
            j.update(extra);
            std::error_code ec;
            std::filesystem::create_directories(out_dir, ec);
            std::ofstream(out_dir / "error.json", std::ios::binary) << dump(j);
        }
        return code;
    };
    try {
        return body();
    } catch (const ConfigError& e) {
        return fail(kExitConfig, "config", e.what(), json{{"path", e.path()}});
    } catch (const GeometryError& e) {
        return fail(kExitConfig, "geometry", e.what(), json::object());
    } catch (const StepFailure& e) {
        return fail(kExitSolver, "step_failure", e.what(), json{{"residual_trace", e.residual_trace()}});
    } catch (const NumericError& e) {
        return fail(kExitSolver, "numeric", e.what(), json{{"cell", e.cell()}});
    } catch (const DomainError& e) {
        return fail(kExitConfig, "domain", e.what(), json::object());
    } catch (const UsageError& e) {
        return fail(kExitConfig, "usage", e.what(), json::object());
    }
}

}  // namespace

// ---------------------------------------------------------------- config

std::size_t SweepConfig::outer_cells(double epsilon) const {
    return static_cast<std::size_t>(std::ceil((0.5 * (base.mesh.length - epsilon)) / outer_dx - 1e-9));
}

std::size_t SweepConfig::side_cells() const {
    return static_cast<std::size_t>(std::ceil((0.5 * base.mesh.length) / outer_dx - 1e-9));
}

Config parse_config(const json& doc) {
    const Reader root(doc, "");
    root.allow_only({"schema_version", "description", "model", "domain", "mesh", "initial", "time", "step",
                     "effective", "sweep"});
    if (!root.has("schema_version")) throw ConfigError("schema_version", "required");
    if (!doc.at("schema_version").is_number_integer() || doc.at("schema_version").get<int>() != kConfigSchemaVersion) {
        throw ConfigError("schema_version", "unsupported schema version (expected 1)");
    }
    Config c;
    RunSpec& r = c.run;
    r.params = read_model(root.object("model"));

    const Reader dom = root.object("domain");
    dom.allow_only({"length"});
    r.mesh.length = dom.number("length");
    if (!(r.mesh.length > 0.0)) throw ConfigError("domain.length", "must be > 0");

    if (root.has("mesh")) {
        const Reader m = root.object("mesh");
        m.allow_only({"epsilon", "n_membrane", "n_outer", "n_side"});
        r.mesh.epsilon = m.number("epsilon", r.mesh.epsilon);
        r.mesh.n_membrane = m.count("n_membrane", r.mesh.n_membrane);
        r.mesh.n_outer = m.count("n_outer", r.mesh.n_outer);
        r.mesh.n_side = m.count("n_side", r.mesh.n_side);
        if (!(r.mesh.epsilon > 0.0)) throw ConfigError("mesh.epsilon", "must be > 0");
        if (!(r.mesh.epsilon < r.mesh.length)) throw ConfigError("mesh.epsilon", "must be smaller than domain.length");
        if (r.mesh.n_membrane < kMinMembraneCells) throw ConfigError("mesh.n_membrane", "at least 4 required");
        if (r.mesh.n_outer < kMinOuterCells) throw ConfigError("mesh.n_outer", "at least 8 required");
        if (r.mesh.n_side < kMinSideCells) throw ConfigError("mesh.n_side", "at least 8 required");
    }
    r.initial = root.has("initial") ? read_initial(root.object("initial"), r.mesh.length) : InitialData{};
    r.snapshots = read_time(root.object("time"), r.t_final);
    r.control = root.has("step") ? read_step(root.object("step")) : StepControl{};
    if (root.has("effective")) r.effective = read_effective(root.object("effective"));
    if (root.has("sweep")) c.sweep = read_sweep(root.object("sweep"), r);
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("--config", "cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("$", std::string("JSON parse error: ") + e.what());
    }
    return parse_config(doc);
}

// ---------------------------------------------------------------- diagnostics of the sweep

double flux_jump_diagnostic(const Trajectory& thin, const ModelParams& params, double floor_fraction) {
    const std::size_t n = thin.ledger.size();
    if (n < 2) throw UsageError("flux_jump_diagnostic: ledger too short");
    std::vector<double> bar(n), gap(n);
    double peak = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& pr = thin.ledger[k].probes;
        if (pr.size() != 2) throw UsageError("flux_jump_diagnostic: thin-layer ledger required");
        bar[k] = 0.5 * (pr[0].flux + pr[1].flux);
        const double kk = params.mu13 * (pi_of_u(pr[1].u_face, params) - pi_of_u(pr[0].u_face, params));
        gap[k] = std::abs(bar[k] - kk);
        peak = std::max(peak, std::abs(bar[k]));
    }
    if (peak == 0.0) return 0.0;
    const double floor = floor_fraction * peak;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double dt = thin.ledger[k + 1].t - thin.ledger[k].t;
        num += 0.5 * dt * (gap[k] + gap[k + 1]);
        den += 0.5 * dt * (std::max(std::abs(bar[k]), floor) + std::max(std::abs(bar[k + 1]), floor));
    }
    return den > 0.0 ? num / den : 0.0;
}

double trace_gap_diagnostic(const Trajectory& thin, std::span<const double> thin_mobilities,
                            const Trajectory& effective, const ModelParams& params) {
    if (thin.snapshots.size() != effective.snapshots.size() || thin.snapshots.size() < 2) {
        throw UsageError("trace_gap_diagnostic: runs must share their snapshot times");
    }
    const std::size_t k0 = effective.mesh().interface_faces()[0];
    std::vector<double> gap(thin.snapshots.size());
    for (std::size_t k = 0; k < thin.snapshots.size(); ++k) {
        const Field& a = thin.snapshots[k];
        const Field& b = effective.snapshots[k];
        if (std::abs(a.t - b.t) > 1e-12 * std::max(1.0, a.t)) throw UsageError("trace_gap_diagnostic: time mismatch");
        const auto [lo, hi] = thin_face_pis(a, thin_mobilities, params);
        const double el = pi_of_u(b.u[k0 - 1], params), er = pi_of_u(b.u[k0], params);
        gap[k] = 0.5 * (std::abs(lo - el) + std::abs(hi - er));
    }
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < gap.size(); ++k) {
        s += 0.5 * (thin.snapshots[k + 1].t - thin.snapshots[k].t) * (gap[k] + gap[k + 1]);
    }
    const double span = thin.snapshots.back().t - thin.snapshots.front().t;
    return span > 0.0 ? s / span : gap.front();
}

// ---------------------------------------------------------------- sweep

namespace {

struct ThinOutcome {
    bool ok = false;
    std::string failure;
    Trajectory traj;  // snapshots only; the ledger is dropped after use
    std::vector<double> mobilities;
    double flux_jump = 0.0;
    std::size_t cells = 0, steps = 0;
    bool estimates_ok = false;
};

}  // namespace

ConvergenceReport run_convergence(const SweepConfig& sweep, unsigned threads) {
    const std::size_t ne = sweep.epsilon_list.size();
    RunSpec eff_spec = sweep.base;
    eff_spec.problem = ProblemKind::Effective;
    eff_spec.mesh.n_side = sweep.side_cells();
    eff_spec.effective.pinned_dirichlet.reset();
    eff_spec.snapshots = SnapshotSchedule(uniform_times(sweep.base.t_final, sweep.n_compare_times));

    std::vector<ThinOutcome> thin(ne);
    Trajectory eff_traj;
    bool eff_ok = false;
    std::string eff_failure;

    // task 0 is the effective reference, task i the i-th epsilon
    auto task = [&](std::size_t i) {
        if (i == 0) {
            try {
                eff_traj = execute(eff_spec);
                eff_ok = true;
            } catch (const std::exception& e) {
                eff_failure = e.what();
            }
            return;
        }
        ThinOutcome& out = thin[i - 1];
        const double eps = sweep.epsilon_list[i - 1];
        try {
            RunSpec s = sweep.base;
            s.problem = ProblemKind::Thin;
            s.mesh.epsilon = eps;
            s.mesh.n_membrane = sweep.n_membrane;
            s.mesh.n_outer = sweep.outer_cells(eps);
            s.snapshots = eff_spec.snapshots;
            Trajectory tr = execute(s);
            out.mobilities = run_mobilities(s, tr.mesh());
            out.flux_jump = flux_jump_diagnostic(tr, s.params, sweep.flux_floor_fraction);
            out.estimates_ok = estimate_report(tr, s.params).all_ok();
            out.cells = tr.mesh().num_cells();
            out.steps = tr.ledger.size() - 1;
            tr.ledger.clear();
            tr.ledger.shrink_to_fit();
            out.traj = std::move(tr);
            out.ok = true;
        } catch (const std::exception& e) {
            out.failure = e.what();
        }
    };

    const std::size_t ntasks = ne + 1;
    unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, ntasks));
    if (workers <= 1) {
        for (std::size_t i = 0; i < ntasks; ++i) task(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < ntasks; i = next++) task(i);
            });
        }
        for (auto& t : pool) t.join();
    }

    ConvergenceReport rep;
    rep.reference_ok = eff_ok;
    rep.reference_failure = eff_failure;
    rep.exclusion_half_width = 0.5 * sweep.epsilon_list.front();
    if (eff_ok) rep.reference_cells = eff_traj.mesh().num_cells();
    const Interval excl{-rep.exclusion_half_width, rep.exclusion_half_width};
    for (std::size_t i = 0; i < ne; ++i) {
        EpsilonResult r;
        r.epsilon = sweep.epsilon_list[i];
        ThinOutcome& t = thin[i];
        r.cells = t.cells;
        r.steps = t.steps;
        r.estimates_ok = t.estimates_ok;
        r.flux_jump = t.flux_jump;
        if (!t.ok) {
            r.failure = "thin run failed: " + t.failure;
        } else if (!eff_ok) {
            r.failure = "effective reference failed: " + eff_failure;
        } else {
            try {
                const Field ext = extend(t.traj.final_state(), r.epsilon);
                r.norms = restrict_compare(ext, eff_traj.final_state(), excl);
                r.error = norm_of(r.norms, sweep.norm);
                r.trace_gap = trace_gap_diagnostic(t.traj, t.mobilities, eff_traj, sweep.base.params);
                r.ok = true;
            } catch (const std::exception& e) {
                r.failure = std::string("comparison failed: ") + e.what();
            }
        }
        rep.entries.push_back(std::move(r));
    }

    const bool all_ok = eff_ok && std::all_of(rep.entries.begin(), rep.entries.end(), [](const auto& e) { return e.ok; });
    std::vector<double> eps, err, fj, tg;
    for (const auto& e : rep.entries) {
        eps.push_back(e.epsilon);
        err.push_back(e.error);
        fj.push_back(e.flux_jump);
        tg.push_back(e.trace_gap);
    }
    auto strictly_decreasing = [](const std::vector<double>& v) {
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (!(v[i] < v[i - 1])) return false;
        }
        return true;
    };
    rep.error_slope = loglog_slope(eps, err);
    rep.flux_jump_slope = loglog_slope(eps, fj);
    rep.trace_slope = loglog_slope(eps, tg);
    if (all_ok && ne >= 2) {
        rep.error_strictly_decreasing = strictly_decreasing(err);
        rep.error_halved = err.back() < 0.5 * err.front();
        rep.flux_jump_decreasing = strictly_decreasing(fj);
        rep.trace_decreasing = strictly_decreasing(tg);
    }
    rep.verdict = all_ok && rep.error_strictly_decreasing && rep.error_halved;
    return rep;
}

json ConvergenceReport::to_json() const {
    json entries_j = json::array();
    for (const auto& e : entries) {
        json j{{"epsilon", e.epsilon},   {"ok", e.ok},
               {"error", e.error},       {"l1", e.norms.l1},
               {"l2", e.norms.l2},       {"linf", e.norms.linf},
               {"compared_length", e.norms.measure},
               {"flux_jump", e.flux_jump}, {"trace_gap", e.trace_gap},
               {"cells", e.cells},       {"steps", e.steps},
               {"estimates_ok", e.estimates_ok}};
        if (!e.ok) j["failure"] = e.failure;
        entries_j.push_back(std::move(j));
    }
    json j{{"schema_version", kConfigSchemaVersion},
           {"entries", entries_j},
           {"reference", json{{"ok", reference_ok}, {"cells", reference_cells}}},
           {"exclusion", json::array({-exclusion_half_width, exclusion_half_width})},
           {"slopes", json{{"error", error_slope}, {"flux_jump", flux_jump_slope}, {"trace_gap", trace_slope}}},
           {"verdicts",
            json{{"error_strictly_decreasing", error_strictly_decreasing},
                 {"error_halved", error_halved},
                 {"flux_jump_decreasing", flux_jump_decreasing},
                 {"trace_gap_decreasing", trace_decreasing}}},
           {"verdict", verdict ? "PASS" : "FAIL"}};
    if (!reference_ok) j["reference"]["failure"] = reference_failure;
    return j;
}

// ---------------------------------------------------------------- output

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string snapshots_csv(const Trajectory& traj, const ModelParams& params) {
    std::string s = "t,x_center,dx,region,u,p\n";
    const Mesh& m = traj.mesh();
    const auto xc = m.centers();
    const auto dx = m.widths();
    const auto tags = m.regions();
    for (const Field& f : traj.snapshots) {
        const std::string t = format_double(f.t);
        for (std::size_t j = 0; j < f.u.size(); ++j) {
            s += t;
            s += ',';
            s += format_double(xc[j]);
            s += ',';
            s += format_double(dx[j]);
            s += ',';
            s += region_name(tags[j]);
            s += ',';
            s += format_double(f.u[j]);
            s += ',';
            s += format_double(pressure(std::max(0.0, f.u[j]), params));
            s += '\n';
        }
    }
    return s;
}

json run_summary(const RunSpec& spec, const Trajectory& traj) {
    const Mesh& m = traj.mesh();
    std::size_t newton = 0;
    for (const auto& r : traj.ledger) newton += static_cast<std::size_t>(r.newton_iterations);
    json meta{{"problem", problem_name(spec.problem)},
              {"cells", m.num_cells()},
              {"length", spec.mesh.length},
              {"t_final", spec.t_final},
              {"steps", traj.ledger.size() - 1},
              {"snapshots", traj.snapshots.size()},
              {"step_mode", spec.control.mode == StepMode::Explicit ? "explicit" : "implicit"},
              {"cfl_safety", spec.control.cfl_safety},
              {"dt_max", spec.control.dt_max},
              {"newton_iterations", newton},
              {"params", params_json(spec.params)},
              {"mass_initial", traj.snapshots.front().mass()},
              {"mass_final", traj.final_state().mass()}};
    if (spec.problem == ProblemKind::Thin) {
        meta["epsilon"] = spec.mesh.epsilon;
        meta["n_membrane"] = spec.mesh.n_membrane;
        meta["n_outer"] = spec.mesh.n_outer;
    } else {
        meta["n_side"] = spec.mesh.n_side;
        meta["trace_mode"] = spec.effective.trace_mode == TraceMode::CellAverage ? "cell_average" : "extrapolated";
        if (spec.effective.pinned_dirichlet) {
            meta["pinned_dirichlet_test_only"] =
                json::array({spec.effective.pinned_dirichlet->left, spec.effective.pinned_dirichlet->right});
        }
    }
    json out{{"schema_version", kConfigSchemaVersion}, {"metadata", meta},
             {"estimates", report_json(estimate_report(traj, spec.params, spec.effective.pinned_dirichlet.has_value()))}};

    json ledger = json::array();
    for (std::size_t k : downsample(traj.ledger.size(), 200)) {
        const StepRecord& r = traj.ledger[k];
        json j{{"t", r.t}, {"mass", r.mass}, {"max_u", r.max_u}};
        if (r.interface) {
            j["pi_left"] = r.interface->pi_left;
            j["pi_right"] = r.interface->pi_right;
            j["flux_q"] = r.interface->flux_q;
        }
        for (const auto& p : r.probes) {
            j["membrane_faces"].push_back(json{{"face", p.face}, {"flux", p.flux}, {"u_face", p.u_face}});
        }
        ledger.push_back(std::move(j));
    }
    out[spec.problem == ProblemKind::Effective ? "interface_ledger" : "membrane_ledger"] = ledger;

    if (const auto* b = std::get_if<InitialData::Barenblatt>(&spec.initial.shape)) {
        const BarenblattProfile prof(b->mass, spec.params.gamma, spec.params.mu1, b->t0);
        const Field& fin = traj.final_state();
        const auto f = m.faces();
        double l1 = 0.0;
        for (std::size_t j = 0; j < m.num_cells(); ++j) {
            l1 += std::abs(fin.u[j] - prof.cell_average(b->t0 + fin.t, f[j], f[j + 1])) * (f[j + 1] - f[j]);
        }
        const auto mob = run_mobilities(spec, m);
        const bool single = std::all_of(mob.begin(), mob.end(), [&](double v) { return v == mob.front(); }) &&
                            spec.problem == ProblemKind::Thin && spec.params.growth_law.is_test_only() &&
                            spec.params.growth_law.evaluate(0.0, spec.params.g_max, spec.params.p_homeostatic) == 0.0;
        out["barenblatt"] = json{{"l1_error", l1},
                                 {"oracle_time", b->t0 + fin.t},
                                 {"single_region_pure_diffusion", single}};
    }
    return out;
}

int cmd_run(const Config& config, ProblemKind which, const std::filesystem::path& out_dir, bool plot_data,
            std::ostream& log, std::ostream& err) {
    return guarded(err, out_dir, [&] {
        RunSpec spec = config.run;
        spec.problem = which;
        if (which == ProblemKind::Thin && spec.effective.pinned_dirichlet) {
            throw ConfigError("effective.pinned_dirichlet", "only available for the effective problem");
        }
        const Trajectory traj = execute(spec);
        std::filesystem::create_directories(out_dir);
        write_file(out_dir / "snapshots.csv", snapshots_csv(traj, spec.params));
        const json summary = run_summary(spec, traj);
        write_file(out_dir / "summary.json", dump(summary));
        if (plot_data) {
            // every k-th cell of every snapshot, k chosen for about 200 points per profile
            std::string s = "t,x_center,u\n";
            const auto xc = traj.mesh().centers();
            const auto cells = downsample(xc.size(), 200);
            for (const Field& f : traj.snapshots) {
                for (std::size_t j : cells) s += format_double(f.t) + "," + format_double(xc[j]) + "," + format_double(f.u[j]) + "\n";
            }
            write_file(out_dir / "plot_profiles.csv", s);
        }
        const bool ok = summary["estimates"]["all_ok"].get<bool>();
        log << problem_name(which) << " run: " << summary["metadata"]["steps"].get<std::size_t>() << " steps, estimates "
            << (ok ? "ok" : "FAILED") << "\n";
        return ok ? kExitOk : kExitVerdict;
    });
}

int cmd_converge(const Config& config, const std::filesystem::path& out_dir, unsigned threads, bool plot_data,
                 std::ostream& log, std::ostream& err) {
    return guarded(err, out_dir, [&] {
        if (!config.sweep) throw ConfigError("sweep", "required for converge");
        const ConvergenceReport rep = run_convergence(*config.sweep, threads);
        std::filesystem::create_directories(out_dir);
        json j = rep.to_json();
        j["norm"] = norm_name(config.sweep->norm);
        write_file(out_dir / "convergence_report.json", dump(j));
        if (plot_data) {
            std::string s = "epsilon,error,flux_jump,trace_gap\n";
            for (const auto& e : rep.entries) {
                s += format_double(e.epsilon) + "," + format_double(e.error) + "," + format_double(e.flux_jump) + "," +
                     format_double(e.trace_gap) + "\n";
            }
            write_file(out_dir / "plot_convergence.csv", s);
        }
        for (const auto& e : rep.entries) {
            log << "eps = " << format_double(e.epsilon) << "  e = " << format_double(e.error)
                << "  d = " << format_double(e.flux_jump) << "  trace = " << format_double(e.trace_gap)
                << (e.ok ? "" : "  FAILED: " + e.failure) << "\n";
        }
        log << "verdict: " << (rep.verdict ? "PASS" : "FAIL") << "\n";
        return rep.verdict ? kExitOk : kExitVerdict;
    });
}

}  // namespace membrane_pme
