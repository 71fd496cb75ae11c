#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "membrane_pme/bridge.hpp"
#include "membrane_pme/diagnostics.hpp"
#include "membrane_pme/run_spec.hpp"

namespace membrane_pme {

inline constexpr int kConfigSchemaVersion = 1;

enum class NormKind { L1, L2, Linf };

/// The ε → 0 study: one effective run and one thin run per ε, all from the same
/// ε-independent initial data.
struct SweepConfig {
    RunSpec base;                    ///< model, length, initial data, T, step control
    std::vector<double> epsilon_list;  ///< strictly decreasing, each < L/2
    std::size_t n_membrane = 4;      ///< membrane cells, fixed across ε
    double outer_dx = 0.005;         ///< target outer cell width, fixed across ε
    NormKind norm = NormKind::L1;
    std::size_t n_compare_times = 50;  ///< common snapshot times for the trace diagnostic
    double flux_floor_fraction = 1e-3;  ///< floor of d(ε) relative to max |Φ_membrane|

    /// Outer cells per side for a given ε: ceil(((L - ε)/2) / outer_dx).
    std::size_t outer_cells(double epsilon) const;
    /// Cells per side of the effective mesh: ceil((L/2) / outer_dx).
    std::size_t side_cells() const;
};

struct Config {
    RunSpec run;
    std::optional<SweepConfig> sweep;
};

/// Parse and validate. ConfigError carries the JSON path of the offending field.
Config parse_config(const nlohmann::json& doc);
Config load_config(const std::filesystem::path& path);

/// Per-ε outcome of the sweep.
struct EpsilonResult {
    double epsilon = 0.0;
    bool ok = false;
    std::string failure;
    ErrorNorms norms;
    double error = 0.0;        ///< e(ε) in the configured norm
    double flux_jump = 0.0;    ///< d(ε)
    double trace_gap = 0.0;    ///< time-averaged |Π_ε(±ε/2) - Π̃(0±)|
    std::size_t cells = 0;
    std::size_t steps = 0;
    bool estimates_ok = false;
};

struct ConvergenceReport {
    std::vector<EpsilonResult> entries;  ///< in epsilon_list order
    bool reference_ok = false;
    std::string reference_failure;
    std::size_t reference_cells = 0;
    double exclusion_half_width = 0.0;
    double error_slope = 0.0;      ///< least-squares d log e / d log ε, informational
    double flux_jump_slope = 0.0;
    double trace_slope = 0.0;
    bool error_strictly_decreasing = false;
    bool error_halved = false;     ///< e(ε_min) < e(ε_max)/2
    bool flux_jump_decreasing = false;
    bool trace_decreasing = false;
    bool verdict = false;          ///< error_strictly_decreasing && error_halved

    nlohmann::json to_json() const;
};

/// Run the sweep with `threads` workers (0 → hardware concurrency). The result does not
/// depend on the thread count.
ConvergenceReport run_convergence(const SweepConfig& sweep, unsigned threads = 1);

/// d(ε) = ∫ |Φ̄ - μ̃1,3 (Π(u_f⁺) - Π(u_f⁻))| dt / ∫ max(|Φ̄|, floor) dt from a thin-run
/// ledger, with Φ̄ the mean flux of the two membrane faces and u_f± the reconstructed
/// face values at ±ε/2.
double flux_jump_diagnostic(const Trajectory& thin, const ModelParams& params, double floor_fraction);

/// Time average over common snapshots of (|Π_ε(u_f⁻) - Π̃(0⁻)| + |Π_ε(u_f⁺) - Π̃(0⁺)|)/2.
double trace_gap_diagnostic(const Trajectory& thin, std::span<const double> thin_mobilities,
                            const Trajectory& effective, const ModelParams& params);

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitVerdict = 4;

/// summary.json content of a single run.
nlohmann::json run_summary(const RunSpec& spec, const Trajectory& traj);

/// snapshots.csv content: t,x_center,dx,region,u,p.
std::string snapshots_csv(const Trajectory& traj, const ModelParams& params);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// run-thin / run-effective. Writes snapshots.csv and summary.json into `out_dir`
/// (plus plot_profiles.csv with `plot_data`). Errors are reported to `err` and as an
/// error.json when possible.
int cmd_run(const Config& config, ProblemKind which, const std::filesystem::path& out_dir, bool plot_data,
            std::ostream& log, std::ostream& err);

/// converge: writes convergence_report.json (plus plot_convergence.csv).
int cmd_converge(const Config& config, const std::filesystem::path& out_dir, unsigned threads, bool plot_data,
                 std::ostream& log, std::ostream& err);

struct ValidateOptions {
    bool fault_inject_interface = false;  ///< scale the interface flux to provoke a failure
    std::optional<Config> extra_config;   ///< a canned run added to the estimate checks
};

/// validate: runs the oracle suite and prints a scoreboard; writes validation.json
/// when `out_dir` is non-empty.
int cmd_validate(const ValidateOptions& options, const std::filesystem::path& out_dir, std::ostream& log,
                 std::ostream& err);

}  // namespace membrane_pme
