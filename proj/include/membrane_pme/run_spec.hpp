#pragma once

#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "membrane_pme/effective_solver.hpp"
#include "membrane_pme/mesh.hpp"
#include "membrane_pme/model.hpp"
#include "membrane_pme/trajectory.hpp"

namespace membrane_pme {

enum class ProblemKind { Thin, Effective };

const char* problem_name(ProblemKind k) noexcept;

/// Initial densities, always sampled as exact cell averages.
struct InitialData {
    struct Zero {};
    struct Constant {
        double value = 0.0;
    };
    /// amplitude (1 - r²)², r = (x - center) / half_width, zero for |r| ≥ 1.
    struct Bump {
        double center = 0.0;
        double half_width = 0.25;
        double amplitude = 0.5;
    };
    /// Source-type profile of the pure-diffusion problem at time t0 (see oracles).
    struct Barenblatt {
        double mass = 0.5;
        double t0 = 0.01;
    };
    /// Several bumps added together.
    struct BumpSum {
        std::vector<Bump> bumps;
    };

    std::variant<Zero, Constant, Bump, Barenblatt, BumpSum> shape = Zero{};
};

struct MeshSpec {
    double length = 2.0;
    double epsilon = 0.2;          ///< thin problem only
    std::size_t n_membrane = 4;    ///< thin problem only
    std::size_t n_outer = 36;      ///< thin problem only, per side
    std::size_t n_side = 40;       ///< effective problem only
};

/// Everything needed to reproduce one solver run.
struct RunSpec {
    ProblemKind problem = ProblemKind::Thin;
    ModelParams params;
    MeshSpec mesh;
    InitialData initial;
    double t_final = 0.1;
    StepControl control;
    SnapshotSchedule snapshots;
    EffectiveOptions effective;  ///< effective problem only
};

std::shared_ptr<const Mesh> build_mesh(const RunSpec& spec);

/// Exact cell averages of the initial data on `mesh`.
Field initial_field(const RunSpec& spec, std::shared_ptr<const Mesh> mesh);

/// Per-cell mobility of the run (thin: realization at ε; effective: μ̃1 / μ̃3).
std::vector<double> run_mobilities(const RunSpec& spec, const Mesh& mesh);

/// Build the mesh and initial data and dispatch to run_thin or run_effective.
Trajectory execute(const RunSpec& spec);

/// The same run with every cell count multiplied by `space_factor` and dt_max divided by
/// `time_factor`.
RunSpec refined(const RunSpec& spec, std::size_t space_factor, std::size_t time_factor);

}  // namespace membrane_pme
