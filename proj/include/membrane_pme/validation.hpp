#pragma once

#include <optional>
#include <string>
#include <vector>

#include "membrane_pme/oracles.hpp"
#include "membrane_pme/run_spec.hpp"

namespace membrane_pme {

/// One line of the validation scoreboard.
struct ValidationCase {
    std::string name;
    bool passed = false;
    bool skipped = false;
    double metric = 0.0;
    double threshold = 0.0;
    std::string detail;
};

/// Single-region pure-diffusion run started from the source-type profile: thin mesh
/// with ε = 0.2, μ2,ε = μ1, uniform cells of width 0.05 / refinement, γ = 2, mass 0.5,
/// from t0 = 0.01 for a duration of 0.04.
RunSpec barenblatt_spec(std::size_t refinement, double gamma = 2.0);

struct BarenblattStudy {
    std::vector<double> dx;
    std::vector<double> l1_errors;  ///< vs exact cell averages at t0 + T
    std::vector<double> orders;     ///< log2(e_{i} / e_{i+1}) between consecutive levels
};

/// Refinement study over the given refinement factors (each twice the previous).
BarenblattStudy barenblatt_study(const std::vector<std::size_t>& refinements, double gamma = 2.0);

struct SteadyStudy {
    double flux_numeric = 0.0;
    double flux_exact = 0.0;
    double flux_rel_error = 0.0;
    double profile_rel_linf = 0.0;  ///< max |u_j - u_exact(x_j)| / max(u_left, u_right)
    double residual = 0.0;
    std::size_t steps = 0;
};

/// Effective problem, G ≡ 0, pinned densities at ±L/2, marched to a steady residual
/// below 1e-10 on 2 n_side cells and compared with steady_two_region.
SteadyStudy steady_study(const ModelParams& params, double length, double u_left, double u_right,
                         std::size_t n_side, double fault_flux_scale = 1.0);

struct ValidationOptions {
    bool fault_inject_interface = false;
    std::optional<RunSpec> extra_run;  ///< canned run whose estimates join the suite
};

std::vector<ValidationCase> run_validation_suite(const ValidationOptions& options);

}  // namespace membrane_pme
