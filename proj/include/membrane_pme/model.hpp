#pragma once

#include <variant>
#include <vector>

namespace membrane_pme {

/// Pressure-penalised growth rate G(p).
///
/// The affine law G_M (1 - p/p_H) is the default. A tabulated law is linearly
/// interpolated between its nodes and must satisfy G(0) = G_M, strict decrease and
/// G(p_H) = 0. The constant law exists for tests only (pure diffusion with G ≡ 0,
/// or the exponential-growth ODE with G ≡ G_M); it is rejected unless explicitly
/// flagged as test-only.
class GrowthLaw {
public:
    struct Affine {};
    struct Table {
        std::vector<double> pressures;
        std::vector<double> rates;
    };
    struct Constant {
        double value = 0.0;
    };

    GrowthLaw() = default;

    static GrowthLaw affine() { return GrowthLaw{Affine{}}; }
    static GrowthLaw table(std::vector<double> pressures, std::vector<double> rates);
    static GrowthLaw constant_for_testing(double value) { return GrowthLaw{Constant{value}}; }

    bool is_affine() const noexcept { return std::holds_alternative<Affine>(law_); }
    bool is_table() const noexcept { return std::holds_alternative<Table>(law_); }
    bool is_test_only() const noexcept { return std::holds_alternative<Constant>(law_); }

    const std::variant<Affine, Table, Constant>& definition() const noexcept { return law_; }

    double evaluate(double p, double g_max, double p_homeostatic) const;
    double derivative(double p, double g_max, double p_homeostatic) const;

    /// Upper bound of |G(p)| + γ p |G'(p)| over [0, p_H]; the reaction part of the
    /// explicit-step stability limit.
    double reaction_rate_bound(double gamma, double g_max, double p_homeostatic) const;

private:
    explicit GrowthLaw(std::variant<Affine, Table, Constant> law) : law_(std::move(law)) {}

    std::variant<Affine, Table, Constant> law_{Affine{}};
};

/// Constitutive constants of the thin-layer and effective problems.
struct ModelParams {
    double gamma = 2.0;          ///< pressure exponent, p = u^γ
    double p_homeostatic = 1.0;  ///< p_H, G(p_H) = 0
    double g_max = 1.0;          ///< G_M = G(0)
    double mu1 = 1.0;            ///< mobility in the left bulk region
    double mu3 = 1.0;            ///< mobility in the right bulk region
    double mu13 = 1.0;           ///< effective membrane permeability, lim μ2,ε / ε
    GrowthLaw growth_law = GrowthLaw::affine();

    /// Throws ConfigError naming the offending field ("model.gamma", ...).
    void validate() const;

    /// u_H = p_H^{1/γ}.
    double u_homeostatic() const;

    /// The energy-inequality monitor divides by γ - 1 and is only defined for γ > 1.
    bool energy_check_enabled() const noexcept { return gamma > 1.0; }
};

/// Per-subdomain mobilities of the thin-layer problem at thickness ε.
struct MobilityRealization {
    double epsilon = 0.0;
    double mu1_eps = 0.0;
    double mu2_eps = 0.0;
    double mu3_eps = 0.0;
};

/// p = u^γ.
double pressure(double u, const ModelParams& params);

/// Π(u) = γ/(γ+1) u^{γ+1}, the potential with Π'(u) = u p'(u).
double pi_of_u(double u, const ModelParams& params);

/// Inverse of Π on [0, ∞): u = ((γ+1) Π / γ)^{1/(γ+1)}.
double u_of_pi(double pi, const ModelParams& params);

/// G(p) for the configured growth law.
double growth(double p, const ModelParams& params);

/// μ1,ε = μ̃1, μ3,ε = μ̃3, μ2,ε = ε μ̃1,3.
MobilityRealization realize_mobilities(const ModelParams& params, double epsilon);

}  // namespace membrane_pme
