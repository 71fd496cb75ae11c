#include "membrane_pme/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "membrane_pme/errors.hpp"

namespace membrane_pme {

namespace {

void require_nonnegative_density(double u, const char* op) {
    if (!(u >= 0.0) || !std::isfinite(u)) {
        throw DomainError(std::string(op) + ": density must be finite and >= 0, got " +
                          std::to_string(u));
    }
}

void require_positive(double value, const char* field) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw ConfigError(field, "must be finite and > 0");
    }
}

// Index i with pressures[i] <= p < pressures[i+1], clamped to the end segments.
std::size_t table_segment(const std::vector<double>& pressures, double p) {
    auto it = std::upper_bound(pressures.begin(), pressures.end(), p);
    std::size_t i = (it == pressures.begin()) ? 0 : static_cast<std::size_t>(it - pressures.begin()) - 1;
    return std::min(i, pressures.size() - 2);
}

}  // namespace

GrowthLaw GrowthLaw::table(std::vector<double> pressures, std::vector<double> rates) {
    if (pressures.size() != rates.size() || pressures.size() < 2) {
        throw ConfigError("model.growth_law", "table needs >= 2 (pressure, rate) pairs of equal length");
    }
    if (pressures.front() != 0.0) {
        throw ConfigError("model.growth_law.pressures", "table must start at p = 0");
    }
    for (std::size_t i = 1; i < pressures.size(); ++i) {
        if (!(pressures[i] > pressures[i - 1])) {
            throw ConfigError("model.growth_law.pressures", "pressures must be strictly increasing");
        }
        if (!(rates[i] < rates[i - 1])) {
            throw ConfigError("model.growth_law.rates", "G must be strictly decreasing (G' < 0)");
        }
    }
    return GrowthLaw{Table{std::move(pressures), std::move(rates)}};
}

double GrowthLaw::evaluate(double p, double g_max, double p_homeostatic) const {
    return std::visit(
        [&](const auto& law) -> double {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, Affine>) {
                return g_max * (1.0 - p / p_homeostatic);
            } else if constexpr (std::is_same_v<T, Table>) {
                const std::size_t i = table_segment(law.pressures, p);
                const double s = (p - law.pressures[i]) / (law.pressures[i + 1] - law.pressures[i]);
                return law.rates[i] + s * (law.rates[i + 1] - law.rates[i]);
            } else {
                return law.value;
            }
        },
        law_);
}

double GrowthLaw::derivative(double p, double g_max, double p_homeostatic) const {
    return std::visit(
        [&](const auto& law) -> double {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, Affine>) {
                return -g_max / p_homeostatic;
            } else if constexpr (std::is_same_v<T, Table>) {
                const std::size_t i = table_segment(law.pressures, p);
                return (law.rates[i + 1] - law.rates[i]) / (law.pressures[i + 1] - law.pressures[i]);
            } else {
                return 0.0;
            }
        },
        law_);
}

double GrowthLaw::reaction_rate_bound(double gamma, double g_max, double p_homeostatic) const {
    return std::visit(
        [&](const auto& law) -> double {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, Affine>) {
                return g_max * (1.0 + gamma);
            } else if constexpr (std::is_same_v<T, Table>) {
                double steepest = 0.0;
                for (std::size_t i = 0; i + 1 < law.pressures.size(); ++i) {
                    steepest = std::max(steepest, std::abs((law.rates[i + 1] - law.rates[i]) /
                                                           (law.pressures[i + 1] - law.pressures[i])));
                }
                const double g_abs = std::max(std::abs(law.rates.front()),
                                              std::abs(evaluate(p_homeostatic, g_max, p_homeostatic)));
                return g_abs + gamma * p_homeostatic * steepest;
            } else {
                return std::abs(law.value);
            }
        },
        law_);
}

void ModelParams::validate() const {
    if (!std::isfinite(gamma) || gamma < 1.0) {
        throw ConfigError("model.gamma", "gamma >= 1 required, got " + std::to_string(gamma));
    }
    require_positive(p_homeostatic, "model.p_homeostatic");
    require_positive(mu1, "model.mu1");
    require_positive(mu3, "model.mu3");
    require_positive(mu13, "model.mu13");
    if (growth_law.is_test_only()) {
        if (!std::isfinite(g_max) || g_max < 0.0) {
            throw ConfigError("model.g_max", "must be finite and >= 0");
        }
    } else {
        require_positive(g_max, "model.g_max");
    }
    if (const auto* table = std::get_if<GrowthLaw::Table>(&growth_law.definition())) {
        const double tol = 1e-12 * std::max(1.0, g_max);
        if (std::abs(table->rates.front() - g_max) > tol) {
            throw ConfigError("model.growth_law.rates", "table must satisfy G(0) = g_max");
        }
        if (std::abs(growth_law.evaluate(p_homeostatic, g_max, p_homeostatic)) > tol) {
            throw ConfigError("model.growth_law", "table must satisfy G(p_homeostatic) = 0");
        }
    }
    const double u_h = u_homeostatic();
    if (!std::isfinite(u_h) || !(u_h > 0.0)) {
        throw ConfigError("model.p_homeostatic", "derived u_H = p_H^(1/gamma) must be finite and > 0");
    }
}

double ModelParams::u_homeostatic() const { return std::pow(p_homeostatic, 1.0 / gamma); }

double pressure(double u, const ModelParams& params) {
    require_nonnegative_density(u, "pressure");
    return std::pow(u, params.gamma);
}

double pi_of_u(double u, const ModelParams& params) {
    require_nonnegative_density(u, "pi_of_u");
    const double g = params.gamma;
    return g / (g + 1.0) * std::pow(u, g + 1.0);
}

double u_of_pi(double pi, const ModelParams& params) {
    if (!(pi >= 0.0) || !std::isfinite(pi)) {
        throw DomainError("u_of_pi: potential must be finite and >= 0");
    }
    const double g = params.gamma;
    return std::pow((g + 1.0) * pi / g, 1.0 / (g + 1.0));
}

double growth(double p, const ModelParams& params) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
        throw DomainError("growth: pressure must be finite and >= 0");
    }
    return params.growth_law.evaluate(p, params.g_max, params.p_homeostatic);
}

MobilityRealization realize_mobilities(const ModelParams& params, double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw DomainError("realize_mobilities: epsilon must be > 0");
    }
    return MobilityRealization{epsilon, params.mu1, epsilon * params.mu13, params.mu3};
}

}  // namespace membrane_pme
