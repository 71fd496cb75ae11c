// Command-line front end: run-thin, run-effective, converge, validate.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "membrane_pme/errors.hpp"
#include "membrane_pme/harness.hpp"

namespace mp = membrane_pme;

namespace {

unsigned resolve_threads(int flag) {
    if (flag > 0) return static_cast<unsigned>(flag);
    if (const char* env = std::getenv("MEMBRANE_PME_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
        std::cerr << "ignoring invalid MEMBRANE_PME_THREADS=" << env << "\n";
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thin-membrane porous-medium solver and effective-interface convergence harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    int threads = 0;
    bool plot_data = false;
    bool fault_inject = false;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", config_path, "JSON configuration file");
        if (config_required) opt->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_flag("--plot-data", plot_data, "also write downsampled CSV for plotting");
    };

    auto* run_thin = app.add_subcommand("run-thin", "run the thin-layer problem");
    add_common(run_thin, true);
    auto* run_eff = app.add_subcommand("run-effective", "run the effective interface problem");
    add_common(run_eff, true);
    auto* converge = app.add_subcommand("converge", "run the epsilon -> 0 convergence sweep");
    add_common(converge, true);
    converge->add_option("--threads", threads, "parallel sweep workers (default: MEMBRANE_PME_THREADS or 1)");
    auto* validate = app.add_subcommand("validate", "run the oracle validation suite");
    validate->add_option("--config", config_path, "optional extra run whose estimates join the suite");
    validate->add_option("--out", out_dir, "output directory for validation.json");
    validate->add_flag("--fault-inject-interface", fault_inject,
                       "corrupt the interface flux (negative control; the suite must fail)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : mp::kExitConfig;
    }

    auto load = [&]() -> std::optional<mp::Config> {
        try {
            return mp::load_config(config_path);
        } catch (const mp::Error& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return std::nullopt;
        }
    };

    if (*run_thin || *run_eff) {
        const auto cfg = load();
        if (!cfg) return mp::kExitConfig;
        return mp::cmd_run(*cfg, *run_thin ? mp::ProblemKind::Thin : mp::ProblemKind::Effective, out_dir, plot_data,
                           std::cout, std::cerr);
    }
    if (*converge) {
        const auto cfg = load();
        if (!cfg) return mp::kExitConfig;
        return mp::cmd_converge(*cfg, out_dir, resolve_threads(threads), plot_data, std::cout, std::cerr);
    }
    mp::ValidateOptions vo;
    vo.fault_inject_interface = fault_inject;
    if (!config_path.empty()) {
        vo.extra_config = load();
        if (!vo.extra_config) return mp::kExitConfig;
    }
    return mp::cmd_validate(vo, validate->count("--out") ? out_dir : std::string{}, std::cout, std::cerr);
}
