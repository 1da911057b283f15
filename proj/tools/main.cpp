// bayescombine: batch front end for the detector ensemble.
//
//   bayescombine detect   [--config F] [--out D] [--seed N] [--jobs N] [inputs...]
//   bayescombine ensemble [--config F] [--out D] [--seed N] [--jobs N] [--inject-random-detector] [inputs...]
//   bayescombine simulate SPEC.json [--config F] [--out D] [--seed N] [--inject-random-detector]
//
// Log verbosity comes from BAYESCOMBINE_LOG (trace, debug, info, warn, error,
// off); logs go to stderr.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"

namespace {

void configure_logging() {
    auto logger = spdlog::stderr_color_mt("bayescombine");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("BAYESCOMBINE_LOG")) {
        const auto level = spdlog::level::from_str(env);
        if (level == spdlog::level::off && std::string(env) != "off")
            spdlog::warn("BAYESCOMBINE_LOG: unknown level '{}', keeping info", env);
        else
            spdlog::set_level(level);
    }
}

struct CommonArgs {
    std::optional<std::string> config;
    bayescombine::cli::Overrides overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_inputs, bool with_jobs) {
    cmd->add_option("--config", args.config, "INI configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--out", args.overrides.out, "Output directory (overrides run.output)");
    cmd->add_option("--seed", args.overrides.seed, "Global seed (overrides run.seed)");
    if (with_jobs)
        cmd->add_option("--jobs", args.overrides.jobs, "Series processed in parallel")->check(CLI::PositiveNumber);
    if (with_inputs) cmd->add_option("inputs", args.overrides.inputs, "Input CSV paths or glob patterns");
}

} // namespace

int main(int argc, char** argv) {
    configure_logging();
    CLI::App app{"Bayesian combination of time-series anomaly detectors"};
    app.require_subcommand(1);

    CommonArgs detect_args, ensemble_args, simulate_args;
    std::string spec_path;

    auto* detect = app.add_subcommand("detect", "Run the base detectors and write per-series verdict CSVs");
    add_common(detect, detect_args, true, true);

    auto* ensemble = app.add_subcommand("ensemble", "Detectors, majority vote and the Bayesian ensemble per series");
    add_common(ensemble, ensemble_args, true, true);
    ensemble->add_flag("--inject-random-detector", ensemble_args.overrides.inject_random_detector,
                       "Also rerun both combiners with a coin-flip detector appended");

    auto* simulate = app.add_subcommand("simulate", "Synthetic benchmark from a JSON spec");
    add_common(simulate, simulate_args, false, false);
    simulate->add_option("spec", spec_path, "Synthetic spec JSON")->required();
    simulate->add_flag("--inject-random-detector", simulate_args.overrides.inject_random_detector,
                       "Run the random-detector robustness experiment");

    CLI11_PARSE(app, argc, argv);

    using namespace bayescombine;
    try {
        if (detect->parsed()) return cli::cmd_detect(cli::resolve_config(detect_args.config, detect_args.overrides));
        if (ensemble->parsed())
            return cli::cmd_ensemble(cli::resolve_config(ensemble_args.config, ensemble_args.overrides));
        return cli::cmd_simulate(cli::resolve_config(simulate_args.config, simulate_args.overrides), spec_path);
    } catch (const ConfigError& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
}
