// Command-line front end. Talks to the engine only through the C API.
#include "ammfut/ammfut.h"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int exit_code(int status) {
    switch (status) {
    case AMMFUT_OK: return kExitOk;
    case AMMFUT_ERR_CONFIG:
    case AMMFUT_ERR_ARGUMENT: return kExitUsage;
    default: return kExitRuntime;
    }
}

int report_failure(int status) {
    std::fprintf(stderr, "error: %s\n", ammfut_last_error());
    return exit_code(status);
}

// Anything that goes wrong while reading the configuration is a usage error.
int report_config_failure() {
    std::fprintf(stderr, "error: %s\n", ammfut_last_error());
    return kExitUsage;
}

struct CommonOptions {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config,-c", opts.config, "YAML configuration (defaults when omitted)");
    cmd->add_option("--out,-o", opts.out, "output directory (overrides output.directory)");
    cmd->add_option("--seed", opts.seed, "scenario seed (overrides scenarios.seed)");
}

int load(const CommonOptions& opts, ammfut_config** config) {
    int rc = opts.config.empty() ? ammfut_config_default(config) : ammfut_config_load(opts.config.c_str(), config);
    if (rc != AMMFUT_OK) return rc;
    if (opts.seed) rc = ammfut_config_set_seed(*config, *opts.seed);
    if (rc == AMMFUT_OK && !opts.out.empty()) rc = ammfut_config_set_output_dir(*config, opts.out.c_str());
    return rc;
}

template <class Run>
int execute(const CommonOptions& opts, Run&& run) {
    ammfut_config* config = nullptr;
    int rc = load(opts, &config);
    if (rc != AMMFUT_OK) {
        ammfut_config_free(config);
        return report_config_failure();
    }
    ammfut_result* result = nullptr;
    rc = run(config, &result);
    if (rc == AMMFUT_OK) rc = ammfut_result_write(result, ammfut_config_output_dir(config));
    if (rc != AMMFUT_OK) {
        ammfut_result_free(result);
        ammfut_config_free(config);
        return report_failure(rc);
    }
    for (std::size_t i = 0; i < ammfut_result_warning_count(result); ++i)
        std::fprintf(stderr, "warning: %s\n", ammfut_result_warning(result, i));
    std::printf("status: %s\n", ammfut_result_status(result));
    std::printf("config_hash: %s\n", ammfut_config_hash(config));
    for (std::size_t i = 0; i < ammfut_result_file_count(result); ++i)
        std::printf("wrote %s/%s\n", ammfut_config_output_dir(config), ammfut_result_file_name(result, i));
    ammfut_result_free(result);
    ammfut_config_free(config);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Risk-aware ammonia spot and futures market model"};
    app.set_version_flag("--version", std::string(ammfut_version()));
    app.require_subcommand(1);

    CommonOptions eq_opts, bar_opts, study_opts, scen_opts, val_opts;
    std::string study_name;

    auto* eq = app.add_subcommand("equilibrium", "spot-market equilibrium without futures");
    add_common(eq, eq_opts);
    auto* bar = app.add_subcommand("bargain", "futures bargaining in the configured settlement mode");
    add_common(bar, bar_opts);
    auto* study = app.add_subcommand("study", "named experiment");
    study->add_option("name", study_name, "base, uncertainty, alpha, capacity or nptp")
        ->required()
        ->check(CLI::IsMember({"base", "uncertainty", "alpha", "capacity", "nptp"}));
    add_common(study, study_opts);
    auto* scen = app.add_subcommand("scenarios", "write the generated wind-energy scenarios");
    add_common(scen, scen_opts);
    auto* val = app.add_subcommand("validate", "check a configuration and print its hash");
    add_common(val, val_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    if (*eq) return execute(eq_opts, ammfut_run_equilibrium);
    if (*bar) return execute(bar_opts, ammfut_run_bargain);
    if (*scen) return execute(scen_opts, ammfut_run_scenarios);
    if (*study)
        return execute(study_opts, [&](const ammfut_config* c, ammfut_result** r) {
            return ammfut_run_study(c, study_name.c_str(), r);
        });

    ammfut_config* config = nullptr;
    if (load(val_opts, &config) != AMMFUT_OK) {
        ammfut_config_free(config);
        return report_config_failure();
    }
    std::printf("ok\nconfig_hash: %s\n", ammfut_config_hash(config));
    ammfut_config_free(config);
    return kExitOk;
}
