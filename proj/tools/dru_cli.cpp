// Command-line front end. Talks to the library only through the C API.
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dru/dru.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitPartialSweep = 3;

int exit_code_for(dru_status status) {
    switch (status) {
        case DRU_OK: return kExitOk;
        case DRU_ERR_PARSE:
        case DRU_ERR_SCHEMA:
        case DRU_ERR_CONFIGURATION:
        case DRU_ERR_PARAMETER:
        case DRU_ERR_NULL_ARGUMENT: return kExitUsage;
        default: return kExitFailure;
    }
}

int fail(dru_status status) {
    std::fprintf(stderr, "dru: %s: %s\n", dru_status_name(status), dru_last_error());
    return exit_code_for(status);
}

struct ConfigHandle {
    dru_config* ptr = nullptr;
    ~ConfigHandle() { dru_config_free(ptr); }
};

struct ReportHandle {
    dru_report* ptr = nullptr;
    ~ReportHandle() { dru_report_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Directional Rockafellar-Uryasev regression toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(dru_version()));

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    app.add_option("--config", config_path, "JSON run config (or a manifest written by an earlier run)")
        ->envname("DRU_CONFIG");
    app.add_option("--out", out_dir, "Output directory (overrides output_dir)")->envname("DRU_OUT");
    app.add_option("--seed", seed, "Global seed (overrides seed)")->envname("DRU_SEED");
    app.add_option("--jobs", jobs, "Worker threads; 0 uses every core")->envname("DRU_JOBS");

    auto* generate = app.add_subcommand("generate", "Write a synthetic population and biased samples");
    auto* train = app.add_subcommand("train", "Train one model on a dataset CSV");
    std::string data_path;
    train->add_option("--data", data_path, "Dataset CSV (covariates, outcomes, cell_id)")->required();
    auto* oracle = app.add_subcommand("oracle", "Compare greedy worst cases against the LP oracle");
    auto* sweep = app.add_subcommand("sweep", "Run the method comparison sweep and b-score summary");
    for (auto* sub : {generate, train, oracle, sweep}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    ConfigHandle config;
    const dru_status load =
        config_path.empty() ? dru_config_default(&config.ptr) : dru_config_load(config_path.c_str(), &config.ptr);
    if (load != DRU_OK) return fail(load);
    const std::uint64_t seed_value = seed.value_or(0);
    const std::size_t jobs_value = jobs.value_or(0);
    if (const auto st = dru_config_override(config.ptr, out_dir.empty() ? nullptr : out_dir.c_str(),
                                            seed ? &seed_value : nullptr, jobs ? &jobs_value : nullptr);
        st != DRU_OK)
        return fail(st);

    ReportHandle report;
    dru_status status = DRU_OK;
    if (generate->parsed()) {
        status = dru_cmd_generate(config.ptr, nullptr, &report.ptr);
    } else if (train->parsed()) {
        status = dru_cmd_train(config.ptr, data_path.c_str(), nullptr, &report.ptr);
    } else if (oracle->parsed()) {
        status = dru_cmd_oracle(config.ptr, nullptr, &report.ptr);
    } else {
        status = dru_cmd_sweep(config.ptr, nullptr, &report.ptr);
    }
    if (status != DRU_OK) return fail(status);

    std::fputs(dru_report_text(report.ptr), stdout);
    if (sweep->parsed() && dru_report_success_fraction(report.ptr) < 0.9) {
        std::fprintf(stderr, "dru: fewer than 90%% of sweep runs succeeded\n");
        return kExitPartialSweep;
    }
    return kExitOk;
}
