#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dru/dataset.hpp"
#include "dru/harness.hpp"
#include "dru/losses.hpp"
#include "dru/nn.hpp"
#include "dru/sampling.hpp"
#include "dru/seed.hpp"

namespace dru {

struct TrainCommandConfig {
    LossKind loss = LossKind::squared;
    double gamma = 1.0;
    Direction direction = Direction::none;
    double pinball_p = 0.5;
    std::string target;                   // empty: first target
    std::vector<std::string> covariates;  // empty: every covariate
};

struct OracleConfig {
    std::size_t instances = 100;
    std::size_t max_points = 20;
    double gamma_min = 1.0;
    double gamma_max = 5.0;
};

/// Everything a CLI command needs. Parsed from JSON; unknown keys are
/// rejected at every level.
struct RunConfig {
    std::uint64_t seed = 0;
    std::size_t jobs = 0;  // 0: hardware concurrency
    std::string output_dir = "out";

    PopulationSpec population;
    BiasSpec bias;
    std::size_t replicates = 2;
    std::vector<std::vector<std::string>> covariate_subsets;
    std::vector<MethodSpec> methods;
    TrainConfig train;
    NetworkShape network;
    TrainCommandConfig train_command;
    OracleConfig oracle;

    static RunConfig defaults();
    static RunConfig from_json(const nlohmann::json& doc);

    /// Canonical document. Runtime-only keys (jobs, output_dir) are left out
    /// unless asked for, so manifests do not depend on them.
    nlohmann::json to_json(bool include_runtime = false) const;

    /// FNV-1a 64 of to_json(false).dump(), as 16 hex digits.
    std::string hash() const;

    /// Throws Error(configuration) on invalid combinations.
    void validate() const;

    std::size_t effective_jobs() const;
    Schema schema() const { return population.schema(); }
};

/// Reads a config file. A sweep/generate/train manifest is accepted too:
/// its embedded "config" object is used.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace dru
