#pragma once

#include <filesystem>
#include <string>

#include "dru/config.hpp"
#include "dru/harness.hpp"
#include "dru/nn.hpp"

namespace dru {

/// population.csv, population.json, cells.csv, sample_<target>.csv/.json,
/// manifest.json. Returns a one-line-per-file summary.
std::string cmd_generate(const RunConfig& config, const std::filesystem::path& out_dir);

struct TrainOutcome {
    TrainReport report;
    std::string summary;
};

/// Trains train_command on `data_csv` (schema from the config) and writes
/// model.json, train_report.json, predictions.csv, manifest.json.
TrainOutcome cmd_train(const RunConfig& config, const std::filesystem::path& data_csv,
                       const std::filesystem::path& out_dir);

struct OracleOutcome {
    std::size_t instances = 0;
    std::size_t dru_feasible = 0;
    std::size_t dru_infeasible = 0;
    double ru_max_discrepancy = 0.0;
    double dru_max_discrepancy = 0.0;
    std::size_t dominance_violations = 0;  // dRU sup > RU sup
    std::string summary;
};

/// Greedy worst case vs LP oracle on seeded random instances; writes
/// oracle.csv and manifest.json.
OracleOutcome cmd_oracle(const RunConfig& config, const std::filesystem::path& out_dir);

struct SweepOutcome {
    SweepResult result;
    double success_fraction = 1.0;
    std::string summary;
};

/// records.csv, summary.csv, histogram.csv, manifest.json.
SweepOutcome cmd_sweep(const RunConfig& config, const std::filesystem::path& out_dir);

std::string records_to_csv(const std::vector<SweepRecord>& records);
std::string summary_to_csv(const std::vector<MethodSummary>& summary);
std::string histogram_to_csv(const std::vector<HistogramBin>& bins);

}  // namespace dru
