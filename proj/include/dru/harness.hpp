#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dru/dataset.hpp"
#include "dru/losses.hpp"
#include "dru/nn.hpp"
#include "dru/poststrat.hpp"

namespace dru {

enum class MethodKind {
    dru_informed,
    nn_plain,
    regression_poststrat,
    pinball,
    dru_wrong_gamma,
    dru_wrong_d,
    dru_wrong_both,
};

std::string_view to_string(MethodKind kind);
MethodKind method_kind_from_string(std::string_view name);

struct MethodSpec {
    MethodKind kind = MethodKind::dru_informed;
    /// Per-target population-level meta. Empty: estimated per replicate from a
    /// held-out sample of the same population ("previous election").
    std::vector<MetaInfo> meta;
};

/// Per-target population-level meta a method trains with, given the informed
/// values. wrong_gamma reverses the gamma order across targets, wrong_d flips
/// every direction.
std::vector<MetaInfo> method_meta(MethodKind kind, const std::vector<MetaInfo>& informed);

/// Pinball level for a residual-convention meta: eta(gamma) for +1,
/// 1 - eta(gamma) for -1, 0.5 without a direction.
double pinball_level(const MetaInfo& loss_meta);

/// Ratio-of-sums bias-removal score:
///   sum_i (|true_i - unw_i| - |true_i - hat_i|) / sum_i |true_i - unw_i|.
/// Throws Error(undefined_score) if every |true_i - unw_i| <= floor.
double b_score(std::span<const double> y_true, std::span<const double> y_hat,
               std::span<const double> y_unweighted, double floor = 1e-6);

struct SweepRecord {
    std::size_t replicate = 0;
    std::string covariate_subset;  // names joined by '+'
    std::string method;
    std::size_t target = 0;
    double y_hat = 0.0;
    double y_true = 0.0;
    double y_unweighted = 0.0;
    double b_contribution = 0.0;  // |true - unw| - |true - hat|
    double run_b = 0.0;           // b of the (replicate, subset, method) run
    bool ok = true;
    std::size_t unseen_cells = 0;  // table cells absent from the training sample
    std::string error;
};

struct MethodSummary {
    std::string method;
    double mean_b = 0.0;
    double freq_b_positive = 0.0;
    std::size_t runs = 0;
};

struct SweepResult {
    std::vector<SweepRecord> records;
    std::vector<MethodSummary> summary;

    std::size_t run_count() const;
    std::size_t failed_run_count() const;
};

/// Per-method mean b and fraction of runs with b > 0, over successful runs,
/// in first-appearance order of the methods.
std::vector<MethodSummary> summarize(const std::vector<SweepRecord>& records);

struct HistogramBin {
    std::string method;
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
};

/// Run-level b histogram per method over shared, equal-width edges.
std::vector<HistogramBin> b_histogram(const std::vector<SweepRecord>& records, std::size_t bins = 20);

struct NetworkShape {
    std::vector<std::size_t> hidden = {4, 4};
    std::vector<std::size_t> pinball_hidden = {8, 8};
};

struct SweepOptions {
    TrainConfig train;
    NetworkShape network;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

/// Trains every (replicate, covariate subset, method, target) combination,
/// post-stratifies and scores. Replicate r pairs populations[r] with
/// bias_specs[r]. Records are ordered by key, independent of `jobs`.
SweepResult run_sweep(const std::vector<Dataset>& populations, const std::vector<BiasSpec>& bias_specs,
                      const std::vector<std::vector<std::string>>& covariate_subsets,
                      const std::vector<MethodSpec>& methods, const SweepOptions& options);

struct MethodFit {
    double y_hat = 0.0;
    std::size_t unseen_cells = 0;
};

/// Fits one target of `sample` with one method on the table's covariates and
/// post-stratifies the per-cell predictions over `table`. Cells never seen in
/// the sample are still predicted and counted in unseen_cells.
MethodFit fit_and_poststratify(MethodKind kind, const MetaInfo& population_meta, const Dataset& sample,
                               const CellTable& table, std::size_t target, const SweepOptions& options,
                               std::uint64_t seed);

}  // namespace dru
