#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dru/dataset.hpp"
#include "dru/losses.hpp"

namespace dru {

struct PopulationSpec {
    std::vector<Covariate> covariates = default_covariates();
    std::size_t n_targets = 5;
    std::size_t n_population = 100000;
    /// cell_id -> outcome probability per target. Empty: drawn from `seed`
    /// via additive random effects per covariate level (see default_cell_means).
    std::map<std::uint64_t, std::vector<double>> cell_means;
    double effect_scale = 0.6;
    std::uint64_t seed = 0;

    Schema schema() const;
};

/// Target shares per cell from a softmax over (targets + "other") of
/// additive level effects drawn N(0, effect_scale). Indexed by cell_id.
std::vector<std::vector<double>> default_cell_means(const PopulationSpec& spec);

/// Uniform covariate levels; one categorical vote per row, so at most one
/// target outcome is 1. Throws Error(configuration) on bad cell_means.
Dataset generate_population(const PopulationSpec& spec);

/// Sample-side success share for one cell so that the density ratio
/// population/sample is gamma on the `direction` side outcome (or 1/gamma on
/// the other side once that share exceeds eta).
double biased_cell_share(double population_share, double gamma, Direction direction);

/// Draws bias.n_sample rows with replacement, each row weighted by
/// 1/r(y|x) so that within every cell the ratio of population to sample
/// outcome frequencies sits at a vertex of [1/gamma, gamma]. Population
/// mean minus sample mean has the sign of d_true.
Dataset biased_sample(const Dataset& population, const BiasSpec& bias, std::size_t target_index);

/// Gamma_hat = max over cells (>= min_rows sample rows) and outcomes of
/// max(ratio, 1/ratio) of population vs sample outcome frequencies;
/// d_hat = sign(population mean - sample mean). Cells follow
/// `covariate_subset`; an empty subset pools every row into one cell.
MetaInfo estimate_true_meta(const Dataset& sample, const Dataset& population,
                            std::size_t target_index,
                            std::span<const std::string> covariate_subset = {},
                            std::size_t min_rows = 30);

}  // namespace dru
