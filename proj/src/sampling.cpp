#include "dru/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dru/error.hpp"
#include "dru/robustness.hpp"
#include "dru/seed.hpp"

namespace dru {

Schema PopulationSpec::schema() const {
    Schema s;
    s.covariates = covariates;
    for (std::size_t t = 0; t < n_targets; ++t) s.targets.push_back("coalition_" + std::to_string(t + 1));
    return s;
}

std::vector<std::vector<double>> default_cell_means(const PopulationSpec& spec) {
    std::mt19937_64 rng(derive_seed(spec.seed, {1}));
    std::normal_distribution<double> effect(0.0, spec.effect_scale);
    // effects[c][level][t]
    std::vector<std::vector<std::vector<double>>> effects(spec.covariates.size());
    for (std::size_t c = 0; c < spec.covariates.size(); ++c) {
        effects[c].resize(spec.covariates[c].levels);
        for (auto& level : effects[c]) {
            level.resize(spec.n_targets);
            for (double& e : level) e = effect(rng);
        }
    }
    const Schema schema = spec.schema();
    const CellIndexer indexer = CellIndexer::all(schema);
    std::vector<std::vector<double>> means(indexer.cell_count(), std::vector<double>(spec.n_targets));
    std::vector<double> logits(spec.n_targets);
    for (std::uint64_t cell = 0; cell < indexer.cell_count(); ++cell) {
        const auto levels = indexer.decode(cell);
        double norm = 1.0;  // "other" has logit 0
        for (std::size_t t = 0; t < spec.n_targets; ++t) {
            double z = 0.0;
            for (std::size_t c = 0; c < levels.size(); ++c) z += effects[c][levels[c]][t];
            logits[t] = std::exp(z);
            norm += logits[t];
        }
        for (std::size_t t = 0; t < spec.n_targets; ++t) means[cell][t] = logits[t] / norm;
    }
    return means;
}

namespace {

std::vector<std::vector<double>> resolve_cell_means(const PopulationSpec& spec) {
    if (spec.cell_means.empty()) return default_cell_means(spec);
    const std::uint64_t cells = spec.schema().cell_count();
    if (spec.cell_means.size() != cells)
        throw Error(ErrorCode::configuration, "cell_means covers " + std::to_string(spec.cell_means.size()) +
                                                  " cells, the covariates define " + std::to_string(cells));
    std::vector<std::vector<double>> means(cells);
    for (const auto& [cell, probs] : spec.cell_means) {
        if (cell >= cells) throw Error(ErrorCode::configuration, "cell_means has unknown cell " + std::to_string(cell));
        if (probs.size() != spec.n_targets)
            throw Error(ErrorCode::configuration, "cell " + std::to_string(cell) + " needs " +
                                                      std::to_string(spec.n_targets) + " target probabilities");
        double total = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0 && p <= 1.0))
                throw Error(ErrorCode::configuration, "cell " + std::to_string(cell) + " has a probability outside [0,1]");
            total += p;
        }
        if (total > 1.0 + 1e-12)
            throw Error(ErrorCode::configuration, "cell " + std::to_string(cell) + " target shares sum above 1");
        means[cell] = probs;
    }
    return means;
}

}  // namespace

Dataset generate_population(const PopulationSpec& spec) {
    if (spec.covariates.empty()) throw Error(ErrorCode::configuration, "population needs at least one covariate");
    if (spec.n_targets == 0) throw Error(ErrorCode::configuration, "population needs at least one target");
    for (const auto& c : spec.covariates)
        if (c.levels == 0 || c.levels > 65535)
            throw Error(ErrorCode::configuration, "covariate '" + c.name + "' needs 1..65535 levels");
    const auto means = resolve_cell_means(spec);

    Dataset data(spec.schema());
    data.reserve(spec.n_population);
    std::mt19937_64 rng(derive_seed(spec.seed, {2}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::uniform_int_distribution<int>> level_dists;
    for (const auto& c : spec.covariates) level_dists.emplace_back(0, static_cast<int>(c.levels) - 1);

    const CellIndexer indexer = CellIndexer::all(data.schema());
    std::vector<std::uint16_t> levels(spec.covariates.size());
    std::vector<std::uint8_t> outcomes(spec.n_targets);
    for (std::size_t i = 0; i < spec.n_population; ++i) {
        for (std::size_t c = 0; c < levels.size(); ++c) levels[c] = static_cast<std::uint16_t>(level_dists[c](rng));
        const auto& probs = means[indexer.key(levels)];
        const double u = unit(rng);
        double cum = 0.0;
        std::fill(outcomes.begin(), outcomes.end(), std::uint8_t{0});
        for (std::size_t t = 0; t < spec.n_targets; ++t) {
            cum += probs[t];
            if (u < cum) {
                outcomes[t] = 1;
                break;
            }
        }
        data.add_row(levels, outcomes);
    }
    return data;
}

double biased_cell_share(double population_share, double gamma, Direction direction) {
    const double eta_g = eta(gamma);
    // Share of the outcome on the d side (1 for d = +1, 0 for d = -1).
    const double side = direction == Direction::up ? population_share : 1.0 - population_share;
    const double sampled = side <= eta_g ? side / gamma : 1.0 - gamma * (1.0 - side);
    return direction == Direction::up ? sampled : 1.0 - sampled;
}

Dataset biased_sample(const Dataset& population, const BiasSpec& bias, std::size_t target_index) {
    const auto& schema = population.schema();
    bias.validate(schema.targets.size());
    if (target_index >= schema.targets.size())
        throw Error(ErrorCode::schema, "target index " + std::to_string(target_index) + " out of range");
    if (population.empty()) throw Error(ErrorCode::configuration, "population is empty");
    const double gamma = bias.gamma_true[target_index];
    const Direction dir = bias.d_true[target_index];

    std::vector<std::size_t> cell_rows(schema.cell_count(), 0), cell_ones(schema.cell_count(), 0);
    for (std::size_t i = 0; i < population.size(); ++i) {
        ++cell_rows[population.cell_id(i)];
        cell_ones[population.cell_id(i)] += population.outcome(i, target_index);
    }

    // Row weight = sample share / population share of the row's outcome,
    // i.e. 1/r(y|x). Weights sum to the cell size, so cell marginals hold.
    std::vector<double> cell_w1(schema.cell_count(), 1.0), cell_w0(schema.cell_count(), 1.0);
    for (std::size_t cell = 0; cell < cell_rows.size(); ++cell) {
        if (cell_rows[cell] == 0) continue;
        const double q = static_cast<double>(cell_ones[cell]) / static_cast<double>(cell_rows[cell]);
        if (q <= 0.0 || q >= 1.0) continue;
        const double p = biased_cell_share(q, gamma, dir);
        cell_w1[cell] = p / q;
        cell_w0[cell] = (1.0 - p) / (1.0 - q);
    }
    std::vector<double> weights(population.size());
    for (std::size_t i = 0; i < population.size(); ++i) {
        const auto cell = population.cell_id(i);
        weights[i] = population.outcome(i, target_index) ? cell_w1[cell] : cell_w0[cell];
    }

    std::mt19937_64 rng(derive_seed(bias.seed, {3, target_index}));
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    Dataset sample(schema);
    sample.reserve(bias.n_sample);
    std::vector<std::uint8_t> outcomes(schema.targets.size());
    std::vector<bool> seen(schema.cell_count(), false);
    for (std::size_t s = 0; s < bias.n_sample; ++s) {
        const std::size_t i = pick(rng);
        for (std::size_t t = 0; t < outcomes.size(); ++t) outcomes[t] = population.outcome(i, t);
        sample.add_row(population.levels(i), outcomes);
        seen[population.cell_id(i)] = true;
    }

    Provenance prov{bias, target_index, {}};
    std::size_t empty_cells = 0;
    for (std::size_t cell = 0; cell < cell_rows.size(); ++cell)
        if (cell_rows[cell] > 0 && !seen[cell]) ++empty_cells;
    if (empty_cells > 0)
        prov.warnings.push_back(std::to_string(empty_cells) + " populated cells have no sampled rows");
    sample.provenance = std::move(prov);
    return sample;
}

MetaInfo estimate_true_meta(const Dataset& sample, const Dataset& population, std::size_t target_index,
                            std::span<const std::string> covariate_subset, std::size_t min_rows) {
    if (!(sample.schema() == population.schema()))
        throw Error(ErrorCode::schema, "sample and population schemas differ");
    if (target_index >= population.schema().targets.size())
        throw Error(ErrorCode::schema, "target index " + std::to_string(target_index) + " out of range");
    const CellIndexer indexer(population.schema(), covariate_subset);
    const auto cells = indexer.cell_count();
    std::vector<double> s_rows(cells, 0), s_ones(cells, 0), p_rows(cells, 0), p_ones(cells, 0);
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const auto k = indexer.key(sample.levels(i));
        s_rows[k] += 1;
        s_ones[k] += sample.outcome(i, target_index);
    }
    for (std::size_t i = 0; i < population.size(); ++i) {
        const auto k = indexer.key(population.levels(i));
        p_rows[k] += 1;
        p_ones[k] += population.outcome(i, target_index);
    }

    double gamma_hat = 1.0;
    bool any = false;
    for (std::uint64_t k = 0; k < cells; ++k) {
        if (s_rows[k] < static_cast<double>(min_rows) || p_rows[k] == 0) continue;
        any = true;
        const double q1 = p_ones[k] / p_rows[k], p1 = s_ones[k] / s_rows[k];
        for (auto [q, p] : {std::pair{q1, p1}, std::pair{1.0 - q1, 1.0 - p1}}) {
            if (q <= 0.0 || p <= 0.0) continue;
            const double r = q / p;
            gamma_hat = std::max({gamma_hat, r, 1.0 / r});
        }
    }
    if (!any)
        throw Error(ErrorCode::estimation, "no cell has at least " + std::to_string(min_rows) + " sample rows");

    const double diff = population.mean(target_index) - sample.mean(target_index);
    const Direction d = diff > 0.0 ? Direction::up : (diff < 0.0 ? Direction::down : Direction::none);
    return {gamma_hat, d};
}

}  // namespace dru
