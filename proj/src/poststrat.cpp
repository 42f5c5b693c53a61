#include "dru/poststrat.hpp"

#include <cmath>
#include <string>

#include "dru/error.hpp"

namespace dru {

void CellTable::validate() const {
    double total = 0.0;
    for (const auto& [cell, fraction] : fractions) {
        if (!(fraction >= 0.0)) throw Error(ErrorCode::schema, "cell " + std::to_string(cell) + " has a negative fraction");
        total += fraction;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw Error(ErrorCode::schema, "cell fractions sum to " + std::to_string(total) + ", not 1");
}

double poststratify(const std::map<std::uint64_t, double>& cell_estimates, const CellTable& table) {
    table.validate();
    double estimate = 0.0;
    for (const auto& [cell, fraction] : table.fractions) {
        const auto it = cell_estimates.find(cell);
        if (it == cell_estimates.end())
            throw Error(ErrorCode::schema, "no estimate for post-stratification cell " + std::to_string(cell));
        estimate += it->second * fraction;
    }
    return estimate;
}

CellTable build_cell_table(const Dataset& population, std::span<const std::string> covariate_subset) {
    if (covariate_subset.empty()) throw Error(ErrorCode::schema, "covariate subset is empty");
    if (population.empty()) throw Error(ErrorCode::schema, "population is empty");
    const CellIndexer indexer(population.schema(), covariate_subset);
    std::map<std::uint64_t, std::size_t> counts;
    for (std::size_t i = 0; i < population.size(); ++i) ++counts[indexer.key(population.levels(i))];
    CellTable table;
    table.covariates.assign(covariate_subset.begin(), covariate_subset.end());
    const double n = static_cast<double>(population.size());
    for (const auto& [cell, count] : counts) table.fractions[cell] = static_cast<double>(count) / n;
    return table;
}

}  // namespace dru
