#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dru/dataset.hpp"

namespace dru {

/// Population fraction per post-stratification cell.
struct CellTable {
    std::vector<std::string> covariates;
    std::map<std::uint64_t, double> fractions;

    /// Throws Error(schema) on negative fractions or a total away from 1.
    void validate() const;
};

/// Sum over cells of estimate * fraction. Every table cell needs an
/// estimate; a missing one throws Error(schema).
double poststratify(const std::map<std::uint64_t, double>& cell_estimates, const CellTable& table);

/// Empirical joint frequencies of the subset's cross-tabulation.
CellTable build_cell_table(const Dataset& population, std::span<const std::string> covariate_subset);

}  // namespace dru
