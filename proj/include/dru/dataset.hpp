#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dru/losses.hpp"

namespace dru {

struct Covariate {
    std::string name;
    std::size_t levels = 2;

    bool operator==(const Covariate&) const = default;
};

/// gender 2, age 5, area 4, education 3, employment 3, past_vote 4.
std::vector<Covariate> default_covariates();

struct Schema {
    std::vector<Covariate> covariates;
    std::vector<std::string> targets;

    std::optional<std::size_t> covariate_index(const std::string& name) const;
    std::optional<std::size_t> target_index(const std::string& name) const;
    /// Number of cells of the full cross-tabulation.
    std::uint64_t cell_count() const;

    bool operator==(const Schema&) const = default;
};

/// Mixed-radix cell key over a subset of covariates (first listed is most
/// significant). With every covariate selected this is the dataset cell_id.
class CellIndexer {
public:
    CellIndexer() = default;
    /// Throws Error(schema) for unknown names or duplicates.
    CellIndexer(const Schema& schema, std::span<const std::string> subset);
    static CellIndexer all(const Schema& schema);

    std::uint64_t key(std::span<const std::uint16_t> row_levels) const;
    /// Levels of the subset covariates for `key`, in subset order.
    std::vector<std::uint16_t> decode(std::uint64_t key) const;
    std::uint64_t cell_count() const { return count_; }

    std::span<const std::size_t> covariate_indices() const { return indices_; }
    std::span<const std::size_t> radices() const { return radices_; }
    const std::vector<std::string>& names() const { return names_; }

    /// One-hot width: sum of levels over the subset.
    std::size_t encoded_width() const;
    /// One-hot encoding of a full row (only subset covariates are read).
    void encode_row(std::span<const std::uint16_t> row_levels, std::span<double> out) const;
    /// One-hot encoding of a cell key.
    void encode_key(std::uint64_t key, std::span<double> out) const;

private:
    std::vector<std::string> names_;
    std::vector<std::size_t> indices_;
    std::vector<std::size_t> radices_;
    std::uint64_t count_ = 1;
};

struct BiasSpec {
    std::vector<double> gamma_true;     // one per target
    std::vector<Direction> d_true;      // one per target, +1 or -1
    std::size_t n_sample = 2000;
    std::uint64_t seed = 0;

    void validate(std::size_t n_targets) const;
};

struct Provenance {
    BiasSpec bias;
    std::size_t target_index = 0;
    std::vector<std::string> warnings;
};

/// Rows of categorical covariates with binary outcomes per target.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(Schema schema);

    const Schema& schema() const { return schema_; }
    std::size_t size() const { return cell_ids_.size(); }
    bool empty() const { return cell_ids_.empty(); }

    /// Throws Error(schema) on a width or level-range mismatch.
    void add_row(std::span<const std::uint16_t> levels, std::span<const std::uint8_t> outcomes);
    void reserve(std::size_t rows);

    std::span<const std::uint16_t> levels(std::size_t row) const;
    std::uint8_t outcome(std::size_t row, std::size_t target) const {
        return outcomes_[row * schema_.targets.size() + target];
    }
    std::uint64_t cell_id(std::size_t row) const { return cell_ids_[row]; }

    double mean(std::size_t target) const;

    std::optional<Provenance> provenance;

    bool operator==(const Dataset& other) const;

private:
    Schema schema_;
    CellIndexer indexer_;
    std::vector<std::uint16_t> levels_;
    std::vector<std::uint8_t> outcomes_;
    std::vector<std::uint64_t> cell_ids_;
};

}  // namespace dru
