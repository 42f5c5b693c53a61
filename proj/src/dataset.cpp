#include "dru/dataset.hpp"

#include <algorithm>
#include <string>

#include "dru/error.hpp"

namespace dru {

std::vector<Covariate> default_covariates() {
    return {{"gender", 2}, {"age", 5}, {"area", 4}, {"education", 3}, {"employment", 3}, {"past_vote", 4}};
}

std::optional<std::size_t> Schema::covariate_index(const std::string& name) const {
    for (std::size_t i = 0; i < covariates.size(); ++i)
        if (covariates[i].name == name) return i;
    return std::nullopt;
}

std::optional<std::size_t> Schema::target_index(const std::string& name) const {
    for (std::size_t i = 0; i < targets.size(); ++i)
        if (targets[i] == name) return i;
    return std::nullopt;
}

std::uint64_t Schema::cell_count() const {
    std::uint64_t n = 1;
    for (const auto& c : covariates) n *= c.levels;
    return n;
}

CellIndexer::CellIndexer(const Schema& schema, std::span<const std::string> subset) {
    for (const auto& name : subset) {
        const auto idx = schema.covariate_index(name);
        if (!idx) throw Error(ErrorCode::schema, "unknown covariate '" + name + "'");
        if (std::find(indices_.begin(), indices_.end(), *idx) != indices_.end())
            throw Error(ErrorCode::schema, "covariate '" + name + "' listed twice");
        names_.push_back(name);
        indices_.push_back(*idx);
        radices_.push_back(schema.covariates[*idx].levels);
        count_ *= schema.covariates[*idx].levels;
    }
}

CellIndexer CellIndexer::all(const Schema& schema) {
    std::vector<std::string> names;
    for (const auto& c : schema.covariates) names.push_back(c.name);
    return CellIndexer(schema, names);
}

std::uint64_t CellIndexer::key(std::span<const std::uint16_t> row_levels) const {
    std::uint64_t k = 0;
    for (std::size_t j = 0; j < indices_.size(); ++j) k = k * radices_[j] + row_levels[indices_[j]];
    return k;
}

std::vector<std::uint16_t> CellIndexer::decode(std::uint64_t key) const {
    std::vector<std::uint16_t> levels(indices_.size());
    for (std::size_t j = indices_.size(); j-- > 0;) {
        levels[j] = static_cast<std::uint16_t>(key % radices_[j]);
        key /= radices_[j];
    }
    return levels;
}

std::size_t CellIndexer::encoded_width() const {
    std::size_t w = 0;
    for (auto r : radices_) w += r;
    return w;
}

void CellIndexer::encode_row(std::span<const std::uint16_t> row_levels, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    std::size_t offset = 0;
    for (std::size_t j = 0; j < indices_.size(); ++j) {
        out[offset + row_levels[indices_[j]]] = 1.0;
        offset += radices_[j];
    }
}

void CellIndexer::encode_key(std::uint64_t key, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    const auto levels = decode(key);
    std::size_t offset = 0;
    for (std::size_t j = 0; j < levels.size(); ++j) {
        out[offset + levels[j]] = 1.0;
        offset += radices_[j];
    }
}

void BiasSpec::validate(std::size_t n_targets) const {
    if (gamma_true.size() != n_targets || d_true.size() != n_targets)
        throw Error(ErrorCode::configuration, "bias spec needs one gamma and one direction per target (" +
                                                  std::to_string(n_targets) + ")");
    for (double g : gamma_true)
        if (!(g >= 1.0)) throw Error(ErrorCode::parameter, "gamma_true must be >= 1");
    for (auto d : d_true)
        if (d == Direction::none) throw Error(ErrorCode::parameter, "d_true must be +1 or -1");
    if (n_sample == 0) throw Error(ErrorCode::configuration, "n_sample must be positive");
}

Dataset::Dataset(Schema schema) : schema_(std::move(schema)), indexer_(CellIndexer::all(schema_)) {}

void Dataset::reserve(std::size_t rows) {
    levels_.reserve(rows * schema_.covariates.size());
    outcomes_.reserve(rows * schema_.targets.size());
    cell_ids_.reserve(rows);
}

void Dataset::add_row(std::span<const std::uint16_t> levels, std::span<const std::uint8_t> outcomes) {
    if (levels.size() != schema_.covariates.size() || outcomes.size() != schema_.targets.size())
        throw Error(ErrorCode::schema, "row width does not match the schema");
    for (std::size_t c = 0; c < levels.size(); ++c)
        if (levels[c] >= schema_.covariates[c].levels)
            throw Error(ErrorCode::schema, "level " + std::to_string(levels[c]) + " out of range for covariate '" +
                                               schema_.covariates[c].name + "'");
    for (auto o : outcomes)
        if (o > 1) throw Error(ErrorCode::schema, "outcomes must be 0 or 1");
    levels_.insert(levels_.end(), levels.begin(), levels.end());
    outcomes_.insert(outcomes_.end(), outcomes.begin(), outcomes.end());
    cell_ids_.push_back(indexer_.key(levels));
}

std::span<const std::uint16_t> Dataset::levels(std::size_t row) const {
    const auto w = schema_.covariates.size();
    return {levels_.data() + row * w, w};
}

double Dataset::mean(std::size_t target) const {
    if (empty()) return 0.0;
    std::size_t ones = 0;
    for (std::size_t i = 0; i < size(); ++i) ones += outcome(i, target);
    return static_cast<double>(ones) / static_cast<double>(size());
}

bool Dataset::operator==(const Dataset& other) const {
    return schema_ == other.schema_ && levels_ == other.levels_ && outcomes_ == other.outcomes_ &&
           cell_ids_ == other.cell_ids_;
}

}  // namespace dru
