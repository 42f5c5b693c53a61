#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "dru/dataset.hpp"
#include "dru/nn.hpp"
#include "dru/poststrat.hpp"

namespace dru {

/// Shortest round-trip decimal form.
std::string format_double(double value);

/// Header: covariate names, one column per target, cell_id.
std::string dataset_to_csv(const Dataset& data);

/// Parses a dataset CSV against `schema`. Columns may appear in any order;
/// extra columns are ignored. A missing covariate, outcome or cell_id
/// column throws Error(parse) naming the column.
Dataset dataset_from_csv(const std::string& text, const Schema& schema);

nlohmann::json provenance_to_json(const Provenance& provenance);
Provenance provenance_from_json(const nlohmann::json& doc);

std::string cell_table_to_csv(const CellTable& table);

nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& doc);

/// Versioned model document: loss, covariates, h and optional alpha.
nlohmann::json model_to_json(const TrainedModel& model, const std::vector<std::string>& covariates);
TrainedModel model_from_json(const nlohmann::json& doc, std::vector<std::string>* covariates = nullptr);

nlohmann::json report_to_json(const TrainReport& report);

std::string read_file(const std::filesystem::path& path);
/// Throws Error(io) when the file cannot be written.
void write_file(const std::filesystem::path& path, const std::string& contents);
/// Creates the directory (and parents); throws Error(io) on failure.
void ensure_directory(const std::filesystem::path& dir);

}  // namespace dru
