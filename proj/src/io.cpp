#include "dru/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dru/error.hpp"

namespace dru {

using nlohmann::json;

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string dataset_to_csv(const Dataset& data) {
    const auto& schema = data.schema();
    std::string out;
    for (const auto& c : schema.covariates) out += c.name + ",";
    for (const auto& t : schema.targets) out += t + ",";
    out += "cell_id\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (auto level : data.levels(i)) {
            out += std::to_string(level);
            out += ',';
        }
        for (std::size_t t = 0; t < schema.targets.size(); ++t) {
            out += data.outcome(i, t) ? '1' : '0';
            out += ',';
        }
        out += std::to_string(data.cell_id(i));
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::uint64_t parse_uint(std::string_view field, std::size_t line_no, std::string_view column) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.remove_suffix(1);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    std::uint64_t v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ", column '" + std::string(column) +
                                          "': expected a non-negative integer, got '" + std::string(field) + "'");
    return v;
}

}  // namespace

Dataset dataset_from_csv(const std::string& text, const Schema& schema) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::parse, "CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line);
    auto column_of = [&](const std::string& name, const char* role) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw Error(ErrorCode::parse, std::string("missing ") + role + " column '" + name + "'");
    };
    std::vector<std::size_t> cov_cols, out_cols;
    for (const auto& c : schema.covariates) cov_cols.push_back(column_of(c.name, "covariate"));
    for (const auto& t : schema.targets) out_cols.push_back(column_of(t, "outcome"));
    const std::size_t cell_col = column_of("cell_id", "cell_id");

    Dataset data(schema);
    std::vector<std::uint16_t> levels(cov_cols.size());
    std::vector<std::uint8_t> outcomes(out_cols.size());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split(line);
        if (fields.size() != header.size())
            throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                                              " fields, header has " + std::to_string(header.size()));
        for (std::size_t c = 0; c < cov_cols.size(); ++c) {
            const auto v = parse_uint(fields[cov_cols[c]], line_no, schema.covariates[c].name);
            if (v >= schema.covariates[c].levels)
                throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": level " + std::to_string(v) +
                                                  " out of range for '" + schema.covariates[c].name + "'");
            levels[c] = static_cast<std::uint16_t>(v);
        }
        for (std::size_t t = 0; t < out_cols.size(); ++t) {
            const auto v = parse_uint(fields[out_cols[t]], line_no, schema.targets[t]);
            if (v > 1)
                throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": outcome '" + schema.targets[t] +
                                                  "' must be 0 or 1");
            outcomes[t] = static_cast<std::uint8_t>(v);
        }
        data.add_row(levels, outcomes);
        const auto cell = parse_uint(fields[cell_col], line_no, "cell_id");
        if (cell != data.cell_id(data.size() - 1))
            throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": cell_id " + std::to_string(cell) +
                                              " is inconsistent with the covariates");
    }
    return data;
}

json provenance_to_json(const Provenance& p) {
    json d = json::array();
    for (auto dir : p.bias.d_true) d.push_back(sign_of(dir));
    return {{"bias",
             {{"gamma_true", p.bias.gamma_true}, {"d_true", d}, {"n_sample", p.bias.n_sample}, {"seed", p.bias.seed}}},
            {"target_index", p.target_index},
            {"warnings", p.warnings}};
}

Provenance provenance_from_json(const json& doc) {
    try {
        Provenance p;
        const auto& b = doc.at("bias");
        p.bias.gamma_true = b.at("gamma_true").get<std::vector<double>>();
        for (int d : b.at("d_true").get<std::vector<int>>()) p.bias.d_true.push_back(direction_from_int(d));
        p.bias.n_sample = b.at("n_sample").get<std::size_t>();
        p.bias.seed = b.at("seed").get<std::uint64_t>();
        p.target_index = doc.at("target_index").get<std::size_t>();
        p.warnings = doc.at("warnings").get<std::vector<std::string>>();
        return p;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, std::string("provenance: ") + e.what());
    }
}

std::string cell_table_to_csv(const CellTable& table) {
    std::string out = "cell_id,fraction\n";
    for (const auto& [cell, fraction] : table.fractions) out += std::to_string(cell) + "," + format_double(fraction) + "\n";
    return out;
}

namespace {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::identity: return "identity";
        case Activation::softplus: return "softplus";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "identity") return Activation::identity;
    if (name == "softplus") return Activation::softplus;
    throw Error(ErrorCode::parse, "unknown activation '" + name + "'");
}

}  // namespace

json mlp_to_json(const Mlp& net) {
    json layers = json::array();
    for (const auto& l : net.layers())
        layers.push_back({{"input_width", l.input_width},
                          {"output_width", l.output_width},
                          {"activation", activation_name(l.activation)}});
    return {{"layers", layers},
            {"parameters", std::vector<double>(net.parameters().begin(), net.parameters().end())},
            {"seed", net.seed()}};
}

Mlp mlp_from_json(const json& doc) {
    try {
        std::vector<LayerSpec> layers;
        for (const auto& l : doc.at("layers"))
            layers.push_back({l.at("input_width").get<std::size_t>(), l.at("output_width").get<std::size_t>(),
                              activation_from_name(l.at("activation").get<std::string>())});
        return Mlp::from_parameters(std::move(layers), doc.at("parameters").get<std::vector<double>>(),
                                    doc.value("seed", std::uint64_t{0}));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, std::string("network: ") + e.what());
    }
}

namespace {
constexpr int kModelFormatVersion = 1;
}

json model_to_json(const TrainedModel& model, const std::vector<std::string>& covariates) {
    json doc = {{"format", "dru-model"},
                {"version", kModelFormatVersion},
                {"loss",
                 {{"kind", std::string(to_string(model.loss.kind))},
                  {"gamma", model.loss.meta.gamma},
                  {"direction", sign_of(model.loss.meta.direction)},
                  {"pinball_p", model.loss.pinball_p}}},
                {"covariates", covariates},
                {"h", mlp_to_json(model.h)}};
    doc["alpha"] = model.alpha ? mlp_to_json(*model.alpha) : json(nullptr);
    return doc;
}

TrainedModel model_from_json(const json& doc, std::vector<std::string>* covariates) {
    try {
        if (doc.at("format").get<std::string>() != "dru-model")
            throw Error(ErrorCode::parse, "not a dru-model document");
        if (doc.at("version").get<int>() != kModelFormatVersion)
            throw Error(ErrorCode::parse, "unsupported model format version " + doc.at("version").dump());
        TrainedModel model;
        const auto& loss = doc.at("loss");
        model.loss.kind = loss_kind_from_string(loss.at("kind").get<std::string>());
        model.loss.meta.gamma = loss.at("gamma").get<double>();
        model.loss.meta.direction = direction_from_int(loss.at("direction").get<int>());
        model.loss.pinball_p = loss.at("pinball_p").get<double>();
        model.h = mlp_from_json(doc.at("h"));
        if (!doc.at("alpha").is_null()) model.alpha = mlp_from_json(doc.at("alpha"));
        if (covariates) *covariates = doc.at("covariates").get<std::vector<std::string>>();
        return model;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, std::string("model: ") + e.what());
    }
}

json report_to_json(const TrainReport& report) {
    return {{"epochs_run", report.epochs_run},
            {"train_loss_trace", report.train_loss_trace},
            {"val_loss_trace", report.val_loss_trace},
            {"stopped_early", report.stopped_early},
            {"best_epoch", report.best_epoch}};
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open '" + path.string() + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot open '" + path.string() + "' for writing");
    out << contents;
    if (!out) throw Error(ErrorCode::io, "failed writing '" + path.string() + "'");
}

void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw Error(ErrorCode::io, "cannot create output directory '" + dir.string() + "'" +
                                       (ec ? ": " + ec.message() : std::string{}));
}

}  // namespace dru
