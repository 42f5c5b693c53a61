#include "dru/config.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <thread>

#include "dru/error.hpp"
#include "dru/io.hpp"

namespace dru {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& context) {
    if (!obj.is_object()) throw Error(ErrorCode::parse, context + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            throw Error(ErrorCode::parse, "unknown key '" + key + "' in " + context);
    }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& context) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::parse, context + "." + key + " has the wrong type");
    }
}

std::vector<MetaInfo> parse_meta_list(const json& arr, const std::string& context) {
    std::vector<MetaInfo> out;
    if (!arr.is_array()) throw Error(ErrorCode::parse, context + " must be an array");
    for (const auto& m : arr) {
        check_keys(m, {"gamma", "direction"}, context + "[]");
        MetaInfo info;
        read(m, "gamma", info.gamma, context);
        int d = 0;
        read(m, "direction", d, context);
        info.direction = direction_from_int(d);
        out.push_back(info);
    }
    return out;
}

std::vector<MethodSpec> all_methods() {
    std::vector<MethodSpec> out;
    for (auto k : {MethodKind::dru_informed, MethodKind::nn_plain, MethodKind::regression_poststrat,
                   MethodKind::pinball, MethodKind::dru_wrong_gamma, MethodKind::dru_wrong_d,
                   MethodKind::dru_wrong_both})
        out.push_back({k, {}});
    return out;
}

}  // namespace

RunConfig RunConfig::defaults() {
    RunConfig c;
    c.bias.gamma_true.assign(c.population.n_targets, 2.0);
    for (std::size_t t = 0; t < c.population.n_targets; ++t)
        c.bias.d_true.push_back(t % 2 == 0 ? Direction::up : Direction::down);
    c.bias.n_sample = 2000;
    c.covariate_subsets = {{"past_vote"}, {"gender", "age", "past_vote"}};
    c.methods = all_methods();
    return c;
}

RunConfig RunConfig::from_json(const json& doc) {
    RunConfig c = defaults();
    check_keys(doc,
               {"seed", "jobs", "output_dir", "population", "bias", "replicates", "covariate_subsets", "methods",
                "train", "network", "train_command", "oracle"},
               "config");
    read(doc, "seed", c.seed, "config");
    read(doc, "jobs", c.jobs, "config");
    read(doc, "output_dir", c.output_dir, "config");
    read(doc, "replicates", c.replicates, "config");

    if (doc.contains("population")) {
        const auto& p = doc["population"];
        check_keys(p, {"covariates", "n_targets", "n_population", "effect_scale", "cell_means"}, "population");
        if (p.contains("covariates")) {
            c.population.covariates.clear();
            for (const auto& cov : p["covariates"]) {
                check_keys(cov, {"name", "levels"}, "population.covariates[]");
                Covariate v;
                read(cov, "name", v.name, "population.covariates[]");
                read(cov, "levels", v.levels, "population.covariates[]");
                c.population.covariates.push_back(v);
            }
        }
        const auto old_targets = c.population.n_targets;
        read(p, "n_targets", c.population.n_targets, "population");
        read(p, "n_population", c.population.n_population, "population");
        read(p, "effect_scale", c.population.effect_scale, "population");
        if (p.contains("cell_means")) {
            if (!p["cell_means"].is_object()) throw Error(ErrorCode::parse, "population.cell_means must be an object");
            for (const auto& [key, probs] : p["cell_means"].items()) {
                std::uint64_t cell = 0;
                try {
                    cell = std::stoull(key);
                } catch (const std::exception&) {
                    throw Error(ErrorCode::parse, "population.cell_means key '" + key + "' is not a cell id");
                }
                c.population.cell_means[cell] = probs.get<std::vector<double>>();
            }
        }
        if (c.population.n_targets != old_targets) {
            c.bias.gamma_true.assign(c.population.n_targets, 2.0);
            c.bias.d_true.clear();
            for (std::size_t t = 0; t < c.population.n_targets; ++t)
                c.bias.d_true.push_back(t % 2 == 0 ? Direction::up : Direction::down);
        }
    }

    if (doc.contains("bias")) {
        const auto& b = doc["bias"];
        check_keys(b, {"gamma_true", "d_true", "n_sample"}, "bias");
        if (b.contains("gamma_true")) {
            if (b["gamma_true"].is_number())
                c.bias.gamma_true.assign(c.population.n_targets, b["gamma_true"].get<double>());
            else
                read(b, "gamma_true", c.bias.gamma_true, "bias");
        }
        if (b.contains("d_true")) {
            c.bias.d_true.clear();
            if (b["d_true"].is_number()) {
                c.bias.d_true.assign(c.population.n_targets, direction_from_int(b["d_true"].get<int>()));
            } else {
                std::vector<int> ds;
                read(b, "d_true", ds, "bias");
                for (int d : ds) c.bias.d_true.push_back(direction_from_int(d));
            }
        }
        read(b, "n_sample", c.bias.n_sample, "bias");
    }

    read(doc, "covariate_subsets", c.covariate_subsets, "config");

    if (doc.contains("methods")) {
        c.methods.clear();
        if (!doc["methods"].is_array()) throw Error(ErrorCode::parse, "methods must be an array");
        for (const auto& m : doc["methods"]) {
            if (m.is_string()) {
                c.methods.push_back({method_kind_from_string(m.get<std::string>()), {}});
                continue;
            }
            check_keys(m, {"kind", "meta"}, "methods[]");
            MethodSpec spec{method_kind_from_string(m.at("kind").get<std::string>()), {}};
            if (m.contains("meta")) spec.meta = parse_meta_list(m["meta"], "methods[].meta");
            c.methods.push_back(spec);
        }
    }

    if (doc.contains("train")) {
        const auto& t = doc["train"];
        check_keys(t,
                   {"max_epochs", "patience", "batch_size", "learning_rate", "validation_fraction",
                    "improvement_tolerance", "adam_beta1", "adam_beta2", "adam_epsilon"},
                   "train");
        read(t, "max_epochs", c.train.max_epochs, "train");
        read(t, "patience", c.train.patience, "train");
        read(t, "batch_size", c.train.batch_size, "train");
        read(t, "learning_rate", c.train.learning_rate, "train");
        read(t, "validation_fraction", c.train.validation_fraction, "train");
        read(t, "improvement_tolerance", c.train.improvement_tolerance, "train");
        read(t, "adam_beta1", c.train.adam_beta1, "train");
        read(t, "adam_beta2", c.train.adam_beta2, "train");
        read(t, "adam_epsilon", c.train.adam_epsilon, "train");
    }

    if (doc.contains("network")) {
        const auto& n = doc["network"];
        check_keys(n, {"hidden", "pinball_hidden"}, "network");
        read(n, "hidden", c.network.hidden, "network");
        read(n, "pinball_hidden", c.network.pinball_hidden, "network");
    }

    if (doc.contains("train_command")) {
        const auto& t = doc["train_command"];
        check_keys(t, {"loss", "gamma", "direction", "pinball_p", "target", "covariates"}, "train_command");
        if (t.contains("loss")) c.train_command.loss = loss_kind_from_string(t["loss"].get<std::string>());
        read(t, "gamma", c.train_command.gamma, "train_command");
        int d = 0;
        read(t, "direction", d, "train_command");
        c.train_command.direction = direction_from_int(d);
        read(t, "pinball_p", c.train_command.pinball_p, "train_command");
        read(t, "target", c.train_command.target, "train_command");
        read(t, "covariates", c.train_command.covariates, "train_command");
    }

    if (doc.contains("oracle")) {
        const auto& o = doc["oracle"];
        check_keys(o, {"instances", "max_points", "gamma_min", "gamma_max"}, "oracle");
        read(o, "instances", c.oracle.instances, "oracle");
        read(o, "max_points", c.oracle.max_points, "oracle");
        read(o, "gamma_min", c.oracle.gamma_min, "oracle");
        read(o, "gamma_max", c.oracle.gamma_max, "oracle");
    }

    c.validate();
    return c;
}

void RunConfig::validate() const {
    const Schema s = schema();
    if (s.covariates.empty()) throw Error(ErrorCode::configuration, "at least one covariate is required");
    std::set<std::string> names;
    for (const auto& cov : s.covariates) {
        if (cov.name.empty() || cov.levels == 0)
            throw Error(ErrorCode::configuration, "covariates need a name and at least one level");
        if (!names.insert(cov.name).second)
            throw Error(ErrorCode::configuration, "duplicate covariate '" + cov.name + "'");
    }
    if (population.n_targets == 0) throw Error(ErrorCode::configuration, "n_targets must be positive");
    if (population.n_population == 0) throw Error(ErrorCode::configuration, "n_population must be positive");
    bias.validate(population.n_targets);
    if (replicates == 0) throw Error(ErrorCode::configuration, "replicates must be positive");
    if (covariate_subsets.empty()) throw Error(ErrorCode::configuration, "covariate_subsets is empty");
    for (const auto& subset : covariate_subsets) {
        if (subset.empty()) throw Error(ErrorCode::configuration, "a covariate subset is empty");
        CellIndexer(s, subset);  // throws on unknown names
    }
    if (methods.empty()) throw Error(ErrorCode::configuration, "methods is empty");
    for (const auto& m : methods)
        if (!m.meta.empty() && m.meta.size() != population.n_targets)
            throw Error(ErrorCode::configuration, "method meta needs one entry per target");
    train.validate();
    if (network.hidden.empty() || network.pinball_hidden.empty())
        throw Error(ErrorCode::configuration, "network hidden widths are empty");
    for (auto w : network.hidden)
        if (w == 0) throw Error(ErrorCode::configuration, "hidden widths must be positive");
    for (auto w : network.pinball_hidden)
        if (w == 0) throw Error(ErrorCode::configuration, "hidden widths must be positive");
    LossSpec{train_command.loss, {train_command.gamma, train_command.direction}, train_command.pinball_p}.validate();
    if (!train_command.target.empty() && !s.target_index(train_command.target))
        throw Error(ErrorCode::configuration, "train_command.target '" + train_command.target + "' is not a target");
    if (!train_command.covariates.empty()) CellIndexer(s, train_command.covariates);
    if (oracle.max_points < 1 || oracle.max_points > 20)
        throw Error(ErrorCode::configuration, "oracle.max_points must lie in [1, 20]");
    if (!(oracle.gamma_min >= 1.0 && oracle.gamma_max >= oracle.gamma_min))
        throw Error(ErrorCode::configuration, "oracle gamma range must satisfy 1 <= gamma_min <= gamma_max");
}

json RunConfig::to_json(bool include_runtime) const {
    json covs = json::array();
    for (const auto& cov : population.covariates) covs.push_back({{"name", cov.name}, {"levels", cov.levels}});
    json pop = {{"covariates", covs},
                {"n_targets", population.n_targets},
                {"n_population", population.n_population},
                {"effect_scale", population.effect_scale}};
    if (!population.cell_means.empty()) {
        json cm = json::object();
        for (const auto& [cell, probs] : population.cell_means) cm[std::to_string(cell)] = probs;
        pop["cell_means"] = cm;
    }
    json d = json::array();
    for (auto dir : bias.d_true) d.push_back(sign_of(dir));
    json methods_json = json::array();
    for (const auto& m : methods) {
        if (m.meta.empty()) {
            methods_json.push_back(std::string(to_string(m.kind)));
            continue;
        }
        json meta = json::array();
        for (const auto& mi : m.meta) meta.push_back({{"gamma", mi.gamma}, {"direction", sign_of(mi.direction)}});
        methods_json.push_back({{"kind", std::string(to_string(m.kind))}, {"meta", meta}});
    }
    json doc = {
        {"seed", seed},
        {"population", pop},
        {"bias", {{"gamma_true", bias.gamma_true}, {"d_true", d}, {"n_sample", bias.n_sample}}},
        {"replicates", replicates},
        {"covariate_subsets", covariate_subsets},
        {"methods", methods_json},
        {"train",
         {{"max_epochs", train.max_epochs},
          {"patience", train.patience},
          {"batch_size", train.batch_size},
          {"learning_rate", train.learning_rate},
          {"validation_fraction", train.validation_fraction},
          {"improvement_tolerance", train.improvement_tolerance},
          {"adam_beta1", train.adam_beta1},
          {"adam_beta2", train.adam_beta2},
          {"adam_epsilon", train.adam_epsilon}}},
        {"network", {{"hidden", network.hidden}, {"pinball_hidden", network.pinball_hidden}}},
        {"train_command",
         {{"loss", std::string(dru::to_string(train_command.loss))},
          {"gamma", train_command.gamma},
          {"direction", sign_of(train_command.direction)},
          {"pinball_p", train_command.pinball_p},
          {"target", train_command.target},
          {"covariates", train_command.covariates}}},
        {"oracle",
         {{"instances", oracle.instances},
          {"max_points", oracle.max_points},
          {"gamma_min", oracle.gamma_min},
          {"gamma_max", oracle.gamma_max}}},
    };
    if (include_runtime) {
        doc["jobs"] = jobs;
        doc["output_dir"] = output_dir;
    }
    return doc;
}

std::string RunConfig::hash() const {
    const std::string text = to_json(false).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::size_t RunConfig::effective_jobs() const {
    if (jobs > 0) return jobs;
    return std::max(1u, std::thread::hardware_concurrency());
}

RunConfig load_run_config(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::parse, "config '" + path.string() + "': " + e.what());
    }
    if (doc.is_object() && doc.contains("manifest_version") && doc.contains("config")) return RunConfig::from_json(doc["config"]);
    return RunConfig::from_json(doc);
}

}  // namespace dru
