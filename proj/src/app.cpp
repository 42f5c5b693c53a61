#include "dru/app.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "dru/error.hpp"
#include "dru/io.hpp"
#include "dru/poststrat.hpp"
#include "dru/robustness.hpp"
#include "dru/sampling.hpp"
#include "dru/seed.hpp"
#include "dru/version.hpp"

namespace dru {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Seed stream labels.
constexpr std::uint64_t kPopulationStream = 0x706f70;
constexpr std::uint64_t kBiasStream = 0x62696173;
constexpr std::uint64_t kTrainStream = 0x747261696e;
constexpr std::uint64_t kOracleStream = 0x6f7261636c65;

json manifest(const std::string& command, const RunConfig& config, json files) {
    return {{"manifest_version", 1},
            {"command", command},
            {"library_version", kVersion},
            {"config_hash", config.hash()},
            {"seed", config.seed},
            {"files", std::move(files)},
            {"config", config.to_json(false)}};
}

void write_json(const fs::path& path, const json& doc) { write_file(path, doc.dump(2) + "\n"); }

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

PopulationSpec population_spec(const RunConfig& config, std::size_t replicate) {
    PopulationSpec spec = config.population;
    spec.seed = derive_seed(config.seed, {kPopulationStream, replicate});
    return spec;
}

BiasSpec bias_spec(const RunConfig& config, std::size_t replicate) {
    BiasSpec bias = config.bias;
    bias.seed = derive_seed(config.seed, {kBiasStream, replicate});
    return bias;
}

}  // namespace

std::string cmd_generate(const RunConfig& config, const fs::path& out_dir) {
    config.validate();
    ensure_directory(out_dir);
    const Dataset population = generate_population(population_spec(config, 0));
    const auto& schema = population.schema();
    std::ostringstream summary;
    json files = json::array();

    write_file(out_dir / "population.csv", dataset_to_csv(population));
    write_json(out_dir / "population.json", {{"provenance", nullptr}, {"rows", population.size()}});
    files.push_back("population.csv");
    files.push_back("population.json");
    summary << "population.csv: " << population.size() << " rows\n";

    write_file(out_dir / "cells.csv", cell_table_to_csv(build_cell_table(population, CellIndexer::all(schema).names())));
    files.push_back("cells.csv");

    const BiasSpec bias = bias_spec(config, 0);
    for (std::size_t t = 0; t < schema.targets.size(); ++t) {
        const Dataset sample = biased_sample(population, bias, t);
        const std::string stem = "sample_" + schema.targets[t];
        write_file(out_dir / (stem + ".csv"), dataset_to_csv(sample));
        write_json(out_dir / (stem + ".json"), {{"provenance", provenance_to_json(*sample.provenance)}, {"rows", sample.size()}});
        files.push_back(stem + ".csv");
        files.push_back(stem + ".json");
        summary << stem << ".csv: " << sample.size() << " rows, gamma_true " << format_double(bias.gamma_true[t])
                << ", d_true " << sign_of(bias.d_true[t]) << "\n";
    }
    write_json(out_dir / "manifest.json", manifest("generate", config, files));
    return summary.str();
}

TrainOutcome cmd_train(const RunConfig& config, const fs::path& data_csv, const fs::path& out_dir) {
    config.validate();
    const Schema schema = config.schema();
    const Dataset data = dataset_from_csv(read_file(data_csv), schema);
    if (data.empty()) throw Error(ErrorCode::configuration, "'" + data_csv.string() + "' has no rows");
    const auto& cmd = config.train_command;
    const std::size_t target = cmd.target.empty() ? 0 : *schema.target_index(cmd.target);
    std::vector<std::string> covariates = cmd.covariates;
    if (covariates.empty())
        for (const auto& c : schema.covariates) covariates.push_back(c.name);
    const CellIndexer indexer(schema, covariates);

    TrainingSet set;
    set.width = indexer.encoded_width();
    std::vector<double> x(set.width);
    for (std::size_t i = 0; i < data.size(); ++i) {
        indexer.encode_row(data.levels(i), x);
        set.push_back(x, data.outcome(i, target));
    }

    const LossSpec loss{cmd.loss, {cmd.gamma, cmd.direction}, cmd.pinball_p};
    loss.validate();
    const auto& hidden = cmd.loss == LossKind::pinball ? config.network.pinball_hidden : config.network.hidden;
    const std::uint64_t base = derive_seed(config.seed, {kTrainStream});
    Mlp h(make_architecture(set.width, hidden, Activation::identity), derive_seed(base, {10}));
    std::optional<Mlp> alpha;
    if (loss.uses_alpha()) alpha.emplace(make_architecture(set.width, hidden, Activation::relu), derive_seed(base, {11}));
    TrainConfig cfg = config.train;
    cfg.seed = derive_seed(base, {12});
    const TrainResult result = train(std::move(h), std::move(alpha), set, loss, cfg);

    ensure_directory(out_dir);
    write_json(out_dir / "model.json", model_to_json(result.model, covariates));
    write_json(out_dir / "train_report.json", report_to_json(result.report));
    std::string predictions = "cell,prediction\n";
    for (std::uint64_t cell = 0; cell < indexer.cell_count(); ++cell) {
        indexer.encode_key(cell, x);
        predictions += std::to_string(cell) + "," + format_double(result.model.predict(x)) + "\n";
    }
    write_file(out_dir / "predictions.csv", predictions);
    json files = {"model.json", "train_report.json", "predictions.csv"};
    json m = manifest("train", config, files);
    m["data"] = data_csv.filename().string();
    write_json(out_dir / "manifest.json", m);

    std::ostringstream summary;
    summary << "trained " << to_string(loss.kind) << " on " << data.size() << " rows, target "
            << schema.targets[target] << ": " << result.report.epochs_run << " epochs"
            << (result.report.stopped_early ? " (stopped early)" : "") << ", best epoch " << result.report.best_epoch;
    if (!result.report.val_loss_trace.empty())
        summary << ", final val loss " << format_double(result.report.val_loss_trace.back());
    summary << "\n";
    return {result.report, summary.str()};
}

OracleOutcome cmd_oracle(const RunConfig& config, const fs::path& out_dir) {
    config.validate();
    const auto& oc = config.oracle;
    std::mt19937_64 rng(derive_seed(config.seed, {kOracleStream}));
    std::uniform_int_distribution<std::size_t> size_dist(1, oc.max_points);
    std::uniform_real_distribution<double> gamma_dist(oc.gamma_min, oc.gamma_max);
    std::uniform_real_distribution<double> loss_dist(0.0, 10.0), prob_dist(0.05, 1.0), unit(0.0, 1.0);

    OracleOutcome out;
    std::string csv = "instance,points,gamma,direction,ru_greedy,ru_lp,dru_status,dru_greedy,dru_lp\n";
    for (std::size_t inst = 0; inst < oc.instances; ++inst) {
        const std::size_t n = size_dist(rng);
        const double gamma = oc.gamma_max > oc.gamma_min ? gamma_dist(rng) : oc.gamma_min;
        std::vector<double> losses(n), probs(n);
        std::vector<int> signs(n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            // Occasional repeated losses exercise tie handling.
            losses[i] = (i > 0 && unit(rng) < 0.2) ? losses[i - 1] : loss_dist(rng);
            probs[i] = prob_dist(rng);
            total += probs[i];
            signs[i] = unit(rng) < 0.5 ? -1 : 1;
        }
        for (double& p : probs) p /= total;
        const Direction dir = unit(rng) < 0.5 ? Direction::down : Direction::up;
        const auto dist = DiscreteDistribution::from(losses, probs);

        const double ru_greedy = worst_case_ru(dist, gamma).sup_value;
        const double ru_lp = sup_oracle_lp(dist, gamma);
        out.ru_max_discrepancy = std::max(out.ru_max_discrepancy, std::abs(ru_greedy - ru_lp));

        std::string status = "feasible";
        std::string dru_greedy_s, dru_lp_s;
        try {
            const double g = worst_case_dru(dist, signs, {gamma, dir}).sup_value;
            const double l = sup_oracle_lp(dist, gamma, DirectionalMask{signs, dir});
            out.dru_max_discrepancy = std::max(out.dru_max_discrepancy, std::abs(g - l));
            if (g > ru_greedy + 1e-12) ++out.dominance_violations;
            ++out.dru_feasible;
            dru_greedy_s = format_double(g);
            dru_lp_s = format_double(l);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::infeasible) throw;
            status = "infeasible";
            ++out.dru_infeasible;
        }
        csv += std::to_string(inst) + "," + std::to_string(n) + "," + format_double(gamma) + "," +
               std::to_string(sign_of(dir)) + "," + format_double(ru_greedy) + "," + format_double(ru_lp) + "," +
               status + "," + dru_greedy_s + "," + dru_lp_s + "\n";
        ++out.instances;
    }

    ensure_directory(out_dir);
    write_file(out_dir / "oracle.csv", csv);
    json m = manifest("oracle", config, json{"oracle.csv"});
    m["result"] = {{"instances", out.instances},
                   {"ru_max_discrepancy", out.ru_max_discrepancy},
                   {"dru_feasible", out.dru_feasible},
                   {"dru_infeasible", out.dru_infeasible},
                   {"dru_max_discrepancy", out.dru_max_discrepancy},
                   {"dominance_violations", out.dominance_violations}};
    write_json(out_dir / "manifest.json", m);

    std::ostringstream s;
    s << "instances: " << out.instances << "\n"
      << "RU greedy vs LP max discrepancy: " << format_double(out.ru_max_discrepancy) << "\n"
      << "dRU feasible: " << out.dru_feasible << ", infeasible: " << out.dru_infeasible << "\n"
      << "dRU greedy vs LP max discrepancy: " << format_double(out.dru_max_discrepancy) << "\n"
      << "dRU sup > RU sup: " << out.dominance_violations << "\n";
    out.summary = s.str();
    return out;
}

std::string records_to_csv(const std::vector<SweepRecord>& records) {
    std::string out =
        "replicate,covariate_subset,method,target,y_hat,y_true,y_unweighted,b_contribution,run_b,ok,unseen_cells,error\n";
    for (const auto& r : records) {
        out += std::to_string(r.replicate) + "," + csv_escape(r.covariate_subset) + "," + r.method + "," +
               std::to_string(r.target) + "," + format_double(r.y_hat) + "," + format_double(r.y_true) + "," +
               format_double(r.y_unweighted) + "," + format_double(r.b_contribution) + "," + format_double(r.run_b) +
               "," + (r.ok ? "1" : "0") + "," + std::to_string(r.unseen_cells) + "," + csv_escape(r.error) + "\n";
    }
    return out;
}

std::string summary_to_csv(const std::vector<MethodSummary>& summary) {
    std::string out = "method,mean_b,freq_b_positive\n";
    for (const auto& s : summary)
        out += s.method + "," + format_double(s.mean_b) + "," + format_double(s.freq_b_positive) + "\n";
    return out;
}

std::string histogram_to_csv(const std::vector<HistogramBin>& bins) {
    std::string out = "method,bin_lower,bin_upper,count\n";
    for (const auto& b : bins)
        out += b.method + "," + format_double(b.lower) + "," + format_double(b.upper) + "," + std::to_string(b.count) + "\n";
    return out;
}

SweepOutcome cmd_sweep(const RunConfig& config, const fs::path& out_dir) {
    config.validate();
    ensure_directory(out_dir);
    std::vector<Dataset> populations;
    std::vector<BiasSpec> biases;
    for (std::size_t r = 0; r < config.replicates; ++r) {
        populations.push_back(generate_population(population_spec(config, r)));
        biases.push_back(bias_spec(config, r));
    }
    SweepOptions options{config.train, config.network, config.seed, config.effective_jobs()};
    SweepOutcome out;
    out.result = run_sweep(populations, biases, config.covariate_subsets, config.methods, options);

    write_file(out_dir / "records.csv", records_to_csv(out.result.records));
    write_file(out_dir / "summary.csv", summary_to_csv(out.result.summary));
    write_file(out_dir / "histogram.csv", histogram_to_csv(b_histogram(out.result.records)));
    const std::size_t runs = out.result.run_count();
    const std::size_t failed = out.result.failed_run_count();
    out.success_fraction = runs == 0 ? 0.0 : 1.0 - static_cast<double>(failed) / static_cast<double>(runs);
    json m = manifest("sweep", config, json{"records.csv", "summary.csv", "histogram.csv"});
    m["runs"] = runs;
    m["failed_runs"] = failed;
    write_json(out_dir / "manifest.json", m);

    std::ostringstream s;
    s << "runs: " << runs << ", failed: " << failed << "\n";
    s << "method,mean_b,freq_b_positive\n";
    for (const auto& ms : out.result.summary)
        s << ms.method << "," << format_double(ms.mean_b) << "," << format_double(ms.freq_b_positive) << "\n";
    out.summary = s.str();
    return out;
}

}  // namespace dru
