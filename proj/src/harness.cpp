#include "dru/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <thread>

#include <Eigen/Dense>

#include "dru/error.hpp"
#include "dru/robustness.hpp"
#include "dru/sampling.hpp"
#include "dru/seed.hpp"

namespace dru {

namespace {

constexpr std::pair<MethodKind, std::string_view> kMethodNames[] = {
    {MethodKind::dru_informed, "dru_informed"},
    {MethodKind::nn_plain, "nn_plain"},
    {MethodKind::regression_poststrat, "regression_poststrat"},
    {MethodKind::pinball, "pinball"},
    {MethodKind::dru_wrong_gamma, "dru_wrong_gamma"},
    {MethodKind::dru_wrong_d, "dru_wrong_d"},
    {MethodKind::dru_wrong_both, "dru_wrong_both"},
};

std::string join(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& n : names) {
        if (!out.empty()) out += '+';
        out += n;
    }
    return out;
}

TrainingSet encode(const Dataset& sample, const CellIndexer& indexer, std::size_t target) {
    TrainingSet set;
    set.width = indexer.encoded_width();
    set.features.resize(sample.size() * set.width);
    set.targets.resize(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        indexer.encode_row(sample.levels(i), {set.features.data() + i * set.width, set.width});
        set.targets[i] = sample.outcome(i, target);
    }
    return set;
}

// Ridge least squares on [1, one-hot]; the ridge term resolves the
// intercept/one-hot collinearity.
Eigen::VectorXd fit_linear(const TrainingSet& set, double ridge = 1e-6) {
    const auto n = static_cast<Eigen::Index>(set.size());
    const auto w = static_cast<Eigen::Index>(set.width);
    Eigen::MatrixXd design(n, w + 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        design(i, 0) = 1.0;
        for (Eigen::Index j = 0; j < w; ++j) design(i, j + 1) = set.features[static_cast<std::size_t>(i * w + j)];
        y(i) = set.targets[static_cast<std::size_t>(i)];
    }
    Eigen::MatrixXd gram = design.transpose() * design;
    gram.diagonal().array() += ridge;
    return gram.ldlt().solve(design.transpose() * y);
}

}  // namespace

std::string_view to_string(MethodKind kind) {
    for (const auto& [k, name] : kMethodNames)
        if (k == kind) return name;
    return "unknown";
}

MethodKind method_kind_from_string(std::string_view name) {
    for (const auto& [k, n] : kMethodNames)
        if (n == name) return k;
    throw Error(ErrorCode::configuration, "unknown method '" + std::string(name) + "'");
}

std::vector<MetaInfo> method_meta(MethodKind kind, const std::vector<MetaInfo>& informed) {
    std::vector<MetaInfo> out = informed;
    const bool swap_gamma = kind == MethodKind::dru_wrong_gamma || kind == MethodKind::dru_wrong_both;
    const bool swap_d = kind == MethodKind::dru_wrong_d || kind == MethodKind::dru_wrong_both;
    if (swap_gamma)
        for (std::size_t t = 0; t < out.size(); ++t) out[t].gamma = informed[out.size() - 1 - t].gamma;
    if (swap_d)
        for (auto& m : out) m.direction = flipped(m.direction);
    return out;
}

double pinball_level(const MetaInfo& loss_meta) {
    switch (loss_meta.direction) {
        case Direction::up: return eta(loss_meta.gamma);
        case Direction::down: return 1.0 - eta(loss_meta.gamma);
        case Direction::none: return 0.5;
    }
    return 0.5;
}

double b_score(std::span<const double> y_true, std::span<const double> y_hat, std::span<const double> y_unweighted,
               double floor) {
    if (y_true.size() != y_hat.size() || y_true.size() != y_unweighted.size())
        throw Error(ErrorCode::input_shape, "b-score inputs differ in length");
    double removed = 0.0, baseline = 0.0;
    bool usable = false;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const double unw = std::abs(y_true[i] - y_unweighted[i]);
        if (unw > floor) usable = true;
        removed += unw - std::abs(y_true[i] - y_hat[i]);
        baseline += unw;
    }
    if (!usable) throw Error(ErrorCode::undefined_score, "every target's unweighted bias is below the floor");
    return removed / baseline;
}

std::size_t SweepResult::run_count() const {
    std::size_t n = 0;
    for (const auto& s : summary) n += s.runs;
    return n + failed_run_count();
}

std::size_t SweepResult::failed_run_count() const {
    std::map<std::tuple<std::size_t, std::string, std::string>, bool> runs;
    for (const auto& r : records) {
        auto& failed = runs[{r.replicate, r.covariate_subset, r.method}];
        failed = failed || !r.ok;
    }
    return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const auto& kv) { return kv.second; }));
}

std::vector<MethodSummary> summarize(const std::vector<SweepRecord>& records) {
    struct Run {
        bool ok = true;
        double b = 0.0;
    };
    std::vector<std::string> order;
    std::map<std::string, std::map<std::pair<std::size_t, std::string>, Run>> runs;
    for (const auto& r : records) {
        if (std::find(order.begin(), order.end(), r.method) == order.end()) order.push_back(r.method);
        auto& run = runs[r.method][{r.replicate, r.covariate_subset}];
        run.ok = run.ok && r.ok;
        run.b = r.run_b;
    }
    std::vector<MethodSummary> out;
    for (const auto& method : order) {
        MethodSummary s{method, 0.0, 0.0, 0};
        std::size_t positive = 0;
        for (const auto& [key, run] : runs[method]) {
            if (!run.ok) continue;
            s.mean_b += run.b;
            positive += run.b > 0.0;
            ++s.runs;
        }
        if (s.runs > 0) {
            s.mean_b /= static_cast<double>(s.runs);
            s.freq_b_positive = static_cast<double>(positive) / static_cast<double>(s.runs);
        }
        out.push_back(s);
    }
    return out;
}

std::vector<HistogramBin> b_histogram(const std::vector<SweepRecord>& records, std::size_t bins) {
    if (bins == 0) throw Error(ErrorCode::configuration, "histogram needs at least one bin");
    std::vector<std::string> order;
    std::map<std::string, std::map<std::pair<std::size_t, std::string>, double>> values;
    for (const auto& r : records) {
        if (!r.ok) continue;
        if (std::find(order.begin(), order.end(), r.method) == order.end()) order.push_back(r.method);
        values[r.method][{r.replicate, r.covariate_subset}] = r.run_b;
    }
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& [m, runs] : values)
        for (const auto& [k, b] : runs) {
            lo = std::min(lo, b);
            hi = std::max(hi, b);
        }
    if (!std::isfinite(lo)) return {};
    if (hi <= lo) hi = lo + 1.0;
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<HistogramBin> out;
    for (const auto& method : order) {
        std::vector<std::size_t> counts(bins, 0);
        for (const auto& [k, b] : values[method]) {
            auto idx = static_cast<std::size_t>((b - lo) / width);
            ++counts[std::min(idx, bins - 1)];
        }
        for (std::size_t i = 0; i < bins; ++i) {
            const double upper = i + 1 == bins ? hi : lo + width * static_cast<double>(i + 1);
            out.push_back({method, lo + width * static_cast<double>(i), upper, counts[i]});
        }
    }
    return out;
}

MethodFit fit_and_poststratify(MethodKind kind, const MetaInfo& population_meta, const Dataset& sample,
                               const CellTable& table, std::size_t target, const SweepOptions& options,
                               std::uint64_t seed) {
    const CellIndexer indexer(sample.schema(), table.covariates);
    const TrainingSet set = encode(sample, indexer, target);
    if (set.size() == 0) throw Error(ErrorCode::configuration, "sample is empty");

    std::map<std::uint64_t, double> estimates;
    std::vector<double> x(indexer.encoded_width());
    MethodFit fit;
    std::vector<bool> seen(indexer.cell_count(), false);
    for (std::size_t i = 0; i < sample.size(); ++i) seen[indexer.key(sample.levels(i))] = true;
    for (const auto& [cell, fraction] : table.fractions)
        if (!seen[cell]) ++fit.unseen_cells;

    if (kind == MethodKind::regression_poststrat) {
        const Eigen::VectorXd beta = fit_linear(set);
        for (const auto& [cell, fraction] : table.fractions) {
            indexer.encode_key(cell, x);
            double v = beta(0);
            for (std::size_t j = 0; j < x.size(); ++j) v += beta(static_cast<Eigen::Index>(j + 1)) * x[j];
            estimates[cell] = v;
        }
        fit.y_hat = poststratify(estimates, table);
        return fit;
    }

    TrainConfig cfg = options.train;
    cfg.seed = derive_seed(seed, {12});
    const auto& hidden = kind == MethodKind::pinball ? options.network.pinball_hidden : options.network.hidden;
    Mlp h(make_architecture(set.width, hidden, Activation::identity), derive_seed(seed, {10}));
    std::optional<Mlp> alpha;
    LossSpec loss;
    switch (kind) {
        case MethodKind::nn_plain: loss = LossSpec::squared(); break;
        case MethodKind::pinball: loss = LossSpec::pinball(pinball_level(loss_meta(population_meta))); break;
        default: {
            const MetaInfo lm = loss_meta(population_meta);
            loss = lm.direction == Direction::none && lm.gamma > 1.0 ? LossSpec::ru(lm.gamma) : LossSpec::dru(lm);
            alpha.emplace(make_architecture(set.width, hidden, Activation::relu), derive_seed(seed, {11}));
            break;
        }
    }
    const TrainResult trained = train(std::move(h), std::move(alpha), set, loss, cfg);
    for (const auto& [cell, fraction] : table.fractions) {
        indexer.encode_key(cell, x);
        estimates[cell] = trained.model.predict(x);
    }
    fit.y_hat = poststratify(estimates, table);
    return fit;
}

SweepResult run_sweep(const std::vector<Dataset>& populations, const std::vector<BiasSpec>& bias_specs,
                      const std::vector<std::vector<std::string>>& covariate_subsets,
                      const std::vector<MethodSpec>& methods, const SweepOptions& options) {
    if (populations.empty() || covariate_subsets.empty() || methods.empty())
        throw Error(ErrorCode::configuration, "sweep needs populations, covariate subsets and methods");
    if (populations.size() != bias_specs.size())
        throw Error(ErrorCode::configuration, "one bias spec per population is required");
    const std::size_t n_targets = populations.front().schema().targets.size();
    for (const auto& pop : populations)
        if (!(pop.schema() == populations.front().schema()))
            throw Error(ErrorCode::schema, "populations must share one schema");
    for (const auto& m : methods)
        if (!m.meta.empty() && m.meta.size() != n_targets)
            throw Error(ErrorCode::configuration, "method meta needs one entry per target");

    struct Replicate {
        std::vector<Dataset> samples;      // per target
        std::vector<MetaInfo> informed;    // per target, from the held-out sample
        std::vector<CellTable> tables;     // per covariate subset
    };
    std::vector<Replicate> reps(populations.size());
    for (std::size_t r = 0; r < populations.size(); ++r) {
        const auto& pop = populations[r];
        BiasSpec previous = bias_specs[r];
        previous.seed = derive_seed(bias_specs[r].seed, {0x70726576});
        for (std::size_t t = 0; t < n_targets; ++t) {
            reps[r].samples.push_back(biased_sample(pop, bias_specs[r], t));
            try {
                reps[r].informed.push_back(estimate_true_meta(biased_sample(pop, previous, t), pop, t));
            } catch (const Error&) {
                reps[r].informed.push_back({1.0, Direction::none});
            }
        }
        for (const auto& subset : covariate_subsets) reps[r].tables.push_back(build_cell_table(pop, subset));
    }

    struct Item {
        std::size_t r, s, m, t;
    };
    std::vector<Item> items;
    for (std::size_t r = 0; r < populations.size(); ++r)
        for (std::size_t s = 0; s < covariate_subsets.size(); ++s)
            for (std::size_t m = 0; m < methods.size(); ++m)
                for (std::size_t t = 0; t < n_targets; ++t) items.push_back({r, s, m, t});

    std::vector<SweepRecord> records(items.size());
    auto work = [&](std::size_t idx) {
        const auto [r, s, m, t] = items[idx];
        auto& rec = records[idx];
        rec.replicate = r;
        rec.covariate_subset = join(covariate_subsets[s]);
        rec.method = std::string(to_string(methods[m].kind));
        rec.target = t;
        rec.y_true = populations[r].mean(t);
        rec.y_unweighted = reps[r].samples[t].mean(t);
        try {
            const auto& informed = methods[m].meta.empty() ? reps[r].informed : methods[m].meta;
            const auto meta = method_meta(methods[m].kind, informed);
            const auto fit = fit_and_poststratify(methods[m].kind, meta[t], reps[r].samples[t], reps[r].tables[s], t,
                                                  options, derive_seed(options.seed, {r, s, t}));
            rec.y_hat = fit.y_hat;
            rec.unseen_cells = fit.unseen_cells;
            rec.b_contribution = std::abs(rec.y_true - rec.y_unweighted) - std::abs(rec.y_true - rec.y_hat);
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
    };

    const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, items.size()));
    if (jobs == 1) {
        for (std::size_t i = 0; i < items.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < items.size(); i = next++) work(i);
            });
    }

    // Run-level b over the targets of each (replicate, subset, method).
    for (std::size_t start = 0; start < records.size(); start += n_targets) {
        const auto first = records.begin() + static_cast<std::ptrdiff_t>(start);
        const auto last = first + static_cast<std::ptrdiff_t>(n_targets);
        const bool ok = std::all_of(first, last, [](const SweepRecord& rec) { return rec.ok; });
        if (!ok) {
            for (auto it = first; it != last; ++it) {
                it->ok = false;
                if (it->error.empty()) it->error = "another target of this run failed";
            }
            continue;
        }
        std::vector<double> yt, yh, yu;
        for (auto it = first; it != last; ++it) {
            yt.push_back(it->y_true);
            yh.push_back(it->y_hat);
            yu.push_back(it->y_unweighted);
        }
        try {
            const double b = b_score(yt, yh, yu);
            for (auto it = first; it != last; ++it) it->run_b = b;
        } catch (const Error& e) {
            for (auto it = first; it != last; ++it) {
                it->ok = false;
                it->error = e.what();
            }
        }
    }

    SweepResult result;
    result.records = std::move(records);
    result.summary = summarize(result.records);
    return result;
}

}  // namespace dru
