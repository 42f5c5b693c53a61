#include "dru/dru.h"

#include <exception>
#include <memory>
#include <new>
#include <string>

#include "dru/app.hpp"
#include "dru/config.hpp"
#include "dru/error.hpp"
#include "dru/harness.hpp"
#include "dru/io.hpp"
#include "dru/losses.hpp"
#include "dru/robustness.hpp"
#include "dru/version.hpp"

struct dru_config {
    dru::RunConfig rep;
    std::string json_cache;
};

struct dru_model {
    dru::TrainedModel rep;
};

struct dru_report {
    std::string text;
    double success_fraction = 1.0;
};

namespace {

thread_local std::string g_last_error;

dru_status status_of(dru::ErrorCode code) {
    using dru::ErrorCode;
    switch (code) {
        case ErrorCode::parameter: return DRU_ERR_PARAMETER;
        case ErrorCode::input_shape: return DRU_ERR_INPUT_SHAPE;
        case ErrorCode::numeric: return DRU_ERR_NUMERIC;
        case ErrorCode::configuration: return DRU_ERR_CONFIGURATION;
        case ErrorCode::infeasible: return DRU_ERR_INFEASIBLE;
        case ErrorCode::schema: return DRU_ERR_SCHEMA;
        case ErrorCode::estimation: return DRU_ERR_ESTIMATION;
        case ErrorCode::undefined_score: return DRU_ERR_UNDEFINED_SCORE;
        case ErrorCode::io: return DRU_ERR_IO;
        case ErrorCode::parse: return DRU_ERR_PARSE;
    }
    return DRU_ERR_INTERNAL;
}

// Runs `fn`, translating exceptions into status codes and the thread-local
// error message.
template <class Fn>
dru_status guarded(Fn&& fn) {
    g_last_error.clear();
    try {
        fn();
        return DRU_OK;
    } catch (const dru::Error& e) {
        g_last_error = e.what();
        return status_of(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return DRU_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return DRU_ERR_INTERNAL;
    }
}

void require(const void* ptr, const char* name) {
    if (!ptr) throw dru::Error(dru::ErrorCode::parameter, std::string(name) + " is NULL");
}

dru_status null_argument(const char* name) {
    g_last_error = std::string(name) + " is NULL";
    return DRU_ERR_NULL_ARGUMENT;
}

std::filesystem::path out_dir_of(const dru_config* config, const char* out_dir) {
    return out_dir ? std::filesystem::path(out_dir) : std::filesystem::path(config->rep.output_dir);
}

dru::DiscreteDistribution distribution(const double* values, const double* probs, size_t n) {
    require(values, "values");
    require(probs, "probs");
    return dru::DiscreteDistribution::from({values, n}, {probs, n});
}

}  // namespace

extern "C" {

const char* dru_version(void) { return dru::kVersion; }

const char* dru_last_error(void) { return g_last_error.c_str(); }

const char* dru_status_name(dru_status status) {
    switch (status) {
        case DRU_OK: return "ok";
        case DRU_ERR_PARAMETER: return "parameter error";
        case DRU_ERR_INPUT_SHAPE: return "input-shape error";
        case DRU_ERR_NUMERIC: return "numeric error";
        case DRU_ERR_CONFIGURATION: return "configuration error";
        case DRU_ERR_INFEASIBLE: return "infeasibility error";
        case DRU_ERR_SCHEMA: return "schema error";
        case DRU_ERR_ESTIMATION: return "estimation error";
        case DRU_ERR_UNDEFINED_SCORE: return "undefined-score error";
        case DRU_ERR_IO: return "I/O error";
        case DRU_ERR_PARSE: return "parse error";
        case DRU_ERR_NULL_ARGUMENT: return "null argument";
        case DRU_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

dru_status dru_loss_eval(dru_loss_kind kind, double gamma, int direction, double pinball_p, double z, double a,
                         double y, double* loss, double* dz, double* da) {
    return guarded([&] {
        dru::LossSpec spec;
        switch (kind) {
            case DRU_LOSS_SQUARED: spec.kind = dru::LossKind::squared; break;
            case DRU_LOSS_RU: spec.kind = dru::LossKind::ru; break;
            case DRU_LOSS_DRU: spec.kind = dru::LossKind::dru; break;
            case DRU_LOSS_PINBALL: spec.kind = dru::LossKind::pinball; break;
            default: throw dru::Error(dru::ErrorCode::parameter, "unknown loss kind");
        }
        spec.meta = {gamma, dru::direction_from_int(direction)};
        spec.pinball_p = pinball_p;
        spec.validate();
        const double value = dru::loss_value(spec, z, a, y);
        const auto g = dru::loss_gradients(spec, z, a, y);
        if (loss) *loss = value;
        if (dz) *dz = g.dz;
        if (da) *da = g.da;
    });
}

dru_status dru_eta(double gamma, double* out) {
    if (!out) return null_argument("out");
    return guarded([&] { *out = dru::eta(gamma); });
}

dru_status dru_cvar(const double* values, const double* probs, size_t n, double level, double* out) {
    if (!out) return null_argument("out");
    return guarded([&] { *out = dru::cvar(distribution(values, probs, n), level); });
}

dru_status dru_worst_case_ru(const double* losses, const double* probs, size_t n, double gamma, double* ratios_out,
                             double* sup_out) {
    if (!sup_out) return null_argument("sup_out");
    return guarded([&] {
        const auto wc = dru::worst_case_ru(distribution(losses, probs, n), gamma);
        if (ratios_out) std::copy(wc.ratios.begin(), wc.ratios.end(), ratios_out);
        *sup_out = wc.sup_value;
    });
}

dru_status dru_worst_case_dru(const double* losses, const double* probs, const int* signs, size_t n, double gamma,
                              int direction, double* ratios_out, double* sup_out) {
    if (!sup_out) return null_argument("sup_out");
    if (!signs) return null_argument("signs");
    return guarded([&] {
        const auto wc = dru::worst_case_dru(distribution(losses, probs, n), {signs, n},
                                            {gamma, dru::direction_from_int(direction)});
        if (ratios_out) std::copy(wc.ratios.begin(), wc.ratios.end(), ratios_out);
        *sup_out = wc.sup_value;
    });
}

dru_status dru_sup_oracle_lp(const double* losses, const double* probs, const int* signs, size_t n, double gamma,
                             int direction, double* sup_out) {
    if (!sup_out) return null_argument("sup_out");
    return guarded([&] {
        const auto dist = distribution(losses, probs, n);
        std::optional<dru::DirectionalMask> mask;
        if (signs) mask = dru::DirectionalMask{{signs, n}, dru::direction_from_int(direction)};
        *sup_out = dru::sup_oracle_lp(dist, gamma, mask);
    });
}

dru_status dru_b_score(const double* y_true, const double* y_hat, const double* y_unweighted, size_t n_targets,
                       double* out) {
    if (!out) return null_argument("out");
    if (!y_true || !y_hat || !y_unweighted) return null_argument("b-score input");
    return guarded([&] { *out = dru::b_score({y_true, n_targets}, {y_hat, n_targets}, {y_unweighted, n_targets}); });
}

dru_status dru_config_default(dru_config** out) {
    if (!out) return null_argument("out");
    return guarded([&] { *out = new dru_config{dru::RunConfig::defaults(), {}}; });
}

dru_status dru_config_load(const char* path, dru_config** out) {
    if (!path) return null_argument("path");
    if (!out) return null_argument("out");
    return guarded([&] { *out = new dru_config{dru::load_run_config(path), {}}; });
}

dru_status dru_config_parse(const char* json_text, dru_config** out) {
    if (!json_text) return null_argument("json_text");
    if (!out) return null_argument("out");
    return guarded([&] {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(json_text);
        } catch (const nlohmann::json::parse_error& e) {
            throw dru::Error(dru::ErrorCode::parse, e.what());
        }
        if (doc.is_object() && doc.contains("manifest_version") && doc.contains("config")) doc = doc["config"];
        *out = new dru_config{dru::RunConfig::from_json(doc), {}};
    });
}

dru_status dru_config_override(dru_config* config, const char* output_dir, const uint64_t* seed, const size_t* jobs) {
    if (!config) return null_argument("config");
    return guarded([&] {
        if (output_dir) config->rep.output_dir = output_dir;
        if (seed) config->rep.seed = *seed;
        if (jobs) config->rep.jobs = *jobs;
    });
}

dru_status dru_config_json(const dru_config* config, const char** out) {
    if (!config) return null_argument("config");
    if (!out) return null_argument("out");
    return guarded([&] {
        auto* mut = const_cast<dru_config*>(config);
        mut->json_cache = config->rep.to_json(true).dump(2);
        *out = mut->json_cache.c_str();
    });
}

dru_status dru_config_output_dir(const dru_config* config, const char** out) {
    if (!config) return null_argument("config");
    if (!out) return null_argument("out");
    *out = config->rep.output_dir.c_str();
    return DRU_OK;
}

void dru_config_free(dru_config* config) { delete config; }

dru_status dru_cmd_generate(const dru_config* config, const char* out_dir, dru_report** report) {
    if (!config) return null_argument("config");
    if (!report) return null_argument("report");
    return guarded([&] {
        auto text = dru::cmd_generate(config->rep, out_dir_of(config, out_dir));
        *report = new dru_report{std::move(text), 1.0};
    });
}

dru_status dru_cmd_train(const dru_config* config, const char* data_csv, const char* out_dir, dru_report** report) {
    if (!config) return null_argument("config");
    if (!data_csv) return null_argument("data_csv");
    if (!report) return null_argument("report");
    return guarded([&] {
        auto outcome = dru::cmd_train(config->rep, data_csv, out_dir_of(config, out_dir));
        *report = new dru_report{std::move(outcome.summary), 1.0};
    });
}

dru_status dru_cmd_oracle(const dru_config* config, const char* out_dir, dru_report** report) {
    if (!config) return null_argument("config");
    if (!report) return null_argument("report");
    return guarded([&] {
        auto outcome = dru::cmd_oracle(config->rep, out_dir_of(config, out_dir));
        *report = new dru_report{std::move(outcome.summary), 1.0};
    });
}

dru_status dru_cmd_sweep(const dru_config* config, const char* out_dir, dru_report** report) {
    if (!config) return null_argument("config");
    if (!report) return null_argument("report");
    return guarded([&] {
        auto outcome = dru::cmd_sweep(config->rep, out_dir_of(config, out_dir));
        *report = new dru_report{std::move(outcome.summary), outcome.success_fraction};
    });
}

const char* dru_report_text(const dru_report* report) { return report ? report->text.c_str() : ""; }

double dru_report_success_fraction(const dru_report* report) { return report ? report->success_fraction : 0.0; }

void dru_report_free(dru_report* report) { delete report; }

dru_status dru_model_load(const char* path, dru_model** out) {
    if (!path) return null_argument("path");
    if (!out) return null_argument("out");
    return guarded([&] {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(dru::read_file(path));
        } catch (const nlohmann::json::parse_error& e) {
            throw dru::Error(dru::ErrorCode::parse, e.what());
        }
        *out = new dru_model{dru::model_from_json(doc)};
    });
}

size_t dru_model_input_width(const dru_model* model) { return model ? model->rep.h.input_width() : 0; }

dru_status dru_model_predict(const dru_model* model, const double* x, size_t width, double* out) {
    if (!model) return null_argument("model");
    if (!x) return null_argument("x");
    if (!out) return null_argument("out");
    return guarded([&] { *out = model->rep.predict({x, width}); });
}

void dru_model_free(dru_model* model) { delete model; }

}  // extern "C"
