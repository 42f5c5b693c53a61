/* C interface to the dru library: directional Rockafellar-Uryasev
 * regression, worst-case oracles, biased sampling and the b-score sweep.
 *
 * Every function returns a dru_status. On failure, dru_last_error() returns
 * a message for the calling thread, valid until its next dru_* call.
 * Handles are opaque and owned by the caller; release them with the
 * matching *_free function (NULL is accepted). */
#ifndef DRU_DRU_H
#define DRU_DRU_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define DRU_API __declspec(dllexport)
#else
#  define DRU_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dru_status {
  DRU_OK = 0,
  DRU_ERR_PARAMETER = 1,
  DRU_ERR_INPUT_SHAPE = 2,
  DRU_ERR_NUMERIC = 3,
  DRU_ERR_CONFIGURATION = 4,
  DRU_ERR_INFEASIBLE = 5,
  DRU_ERR_SCHEMA = 6,
  DRU_ERR_ESTIMATION = 7,
  DRU_ERR_UNDEFINED_SCORE = 8,
  DRU_ERR_IO = 9,
  DRU_ERR_PARSE = 10,
  DRU_ERR_NULL_ARGUMENT = 11,
  DRU_ERR_INTERNAL = 12
} dru_status;

typedef enum dru_loss_kind {
  DRU_LOSS_SQUARED = 0,
  DRU_LOSS_RU = 1,
  DRU_LOSS_DRU = 2,
  DRU_LOSS_PINBALL = 3
} dru_loss_kind;

typedef struct dru_config dru_config;
typedef struct dru_model dru_model;
typedef struct dru_report dru_report;

DRU_API const char* dru_version(void);
DRU_API const char* dru_last_error(void);
DRU_API const char* dru_status_name(dru_status status);

/* ---- losses ---------------------------------------------------------- */

/* Value and (dz, da) subgradient of one pointwise loss. `direction` is the
 * residual-sign convention (+1 penalizes over-prediction). Output pointers
 * may be NULL. */
DRU_API dru_status dru_loss_eval(dru_loss_kind kind, double gamma, int direction, double pinball_p,
                                 double z, double a, double y, double* loss, double* dz, double* da);

/* ---- robustness ------------------------------------------------------ */

DRU_API dru_status dru_eta(double gamma, double* out);
DRU_API dru_status dru_cvar(const double* values, const double* probs, size_t n, double level,
                            double* out);
/* ratios_out may be NULL, otherwise it receives n ratios. */
DRU_API dru_status dru_worst_case_ru(const double* losses, const double* probs, size_t n,
                                     double gamma, double* ratios_out, double* sup_out);
DRU_API dru_status dru_worst_case_dru(const double* losses, const double* probs, const int* signs,
                                      size_t n, double gamma, int direction, double* ratios_out,
                                      double* sup_out);
/* signs == NULL: plain RU box. */
DRU_API dru_status dru_sup_oracle_lp(const double* losses, const double* probs, const int* signs,
                                     size_t n, double gamma, int direction, double* sup_out);

/* ---- b-score --------------------------------------------------------- */

DRU_API dru_status dru_b_score(const double* y_true, const double* y_hat, const double* y_unweighted,
                               size_t n_targets, double* out);

/* ---- configuration --------------------------------------------------- */

DRU_API dru_status dru_config_default(dru_config** out);
/* Accepts a run config or a manifest written by any command. */
DRU_API dru_status dru_config_load(const char* path, dru_config** out);
DRU_API dru_status dru_config_parse(const char* json_text, dru_config** out);
/* NULL leaves the field unchanged. */
DRU_API dru_status dru_config_override(dru_config* config, const char* output_dir,
                                       const uint64_t* seed, const size_t* jobs);
/* Canonical JSON; the string is owned by the config handle. */
DRU_API dru_status dru_config_json(const dru_config* config, const char** out);
DRU_API dru_status dru_config_output_dir(const dru_config* config, const char** out);
DRU_API void dru_config_free(dru_config* config);

/* ---- commands -------------------------------------------------------- */

/* Each command writes its files into out_dir (NULL: the config's
 * output_dir) and returns a report handle with a printable summary. */
DRU_API dru_status dru_cmd_generate(const dru_config* config, const char* out_dir, dru_report** report);
DRU_API dru_status dru_cmd_train(const dru_config* config, const char* data_csv, const char* out_dir,
                                 dru_report** report);
DRU_API dru_status dru_cmd_oracle(const dru_config* config, const char* out_dir, dru_report** report);
DRU_API dru_status dru_cmd_sweep(const dru_config* config, const char* out_dir, dru_report** report);

DRU_API const char* dru_report_text(const dru_report* report);
/* Fraction of successful runs (sweep); 1 for other commands. */
DRU_API double dru_report_success_fraction(const dru_report* report);
DRU_API void dru_report_free(dru_report* report);

/* ---- trained models -------------------------------------------------- */

DRU_API dru_status dru_model_load(const char* path, dru_model** out);
DRU_API size_t dru_model_input_width(const dru_model* model);
DRU_API dru_status dru_model_predict(const dru_model* model, const double* x, size_t width, double* out);
DRU_API void dru_model_free(dru_model* model);

#ifdef __cplusplus
}
#endif

#endif /* DRU_DRU_H */
