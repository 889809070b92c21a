/* storarb: online energy-storage arbitrage backtesting.
 *
 * C interface to the storarb core. All entry points return a storarb_status;
 * on any non-OK status, storarb_last_error() returns a thread-local,
 * human-readable message describing the failure. Objects are opaque handles
 * created and destroyed through this interface only. Strings returned through
 * char** out-parameters are owned by the caller and must be released with
 * storarb_string_free().
 */
#ifndef STORARB_H
#define STORARB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define STORARB_API __declspec(dllexport)
#else
#define STORARB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Mirrors the CLI exit codes. */
typedef enum storarb_status {
    STORARB_OK = 0,
    STORARB_ERR_CONFIG = 2,  /* invalid configuration or arguments */
    STORARB_ERR_DATA = 3,    /* unreadable or malformed input data */
    STORARB_ERR_NUMERIC = 4, /* numerical or feasibility failure */
} storarb_status;

typedef struct storarb_config storarb_config; /* a parsed run configuration */
typedef struct storarb_result storarb_result; /* a completed backtest run */

STORARB_API const char* storarb_version(void);

/* Message for the most recent failure on this thread; never NULL. */
STORARB_API const char* storarb_last_error(void);

/* ---- Configuration ----------------------------------------------------- */

/* Empty configuration (all defaults). */
STORARB_API storarb_status storarb_config_create(storarb_config** out);
/* Parse a config file / an in-memory config text (TOML subset). */
STORARB_API storarb_status storarb_config_load(const char* path, storarb_config** out);
STORARB_API storarb_status storarb_config_parse(const char* text, storarb_config** out);
/* Override one key by dotted path, e.g. ("controller.epsilon", "0.2").
 * Values use the same syntax as config-file values, unquoted. */
STORARB_API storarb_status storarb_config_set(storarb_config* cfg, const char* key,
                                              const char* value);
STORARB_API void storarb_config_free(storarb_config* cfg);

/* ---- Running ------------------------------------------------------------ */

/* Run the configured strategy. On success *out owns the run. */
STORARB_API storarb_status storarb_run(const storarb_config* cfg, storarb_result** out);

/* Full-information reference run: same config, but forces the exact-oracle
 * forecaster and the risk-neutral policy (the offline-optimal dispatch under
 * the configured curve budget). */
STORARB_API storarb_status storarb_run_oracle(const storarb_config* cfg, storarb_result** out);

/* Sweep one dotted config key over `count` values; runs execute in parallel
 * (jobs = 0 picks hardware concurrency). *csv_out receives long-format rows
 * "param,value,metric,metric_value". */
STORARB_API storarb_status storarb_sweep(const storarb_config* cfg, const char* param,
                                         const double* values, size_t count, size_t jobs,
                                         char** csv_out);

/* Synthesize (or load and re-emit) the configured price series as CSV. */
STORARB_API storarb_status storarb_generate_prices(const storarb_config* cfg, char** csv_out);

/* Scale the configured forecaster noise template until its measured R^2
 * against the configured run's ground truth hits target_r2 (within
 * `tolerance`, <= 0 picks the default 0.05). *json_out receives the resolved
 * forecaster settings plus the achieved accuracy. */
STORARB_API storarb_status storarb_calibrate_forecaster(const storarb_config* cfg,
                                                        double target_r2, double tolerance,
                                                        char** json_out);

/* ---- Results ------------------------------------------------------------ */

STORARB_API size_t storarb_result_num_steps(const storarb_result* result);
/* Scalar metric by name (as listed in the summary JSON, e.g. "profit",
 * "regret", "cumulative_risk"). STORARB_ERR_CONFIG for unknown names. */
STORARB_API storarb_status storarb_result_metric(const storarb_result* result, const char* name,
                                                 double* out);
STORARB_API storarb_status storarb_result_trajectory_csv(const storarb_result* result,
                                                         char** out);
/* Conformal controller audit trail (t,gamma,loss_raw,loss_clipped,
 * cumulative_risk); header-only CSV for non-conformal strategies. */
STORARB_API storarb_status storarb_result_ledger_csv(const storarb_result* result, char** out);
STORARB_API storarb_status storarb_result_summary_json(const storarb_result* result, char** out);
STORARB_API void storarb_result_free(storarb_result* result);

STORARB_API void storarb_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* STORARB_H */
