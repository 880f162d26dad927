/*
 * C API for the mcduct library: reference duct-channel solver, CIR dataset
 * tooling, and the neural surrogate.
 *
 * All entry points return a status code; on failure a thread-local message is
 * available via mcduct_last_error(). Objects are opaque handles created and
 * destroyed through this interface. Strings returned through char** outputs
 * are owned by the caller and must be released with mcduct_string_free().
 */
#ifndef MCDUCT_CAPI_H
#define MCDUCT_CAPI_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mcduct_status {
    MCDUCT_OK = 0,
    MCDUCT_ERR_INVALID_ARG = 1,
    MCDUCT_ERR_IO = 2,
    MCDUCT_ERR_NUMERIC = 3,
    MCDUCT_ERR_STATE = 4,
} mcduct_status;

/* Pipeline configuration (opaque). */
typedef struct mcduct_config mcduct_config;
/* Trained model bundle (opaque). */
typedef struct mcduct_model mcduct_model;

/* Message describing the most recent failure on this thread. Never NULL. */
const char* mcduct_last_error(void);

void mcduct_string_free(char* s);

/* level: "error" | "info" | "debug" (also set by the SURROGATE_LOG env var). */
mcduct_status mcduct_set_log_level(const char* level);

/* json may be NULL or "{}" for the fully defaulted configuration. */
mcduct_status mcduct_config_create(const char* json, mcduct_config** out);
mcduct_status mcduct_config_from_file(const char* path, mcduct_config** out);
void mcduct_config_destroy(mcduct_config* cfg);

/* Effective (defaults-resolved) configuration as a JSON string. */
mcduct_status mcduct_config_to_json(const mcduct_config* cfg, char** out_json);

/* Optional overrides applied by the CLI. Pass a negative count/workers or a
 * zero seed pointer semantics are not used: each setter overwrites the field. */
mcduct_status mcduct_config_set_seed(mcduct_config* cfg, uint64_t seed);
mcduct_status mcduct_config_set_workers(mcduct_config* cfg, int workers);
mcduct_status mcduct_config_set_n_samples(mcduct_config* cfg, int n);
mcduct_status mcduct_config_set_diagnostics(mcduct_config* cfg, int enabled);
mcduct_status mcduct_config_set_split_fractions(mcduct_config* cfg, double f_train, double f_val,
                                                double f_test);

/* Pipeline stages. Artifacts and the run log land under out_dir / dataset_dir. */
mcduct_status mcduct_generate(const mcduct_config* cfg, const char* out_dir);
mcduct_status mcduct_split(const mcduct_config* cfg, const char* dataset_dir);
mcduct_status mcduct_fit_codec(const mcduct_config* cfg, const char* dataset_dir,
                               const char* codec_path);
mcduct_status mcduct_train(const mcduct_config* cfg, const char* dataset_dir,
                           const char* codec_path, const char* model_path);
mcduct_status mcduct_eval(const mcduct_config* cfg, const char* model_path,
                          const char* dataset_dir, const char* split_name,
                          const char* report_dir);

/* Whole chain; *out_runlog_hash (optional) receives the run-log hash. */
mcduct_status mcduct_pipeline(const mcduct_config* cfg, const char* out_dir,
                              char** out_runlog_hash);

/* Predict one CIR from a params JSON file; writes a t,h CSV.
 * *out_of_domain (optional) is set to 1 when the parameters fall outside the
 * model's training box (the prediction is still written). */
mcduct_status mcduct_predict_file(const char* model_path, const char* params_json_path,
                                  const char* out_csv, const char* runlog_dir,
                                  int* out_of_domain);

/* In-memory model handle. */
mcduct_status mcduct_model_load(const char* path, mcduct_model** out);
void mcduct_model_destroy(mcduct_model* model);
/* Number of samples per predicted waveform. */
size_t mcduct_model_output_len(const mcduct_model* model);
/* params: [D, v_bar, kappa, k_f, k_r, B_tot, z_rx, ell_z] (SI units).
 * h_out must hold mcduct_model_output_len(model) doubles. */
mcduct_status mcduct_model_predict(const mcduct_model* model, const double params[8],
                                   double* h_out, size_t h_len, int* out_of_domain);

/* Reference solver for one parameter set on the configured mesh/grid.
 * h_out must hold the configured grid length (n_s_out reports it when h_out
 * is NULL). */
mcduct_status mcduct_solve_cir(const mcduct_config* cfg, const double params[8], double* h_out,
                               size_t h_len, size_t* n_s_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MCDUCT_CAPI_H */
