#ifndef INLA_LITE_H
#define INLA_LITE_H

/* C interface to the inla-lite engine: integrated nested Laplace
 * approximations for binomial-logit latent Gaussian models.
 *
 * Every function returning inla_status leaves a message for
 * inla_last_error() (per thread) when it fails. Handles are opaque and owned
 * by the caller; free them with the matching *_free function. */

#include <stddef.h>
#include <stdint.h>

#if defined(INLA_LITE_BUILDING)
#define INLA_API __attribute__((visibility("default")))
#else
#define INLA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as process exit codes. */
typedef enum inla_status {
  INLA_OK = 0,
  INLA_ERR_INTERNAL = 1,
  INLA_ERR_INPUT = 2,     /* malformed or unreadable input, I/O failure */
  INLA_ERR_NUMERICAL = 3, /* the engine or a diagnostic could not proceed */
  INLA_ERR_CONFIG = 4     /* invalid model or options */
} inla_status;

typedef struct inla_dataset inla_dataset;
typedef struct inla_model inla_model;
typedef struct inla_fit inla_fit;

INLA_API const char* inla_version(void);
INLA_API const char* inla_last_error(void);

/* --- data ---------------------------------------------------------------- */

/* CSV `unit_id,y,N,<covariates...>` plus an adjacency file (may be NULL or
 * empty for models without a spatial term). */
INLA_API inla_status inla_dataset_load(const char* data_path, const char* adjacency_path, inla_dataset** out);
INLA_API void inla_dataset_free(inla_dataset* d);
INLA_API size_t inla_dataset_rows(const inla_dataset* d);
INLA_API size_t inla_dataset_units(const inla_dataset* d);

/* --- models -------------------------------------------------------------- */

INLA_API inla_status inla_model_from_preset(const inla_dataset* d, const char* preset, inla_model** out);
INLA_API inla_status inla_model_from_json(const inla_dataset* d, const char* json_text, inla_model** out);
INLA_API inla_status inla_model_from_file(const inla_dataset* d, const char* path, inla_model** out);
INLA_API void inla_model_free(inla_model* m);
INLA_API size_t inla_model_latent_dim(const inla_model* m);
INLA_API size_t inla_model_hyper_dim(const inla_model* m);
/* Number of preset names; inla_preset_name(i) for i < count. */
INLA_API size_t inla_preset_count(void);
INLA_API const char* inla_preset_name(size_t i);
/* The six presets of the standard comparison table, in table order. */
INLA_API size_t inla_table_preset_count(void);
INLA_API const char* inla_table_preset_name(size_t i);

/* --- fitting ------------------------------------------------------------- */

typedef enum inla_marginal_path { INLA_MARGINAL_SLA = 0, INLA_MARGINAL_LA = 1 } inla_marginal_path;

typedef struct inla_fit_options {
  double delta_z;      /* grid step in standardized hyperparameter space */
  double delta_pi;     /* log-density drop that ends the exploration */
  int marginal_path;   /* inla_marginal_path */
  size_t grid_points;  /* points of every reported marginal */
} inla_fit_options;

INLA_API inla_fit_options inla_fit_options_default(void);

typedef struct inla_summary {
  double mean;
  double sd;
  double q025;
  double q50;
  double q975;
} inla_summary;

typedef struct inla_dic {
  double mean_deviance;
  double deviance_at_mean;
  double p_d;
  double dic;
} inla_dic;

/* options may be NULL for the defaults */
INLA_API inla_status inla_fit_run(const inla_model* m, const inla_fit_options* options, inla_fit** out);
INLA_API void inla_fit_free(inla_fit* f);
INLA_API inla_status inla_fit_latent_summary(const inla_fit* f, size_t index, inla_summary* out);
INLA_API inla_status inla_fit_eta_summary(const inla_fit* f, size_t obs, inla_summary* out);
/* precision_scale: 0 for log-precision, 1 for precision */
INLA_API inla_status inla_fit_hyper_summary(const inla_fit* f, size_t j, int precision_scale, inla_summary* out);
/* Copies the hyperparameter mode into out[0..len) (len must equal the hyper dim). */
INLA_API inla_status inla_fit_theta_mode(const inla_fit* f, double* out, size_t len);
INLA_API size_t inla_fit_point_count(const inla_fit* f);
INLA_API inla_status inla_fit_dic(const inla_fit* f, inla_dic* out);
INLA_API size_t inla_fit_warning_count(const inla_fit* f);
INLA_API const char* inla_fit_warning(const inla_fit* f, size_t i);
/* latent_marginals.csv, hyper_marginals.csv, effects_exp.csv,
 * unit_summaries.csv, dic.csv, provenance.json */
INLA_API inla_status inla_fit_write_outputs(const inla_fit* f, const char* out_dir);

/* Fits each preset (NULL/0 = the six table presets) and writes
 * dic_table.csv, provenance.json and one sub-directory of fit outputs per
 * preset; zone_table.csv only when some preset has zone effects. */
INLA_API inla_status inla_compare_run(const char* data_path, const char* adjacency_path,
                                      const char* const* presets, size_t n_presets,
                                      const inla_fit_options* options, const char* out_dir);

/* Reruns the fit or comparison described by a provenance.json. */
INLA_API inla_status inla_replay(const char* provenance_path, const char* out_dir);

/* --- simulation and reference engines ------------------------------------ */

/* preset "region-like" (377 units) or NULL with units > 0. The seed is
 * mandatory: a NULL seed is a configuration error. Writes data.csv,
 * region.adj, truth.csv and simulation.json. */
INLA_API inla_status inla_simulate(const char* preset, size_t units, const uint64_t* seed, const char* out_dir);

typedef enum inla_oracle_method { INLA_ORACLE_QUADRATURE = 0, INLA_ORACLE_MCMC = 1 } inla_oracle_method;

typedef struct inla_oracle_options {
  int method;         /* inla_oracle_method */
  uint64_t seed;      /* mcmc */
  size_t iterations;  /* mcmc sweeps per chain, burn-in included */
  size_t burn_in;     /* mcmc; 0 = a tenth of the iterations */
  int force;          /* mcmc: report even when split R-hat exceeds 1.05 */
} inla_oracle_options;

INLA_API inla_oracle_options inla_oracle_options_default(void);

/* Writes oracle_latent.csv, oracle_eta.csv, oracle_hyper.csv, oracle_dic.csv
 * and oracle.json. Unconverged chains fail with INLA_ERR_NUMERICAL unless
 * forced. */
INLA_API inla_status inla_oracle_run(const inla_model* m, const inla_oracle_options* options, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
