#ifndef CFHO_H
#define CFHO_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(CFHO_BUILDING_LIBRARY)
#    define CFHO_API __declspec(dllexport)
#  else
#    define CFHO_API __declspec(dllimport)
#  endif
#else
#  define CFHO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cfho_status {
    CFHO_OK = 0,
    CFHO_ERR_CONFIG = 1,
    CFHO_ERR_VALIDATION = 2,
    CFHO_ERR_IO = 3,
    CFHO_ERR_INVALID_ARGUMENT = 4,
    CFHO_ERR_NUMERICAL = 5,
    CFHO_ERR_INTERNAL = 6
} cfho_status;

typedef enum cfho_scheme {
    CFHO_SCHEME_POMDP_PLAIN = 0,
    CFHO_SCHEME_POMDP_HO_MIN = 1,
    CFHO_SCHEME_LSF_TIME = 2,
    CFHO_SCHEME_LSF_THRESHOLD = 3
} cfho_scheme;

/* Opaque handles. */
typedef struct cfho_config cfho_config;
typedef struct cfho_results cfho_results;

/* One simulated decision cycle. */
typedef struct cfho_record {
    int trial;
    int t;
    int scheme; /* cfho_scheme */
    double se_nats;
    int n_ho;
    int cum_ho;
    double se_adj;
    int triggered;
} cfho_record;

CFHO_API const char* cfho_version(void);

/* Message of the last failed call on the calling thread ("" if none). */
CFHO_API const char* cfho_last_error(void);

/* Strings returned through char** outputs are owned by the caller. */
CFHO_API void cfho_string_free(char* s);

/* Configuration. `profile` is "desk", "table1" or NULL (desk). */
CFHO_API cfho_status cfho_config_default(const char* profile, cfho_config** out);
CFHO_API cfho_status cfho_config_load(const char* path, cfho_config** out);
CFHO_API cfho_status cfho_config_parse(const char* json_text, cfho_config** out);
/* Dotted-key override, e.g. ("engine.horizon", "5"). */
CFHO_API cfho_status cfho_config_set(cfho_config* cfg, const char* dotted_key, const char* value);
CFHO_API cfho_status cfho_config_to_json(const cfho_config* cfg, char** out_json);
CFHO_API cfho_status cfho_config_out_dir(const cfho_config* cfg, char** out_dir);
CFHO_API void cfho_config_free(cfho_config* cfg);

/* Experiments. */
CFHO_API cfho_status cfho_run(const cfho_config* cfg, cfho_results** out);
CFHO_API cfho_status cfho_results_record_count(const cfho_results* res, size_t* out);
CFHO_API cfho_status cfho_results_record(const cfho_results* res, size_t index, cfho_record* out);
CFHO_API cfho_status cfho_results_csv(const cfho_results* res, char** out_csv);
CFHO_API cfho_status cfho_results_summary_json(const cfho_results* res, char** out_json);
/* Writes per_cycle.csv, summary.json and manifest.json into `out_dir`. */
CFHO_API cfho_status cfho_results_export(const cfho_results* res, const char* out_dir);
CFHO_API void cfho_results_free(cfho_results* res);

/*
 * Runs the oracle suites (closed-form rate vs Monte Carlo, channel-state
 * probabilities vs simulation, point-based solver vs exhaustive search).
 * A nonzero `quick` shrinks the Monte Carlo sample sizes. Returns
 * CFHO_ERR_VALIDATION when a suite fails; `report` receives the text report
 * in both cases and may be NULL.
 */
CFHO_API cfho_status cfho_validate(int quick, uint64_t seed, char** report);

/* Plain-text dump of the model selected at `cycle` of `trial`. */
CFHO_API cfho_status cfho_dump_model(const cfho_config* cfg, int trial, int cycle, char** out_text);

/* Numeric primitives. */
CFHO_API cfho_status cfho_noise_power(double density_dbm_hz, double figure_db, double bandwidth_hz, double* out_w);
CFHO_API cfho_status cfho_bvn_upper_rect(double a, double b, double corr, double* out);
CFHO_API cfho_status cfho_overhead_adjusted_se(double se, int n_ho, double delta, double* out);
CFHO_API const char* cfho_scheme_name(int scheme);

#ifdef __cplusplus
}
#endif

#endif
