/* C interface to the ammonia spot/futures market engine.
 *
 * All functions returning int use the AMMFUT_* status codes. On failure the
 * message is available from ammfut_last_error() on the same thread until the
 * next call. Handles are opaque and must be released with their free function.
 */
#ifndef AMMFUT_H
#define AMMFUT_H

#include <stddef.h>
#include <stdint.h>

#if defined(AMMFUT_BUILDING_LIBRARY)
#define AMMFUT_API __attribute__((visibility("default")))
#else
#define AMMFUT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
    AMMFUT_OK = 0,
    AMMFUT_ERR_DOMAIN = 1,   /* infeasible program, failed solve, no convergence */
    AMMFUT_ERR_CONFIG = 2,   /* invalid configuration */
    AMMFUT_ERR_IO = 3,
    AMMFUT_ERR_ARGUMENT = 4, /* null handle or invalid argument */
    AMMFUT_ERR_INTERNAL = 5
};

typedef struct ammfut_config ammfut_config;
typedef struct ammfut_result ammfut_result;

AMMFUT_API const char* ammfut_version(void);
AMMFUT_API const char* ammfut_last_error(void);

/* Configuration */
AMMFUT_API int ammfut_config_default(ammfut_config** out);
AMMFUT_API int ammfut_config_load(const char* path, ammfut_config** out);
AMMFUT_API int ammfut_config_parse(const char* yaml_text, ammfut_config** out);
AMMFUT_API void ammfut_config_free(ammfut_config* config);
AMMFUT_API int ammfut_config_set_seed(ammfut_config* config, uint64_t seed);
AMMFUT_API int ammfut_config_set_output_dir(ammfut_config* config, const char* directory);
/* Returned strings are owned by the handle and valid until it is modified or freed. */
AMMFUT_API const char* ammfut_config_output_dir(const ammfut_config* config);
AMMFUT_API const char* ammfut_config_yaml(ammfut_config* config);
AMMFUT_API const char* ammfut_config_hash(ammfut_config* config);

/* Runs. Each produces a result holding the rendered output files. */
AMMFUT_API int ammfut_run_scenarios(const ammfut_config* config, ammfut_result** out);
AMMFUT_API int ammfut_run_equilibrium(const ammfut_config* config, ammfut_result** out);
AMMFUT_API int ammfut_run_bargain(const ammfut_config* config, ammfut_result** out);
/* study: "base", "uncertainty", "alpha", "capacity" or "nptp". */
AMMFUT_API int ammfut_run_study(const ammfut_config* config, const char* study, ammfut_result** out);

AMMFUT_API const char* ammfut_result_status(const ammfut_result* result);
AMMFUT_API const char* ammfut_result_json(const ammfut_result* result);
AMMFUT_API size_t ammfut_result_file_count(const ammfut_result* result);
AMMFUT_API const char* ammfut_result_file_name(const ammfut_result* result, size_t index);
AMMFUT_API const char* ammfut_result_file_content(const ammfut_result* result, size_t index);
AMMFUT_API size_t ammfut_result_warning_count(const ammfut_result* result);
AMMFUT_API const char* ammfut_result_warning(const ammfut_result* result, size_t index);
AMMFUT_API int ammfut_result_write(const ammfut_result* result, const char* directory);
AMMFUT_API void ammfut_result_free(ammfut_result* result);

/* Helpers */
AMMFUT_API int ammfut_spot_price(double ga_sell, double ra_sell, double rho_max, double k_am, double* out);
AMMFUT_API int ammfut_cvar(const double* losses, const double* probs, size_t n, double alpha, double* cvar_out,
                           double* var_out);

#ifdef __cplusplus
}
#endif

#endif /* AMMFUT_H */
