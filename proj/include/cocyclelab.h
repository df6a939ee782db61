/*
 * cocyclelab C API
 *
 * Shared-library interface for the matrix-cocycle laboratory: base systems,
 * cocycle generators, Lyapunov spectra, and the batch experiment pipelines.
 * All functions return a clab_status; results travel through out-parameters.
 * Strings returned through char** out-parameters are heap-allocated and must
 * be released with clab_string_free. Error details for the last failing call
 * on the current thread are available via clab_last_error.
 */

#ifndef COCYCLELAB_H
#define COCYCLELAB_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum clab_status {
  CLAB_OK = 0,
  CLAB_ERR_INVALID_ARGUMENT = 1,
  CLAB_ERR_CONFIG = 2,
  CLAB_ERR_PRECONDITION = 3,
  CLAB_ERR_WINDOW_EXHAUSTED = 4,
  CLAB_ERR_SINGULAR_MATRIX = 5,
  CLAB_ERR_SIZE_LIMIT = 6,
  CLAB_ERR_COVERAGE = 7,
  CLAB_ERR_DEGENERATE_SPECTRUM = 8,
  CLAB_ERR_IO = 9,
  CLAB_ERR_INTERNAL = 10
} clab_status;

typedef struct clab_system clab_system;
typedef struct clab_generator clab_generator;

const char* clab_version(void);
const char* clab_last_error(void);
void clab_string_free(char* s);

/* System handle: spec_json as in the docs, e.g.
 * {"type":"sft","alphabet":2,"transitions":[[1,1],[1,1]]} */
clab_status clab_system_create(const char* spec_json, clab_system** out);
void clab_system_destroy(clab_system* sys);
clab_status clab_system_type(const clab_system* sys, char** out);
/* Number of points with f^n p = p. */
clab_status clab_system_periodic_count(const clab_system* sys, int n, int64_t* out);

/* Generator handle: gen_json as in the docs, e.g.
 * {"kind":"random-holder","m":2,"alpha":0.6,"seed":7} */
clab_status clab_generator_create(const clab_system* sys, const char* gen_json,
                                  clab_generator** out);
void clab_generator_destroy(clab_generator* gen);
clab_status clab_generator_dimension(const clab_generator* gen, int* out);

/* Lyapunov exponents (ascending) over a sampled typical orbit. exponents
 * must hold at least the generator dimension. */
clab_status clab_generator_spectrum(const clab_generator* gen, int64_t orbit_length,
                                    uint64_t seed, double* exponents, int capacity);

/* Runs one experiment pipeline. config_json is the full experiment document;
 * pipeline must match its "pipeline" field (pass NULL to take it from the
 * config). seed_override < 0 keeps the config seed. verdict_out: 1 pass,
 * 0 fail. report_json_out (optional) receives the report document. */
clab_status clab_run_pipeline(const char* pipeline, const char* config_json,
                              const char* out_dir, int64_t seed_override, int workers,
                              int* verdict_out, char** report_json_out);

/* Merges every *.report.json under dir; verdict_out as above. */
clab_status clab_report_summary(const char* dir, int* verdict_out, char** summary_json_out);

#ifdef __cplusplus
}
#endif

#endif /* COCYCLELAB_H */
