/* C interface consumed by foreign-function bindings. Structured records
 * cross as UTF-8 JSON, probability arrays as contiguous row-major doubles.
 * Functions return 0 on success or 1 + the native error code; on failure
 * *error_json (when non-null) receives {"error": code, "message": text},
 * to be released with mavic_string_free. */
#ifndef MAVIC_C_API_H
#define MAVIC_C_API_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct mavic_context mavic_context;

const char* mavic_version(void);

/* pmi_paths may be null when n_pmi is 0; config_json may be null for defaults. */
int mavic_context_load(const char* taxonomy_path, const char* const* pmi_paths, size_t n_pmi,
                       const char* config_json, mavic_context** out, char** error_json);
void mavic_context_free(mavic_context* ctx);

/* rollouts_json: JSON array of rollout records of one group. *out_json gets a
 * JSON array of breakdown records in input order. */
int mavic_score_group(const mavic_context* ctx, const char* rollouts_json, char** out_json,
                      char** error_json);

/* probs: k rows of v doubles. With n_options > 0 the rows are projected onto
 * option_indices and the outputs live on the option simplex, so out_aggregate
 * needs n_options entries; otherwise v. Per-rollout outputs need k entries. */
int mavic_cct_step(const double* probs, size_t k, size_t v, double lambda, double beta,
                   const size_t* option_indices, size_t n_options, double* out_confidences,
                   double* out_deviations, double* out_weights, double* out_aggregate,
                   char** error_json);

int mavic_decide_mcqa(const double* probs, size_t k, size_t v, double lambda, double beta,
                      const size_t* option_indices, size_t n_options, size_t* out_choice,
                      char** error_json);

void mavic_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
