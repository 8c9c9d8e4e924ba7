#ifndef CIRCUITRL_H
#define CIRCUITRL_H

/* C interface to the circuit generation library.
 *
 * Every fallible call returns a crl_status; on failure crl_last_error()
 * describes the most recent failure on the calling thread. Strings returned
 * through char** are heap-allocated and released with crl_string_free.
 * Handles are released with their *_free function; freeing NULL is a no-op. */

#include <stddef.h>

#if defined(_WIN32)
#define CRL_API __declspec(dllexport)
#else
#define CRL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum crl_status {
  CRL_OK = 0,
  CRL_E_MALFORMED_SYNTAX = 1,
  CRL_E_UNKNOWN_DEVICE_NAME,
  CRL_E_ARITY_MISMATCH,
  CRL_E_DUPLICATE_DEVICE,
  CRL_E_INVALID_DUTY,
  CRL_E_INCONSISTENT_INCIDENCE,
  CRL_E_SINGULAR_SYSTEM,
  CRL_E_EXHAUSTED_RETRIES,
  CRL_E_SPACE_EXHAUSTED,
  CRL_E_INVALID_INPUT,
  CRL_E_EMPTY_DATASET,
  CRL_E_MISSING_CONSTRAINT,
  CRL_E_UNTRAINED_BACKEND,
  CRL_E_OUT_OF_VOCABULARY,
  CRL_E_MALFORMED_SEQUENCE,
  CRL_E_DIVERGED,
  CRL_E_TRUNCATED,
  CRL_E_EMPTY_SAMPLE_SET,
  CRL_E_INVALID_COUNTS,
  CRL_E_EMPTY_PROMPT_SET,
  CRL_E_VERSION_MISMATCH,
  CRL_E_IO,
  CRL_E_USAGE,
  CRL_E_PHASE_ORDER,
  CRL_E_POOL_STARVATION,
  CRL_E_NULL_ARGUMENT = 100,
  CRL_E_INTERNAL = 101
} crl_status;

typedef struct crl_config crl_config;
typedef struct crl_dataset crl_dataset;
typedef struct crl_checkpoint crl_checkpoint;

/* Progress sink for long-running calls; may be NULL. */
typedef void (*crl_log_fn)(const char* line, void* user);

CRL_API const char* crl_status_name(crl_status s);
CRL_API const char* crl_last_error(void);
CRL_API void crl_string_free(char* s);

/* ---- run configuration (key = value) ---- */
CRL_API crl_status crl_config_new(crl_config** out);
CRL_API void crl_config_free(crl_config* c);
/* Applies "key = value" lines; unknown keys fail with CRL_E_USAGE. */
CRL_API crl_status crl_config_apply_text(crl_config* c, const char* text);
CRL_API crl_status crl_config_set(crl_config* c, const char* key, const char* value);
CRL_API crl_status crl_config_get(const crl_config* c, const char* key, char** out);
/* Full snapshot in key = value form. */
CRL_API crl_status crl_config_to_text(const crl_config* c, char** out);
CRL_API crl_status crl_config_validate(const crl_config* c);

/* ---- datasets ---- */
/* Random search over config components/target/seed, simulation and prompt
 * synthesis. A short result (space exhausted) still returns the dataset with
 * CRL_E_SPACE_EXHAUSTED; the caller owns *out in both cases. */
CRL_API crl_status crl_dataset_generate(const crl_config* c, crl_dataset** out, crl_log_fn log, void* user);
CRL_API crl_status crl_dataset_from_jsonl(const char* text, crl_dataset** out);
CRL_API void crl_dataset_free(crl_dataset* d);
CRL_API size_t crl_dataset_size(const crl_dataset* d);
CRL_API crl_status crl_dataset_to_jsonl(const crl_dataset* d, char** out);
/* Seed, per-size unique counts, exhaustion flags and group histogram. */
CRL_API crl_status crl_dataset_manifest(const crl_dataset* d, char** out_json);
/* JSONL of satisfiable evaluation prompts (config eval_prompts, mix, seed). */
CRL_API crl_status crl_dataset_eval_prompts(const crl_dataset* d, const crl_config* c, char** out_jsonl);

/* ---- simulation ---- */
/* One Design per input line, one SimResult per output line. A line that
 * fails to parse yields {"line": n, "error": kind, "message": text}. */
CRL_API crl_status crl_simulate_jsonl(const crl_config* c, const char* in_jsonl, char** out_jsonl);

/* ---- training ---- */
CRL_API crl_status crl_checkpoint_from_json(const char* text, crl_checkpoint** out);
CRL_API crl_status crl_checkpoint_to_json(const crl_checkpoint* k, char** out);
CRL_API crl_status crl_checkpoint_phase(const crl_checkpoint* k, char** out);
CRL_API void crl_checkpoint_free(crl_checkpoint* k);

/* phase is "sft", "rl" or "ia". sft needs only the dataset; rl needs an sft
 * checkpoint and ia an rl checkpoint as prior (CRL_E_PHASE_ORDER otherwise).
 * Writes the new checkpoint and a metrics CSV. */
CRL_API crl_status crl_train(const crl_config* c, const char* phase, const crl_dataset* data,
                             const crl_checkpoint* prior, crl_checkpoint** out, char** metrics_csv,
                             crl_log_fn log, void* user);

/* ---- evaluation ---- */
/* Prompts as JSONL. ms lists the m values of SuccessRate@m. */
CRL_API crl_status crl_evaluate(const crl_config* c, const crl_checkpoint* k, const char* prompts_jsonl,
                                const int* ms, size_t n_ms, int samples, char** report_json, char** report_csv);

#ifdef __cplusplus
}
#endif

#endif /* CIRCUITRL_H */
