/*
 * dialogmem C API: long-term dialog memory engine.
 *
 * All functions return dm_status; DM_OK (0) means success. On failure,
 * dm_last_error() returns a thread-local message describing the most recent
 * error in the calling thread. Strings returned through `char**` out
 * parameters are heap-allocated and must be released with dm_string_free().
 * dm_index handles are opaque; close them with dm_index_close().
 */
#ifndef DIALOGMEM_H
#define DIALOGMEM_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dm_status {
    DM_OK = 0,
    DM_ERR_INVALID_ARGUMENT = 1,
    DM_ERR_CONFIG = 2,
    DM_ERR_IO = 3,
    DM_ERR_FORMAT = 4,
    DM_ERR_BACKEND = 5,
    DM_ERR_NOT_FOUND = 6,
    DM_ERR_INTERNAL = 7
} dm_status;

typedef struct dm_index dm_index;

const char* dm_version(void);

/* Thread-local message for the last failing call in this thread. */
const char* dm_last_error(void);

void dm_string_free(char* s);

/* Validates a config file. *report_json receives {"ok":..., "violations":
 * [...], "warnings": [...]}; returns DM_ERR_CONFIG when violations exist. */
dm_status dm_config_validate(const char* config_path, char** report_json);

/* Builds an index from a corpus/benchmark document into out_dir (which must
 * be empty or absent). cache_dir may be NULL (no response cache);
 * max_parallel <= 0 selects the default (16). *manifest_json (optional)
 * receives the run manifest. */
dm_status dm_build(const char* corpus_path, const char* config_path, const char* out_dir,
                   const char* cache_dir, int max_parallel, char** manifest_json);

dm_status dm_index_open(const char* index_dir, dm_index** out);
dm_status dm_index_open_cached(const char* index_dir, const char* cache_dir, dm_index** out);
void dm_index_close(dm_index* index);

/* Retrieves values for a query. k/n <= 0 use the configured values;
 * with_trace != 0 includes activation seeds and expansion in the result.
 * *result_json receives {"values": [...], "trace": {...}?}. */
dm_status dm_retrieve(dm_index* index, const char* query_text, int k, int n, int with_trace,
                      char** result_json);

/* Runs retrieval (and QA when judge != "none") evaluation over a questions
 * document. judge is one of "none", "containment", "remote". When
 * report_dir is non-NULL the full report and table export are written
 * there. *summary_json receives the aggregate metrics. */
dm_status dm_eval(dm_index* index, const char* questions_path, const char* judge,
                  const char* report_dir, char** summary_json);

/* Index statistics plus the manifest counters. */
dm_status dm_stats(dm_index* index, char** stats_json);

#ifdef __cplusplus
}
#endif

#endif /* DIALOGMEM_H */
