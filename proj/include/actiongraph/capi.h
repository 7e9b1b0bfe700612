/* actiongraph shared-library interface.
 *
 * Everything runs through an opaque context handle: set string options with
 * ag_ctx_set, run pipeline stages against file paths, and read failures from
 * ag_ctx_last_error. Status codes double as CLI exit codes.
 */
#ifndef ACTIONGRAPH_CAPI_H
#define ACTIONGRAPH_CAPI_H

#if defined(_WIN32)
#define AG_API __declspec(dllexport)
#else
#define AG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct ag_ctx ag_ctx;

typedef enum ag_status {
  AG_OK = 0,
  AG_ERR_USAGE = 1,   /* bad flags/options */
  AG_ERR_DATA = 2,    /* missing or malformed inputs */
  AG_ERR_NUMERIC = 3  /* divergence or failed numeric checks */
} ag_status;

AG_API const char* ag_version(void);

AG_API ag_ctx* ag_ctx_new(void);
AG_API void ag_ctx_free(ag_ctx* ctx);

/* Message describing the most recent failure on this context; empty string
 * when the last call succeeded. The pointer stays valid until the next call
 * on the same context. */
AG_API const char* ag_ctx_last_error(const ag_ctx* ctx);

/* Stage options as string key/value pairs ("seed", "epochs", "model", ...).
 * Unknown keys fail with AG_ERR_USAGE. */
AG_API ag_status ag_ctx_set(ag_ctx* ctx, const char* key, const char* value);

/* Pipeline stages. Directory outputs are created if needed; every stage
 * writes a manifest.json recording options, seed, and input content hashes. */
AG_API ag_status ag_run_simulate(ag_ctx* ctx, const char* out_dir);
AG_API ag_status ag_run_sessionize(ag_ctx* ctx, const char* events_jsonl,
                                   const char* out_sessions_jsonl);
AG_API ag_status ag_run_graph(ag_ctx* ctx, const char* sessions_jsonl, const char* out_dir);
AG_API ag_status ag_run_features(ag_ctx* ctx, const char* sessions_jsonl, const char* out_dir);
AG_API ag_status ag_run_genes(ag_ctx* ctx, const char* sessions_jsonl, const char* out_dir);
AG_API ag_status ag_run_cluster(ag_ctx* ctx, const char* matrix_csv, const char* out_dir);
AG_API ag_status ag_run_train(ag_ctx* ctx, const char* events_jsonl, const char* out_dir);
AG_API ag_status ag_run_eval(ag_ctx* ctx, const char* checkpoint_json, const char* events_jsonl,
                             const char* out_dir);
AG_API ag_status ag_run_report(ag_ctx* ctx, const char* events_jsonl, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* ACTIONGRAPH_CAPI_H */
