/* Licensed under the Apache License 2.0 (see LICENSE file). */

/* C interface to the regionflow engine. Every function returns an
 * rf_status; on failure rf_last_error() describes the problem for the
 * calling thread. Strings returned through char** are owned by the caller
 * and released with rf_free_string. */

#ifndef REGIONFLOW_H
#define REGIONFLOW_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#  ifdef RF_BUILDING_LIBRARY
#    define RF_API __declspec(dllexport)
#  else
#    define RF_API __declspec(dllimport)
#  endif
#else
#  define RF_API __attribute__((visibility("default")))
#endif

typedef enum rf_status {
  RF_OK = 0,
  RF_ERR_INVALID_INPUT = 1,
  RF_ERR_EMPTY_DATASET = 2,
  RF_ERR_NUMERICAL = 3,
  RF_ERR_NOT_FOUND = 4,
  RF_ERR_CONFLICT = 5,
  RF_ERR_IO = 6,
  RF_ERR_INTERNAL = 7
} rf_status;

/* A data directory with its datasets and runs. */
typedef struct rf_store rf_store;

/* Receives one JSON frame summary {t, k, objective, penalized,
 * ortho_residual, iterations, converged} per solved frame. */
typedef void (*rf_frame_callback)(const char* frame_json, void* user);

/* Called once the server is listening, with the bound port. */
typedef void (*rf_ready_callback)(int port, void* user);

RF_API const char* rf_version(void);
RF_API const char* rf_last_error(void);
RF_API void rf_free_string(char* s);

/* config_path may be NULL; otherwise its INI settings become the store
 * defaults for ingest, solve and runs started over HTTP. */
RF_API rf_status rf_store_open(const char* root, const char* config_path, rf_store** out);
RF_API void rf_store_close(rf_store* store);

/* Writes dataset `dataset_id`. config_path (nullable) overrides the store
 * defaults and must provide a [grid] section. *report_json receives the
 * dataset description including the ingest report. */
RF_API rf_status rf_ingest_csv(rf_store* store, const char* csv_path, const char* dataset_id,
                               const char* config_path, int overwrite, char** report_json);

/* Solves a run. run_id may be NULL for "<dataset>-<parameter hash>".
 * *manifest_json receives the run manifest. */
RF_API rf_status rf_solve(rf_store* store, const char* dataset_id, const char* run_id,
                          const char* config_path, int overwrite, rf_frame_callback on_frame,
                          void* user, char** manifest_json);

/* what: "geojson", "evolution" or "all". *files_json receives the list of
 * written paths. */
RF_API rf_status rf_export(rf_store* store, const char* run_id, const char* out_dir,
                           const char* what, char** files_json);

/* In-process HTTP API call. target is a path with optional query string,
 * body may be NULL. The status is RF_OK whenever a response was produced;
 * *http_status and *response_json carry the outcome. */
RF_API rf_status rf_request(rf_store* store, const char* method, const char* target,
                            const char* body, int* http_status, char** response_json);

/* Serves the HTTP API until rf_stop. static_dir may be NULL. */
RF_API rf_status rf_serve(rf_store* store, const char* host, int port, const char* static_dir,
                          rf_ready_callback on_ready, void* user);
RF_API rf_status rf_stop(rf_store* store);

#ifdef __cplusplus
}
#endif

#endif
