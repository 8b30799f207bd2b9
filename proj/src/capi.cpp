// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/regionflow.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>

#include "regionflow/api_router.hpp"
#include "regionflow/error.hpp"
#include "regionflow/http_server.hpp"
#include "regionflow/pipeline.hpp"

using namespace regionflow;

struct rf_store {
  std::unique_ptr<RunStore> store;
  Config defaults;
  std::unique_ptr<ApiRouter> router;
  std::mutex mu;
  HttpServer* server = nullptr;

  ApiRouter& api() {
    std::lock_guard lock(mu);
    if (!router) router = std::make_unique<ApiRouter>(*store, defaults);
    return *router;
  }
};

namespace {

thread_local std::string last_error;

rf_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return RF_ERR_INVALID_INPUT;
    case ErrorCode::empty_dataset: return RF_ERR_EMPTY_DATASET;
    case ErrorCode::numerical_failure: return RF_ERR_NUMERICAL;
    case ErrorCode::not_found: return RF_ERR_NOT_FOUND;
    case ErrorCode::conflict: return RF_ERR_CONFLICT;
    case ErrorCode::io_error: return RF_ERR_IO;
    case ErrorCode::internal: return RF_ERR_INTERNAL;
  }
  return RF_ERR_INTERNAL;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename F>
rf_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return RF_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    last_error = e.what();
    return RF_ERR_INTERNAL;
  }
}

rf_status null_argument(const char* name) {
  last_error = std::string("missing argument: ") + name;
  return RF_ERR_INVALID_INPUT;
}

Config config_for(const rf_store* s, const char* path) { return path ? load_config(path) : s->defaults; }

}  // namespace

extern "C" {

const char* rf_version(void) { return "0.3.0"; }

const char* rf_last_error(void) { return last_error.c_str(); }

void rf_free_string(char* s) { std::free(s); }

rf_status rf_store_open(const char* root, const char* config_path, rf_store** out) {
  if (!root) return null_argument("root");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    auto s = std::make_unique<rf_store>();
    if (config_path) s->defaults = load_config(config_path);
    s->store = std::make_unique<RunStore>(root);
    *out = s.release();
  });
}

void rf_store_close(rf_store* store) {
  if (!store) return;
  rf_stop(store);
  delete store;
}

rf_status rf_ingest_csv(rf_store* store, const char* csv_path, const char* dataset_id, const char* config_path,
                        int overwrite, char** report_json) {
  if (!store) return null_argument("store");
  if (!csv_path) return null_argument("csv_path");
  if (!dataset_id) return null_argument("dataset_id");
  return guarded([&] {
    ingest_csv(*store->store, csv_path, config_for(store, config_path), dataset_id, overwrite != 0);
    if (report_json) *report_json = dup_string(read_file(store->store->dataset_dir(dataset_id) / "dataset.json"));
  });
}

rf_status rf_solve(rf_store* store, const char* dataset_id, const char* run_id, const char* config_path,
                   int overwrite, rf_frame_callback on_frame, void* user, char** manifest_json) {
  if (!store) return null_argument("store");
  if (!dataset_id) return null_argument("dataset_id");
  return guarded([&] {
    const Config cfg = config_for(store, config_path);
    const std::string run = run_id ? run_id : default_run_id(dataset_id, cfg);
    FrameCallback cb;
    if (on_frame) {
      cb = [&](const FrameSummary& f) {
        const nlohmann::json j = {{"t", f.t},
                                  {"k", f.k},
                                  {"objective", f.objective},
                                  {"penalized", f.penalized},
                                  {"ortho_residual", f.ortho_residual},
                                  {"iterations", f.iterations},
                                  {"converged", f.converged}};
        on_frame(j.dump().c_str(), user);
      };
    }
    const RunManifest m = solve_run(*store->store, dataset_id, cfg, run, overwrite != 0, cb);
    if (manifest_json) *manifest_json = dup_string(to_json(m).dump());
  });
}

rf_status rf_export(rf_store* store, const char* run_id, const char* out_dir, const char* what,
                    char** files_json) {
  if (!store) return null_argument("store");
  if (!run_id) return null_argument("run_id");
  if (!out_dir) return null_argument("out_dir");
  return guarded([&] {
    const auto files = export_run(*store->store, run_id, out_dir, what ? what : "all");
    nlohmann::json j = nlohmann::json::array();
    for (const auto& f : files) j.push_back(f.string());
    if (files_json) *files_json = dup_string(j.dump());
  });
}

rf_status rf_request(rf_store* store, const char* method, const char* target, const char* body, int* http_status,
                     char** response_json) {
  if (!store) return null_argument("store");
  if (!method) return null_argument("method");
  if (!target) return null_argument("target");
  return guarded([&] {
    const ApiResponse r = store->api().handle(method, target, body ? body : "");
    if (http_status) *http_status = r.status;
    if (response_json) *response_json = dup_string(r.body.dump());
  });
}

rf_status rf_serve(rf_store* store, const char* host, int port, const char* static_dir, rf_ready_callback on_ready,
                   void* user) {
  if (!store) return null_argument("store");
  return guarded([&] {
    std::optional<std::filesystem::path> dir;
    if (static_dir) dir = static_dir;
    HttpServer server(store->api(), dir);
    const int bound = server.bind(host ? host : "127.0.0.1", port);
    if (bound < 0) fail(ErrorCode::io_error, "cannot bind port " + std::to_string(port));
    {
      std::lock_guard lock(store->mu);
      if (store->server) fail(ErrorCode::conflict, "store is already serving");
      store->server = &server;
    }
    struct Detach {
      rf_store* s;
      ~Detach() {
        std::lock_guard lock(s->mu);
        s->server = nullptr;
      }
    } detach{store};
    if (on_ready) on_ready(bound, user);
    server.listen();
  });
}

rf_status rf_stop(rf_store* store) {
  if (!store) return null_argument("store");
  std::lock_guard lock(store->mu);
  if (store->server) store->server->stop();
  return RF_OK;
}

}  // extern "C"
