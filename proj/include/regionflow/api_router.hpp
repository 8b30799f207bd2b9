// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "regionflow/config.hpp"
#include "regionflow/error.hpp"
#include "regionflow/run_store.hpp"

namespace regionflow {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// HTTP status for an error code: not_found 404, invalid_input and
/// empty_dataset 422, conflict 409, everything else 500.
int http_status(ErrorCode code);

/// Transport-free JSON API over a RunStore. Routes are listed in
/// docs/FORMATS.md. Errors come back as {code, message}.
class ApiRouter {
 public:
  /// `defaults` seeds the parameters of runs started over the API.
  explicit ApiRouter(RunStore& store, Config defaults = {});
  ~ApiRouter();
  ApiRouter(const ApiRouter&) = delete;
  ApiRouter& operator=(const ApiRouter&) = delete;

  /// `target` is the request path with an optional query string.
  ApiResponse handle(const std::string& method, const std::string& target, const std::string& body);

  /// Blocks until background solves started over the API have finished.
  void wait_for_solves();

 private:
  using Query = std::map<std::string, std::string>;
  ApiResponse dispatch(const std::string& method, const std::vector<std::string>& parts, const Query& q,
                       const std::string& body);
  ApiResponse frame_route(const std::string& method, const std::string& run, int t,
                          const std::vector<std::string>& rest, const Query& q, const std::string& body);
  ApiResponse start_run(const std::string& dataset, const std::string& body);
  ApiResponse post_overrides(const std::string& run, int t, const std::string& body);
  ApiResponse delete_overrides(const std::string& run, int t, const Query& q);
  ApiResponse override_result(const std::string& run, int t, const std::vector<int>& before);

  RunStore& store_;
  Config defaults_;
  std::mutex mu_;
  std::vector<std::thread> workers_;
};

}  // namespace regionflow
