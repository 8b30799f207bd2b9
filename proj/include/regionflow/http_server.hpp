// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace regionflow {

class ApiRouter;

/// Serves an ApiRouter under /api and, optionally, static files from a
/// directory at /.
class HttpServer {
 public:
  explicit HttpServer(ApiRouter& router, std::optional<std::filesystem::path> static_dir = {});
  ~HttpServer();

  /// Binds; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace regionflow
