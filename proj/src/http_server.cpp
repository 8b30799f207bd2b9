// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/http_server.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "regionflow/api_router.hpp"

// After Eigen: <resolv.h>, pulled in by httplib, defines a `_res` macro.
#include <httplib.h>

namespace regionflow {

struct HttpServer::Impl {
  httplib::Server server;
  std::mutex mu;
  bool stopped = false;
  std::atomic<bool> listening{false};
};

HttpServer::HttpServer(ApiRouter& router, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>()) {
  auto handler = [&router](const httplib::Request& req, httplib::Response& res) {
    const ApiResponse r = router.handle(req.method, req.target, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  const std::string pattern = R"(/api(/.*)?)";
  impl_->server.Get(pattern, handler);
  impl_->server.Post(pattern, handler);
  impl_->server.Delete(pattern, handler);
  impl_->server.Put(pattern, handler);
  if (static_dir) impl_->server.set_mount_point("/", static_dir->string());
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() {
  {
    std::lock_guard lock(impl_->mu);
    if (impl_->stopped) return false;
    impl_->listening = true;
  }
  const bool ok = impl_->server.listen_after_bind();
  impl_->listening = false;
  return ok;
}

void HttpServer::stop() {
  if (!impl_) return;
  {
    std::lock_guard lock(impl_->mu);
    impl_->stopped = true;
  }
  // A stop issued just before the accept loop starts would otherwise be lost.
  while (impl_->listening && !impl_->server.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  impl_->server.stop();
}

}  // namespace regionflow
