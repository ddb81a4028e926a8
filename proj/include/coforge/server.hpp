#pragma once

#include <functional>
#include <memory>
#include <string>

#include "coforge/api.hpp"

namespace coforge {

/// HTTP front end over an Api. Request bodies are JSON; paths map one to one
/// onto Api routes.
class HttpServer {
 public:
  explicit HttpServer(Api& api);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds `host:port` (port 0 picks a free port) and returns the bound port.
  /// Throws IoError when the address is unavailable.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace coforge
