#include "coforge/server.hpp"

#include <httplib.h>

namespace coforge {

struct HttpServer::Impl {
  explicit Impl(Api& a) : api(a) {}
  Api& api;
  httplib::Server server;
};

namespace {

void serve(Api& api, const httplib::Request& req, httplib::Response& res) {
  ApiRequest request{req.method, req.path, nlohmann::json::object()};
  if (!req.body.empty()) {
    try {
      request.body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      res.status = 400;
      res.set_content(
          nlohmann::json{{"code", "invalid-argument"}, {"message", "request body is not JSON"}, {"detail", e.what()}}
              .dump(),
          "application/json");
      return;
    }
  }
  const ApiResponse response = api.handle(request);
  res.status = response.status;
  res.set_content(response.raw ? *response.raw : response.body.dump(), response.content_type);
}

}  // namespace

HttpServer::HttpServer(Api& api) : impl_(std::make_unique<Impl>(api)) {
  // The library default enables SO_REUSEPORT, which lets a second server
  // silently share a port that is already taken.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  auto handler = [this](const httplib::Request& req, httplib::Response& res) { serve(impl_->api, req, res); };
  impl_->server.Get(".*", handler);
  impl_->server.Post(".*", handler);
  impl_->server.Put(".*", handler);
  impl_->server.Patch(".*", handler);
  impl_->server.Delete(".*", handler);
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound <= 0) {
    throw Error(ErrorCode::IoError, "cannot bind address", host + ":" + std::to_string(port));
  }
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace coforge
