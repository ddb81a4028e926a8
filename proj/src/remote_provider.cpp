#include <httplib.h>

#include <json.hpp>

#include "coforge/error.hpp"
#include "coforge/provider.hpp"

namespace coforge {
namespace {

using nlohmann::json;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

Endpoint split_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "base URL needs a scheme", url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path_start);
  ep.prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  return ep;
}

}  // namespace

RemoteProvider::RemoteProvider(RemoteConfig config) : config_(std::move(config)) {}

std::string RemoteProvider::post_json(const std::string& endpoint, const std::string& body) const {
  const Endpoint ep = split_base_url(config_.base_url);
  httplib::Client client(ep.origin);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  client.set_write_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto result = client.Post(ep.prefix + endpoint, headers, body, "application/json");
  if (!result) {
    throw Error(ErrorCode::ProviderUnreachable, "provider transport failure",
                httplib::to_string(result.error()));
  }
  if (result->status < 200 || result->status >= 300) {
    throw Error(ErrorCode::ProviderRejected, "provider returned status " + std::to_string(result->status),
                result->body);
  }
  return result->body;
}

std::string RemoteProvider::chat_complete(std::span<const ChatTurn> turns, const GenParams& params) {
  validate_turns(turns);
  params.validate();
  json messages = json::array();
  for (const auto& turn : turns) {
    messages.push_back({{"role", to_string(turn.role)}, {"content", turn.content}});
  }
  json request = {{"model", config_.chat_model},
                  {"messages", std::move(messages)},
                  {"temperature", params.temperature},
                  {"max_tokens", params.max_output_tokens}};
  if (!params.stop_sequences.empty()) request["stop"] = params.stop_sequences;

  const std::string body = post_json("/chat/completions", request.dump());
  try {
    const json response = json::parse(body);
    return response.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderRejected, "malformed chat completion response", e.what());
  }
}

EmbeddingVector RemoteProvider::embed_text(std::string_view text) {
  const json request = {{"model", config_.embedding_model}, {"input", std::string(text)}};
  const std::string body = post_json("/embeddings", request.dump());
  EmbeddingVector v;
  try {
    const json response = json::parse(body);
    v.components = response.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderRejected, "malformed embedding response", e.what());
  }
  if (v.dimension() != config_.embedding_dimension) {
    throw Error(ErrorCode::ProviderRejected, "embedding dimension mismatch",
                std::to_string(v.dimension()) + " != " + std::to_string(config_.embedding_dimension));
  }
  normalize(v);
  return v;
}

}  // namespace coforge
