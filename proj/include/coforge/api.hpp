#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

#include <json.hpp>

#include "coforge/chatgroup.hpp"
#include "coforge/error.hpp"
#include "coforge/knowledge.hpp"
#include "coforge/project.hpp"
#include "coforge/provider.hpp"
#include "coforge/rules.hpp"

namespace coforge {

struct ApiRequest {
  std::string method;
  std::string path;
  nlohmann::json body = nlohmann::json::object();
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
  std::optional<std::string> raw;  // non-JSON payloads (transcript export)
  std::string content_type = "application/json";
};

struct ServiceConfig {
  std::optional<std::filesystem::path> project_path;
  GroupChatOptions chat;
  IngestOptions ingest;
};

int http_status(ErrorCode code) noexcept;
nlohmann::json error_body(const Error& e);

/// The single mutation path over a project. Every successful mutation is
/// written to the project file before the response is returned. The HTTP
/// server and the CLI both dispatch through handle().
class Api {
 public:
  Api(std::shared_ptr<Provider> provider, ServiceConfig config, RuleRegistry rules = default_rule_registry());

  ApiResponse handle(const ApiRequest& request);

  Project snapshot() const;
  const RuleRegistry& rules() const noexcept { return rules_; }

 private:
  ApiResponse dispatch(const ApiRequest& request);
  void persist();
  GroupChatContext chat_context();

  std::shared_ptr<Provider> provider_;
  ServiceConfig config_;
  RuleRegistry rules_;
  mutable std::shared_mutex mutex_;
  Project project_;
};

}  // namespace coforge
