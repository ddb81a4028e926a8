#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coforge {

enum class Role { System, User, Assistant };

const char* to_string(Role role) noexcept;
Role role_from_string(std::string_view s);

struct ChatTurn {
  Role role = Role::User;
  std::string content;

  bool operator==(const ChatTurn&) const = default;
};

/// Throws InvalidArgument if the list is empty or a non-system turn is empty.
void validate_turns(std::span<const ChatTurn> turns);

struct GenParams {
  double temperature = 0.7;
  int max_output_tokens = 512;
  std::vector<std::string> stop_sequences;

  void validate() const;
};

/// Dense embedding. Either all zeros or unit L2 norm.
struct EmbeddingVector {
  std::vector<double> components;

  std::size_t dimension() const noexcept { return components.size(); }
  double norm() const noexcept;
  bool is_zero() const noexcept;

  bool operator==(const EmbeddingVector&) const = default;
};

/// Cosine similarity; 0 when either side is the zero vector.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// Scale to unit L2 norm in place; zero vectors are left alone.
void normalize(EmbeddingVector& v);

inline constexpr std::size_t kMockEmbeddingDimension = 64;

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Hashed bag-of-words embedding used by the mock provider.
EmbeddingVector mock_embed(std::string_view text);

/// Chat-completion and embedding backend. Implementations must be safe to
/// share between threads.
class Provider {
 public:
  virtual ~Provider() = default;

  virtual std::string chat_complete(std::span<const ChatTurn> turns, const GenParams& params) = 0;
  virtual EmbeddingVector embed_text(std::string_view text) = 0;
  virtual std::size_t embedding_dimension() const = 0;
};

/// Deterministic offline provider. Replies come from a FIFO script; once the
/// script is empty the reply is "ECHO:" plus the last user turn.
class MockProvider : public Provider {
 public:
  MockProvider() = default;
  explicit MockProvider(std::vector<std::string> script);

  std::string chat_complete(std::span<const ChatTurn> turns, const GenParams& params) override;
  EmbeddingVector embed_text(std::string_view text) override;
  std::size_t embedding_dimension() const override { return kMockEmbeddingDimension; }

  void push_reply(std::string reply);
  std::size_t remaining_script() const;

  std::size_t chat_calls() const;
  std::size_t embed_calls() const;
  std::vector<std::vector<ChatTurn>> chat_log() const;

  // Fault injection, 1-based over the lifetime of this provider. The failing
  // call throws ProviderUnreachable and consumes nothing from the script.
  void fail_chat_on_call(std::size_t n);
  void fail_embed_on_call(std::size_t n);

 private:
  mutable std::mutex mutex_;
  std::deque<std::string> script_;
  std::vector<std::vector<ChatTurn>> log_;
  std::size_t chat_calls_ = 0;
  std::size_t embed_calls_ = 0;
  std::optional<std::size_t> chat_fault_;
  std::optional<std::size_t> embed_fault_;
};

struct RemoteConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string chat_model = "gpt-3.5-turbo";
  std::string embedding_model = "text-embedding-ada-002";
  std::string api_key;
  std::size_t embedding_dimension = 1536;
  int timeout_seconds = 30;

  /// Fills api_key from AGENT_COFORGE_API_KEY when it is empty.
  static RemoteConfig from_environment(RemoteConfig base);
  static RemoteConfig from_environment();
};

/// OpenAI-compatible HTTP backend. No retries.
class RemoteProvider : public Provider {
 public:
  explicit RemoteProvider(RemoteConfig config);

  std::string chat_complete(std::span<const ChatTurn> turns, const GenParams& params) override;
  EmbeddingVector embed_text(std::string_view text) override;
  std::size_t embedding_dimension() const override { return config_.embedding_dimension; }

  const RemoteConfig& config() const noexcept { return config_; }

 private:
  std::string post_json(const std::string& endpoint, const std::string& body) const;

  RemoteConfig config_;
};

}  // namespace coforge
