#include "coforge/provider.hpp"

#include <cmath>
#include <cstdlib>

#include "coforge/error.hpp"
#include "coforge/text.hpp"

namespace coforge {

const char* to_string(Role role) noexcept {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::System;
  if (s == "user") return Role::User;
  if (s == "assistant") return Role::Assistant;
  throw Error(ErrorCode::InvalidArgument, "unknown role", std::string(s));
}

void validate_turns(std::span<const ChatTurn> turns) {
  if (turns.empty()) throw Error(ErrorCode::InvalidArgument, "turn list is empty");
  for (const auto& turn : turns) {
    if (turn.content.empty() && turn.role != Role::System) {
      throw Error(ErrorCode::InvalidArgument, "only system turns may be empty", to_string(turn.role));
    }
  }
}

void GenParams::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be within [0, 2]");
  }
  if (max_output_tokens < 1) throw Error(ErrorCode::InvalidArgument, "max_output_tokens must be >= 1");
  if (stop_sequences.size() > 4) throw Error(ErrorCode::InvalidArgument, "at most 4 stop sequences");
}

double EmbeddingVector::norm() const noexcept {
  double sum = 0.0;
  for (double c : components) sum += c * c;
  return std::sqrt(sum);
}

bool EmbeddingVector::is_zero() const noexcept {
  for (double c : components) {
    if (c != 0.0) return false;
  }
  return true;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    throw Error(ErrorCode::InvalidArgument, "embedding dimension mismatch");
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.components.size(); ++i) {
    dot += a.components[i] * b.components[i];
    na += a.components[i] * a.components[i];
    nb += b.components[i] * b.components[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

void normalize(EmbeddingVector& v) {
  const double n = v.norm();
  if (n == 0.0) return;
  for (double& c : v.components) c /= n;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

EmbeddingVector mock_embed(std::string_view text) {
  EmbeddingVector v;
  v.components.assign(kMockEmbeddingDimension, 0.0);
  for (const auto& token : text::tokenize(text)) {
    const std::uint64_t h = fnv1a64(token);
    const double sign = ((h >> 6) & 1U) == 0 ? 1.0 : -1.0;
    v.components[h % kMockEmbeddingDimension] += sign;
  }
  normalize(v);
  return v;
}

// ---------------------------------------------------------------------------

MockProvider::MockProvider(std::vector<std::string> script)
    : script_(std::make_move_iterator(script.begin()), std::make_move_iterator(script.end())) {}

std::string MockProvider::chat_complete(std::span<const ChatTurn> turns, const GenParams& params) {
  validate_turns(turns);
  params.validate();
  std::lock_guard lock(mutex_);
  ++chat_calls_;
  if (chat_fault_ && *chat_fault_ == chat_calls_) {
    throw Error(ErrorCode::ProviderUnreachable, "injected chat fault");
  }
  log_.emplace_back(turns.begin(), turns.end());
  if (!script_.empty()) {
    std::string reply = std::move(script_.front());
    script_.pop_front();
    return reply;
  }
  for (auto it = turns.rbegin(); it != turns.rend(); ++it) {
    if (it->role == Role::User) return "ECHO:" + it->content;
  }
  return "ECHO:";
}

EmbeddingVector MockProvider::embed_text(std::string_view text) {
  {
    std::lock_guard lock(mutex_);
    ++embed_calls_;
    if (embed_fault_ && *embed_fault_ == embed_calls_) {
      throw Error(ErrorCode::ProviderUnreachable, "injected embedding fault");
    }
  }
  return mock_embed(text);
}

void MockProvider::push_reply(std::string reply) {
  std::lock_guard lock(mutex_);
  script_.push_back(std::move(reply));
}

std::size_t MockProvider::remaining_script() const {
  std::lock_guard lock(mutex_);
  return script_.size();
}

std::size_t MockProvider::chat_calls() const {
  std::lock_guard lock(mutex_);
  return chat_calls_;
}

std::size_t MockProvider::embed_calls() const {
  std::lock_guard lock(mutex_);
  return embed_calls_;
}

std::vector<std::vector<ChatTurn>> MockProvider::chat_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

void MockProvider::fail_chat_on_call(std::size_t n) {
  std::lock_guard lock(mutex_);
  chat_fault_ = n;
}

void MockProvider::fail_embed_on_call(std::size_t n) {
  std::lock_guard lock(mutex_);
  embed_fault_ = n;
}

RemoteConfig RemoteConfig::from_environment(RemoteConfig base) {
  if (base.api_key.empty()) {
    if (const char* key = std::getenv("AGENT_COFORGE_API_KEY")) base.api_key = key;
  }
  return base;
}

RemoteConfig RemoteConfig::from_environment() { return from_environment(RemoteConfig{}); }

}  // namespace coforge
