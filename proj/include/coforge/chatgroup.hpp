#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coforge/agent.hpp"
#include "coforge/ids.hpp"
#include "coforge/knowledge.hpp"
#include "coforge/provider.hpp"
#include "coforge/rules.hpp"

namespace coforge {

enum class TurnPolicy { RoundRobin, Manual };
enum class SessionStatus { Open, Completed, Stopped };
enum class AuthorKind { Creator, ServiceAgent, PersonaAgent };
/// How the shared transcript is presented to a responder. Naive is the
/// single-prompt group framing kept only as a comparison baseline.
enum class MappingMode { Mapped, Naive };

const char* to_string(TurnPolicy p) noexcept;
const char* to_string(SessionStatus s) noexcept;
const char* to_string(AuthorKind k) noexcept;
const char* to_string(MappingMode m) noexcept;
TurnPolicy turn_policy_from_string(std::string_view s);
SessionStatus session_status_from_string(std::string_view s);
AuthorKind author_kind_from_string(std::string_view s);
MappingMode mapping_mode_from_string(std::string_view s);

inline constexpr std::string_view kCreatorAuthor = "creator";
inline constexpr std::string_view kCreatorDisplayName = "Creator";
inline constexpr std::string_view kStopSentinel = "[DONE]";
inline constexpr std::string_view kContinueTurn = "(continue)";

std::int64_t now_millis();

struct ChatMessage {
  std::string message_id;
  std::string author_id;
  AuthorKind author_kind = AuthorKind::Creator;
  std::string content;
  std::vector<SourceLocator> attributions;  // service-agent messages only
  std::optional<std::string> kb_id;         // knowledge base the attributions point into
  bool edited = false;
  std::vector<std::string> edit_history;    // prior texts, oldest first
  std::int64_t created_at = 0;

  bool operator==(const ChatMessage&) const = default;
};

struct Participant {
  std::string agent_id;
  std::string display_name;
  AgentKind kind = AgentKind::ServiceAgent;
  bool active = true;

  bool operator==(const Participant&) const = default;
};

struct GroupSession {
  std::string id;
  std::vector<Participant> participants;
  std::vector<ChatMessage> transcript;
  TurnPolicy turn_policy = TurnPolicy::RoundRobin;
  std::size_t max_turns = 10;
  SessionStatus status = SessionStatus::Open;
  MappingMode mapping_mode = MappingMode::Mapped;
  RuleStateMap rule_states;
  IdSequence message_ids;

  const Participant* participant(std::string_view agent_id) const noexcept;
  const ChatMessage* message(std::string_view message_id) const noexcept;
  std::size_t agent_message_count() const noexcept;
  std::string display_name(const ChatMessage& m) const;

  bool operator==(const GroupSession&) const = default;
};

class SessionStore {
 public:
  /// Round-robin sessions need two participants; manual sessions need one
  /// agent because the creator is the other party.
  GroupSession& create(const AgentRegistry& agents, const std::vector<std::string>& participant_ids,
                       TurnPolicy policy, std::size_t max_turns = 10, MappingMode mode = MappingMode::Mapped);

  GroupSession& get(const std::string& id);
  const GroupSession& get(const std::string& id) const;
  const GroupSession* find(const std::string& id) const noexcept;
  /// Session holding the message, or nullptr.
  GroupSession* find_by_message(std::string_view message_id) noexcept;
  const std::vector<GroupSession>& list() const noexcept { return sessions_; }

  /// Marks the agent inactive in every session; transcripts are kept.
  void detach_agent(const std::string& agent_id);

  const IdSequence& ids() const noexcept { return ids_; }
  void restore(std::vector<GroupSession> sessions, IdSequence ids);

  bool operator==(const SessionStore&) const = default;

 private:
  std::vector<GroupSession> sessions_;
  IdSequence ids_;
};

/// Produces a persona's message content from its mapped view, replacing the
/// plain chat_complete call.
using TurnGenerator =
    std::function<std::string(const AgentSpec& speaker, const std::vector<ChatTurn>& mapped, Provider& provider)>;

enum class RetrievalQuery { LastOtherMessage, FullTranscript };

struct GroupChatOptions {
  AnswerOptions answer;
  RetrievalQuery retrieval_query = RetrievalQuery::LastOtherMessage;
};

struct GroupChatContext {
  const AgentRegistry& agents;
  const KnowledgeStore& knowledge;
  Provider& provider;
  const RuleRegistry* rules = nullptr;
  GroupChatOptions options{};
  std::map<std::string, TurnGenerator> generators{};  // keyed by agent id
};

struct MappedView {
  std::vector<ChatTurn> turns;
  std::size_t leading_turns = 0;  // definition + grounding turns before the transcript
  std::vector<RetrievalResult> retrieval_trace;
  std::vector<SourceLocator> attributions;
  std::optional<std::string> kb_id;
};

/// Per-responder two-role view of the shared transcript: responder's own
/// messages become assistant turns, everyone else's become user turns
/// prefixed "Name: ", adjacent same-role turns are merged, and a synthetic
/// "(continue)" user turn is appended when the view does not end on a user turn.
MappedView map_history_view(const GroupSession& session, const std::string& responder_id,
                            const GroupChatContext& ctx);
std::vector<ChatTurn> map_history(const GroupSession& session, const std::string& responder_id,
                                  const GroupChatContext& ctx);

/// Appends a creator-authored message.
const ChatMessage& post_creator_message(GroupSession& session, std::string content);

/// One agent reply by `responder_id`. Nothing is appended if the provider
/// fails.
const ChatMessage& respond(GroupSession& session, const std::string& responder_id, GroupChatContext& ctx);

/// Round-robin turn by participants[agent messages mod |participants|].
const ChatMessage& next_turn(GroupSession& session, GroupChatContext& ctx);

/// Runs next_turn until completed or a reply equals the stop sentinel.
const std::vector<ChatMessage>& run_simulation(GroupSession& session, GroupChatContext& ctx);

}  // namespace coforge
