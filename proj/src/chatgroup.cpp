#include "coforge/chatgroup.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "coforge/error.hpp"
#include "coforge/text.hpp"

namespace coforge {

const char* to_string(TurnPolicy p) noexcept { return p == TurnPolicy::RoundRobin ? "round_robin" : "manual"; }

const char* to_string(SessionStatus s) noexcept {
  switch (s) {
    case SessionStatus::Open: return "open";
    case SessionStatus::Completed: return "completed";
    case SessionStatus::Stopped: return "stopped";
  }
  return "open";
}

const char* to_string(AuthorKind k) noexcept {
  switch (k) {
    case AuthorKind::Creator: return "creator";
    case AuthorKind::ServiceAgent: return "service_agent";
    case AuthorKind::PersonaAgent: return "persona_agent";
  }
  return "creator";
}

const char* to_string(MappingMode m) noexcept { return m == MappingMode::Mapped ? "mapped" : "naive"; }

TurnPolicy turn_policy_from_string(std::string_view s) {
  if (s == "round_robin") return TurnPolicy::RoundRobin;
  if (s == "manual") return TurnPolicy::Manual;
  throw Error(ErrorCode::InvalidArgument, "unknown turn policy", std::string(s));
}

SessionStatus session_status_from_string(std::string_view s) {
  if (s == "open") return SessionStatus::Open;
  if (s == "completed") return SessionStatus::Completed;
  if (s == "stopped") return SessionStatus::Stopped;
  throw Error(ErrorCode::InvalidArgument, "unknown session status", std::string(s));
}

AuthorKind author_kind_from_string(std::string_view s) {
  if (s == "creator") return AuthorKind::Creator;
  if (s == "service_agent") return AuthorKind::ServiceAgent;
  if (s == "persona_agent") return AuthorKind::PersonaAgent;
  throw Error(ErrorCode::InvalidArgument, "unknown author kind", std::string(s));
}

MappingMode mapping_mode_from_string(std::string_view s) {
  if (s == "mapped") return MappingMode::Mapped;
  if (s == "naive") return MappingMode::Naive;
  throw Error(ErrorCode::InvalidArgument, "unknown mapping mode", std::string(s));
}

std::int64_t now_millis() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

const Participant* GroupSession::participant(std::string_view agent_id) const noexcept {
  for (const auto& p : participants) {
    if (p.agent_id == agent_id) return &p;
  }
  return nullptr;
}

const ChatMessage* GroupSession::message(std::string_view message_id) const noexcept {
  for (const auto& m : transcript) {
    if (m.message_id == message_id) return &m;
  }
  return nullptr;
}

std::size_t GroupSession::agent_message_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(transcript.begin(), transcript.end(), [](const ChatMessage& m) {
    return m.author_kind != AuthorKind::Creator;
  }));
}

std::string GroupSession::display_name(const ChatMessage& m) const {
  if (m.author_kind == AuthorKind::Creator) return std::string(kCreatorDisplayName);
  if (const Participant* p = participant(m.author_id)) return p->display_name;
  return m.author_id;
}

// ---------------------------------------------------------------------------

GroupSession& SessionStore::create(const AgentRegistry& agents, const std::vector<std::string>& participant_ids,
                                   TurnPolicy policy, std::size_t max_turns, MappingMode mode) {
  const std::size_t required = policy == TurnPolicy::RoundRobin ? 2 : 1;
  if (participant_ids.size() < required) {
    throw Error(ErrorCode::TooFewParticipants, "session needs at least " + std::to_string(required) + " agents");
  }
  if (max_turns < 1) throw Error(ErrorCode::InvalidArgument, "max_turns must be >= 1");
  std::set<std::string> seen;
  GroupSession session;
  for (const auto& id : participant_ids) {
    if (!seen.insert(id).second) throw Error(ErrorCode::InvalidArgument, "duplicate participant", id);
    const AgentSpec* agent = agents.find(id);
    if (agent == nullptr) throw Error(ErrorCode::UnknownAgent, "unknown agent", id);
    session.participants.push_back({agent->id, agent->name, agent->kind, true});
  }
  session.id = ids_.next("session");
  session.turn_policy = policy;
  session.max_turns = max_turns;
  session.mapping_mode = mode;
  sessions_.push_back(std::move(session));
  return sessions_.back();
}

GroupSession& SessionStore::get(const std::string& id) {
  return const_cast<GroupSession&>(std::as_const(*this).get(id));
}

const GroupSession& SessionStore::get(const std::string& id) const {
  const GroupSession* s = find(id);
  if (s == nullptr) throw Error(ErrorCode::NotFound, "session not found", id);
  return *s;
}

const GroupSession* SessionStore::find(const std::string& id) const noexcept {
  for (const auto& s : sessions_) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

GroupSession* SessionStore::find_by_message(std::string_view message_id) noexcept {
  for (auto& s : sessions_) {
    if (s.message(message_id) != nullptr) return &s;
  }
  return nullptr;
}

void SessionStore::detach_agent(const std::string& agent_id) {
  for (auto& s : sessions_) {
    for (auto& p : s.participants) {
      if (p.agent_id == agent_id) p.active = false;
    }
  }
}

void SessionStore::restore(std::vector<GroupSession> sessions, IdSequence ids) {
  sessions_ = std::move(sessions);
  ids_ = std::move(ids);
}

// ---------------------------------------------------------------------------

namespace {

const ChatMessage* last_message_not_by(const GroupSession& session, std::string_view author_id) {
  for (auto it = session.transcript.rbegin(); it != session.transcript.rend(); ++it) {
    if (it->author_id != author_id) return &*it;
  }
  return nullptr;
}

void append_naive_view(const GroupSession& session, const AgentSpec& responder, std::vector<ChatTurn>& turns) {
  std::string others;
  for (const auto& p : session.participants) {
    if (p.agent_id == responder.id) continue;
    if (!others.empty()) others += ", ";
    others += p.display_name;
  }
  turns.push_back({Role::System, "You are " + responder.name + " in a group chat with " + others +
                                     ". Reply with your next message only."});
  std::string log;
  for (const auto& m : session.transcript) {
    if (!log.empty()) log += '\n';
    log += session.display_name(m) + ": " + m.content;
  }
  turns.push_back({Role::User, log.empty() ? "(The chat has not started yet.)" : log});
}

}  // namespace

MappedView map_history_view(const GroupSession& session, const std::string& responder_id,
                            const GroupChatContext& ctx) {
  if (session.participant(responder_id) == nullptr) {
    throw Error(ErrorCode::NotAParticipant, "responder is not a participant", responder_id);
  }
  const AgentSpec* agent = ctx.agents.find(responder_id);
  if (agent == nullptr) throw Error(ErrorCode::UnknownAgent, "responder agent no longer exists", responder_id);

  MappedView view;
  view.turns = compose_definition(*agent);

  if (agent->kind == AgentKind::ServiceAgent && agent->kb_id) {
    const KnowledgeBase* kb = ctx.knowledge.find(*agent->kb_id);
    if (kb == nullptr) throw Error(ErrorCode::NoKnowledgeBase, "agent knowledge base not found", *agent->kb_id);
    std::optional<std::string> query;
    if (ctx.options.retrieval_query == RetrievalQuery::LastOtherMessage) {
      if (const ChatMessage* m = last_message_not_by(session, responder_id)) query = m->content;
    } else if (!session.transcript.empty()) {
      std::string all;
      for (const auto& m : session.transcript) {
        if (!all.empty()) all += '\n';
        all += m.content;
      }
      query = std::move(all);
    }
    if (query) {
      GroundingTurn g = build_grounding(*kb, ctx.provider, *query, ctx.options.answer);
      view.turns.push_back(std::move(g.turn));
      view.retrieval_trace = std::move(g.trace);
      view.attributions = std::move(g.attributions);
      view.kb_id = kb->id;
    }
  }
  view.leading_turns = view.turns.size();

  if (session.mapping_mode == MappingMode::Naive) {
    append_naive_view(session, *agent, view.turns);
    return view;
  }

  std::vector<ChatTurn> mapped;
  for (const auto& m : session.transcript) {
    const bool own = m.author_id == responder_id;
    ChatTurn turn{own ? Role::Assistant : Role::User, own ? m.content : session.display_name(m) + ": " + m.content};
    if (!mapped.empty() && mapped.back().role == turn.role) {
      mapped.back().content += '\n';
      mapped.back().content += turn.content;
    } else {
      mapped.push_back(std::move(turn));
    }
  }
  view.turns.insert(view.turns.end(), std::make_move_iterator(mapped.begin()), std::make_move_iterator(mapped.end()));
  if (view.turns.back().role != Role::User) view.turns.push_back({Role::User, std::string(kContinueTurn)});
  return view;
}

std::vector<ChatTurn> map_history(const GroupSession& session, const std::string& responder_id,
                                  const GroupChatContext& ctx) {
  return map_history_view(session, responder_id, ctx).turns;
}

const ChatMessage& post_creator_message(GroupSession& session, std::string content) {
  if (session.status != SessionStatus::Open) throw Error(ErrorCode::SessionNotOpen, "session is not open", session.id);
  if (text::trim(content).empty()) throw Error(ErrorCode::InvalidArgument, "message content must be non-empty");
  ChatMessage m;
  m.message_id = session.id + "." + session.message_ids.next("msg");
  m.author_id = std::string(kCreatorAuthor);
  m.author_kind = AuthorKind::Creator;
  m.content = std::move(content);
  m.created_at = now_millis();
  session.transcript.push_back(std::move(m));
  return session.transcript.back();
}

const ChatMessage& respond(GroupSession& session, const std::string& responder_id, GroupChatContext& ctx) {
  if (session.status != SessionStatus::Open) throw Error(ErrorCode::SessionNotOpen, "session is not open", session.id);
  const Participant* participant = session.participant(responder_id);
  if (participant == nullptr) throw Error(ErrorCode::NotAParticipant, "responder is not a participant", responder_id);
  if (!participant->active) throw Error(ErrorCode::Conflict, "participant was deleted", responder_id);
  const AgentSpec& agent = ctx.agents.get(responder_id);

  RuleStateMap states = session.rule_states;
  std::optional<RulePipeline> pipeline;
  if (ctx.rules != nullptr && !agent.enabled_rules.empty()) {
    pipeline.emplace(*ctx.rules, agent.enabled_rules, session.id, states);
  }

  std::string content;
  MappedView view;
  bool from_rule = false;
  if (pipeline && !session.transcript.empty() && session.transcript.back().author_id != responder_id) {
    if (auto reply = pipeline->turn_advance(session.transcript.back().content)) {
      content = std::move(*reply);
      from_rule = true;
    }
  }
  if (!from_rule) {
    view = map_history_view(session, responder_id, ctx);
    if (auto gen = ctx.generators.find(responder_id); gen != ctx.generators.end()) {
      content = gen->second(agent, view.turns, ctx.provider);
    } else {
      std::vector<ChatTurn> prompt = view.turns;
      if (pipeline) pipeline->pre_prompt(prompt);
      content = ctx.provider.chat_complete(prompt, ctx.options.answer.params);
      if (pipeline) content = pipeline->post_response(std::move(content));
    }
  }
  if (text::trim(content).empty()) throw Error(ErrorCode::EmptyCompletion, "agent produced an empty reply", responder_id);

  ChatMessage m;
  IdSequence ids = session.message_ids;
  m.message_id = session.id + "." + ids.next("msg");
  m.author_id = responder_id;
  m.author_kind = agent.kind == AgentKind::ServiceAgent ? AuthorKind::ServiceAgent : AuthorKind::PersonaAgent;
  m.content = std::move(content);
  if (m.author_kind == AuthorKind::ServiceAgent) {
    m.attributions = std::move(view.attributions);
    m.kb_id = std::move(view.kb_id);
  }
  m.created_at = now_millis();

  session.message_ids = std::move(ids);
  session.rule_states = std::move(states);
  session.transcript.push_back(std::move(m));
  if (session.agent_message_count() >= session.max_turns) session.status = SessionStatus::Completed;
  return session.transcript.back();
}

const ChatMessage& next_turn(GroupSession& session, GroupChatContext& ctx) {
  if (session.turn_policy != TurnPolicy::RoundRobin) {
    throw Error(ErrorCode::InvalidArgument, "next_turn requires a round-robin session", session.id);
  }
  if (session.status != SessionStatus::Open) throw Error(ErrorCode::SessionNotOpen, "session is not open", session.id);
  const auto& speaker = session.participants[session.agent_message_count() % session.participants.size()];
  return respond(session, speaker.agent_id, ctx);
}

const std::vector<ChatMessage>& run_simulation(GroupSession& session, GroupChatContext& ctx) {
  if (session.turn_policy != TurnPolicy::RoundRobin) {
    throw Error(ErrorCode::InvalidArgument, "simulation requires a round-robin session", session.id);
  }
  while (session.status == SessionStatus::Open) {
    const ChatMessage& m = next_turn(session, ctx);
    if (text::trim(m.content) == kStopSentinel) session.status = SessionStatus::Stopped;
  }
  return session.transcript;
}

}  // namespace coforge
