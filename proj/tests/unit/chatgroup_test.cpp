#include <doctest.h>

#include <random>

#include "../oracles.hpp"
#include "coforge/chatgroup.hpp"
#include "coforge/error.hpp"

using namespace coforge;

namespace {

struct World {
  AgentRegistry agents;
  KnowledgeStore knowledge;
  SessionStore sessions;
  RuleRegistry rules = default_rule_registry();
  MockProvider provider;

  std::string add(const std::string& name, AgentKind kind = AgentKind::PersonaAgent,
                  std::optional<std::string> kb = std::nullopt) {
    AgentSpec a;
    a.name = name;
    a.kind = kind;
    a.definition = "You are " + name + ".";
    a.kb_id = std::move(kb);
    return agents.create(a).id;
  }

  GroupChatContext ctx() { return GroupChatContext{agents, knowledge, provider, &rules, {}, {}}; }
};

ChatMessage said(const std::string& author, const std::string& content, std::size_t n) {
  ChatMessage m;
  m.message_id = "m" + std::to_string(n);
  m.author_id = author;
  m.author_kind = author == "creator" ? AuthorKind::Creator : AuthorKind::PersonaAgent;
  m.content = content;
  return m;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

std::vector<ChatTurn> tail(const std::vector<ChatTurn>& v, std::size_t from) {
  return {v.begin() + static_cast<std::ptrdiff_t>(from), v.end()};
}

}  // namespace

TEST_SUITE("chatgroup") {
  TEST_CASE("session creation rules") {
    World w;
    const auto a = w.add("A"), b = w.add("B", AgentKind::ServiceAgent);
    const auto& s = w.sessions.create(w.agents, {a, b}, TurnPolicy::RoundRobin);
    CHECK(s.status == SessionStatus::Open);
    CHECK(s.transcript.empty());
    CHECK(s.max_turns == 10);
    CHECK(code_of([&] { w.sessions.create(w.agents, {a}, TurnPolicy::RoundRobin); }) ==
          ErrorCode::TooFewParticipants);
    CHECK(code_of([&] { w.sessions.create(w.agents, {}, TurnPolicy::Manual); }) == ErrorCode::TooFewParticipants);
    CHECK_NOTHROW(w.sessions.create(w.agents, {b}, TurnPolicy::Manual));
    CHECK(code_of([&] { w.sessions.create(w.agents, {a, b}, TurnPolicy::RoundRobin, 0); }) ==
          ErrorCode::InvalidArgument);
    CHECK(code_of([&] { w.sessions.create(w.agents, {a, "agent-999999"}, TurnPolicy::RoundRobin); }) ==
          ErrorCode::UnknownAgent);
  }

  TEST_CASE("mapping: two agents from each side") {
    World w;
    const auto a = w.add("A"), b = w.add("B");
    auto& s = w.sessions.create(w.agents, {a, b}, TurnPolicy::RoundRobin);
    s.transcript = {said(a, "hi", 1), said(b, "hello", 2), said(a, "hours?", 3)};
    auto ctx = w.ctx();
    CHECK(map_history(s, b, ctx) == std::vector<ChatTurn>{{Role::System, "You are B."},
                                                          {Role::User, "A: hi"},
                                                          {Role::Assistant, "hello"},
                                                          {Role::User, "A: hours?"}});
    CHECK(map_history(s, a, ctx) == std::vector<ChatTurn>{{Role::System, "You are A."},
                                                          {Role::Assistant, "hi"},
                                                          {Role::User, "B: hello"},
                                                          {Role::Assistant, "hours?"},
                                                          {Role::User, "(continue)"}});
  }

  TEST_CASE("mapping: three parties merge adjacent others") {
    World w;
    const auto a = w.add("A"), b = w.add("B"), c = w.add("C");
    auto& s = w.sessions.create(w.agents, {a, b, c}, TurnPolicy::RoundRobin);
    s.transcript = {said(a, "one", 1), said(b, "two", 2), said(c, "three", 3), said("creator", "four", 4)};
    auto ctx = w.ctx();
    const auto view = map_history_view(s, c, ctx);
    CHECK(tail(view.turns, view.leading_turns) ==
          std::vector<ChatTurn>{{Role::User, "A: one\nB: two"}, {Role::Assistant, "three"}, {Role::User, "Creator: four"}});
  }

  TEST_CASE("mapping: empty transcript still ends on a user turn") {
    World w;
    const auto a = w.add("A"), b = w.add("B");
    auto& s = w.sessions.create(w.agents, {a, b}, TurnPolicy::RoundRobin);
    auto ctx = w.ctx();
    CHECK(map_history(s, a, ctx) ==
          std::vector<ChatTurn>{{Role::System, "You are A."}, {Role::User, "(continue)"}});
  }

  TEST_CASE("mapping: non-participant responder") {
    World w;
    const auto a = w.add("A"), b = w.add("B"), c = w.add("C");
    auto& s = w.sessions.create(w.agents, {a, b}, TurnPolicy::RoundRobin);
    auto ctx = w.ctx();
    CHECK(code_of([&] { map_history(s, c, ctx); }) == ErrorCode::NotAParticipant);
  }

  TEST_CASE("mapping: service agent gets a grounding turn from the last other message") {
    World w;
    auto& kb = w.knowledge.create("kb", kMockEmbeddingDimension);
    ingest_document(kb, w.provider, "Laptop policy", "Laptops may be borrowed for 4 hours.\n\nPrinting is free.");
    const auto kb_id = kb.id;
    const auto persona = w.add("Pat");
    const auto service = w.add("Bot", AgentKind::ServiceAgent, kb_id);
    auto& s = w.sessions.create(w.agents, {persona, service}, TurnPolicy::RoundRobin);
    s.transcript = {said(persona, "can I borrow a laptop", 1)};
    auto ctx = w.ctx();
    const auto view = map_history_view(s, service, ctx);
    REQUIRE(view.leading_turns == 2);
    CHECK(view.turns[1].role == Role::System);
    CHECK(view.turns[1].content.rfind("Answer only from the following context.\n[SOURCE Laptop policy l.1]\n"
                                      "Laptops may be borrowed for 4 hours.",
                                      0) == 0);
    CHECK(view.kb_id == kb_id);
    CHECK(view.attributions.size() == 2);
    CHECK(view.turns.back() == ChatTurn{Role::User, "Pat: can I borrow a laptop"});
  }

  TEST_CASE("naive baseline flattens the transcript into one user turn") {
    World w;
    const auto a = w.add("A"), b = w.add("B");
    auto& s = w.sessions.create(w.agents, {a, b}, TurnPolicy::RoundRobin, 10, MappingMode::Naive);
    s.transcript = {said(a, "hi", 1), said(b, "hello", 2)};
    auto ctx = w.ctx();
    const auto turns = map_history(s, b, ctx);
    REQUIRE(turns.size() == 3);
    CHECK(turns[1].role == Role::System);
    CHECK(turns[2] == ChatTurn{Role::User, "A: hi\nB: hello"});
  }

  TEST_CASE("round robin: first speaker, max turns, completion") {
    World w;
    const auto a = w.add("A"), b = w.add("B");
    auto& s = w.sessions.create(w.agents, {a, b}, TurnPolicy::RoundRobin, 4);
    auto ctx = w.ctx();
    CHECK(next_turn(s, ctx).author_id == a);
    CHECK(next_turn(s, ctx).author_id == b);
    next_turn(s, ctx);
    next_turn(s, ctx);
    CHECK(s.transcript.size() == 4);
    CHECK(s.status == SessionStatus::Completed);
    CHECK(code_of([&] { next_turn(s, ctx); }) == ErrorCode::SessionNotOpen);
  }

  TEST_CASE("provider fault on turn three leaves two messages and an open session") {
    World w;
    const auto a = w.add("A"), b = w.add("B");
    auto& s = w.sessions.create(w.agents, {a, b}, TurnPolicy::RoundRobin, 10);
    w.provider.fail_chat_on_call(3);
    auto ctx = w.ctx();
    next_turn(s, ctx);
    next_turn(s, ctx);
    const auto ids = s.message_ids;
    CHECK(code_of([&] { next_turn(s, ctx); }) == ErrorCode::ProviderUnreachable);
    CHECK(s.transcript.size() == 2);
    CHECK(s.status == SessionStatus::Open);
    CHECK(s.message_ids == ids);
  }

  TEST_CASE("empty completions are rejected without appending") {
    World w;
    const auto a = w.add("A"), b = w.add("B");
    auto& s = w.sessions.create(w.agents, {a, b}, TurnPolicy::RoundRobin);
    w.provider.push_reply("   ");
    auto ctx = w.ctx();
    CHECK(code_of([&] { next_turn(s, ctx); }) == ErrorCode::EmptyCompletion);
    CHECK(s.transcript.empty());
  }

  TEST_CASE("simulation: scripted alternation and stop sentinel") {
    {
      World w;
      const auto a = w.add("A"), b = w.add("B");
      auto& s = w.sessions.create(w.agents, {a, b}, TurnPolicy::RoundRobin, 4);
      for (const char* r : {"q1", "a1", "q2", "a2"}) w.provider.push_reply(r);
      auto ctx = w.ctx();
      const auto& t = run_simulation(s, ctx);
      REQUIRE(t.size() == 4);
      CHECK(t[0].content == "q1");
      CHECK(t[3].content == "a2");
      CHECK(t[0].author_id == a);
      CHECK(t[1].author_id == b);
      CHECK(s.status == SessionStatus::Completed);
    }
    {
      World w;
      const auto a = w.add("A"), b = w.add("B");
      auto& s = w.sessions.create(w.agents, {a, b}, TurnPolicy::RoundRobin, 10);
      w.provider.push_reply("q1");
      w.provider.push_reply(" [DONE] ");
      auto ctx = w.ctx();
      CHECK(run_simulation(s, ctx).size() == 2);
      CHECK(s.status == SessionStatus::Stopped);
    }
  }

  TEST_CASE("simulation: service answers carry attributions every turn") {
    World w;
    auto& kb = w.knowledge.create("kb", kMockEmbeddingDimension);
    ingest_document(kb, w.provider, "Laptop policy",
                    "Laptops may be borrowed for 4 hours.\n\nLate laptops cost 5 dollars per hour.");
    const auto kb_id = kb.id;
    const auto persona = w.add("Pat");
    const auto service = w.add("Bot", AgentKind::ServiceAgent, kb_id);
    auto& s = w.sessions.create(w.agents, {persona, service}, TurnPolicy::RoundRobin, 6);
    for (const char* r : {"How long can I borrow a laptop?", "Four hours.", "What if I am late?", "Five dollars per hour.",
                          "Thanks!", "You are welcome."}) {
      w.provider.push_reply(r);
    }
    auto ctx = w.ctx();
    run_simulation(s, ctx);
    REQUIRE(s.transcript.size() == 6);
    for (const auto& m : s.transcript) {
      if (m.author_id == service) {
        CHECK(m.author_kind == AuthorKind::ServiceAgent);
        CHECK_FALSE(m.attributions.empty());
        CHECK(m.kb_id == kb_id);
      } else {
        CHECK(m.attributions.empty());
      }
    }
  }

  TEST_CASE("creator messages and manual responders") {
    World w;
    const auto b = w.add("B", AgentKind::ServiceAgent);
    auto& s = w.sessions.create(w.agents, {b}, TurnPolicy::Manual);
    post_creator_message(s, "hello?");
    auto ctx = w.ctx();
    const auto& reply = respond(s, b, ctx);
    CHECK(reply.content == "ECHO:Creator: hello?");
    CHECK(s.transcript[0].message_id == s.id + ".msg-000001");
    CHECK(reply.message_id == s.id + ".msg-000002");
    CHECK(code_of([&] { post_creator_message(s, " "); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { next_turn(s, ctx); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("deleted participants stay in the transcript but cannot speak") {
    World w;
    const auto a = w.add("A"), b = w.add("B");
    auto& s = w.sessions.create(w.agents, {a, b}, TurnPolicy::RoundRobin);
    auto ctx = w.ctx();
    next_turn(s, ctx);
    w.sessions.detach_agent(a);
    CHECK_FALSE(s.participants[0].active);
    CHECK(s.transcript.size() == 1);
    CHECK(code_of([&] { respond(s, a, ctx); }) == ErrorCode::Conflict);
  }

  TEST_CASE("step-by-step rule inside a session, persisted in rule_states") {
    World w;
    const auto persona = w.add("Pat");
    AgentSpec svc;
    svc.name = "Bot";
    svc.definition = "You explain the scanner.";
    svc.enabled_rules = {"step_by_step"};
    const auto service = w.agents.create(svc).id;
    auto& s = w.sessions.create(w.agents, {persona, service}, TurnPolicy::RoundRobin, 20);
    for (const char* r : {"How do I scan?", "STEP 1: Open lid.\nSTEP 2: Press scan.", "done", "what is a lid?",
                          "The top cover.", "done", "done"}) {
      w.provider.push_reply(r);
    }
    auto ctx = w.ctx();
    std::vector<std::string> service_said;
    for (int i = 0; i < 8; ++i) {
      const auto& m = next_turn(s, ctx);
      if (m.author_id == service) service_said.push_back(m.content);
    }
    CHECK(service_said == std::vector<std::string>{"Open lid.\n(Reply 'done' for the next step.)",
                                                   "Press scan.\n(Reply 'done' for the next step.)",
                                                   "The top cover.", "All steps are complete."});
    CHECK(s.rule_states.empty());
  }

  TEST_CASE("property: mapping invariants over random transcripts") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
      World w;
      const std::size_t n = 2 + rng() % 3;
      std::vector<std::string> ids;
      for (std::size_t i = 0; i < n; ++i) ids.push_back(w.add("P" + std::to_string(i)));
      auto& s = w.sessions.create(w.agents, ids, TurnPolicy::RoundRobin);
      const std::size_t len = rng() % 15;
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t who = rng() % (n + 1);
        s.transcript.push_back(said(who == n ? std::string("creator") : ids[who], oracle::random_sentence(rng), i));
      }
      auto ctx = w.ctx();
      for (const auto& responder : ids) {
        const auto view = map_history_view(s, responder, ctx);
        const auto body = tail(view.turns, view.leading_turns);
        const auto want = oracle::expected_transcript_turns(s, responder);
        REQUIRE(body.size() == want.size());
        for (std::size_t i = 0; i < body.size(); ++i) {
          CHECK(to_string(body[i].role) == want[i].role);
          CHECK(body[i].content == want[i].content);
        }
        for (std::size_t i = 1; i < body.size(); ++i) CHECK(body[i].role != body[i - 1].role);
      }
    }
  }
}
