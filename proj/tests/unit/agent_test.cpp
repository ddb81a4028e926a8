#include <doctest.h>

#include <random>

#include "coforge/agent.hpp"
#include "coforge/error.hpp"

using namespace coforge;

namespace {

AgentSpec library_bot() {
  AgentSpec s;
  s.name = "LibraryBot";
  s.definition = "You are an AI assistant and not a human. You speak patiently and friendly.";
  return s;
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

}  // namespace

TEST_SUITE("agentdef") {
  TEST_CASE("create assigns a fresh id and keeps the payload") {
    AgentRegistry reg;
    const AgentSpec created = reg.create(library_bot());
    CHECK_FALSE(created.id.empty());
    AgentSpec expected = library_bot();
    expected.id = created.id;
    CHECK(created == expected);
    CHECK(reg.get(created.id) == created);
  }

  TEST_CASE("invalid specs name the violated invariant") {
    AgentRegistry reg;
    AgentSpec s = library_bot();
    s.definition.clear();
    CHECK(code_of([&] { reg.create(s); }) == ErrorCode::InvalidSpec);
    s = library_bot();
    s.name.clear();
    CHECK(code_of([&] { reg.create(s); }) == ErrorCode::InvalidSpec);
    s = library_bot();
    s.exemplars = {{"q", ""}};
    CHECK(code_of([&] { reg.create(s); }) == ErrorCode::InvalidSpec);
    CHECK(reg.list().empty());
  }

  TEST_CASE("identical payloads produce distinct ids") {
    AgentRegistry reg;
    const auto a = reg.create(library_bot());
    const auto b = reg.create(library_bot());
    CHECK(a.id != b.id);
  }

  TEST_CASE("update is read-your-writes through compose_definition") {
    AgentRegistry reg;
    const auto a = reg.create(library_bot());
    AgentPatch patch;
    patch.definition = "You answer questions about the scanner.";
    reg.update(a.id, patch);
    CHECK(compose_definition(reg.get(a.id))[0].content == "You answer questions about the scanner.");
    AgentPatch bad;
    bad.definition = "";
    CHECK(code_of([&] { reg.update(a.id, bad); }) == ErrorCode::InvalidSpec);
    CHECK(reg.get(a.id).definition == "You answer questions about the scanner.");
  }

  TEST_CASE("unknown ids are not-found") {
    AgentRegistry reg;
    CHECK(code_of([&] { reg.remove("agent-999999"); }) == ErrorCode::NotFound);
    CHECK(code_of([&] { reg.update("agent-999999", {}); }) == ErrorCode::NotFound);
    CHECK(code_of([&] { (void)reg.get("nope"); }) == ErrorCode::NotFound);
  }

  TEST_CASE("list keeps creation order") {
    AgentRegistry reg;
    std::vector<std::string> ids;
    for (const char* n : {"c", "a", "b"}) {
      AgentSpec s = library_bot();
      s.name = n;
      ids.push_back(reg.create(s).id);
    }
    REQUIRE(reg.list().size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(reg.list()[i].id == ids[i]);
  }

  TEST_CASE("compose_definition builds system then exemplar pairs") {
    AgentSpec s;
    s.name = "x";
    s.definition = "D";
    s.exemplars = {{"q1", "a1"}};
    CHECK(compose_definition(s) ==
          std::vector<ChatTurn>{{Role::System, "D"}, {Role::User, "q1"}, {Role::Assistant, "a1"}});
    s.exemplars.clear();
    CHECK(compose_definition(s) == std::vector<ChatTurn>{{Role::System, "D"}});
    s.exemplars = {{"q1", "a1"}, {"q2", "a2"}};
    const auto turns = compose_definition(s);
    REQUIRE(turns.size() == 5);
    CHECK(turns[1].role == Role::User);
    CHECK(turns[2].role == Role::Assistant);
    CHECK(turns[3] == ChatTurn{Role::User, "q2"});
    CHECK(turns[4] == ChatTurn{Role::Assistant, "a2"});
  }

  TEST_CASE("property: compose_definition length and order") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
      AgentSpec s;
      s.name = "n";
      s.definition = "def " + std::to_string(trial);
      const int k = static_cast<int>(rng() % 6);
      for (int i = 0; i < k; ++i) s.exemplars.push_back({"u" + std::to_string(i), "a" + std::to_string(i)});
      const auto turns = compose_definition(s);
      REQUIRE(turns.size() == 1 + 2 * static_cast<std::size_t>(k));
      CHECK(turns[0].role == Role::System);
      for (int i = 0; i < k; ++i) {
        CHECK(turns[1 + 2 * i] == ChatTurn{Role::User, s.exemplars[i].user_text});
        CHECK(turns[2 + 2 * i] == ChatTurn{Role::Assistant, s.exemplars[i].assistant_text});
      }
      CHECK(compose_definition(s) == turns);
    }
  }

  TEST_CASE("cooklist accepts subsets of the ten facets") {
    CHECK(validate_cooklist({{"role", "reference desk assistant"}}).get("role") == "reference desk assistant");
    CHECK(validate_cooklist({}).values.empty());
    std::map<std::string, std::string> all;
    for (auto k : kCooklistKeys) all[std::string(k)] = "v";
    CHECK(validate_cooklist(all).values.size() == 10);
  }

  TEST_CASE("cooklist rejects unknown facets by name") {
    try {
      validate_cooklist({{"flavor", "x"}});
      FAIL("expected unknown-facet");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownFacet);
      CHECK(e.detail() == "flavor");
    }
  }

  TEST_CASE("property: every key outside the ten is rejected") {
    std::mt19937 rng(3);
    const std::string alphabet = "abcdefghijklmnopqrstuvwxyz_";
    int rejected = 0;
    for (int i = 0; i < 500; ++i) {
      std::string key;
      const std::size_t len = 1 + rng() % 14;
      for (std::size_t j = 0; j < len; ++j) key += alphabet[rng() % alphabet.size()];
      if (is_cooklist_key(key)) continue;
      CHECK_THROWS_AS(validate_cooklist({{"role", "x"}, {key, "y"}}), Error);
      ++rejected;
    }
    CHECK(rejected > 400);
    CHECK_THROWS_AS(validate_cooklist({{"Role", "x"}}), Error);
  }

  TEST_CASE("cooklist facets are never injected into prompts") {
    AgentSpec s = library_bot();
    s.cooklist = validate_cooklist({{"humanness", "FACET-MARKER"}});
    for (const auto& t : compose_definition(s)) CHECK(t.content.find("FACET-MARKER") == std::string::npos);
  }

  TEST_CASE("persona agents need no knowledge base") {
    AgentSpec s = library_bot();
    s.kind = AgentKind::PersonaAgent;
    CHECK_NOTHROW(s.validate());
  }
}
