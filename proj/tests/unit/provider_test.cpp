#include <doctest.h>

#include <cstdlib>
#include <random>
#include <thread>

#include "../oracles.hpp"
#include "coforge/error.hpp"
#include "coforge/provider.hpp"

using namespace coforge;

TEST_SUITE("provider") {
  TEST_CASE("scripted replies are returned in order") {
    MockProvider p({"Hello patron", "second"});
    const std::vector<ChatTurn> turns = {{Role::System, "You are a bot."}, {Role::User, "hi"}};
    CHECK(p.chat_complete(turns, {}) == "Hello patron");
    CHECK(p.chat_complete(turns, {}) == "second");
    CHECK(p.remaining_script() == 0);
  }

  TEST_CASE("exhausted script falls back to echo of the last user turn") {
    MockProvider p;
    const std::vector<ChatTurn> turns = {{Role::User, "first"}, {Role::Assistant, "x"}, {Role::User, "abc"}};
    CHECK(p.chat_complete(turns, {}) == "ECHO:abc");
  }

  TEST_CASE("chat_complete leaves its input untouched and logs the call") {
    MockProvider p;
    const std::vector<ChatTurn> turns = {{Role::System, "s"}, {Role::User, "u"}};
    const auto copy = turns;
    p.chat_complete(turns, {});
    CHECK(turns == copy);
    REQUIRE(p.chat_log().size() == 1);
    CHECK(p.chat_log()[0] == turns);
    CHECK(p.chat_calls() == 1);
  }

  TEST_CASE("turn and parameter validation") {
    MockProvider p;
    CHECK_THROWS_AS(p.chat_complete(std::vector<ChatTurn>{}, {}), Error);
    CHECK_THROWS_AS(p.chat_complete(std::vector<ChatTurn>{{Role::User, ""}}, {}), Error);
    CHECK_NOTHROW(p.chat_complete(std::vector<ChatTurn>{{Role::System, ""}, {Role::User, "x"}}, {}));
    GenParams bad;
    bad.temperature = 2.5;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = {};
    bad.max_output_tokens = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = {};
    bad.stop_sequences = {"a", "b", "c", "d", "e"};
    CHECK_THROWS_AS(bad.validate(), Error);
  }

  TEST_CASE("fault injection throws provider-unreachable without consuming the script") {
    MockProvider p({"one", "two"});
    p.fail_chat_on_call(1);
    const std::vector<ChatTurn> turns = {{Role::User, "q"}};
    try {
      p.chat_complete(turns, {});
      FAIL("expected a fault");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ProviderUnreachable);
    }
    CHECK(p.chat_complete(turns, {}) == "one");
    p.fail_embed_on_call(2);
    CHECK_NOTHROW(p.embed_text("a"));
    CHECK_THROWS_AS(p.embed_text("b"), Error);
  }

  TEST_CASE("empty text embeds to the zero vector of dimension 64") {
    const auto v = mock_embed("");
    CHECK(v.dimension() == 64);
    CHECK(v.is_zero());
    CHECK(mock_embed("--- !!").is_zero());
    CHECK(cosine(v, mock_embed("book")) == 0.0);
    CHECK(cosine(v, v) == 0.0);
  }

  TEST_CASE("bag-of-words order symmetry") {
    CHECK(cosine(mock_embed("book return"), mock_embed("return book")) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mock_embed("Book, RETURN") == mock_embed("return book"));
  }

  TEST_CASE("embedding matches the independent hash-embed oracle component-wise") {
    for (const char* text : {"library card", "library hours", "Renew 3 books online!", "caf\xC3\xA9 au lait"}) {
      const auto lib = mock_embed(text);
      const auto ref = oracle::embed(text);
      REQUIRE(lib.dimension() == ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(lib.components[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
    const double lib = cosine(mock_embed("library card"), mock_embed("library hours"));
    const double ref = oracle::cosine(oracle::embed("library card"), oracle::embed("library hours"));
    CHECK(lib == doctest::Approx(ref).epsilon(1e-12));
  }

  TEST_CASE("FNV-1a known vectors") {
    CHECK(fnv1a64("") == 14695981039346656037ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  }

  TEST_CASE("property: non-zero embeddings are unit length and self-cosine 1") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
      const auto text = oracle::random_sentence(rng, 0, 15);
      const auto a = mock_embed(text);
      const auto b = mock_embed(text);
      CHECK(a == b);
      if (a.is_zero()) continue;
      CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(cosine(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("concurrent callers consume the script exactly once each") {
    std::vector<std::string> script;
    for (int i = 0; i < 400; ++i) script.push_back("r" + std::to_string(i));
    MockProvider p(script);
    std::vector<std::vector<std::string>> got(4);
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
      threads.emplace_back([&, t] {
        const std::vector<ChatTurn> turns = {{Role::User, "q"}};
        for (int i = 0; i < 100; ++i) got[t].push_back(p.chat_complete(turns, {}));
      });
    }
    for (auto& th : threads) th.join();
    std::set<std::string> all;
    for (const auto& g : got) all.insert(g.begin(), g.end());
    CHECK(all.size() == 400);
    CHECK(p.chat_calls() == 400);
  }

  TEST_CASE("remote config reads the API key from the environment") {
    ::setenv("AGENT_COFORGE_API_KEY", "sk-test", 1);
    CHECK(RemoteConfig::from_environment().api_key == "sk-test");
    RemoteConfig explicit_key;
    explicit_key.api_key = "mine";
    CHECK(RemoteConfig::from_environment(explicit_key).api_key == "mine");
    ::unsetenv("AGENT_COFORGE_API_KEY");
  }
}
