#include <doctest.h>

#include <httplib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "coforge/api.hpp"
#include "coforge/error.hpp"
#include "coforge/serialization.hpp"
#include "coforge/server.hpp"
#include "coforge/syncloop.hpp"

using namespace coforge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("coforge-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary);
  out << data;
}

ApiResponse call(Api& api, std::string method, std::string path, json body = json::object()) {
  return api.handle({std::move(method), std::move(path), std::move(body)});
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

// A project holding every entity type, built through the public modules.
Project rich_project(Provider& provider) {
  Project p;
  auto& kb = p.knowledge.create("Library", kMockEmbeddingDimension);
  ingest_document(kb, provider, "Laptop policy", "Laptops may be borrowed for 4 hours.\f\nLate fee is 5 dollars.\n\nAsk staff.");
  const std::string kb_id = kb.id;
  AgentSpec svc;
  svc.name = "LibraryBot";
  svc.definition = "You are an AI assistant and not a human.";
  svc.exemplars = {{"hi", "Hello! How can I help?"}};
  svc.cooklist = validate_cooklist({{"role", "reference desk assistant"}, {"size", "2"}});
  svc.kb_id = kb_id;
  svc.enabled_rules = {"step_by_step"};
  const auto service = p.agents.create(svc).id;
  const auto& fixture = find_reference_persona("inexperienced")->spec;
  const auto persona = p.agents.create(build_persona_agent(fixture)).id;
  p.personas.push_back({p.persona_ids.next("persona"), fixture, persona});

  auto& s = p.sessions.create(p.agents, {persona, service}, TurnPolicy::RoundRobin, 4);
  MockProvider scripted({"How long can I keep a laptop?", "STEP 1: Borrow.\nSTEP 2: Return in 4 hours."});
  RuleRegistry rules = default_rule_registry();
  GroupChatContext ctx{p.agents, p.knowledge, scripted, &rules, {}, {}};
  next_turn(s, ctx);
  next_turn(s, ctx);
  const auto ex = edit_response(s, s.transcript[1].message_id, "Four hours.", "shorter");
  sync_to_knowledge(p.knowledge.get(kb_id), provider, ex);
  p.audit_configs[0].max_chars = 321;
  return p;
}

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("save then load gives a deep-equal project") {
    TempDir dir;
    MockProvider provider;
    const Project p = rich_project(provider);
    REQUIRE(p.sessions.list()[0].rule_states.contains("step_by_step"));
    const auto file = dir.path / "p.json";
    save_project(p, file);
    const Project q = load_project(file, default_rule_registry());
    CHECK(q == p);
    CHECK(q.sessions.list()[0].rule_states.at("step_by_step").payload["cursor"] == 1);
    CHECK(project_to_json(q) == project_to_json(p));
  }

  TEST_CASE("load failures") {
    TempDir dir;
    MockProvider provider;
    const auto file = dir.path / "p.json";
    save_project(rich_project(provider), file);
    const std::string good = read_file(file);

    write_file(file, good.substr(0, good.size() / 2));
    CHECK(code_of([&] { load_project(file, default_rule_registry()); }) == ErrorCode::IoError);

    auto j = json::parse(good);
    j["version"] = 99;
    write_file(file, j.dump());
    CHECK(code_of([&] { load_project(file, default_rule_registry()); }) == ErrorCode::VersionMismatch);

    j = json::parse(good);
    j["format"] = "something-else";
    write_file(file, j.dump());
    CHECK(code_of([&] { load_project(file, default_rule_registry()); }) == ErrorCode::VersionMismatch);

    j = json::parse(good);
    j["knowledge_bases"] = json::array();
    write_file(file, j.dump());
    try {
      load_project(file, default_rule_registry());
      FAIL("expected integrity violation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IntegrityViolation);
      CHECK(e.detail().find("kb-000001") != std::string::npos);
    }

    CHECK(code_of([&] { load_project(dir.path / "missing.json", default_rule_registry()); }) == ErrorCode::IoError);
    CHECK(code_of([&] { load_project(file, RuleRegistry{}); }) == ErrorCode::IntegrityViolation);
  }

  TEST_CASE("a truncated project file stops the service from starting") {
    TempDir dir;
    const auto file = dir.path / "p.json";
    write_file(file, R"({"format":"coforge-project","version":1,"agents":[)");
    ServiceConfig cfg;
    cfg.project_path = file;
    CHECK(code_of([&] { Api api(std::make_shared<MockProvider>(), cfg); }) == ErrorCode::IoError);
  }

  TEST_CASE("api: agents CRUD, persisted after every mutation") {
    TempDir dir;
    ServiceConfig cfg;
    cfg.project_path = dir.path / "p.json";
    Api api(std::make_shared<MockProvider>(), cfg);
    auto r = call(api, "POST", "/agents", {{"name", "LibraryBot"}, {"definition", "You are an AI assistant and not a human."}});
    REQUIRE(r.status == 201);
    const std::string id = r.body["id"];
    CHECK(load_project(*cfg.project_path, api.rules()) == api.snapshot());
    r = call(api, "GET", "/agents");
    REQUIRE(r.body.size() == 1);
    CHECK(r.body[0]["id"] == id);

    r = call(api, "PATCH", "/agents/" + id, {{"cooklist", {{"role", "desk"}}}});
    CHECK(r.status == 200);
    CHECK(r.body["cooklist"]["role"] == "desk");
    r = call(api, "PATCH", "/agents/" + id, {{"cooklist", {{"flavor", "x"}}}});
    CHECK(r.status == 422);
    CHECK(r.body["code"] == "unknown-facet");

    r = call(api, "POST", "/agents", {{"name", "x"}, {"definition", ""}});
    CHECK(r.status == 422);
    CHECK(r.body["code"] == "invalid-spec");
    CHECK(r.body.contains("message"));
    CHECK(r.body.contains("detail"));

    CHECK(call(api, "DELETE", "/agents/" + id).status == 200);
    CHECK(call(api, "DELETE", "/agents/" + id).status == 404);
    CHECK(call(api, "GET", "/nothing/here").status == 404);
    CHECK(load_project(*cfg.project_path, api.rules()) == api.snapshot());
  }

  TEST_CASE("api: rules listing and toggles") {
    Api api(std::make_shared<MockProvider>(), {});
    auto r = call(api, "GET", "/rules");
    REQUIRE(r.body.size() == 1);
    CHECK(r.body[0]["rule_id"] == "step_by_step");
    CHECK(r.body[0]["hooks"].size() == 3);
    const std::string id = call(api, "POST", "/agents", {{"name", "a"}, {"definition", "d"}}).body["id"];
    r = call(api, "POST", "/agents/" + id + "/rules/step_by_step/enable");
    CHECK(r.body["enabled_rules"] == json::array({"step_by_step"}));
    r = call(api, "POST", "/agents/" + id + "/rules/step_by_step/disable");
    CHECK(r.body["enabled_rules"].empty());
    r = call(api, "POST", "/agents/" + id + "/rules/nope/enable");
    CHECK(r.status == 404);
    CHECK(r.body["code"] == "unknown-rule");
  }

  TEST_CASE("api: turn with attributions, then edit and sync shows a curated chunk") {
    Api api(std::make_shared<MockProvider>(std::vector<std::string>{"Four hours."}), {});
    const std::string kb = call(api, "POST", "/kb", {{"name", "Library"}}).body["id"];
    auto r = call(api, "POST", "/kb/" + kb + "/docs",
                  {{"title", "Laptop policy"}, {"text", "Laptops may be borrowed for 4 hours.\n\nPrinting is free."}});
    REQUIRE(r.status == 201);
    CHECK(r.body["chunks_added"] == 2);
    const std::string agent =
        call(api, "POST", "/agents", {{"name", "Bot"}, {"definition", "You help."}, {"kb_id", kb}}).body["id"];
    const std::string session =
        call(api, "POST", "/sessions", {{"participants", {agent}}, {"turn_policy", "manual"}}).body["id"];
    r = call(api, "POST", "/sessions/" + session + "/turns", {{"content", "how long can I borrow a laptop"}});
    REQUIRE(r.status == 201);
    CHECK(r.body["message"]["content"] == "Four hours.");
    REQUIRE(r.body["message"]["attributions"].size() == 2);
    CHECK(r.body["message"]["attributions"][0]["doc_title"] == "Laptop policy");
    const std::string message_id = r.body["message"]["message_id"];

    r = call(api, "PATCH", "/messages/" + message_id, {{"corrected_text", "Up to 4 hours."}});
    REQUIRE(r.status == 200);
    CHECK(r.body["exchange"]["question"] == "how long can I borrow a laptop");
    r = call(api, "POST", "/kb/" + kb + "/sync", {{"message_id", message_id}});
    REQUIRE(r.status == 201);
    const std::string chunk_id = r.body["chunk_id"];
    r = call(api, "GET", "/kb/" + kb + "/chunks");
    const auto it = std::find_if(r.body.begin(), r.body.end(), [&](const json& c) { return c["id"] == chunk_id; });
    REQUIRE(it != r.body.end());
    CHECK((*it)["provenance"] == "curated");
    CHECK((*it)["text"] == "Q: how long can I borrow a laptop\nA: Up to 4 hours.");
    CHECK_FALSE(it->contains("embedding"));

    r = call(api, "POST", "/kb/" + kb + "/search", {{"query", "how long can I borrow a laptop"}, {"k", 1}});
    CHECK(r.body[0]["chunk_id"] == chunk_id);

    r = call(api, "GET", "/sessions/" + session + "/export");
    REQUIRE(r.raw.has_value());
    CHECK(std::count(r.raw->begin(), r.raw->end(), '\n') == 2);

    r = call(api, "POST", "/audit", {{"session_id", session}});
    CHECK(r.status == 200);
    CHECK(r.body["findings"].is_array());
  }

  TEST_CASE("api: failed turns leave the session unchanged") {
    auto provider = std::make_shared<MockProvider>();
    provider->fail_chat_on_call(1);
    Api api(provider, {});
    const std::string agent = call(api, "POST", "/agents", {{"name", "Bot"}, {"definition", "d"}}).body["id"];
    const std::string session =
        call(api, "POST", "/sessions", {{"participants", {agent}}, {"turn_policy", "manual"}}).body["id"];
    auto r = call(api, "POST", "/sessions/" + session + "/turns", {{"content", "hello"}});
    CHECK(r.status == 502);
    CHECK(r.body["code"] == "provider-unreachable");
    CHECK(call(api, "GET", "/sessions/" + session).body["transcript"].empty());
  }

  TEST_CASE("api: error status classes") {
    Api api(std::make_shared<MockProvider>(), {});
    CHECK(call(api, "GET", "/agents/agent-000404").status == 404);
    CHECK(call(api, "POST", "/sessions", {{"participants", json::array()}}).status == 422);
    CHECK(call(api, "POST", "/sessions", {{"participants", {"agent-000404", "agent-000405"}}}).status == 404);
    CHECK(call(api, "POST", "/kb", json::object()).status == 400);
    const std::string kb = call(api, "POST", "/kb", {{"name", "x"}}).body["id"];
    CHECK(call(api, "POST", "/kb/" + kb + "/docs", {{"title", "t"}, {"text", " "}}).status == 422);
    CHECK(http_status(ErrorCode::DocumentTooLarge) == 413);
    CHECK(http_status(ErrorCode::SessionNotOpen) == 409);
    CHECK(http_status(ErrorCode::IntegrityViolation) == 500);
  }

  TEST_CASE("api: personas, simulation run and comparison") {
    Api api(std::make_shared<MockProvider>(), {});
    const std::string service = call(api, "POST", "/agents", {{"name", "Bot"}, {"definition", "d"}}).body["id"];
    auto r = call(api, "POST", "/personas", {{"fixture", "inexperienced"}});
    REQUIRE(r.status == 201);
    const std::string persona_agent = r.body["agent_id"];
    CHECK(r.body["agent"]["kind"] == "persona_agent");
    CHECK(call(api, "GET", "/personas/fixtures").body.size() == 5);
    r = call(api, "POST", "/personas", {{"fixture", "experienced"}, {"strategy", "chained"}});
    CHECK(r.status == 201);
    const std::string chained_agent = r.body["agent_id"];

    const std::string session =
        call(api, "POST", "/sessions", {{"participants", {persona_agent, service}}, {"max_turns", 4}}).body["id"];
    r = call(api, "POST", "/sessions/" + session + "/run");
    CHECK(r.status == 200);
    CHECK(r.body["status"] == "completed");
    CHECK(r.body["transcript"].size() == 4);

    const std::string s2 =
        call(api, "POST", "/sessions", {{"participants", {chained_agent, service}}, {"max_turns", 2}}).body["id"];
    CHECK(call(api, "POST", "/sessions/" + s2 + "/run").status == 200);

    r = call(api, "POST", "/compare",
             {{"service_agent_id", service},
              {"turns", 2},
              {"arms", {{{"script", {"a", "b"}}}, {{"persona", "inexperienced"}, {"script", {"abc", "b"}}}}}});
    REQUIRE(r.status == 200);
    const auto& arms = r.body["arms"];
    CHECK(arms[1]["delta_chars_vs_first"].get<long long>() ==
          arms[1]["total_chars"].get<long long>() - arms[0]["total_chars"].get<long long>());
    CHECK(arms[0]["persona"].is_null());
    CHECK(arms[1]["persona"]["name"] == "A");
    CHECK(call(api, "POST", "/compare", {{"service_agent_id", service}, {"arms", {{{"script", {"a"}}}}}}).status == 400);
  }

  TEST_CASE("api: audit config replace and validation") {
    Api api(std::make_shared<MockProvider>(), {});
    auto configs = call(api, "GET", "/audit/config").body;
    REQUIRE(configs.size() == 6);
    configs[0]["max_chars"] = 10;
    CHECK(call(api, "PUT", "/audit/config", configs).status == 200);
    const std::string jsonl =
        R"({"message_id":"m1","author_kind":"service_agent","content":"this is a long reply","attributions":[]})" "\n";
    auto r = call(api, "POST", "/audit", {{"transcript", jsonl}});
    REQUIRE(r.status == 200);
    CHECK(r.body["findings"].size() == 1);
    configs[0]["max_chars"] = 0;
    CHECK(call(api, "PUT", "/audit/config", configs).status == 400);
    CHECK(call(api, "GET", "/project/validate").body["valid"] == true);
  }

  TEST_CASE("http server exposes the api and reports port conflicts") {
    Api api(std::make_shared<MockProvider>(), {});
    HttpServer server(api);
    const int port = server.bind("127.0.0.1", 0);
    std::thread t([&] { server.listen(); });
    httplib::Client client("127.0.0.1", port);
    for (int i = 0; i < 100 && !client.Get("/rules"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    auto res = client.Post("/agents", R"({"name":"LibraryBot","definition":"d"})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    res = client.Get("/agents");
    REQUIRE(res);
    CHECK(json::parse(res->body).size() == 1);
    res = client.Post("/agents", "{not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(json::parse(res->body)["code"] == "invalid-argument");

    Api other(std::make_shared<MockProvider>(), {});
    HttpServer clash(other);
    CHECK(code_of([&] { clash.bind("127.0.0.1", port); }) == ErrorCode::IoError);
    server.stop();
    t.join();
  }

  TEST_CASE("cli subcommands go through the same handlers") {
    TempDir dir;
    const auto project = dir.path / "p.json";
    const std::string cli = std::string(COFORGE_CLI) + " --project " + project.string() + " ";
    auto run = [](const std::string& cmd) {
      std::string out;
      FILE* pipe = ::popen(cmd.c_str(), "r");
      REQUIRE(pipe != nullptr);
      char buf[4096];
      std::size_t n;
      while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
      const int status = ::pclose(pipe);
      return std::make_pair(status, out);
    };
    auto [status, out] = run(cli + "agent create --json '{\"name\":\"Bot\",\"definition\":\"d\"}'");
    REQUIRE(status == 0);
    const auto created = json::parse(out);

    ServiceConfig cfg;
    cfg.project_path = project;
    Api api(std::make_shared<MockProvider>(), cfg);
    const auto listed = call(api, "GET", "/agents").body;
    REQUIRE(listed.size() == 1);
    CHECK(listed[0] == created);

    std::tie(status, out) = run(cli + "agent list");
    CHECK(json::parse(out) == listed);
    std::tie(status, out) = run(cli + "agent get agent-000404 2>/dev/null");
    CHECK(status != 0);
  }
}
