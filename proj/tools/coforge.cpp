// coforge: command-line front end. Every subcommand builds one API request and
// runs it through the same handler the HTTP server uses.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "coforge/api.hpp"
#include "coforge/provider.hpp"
#include "coforge/server.hpp"

namespace {

using nlohmann::json;

struct GlobalOptions {
  std::string provider = "mock";
  std::string project;
  std::string mock_script;
  std::string base_url;
  std::string chat_model;
  std::string embedding_model;
  std::size_t embedding_dimension = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw coforge::Error(coforge::ErrorCode::IoError, "cannot read file", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json json_arg(const std::string& inline_json, const std::string& file) {
  if (!file.empty()) return json::parse(read_file(file));
  if (!inline_json.empty()) return json::parse(inline_json);
  return json::object();
}

std::shared_ptr<coforge::Provider> make_provider(const GlobalOptions& g) {
  if (g.provider == "remote") {
    coforge::RemoteConfig cfg;
    if (!g.base_url.empty()) cfg.base_url = g.base_url;
    if (!g.chat_model.empty()) cfg.chat_model = g.chat_model;
    if (!g.embedding_model.empty()) cfg.embedding_model = g.embedding_model;
    if (g.embedding_dimension != 0) cfg.embedding_dimension = g.embedding_dimension;
    return std::make_shared<coforge::RemoteProvider>(coforge::RemoteConfig::from_environment(cfg));
  }
  std::vector<std::string> script;
  if (!g.mock_script.empty()) script = json::parse(read_file(g.mock_script)).get<std::vector<std::string>>();
  return std::make_shared<coforge::MockProvider>(std::move(script));
}

coforge::ServiceConfig service_config(const GlobalOptions& g) {
  coforge::ServiceConfig cfg;
  if (!g.project.empty()) cfg.project_path = g.project;
  return cfg;
}

int emit(const coforge::ApiResponse& r) {
  if (r.status >= 400) {
    std::cerr << r.body.dump(2) << "\n";
    return 1;
  }
  if (r.raw) {
    std::cout << *r.raw;
  } else {
    std::cout << r.body.dump(2) << "\n";
  }
  return 0;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

coforge::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coforge: build, test and audit library service agents"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--provider", g.provider, "mock or remote")->check(CLI::IsMember({"mock", "remote"}));
  app.add_option("--project", g.project, "project file (created on first mutation)");
  app.add_option("--mock-script", g.mock_script, "JSON array of scripted mock replies");
  app.add_option("--base-url", g.base_url, "remote provider base URL");
  app.add_option("--chat-model", g.chat_model, "remote chat model");
  app.add_option("--embedding-model", g.embedding_model, "remote embedding model");
  app.add_option("--embedding-dimension", g.embedding_dimension, "remote embedding dimension");

  // Filled in by the selected subcommand.
  coforge::ApiRequest request;
  std::string inline_json, json_file;

  auto with_json = [&](CLI::App* cmd) {
    cmd->add_option("--json", inline_json, "request body as inline JSON");
    cmd->add_option("--file", json_file, "request body from a JSON file");
    return cmd;
  };

  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  serve->add_option("--port", port, "port (0 picks a free one)");
  serve->add_option("--host", host, "bind address");

  // agent
  std::string id, id2, text, title, note, content, responder, participants, policy = "round_robin", mode = "mapped",
                                                                             fixture, strategy, provenance = "uploaded";
  std::size_t k = 4, max_turns = 10;
  double boost = -1.0;
  auto* agent = app.add_subcommand("agent", "service and persona agents")->require_subcommand(1);
  auto* agent_create = with_json(agent->add_subcommand("create", "create an agent"));
  auto* agent_list = agent->add_subcommand("list", "list agents");
  auto* agent_get = agent->add_subcommand("get", "show an agent");
  agent_get->add_option("id", id)->required();
  auto* agent_update = with_json(agent->add_subcommand("update", "patch an agent"));
  agent_update->add_option("id", id)->required();
  auto* agent_delete = agent->add_subcommand("delete", "delete an agent");
  agent_delete->add_option("id", id)->required();
  auto* agent_enable = agent->add_subcommand("enable-rule", "enable a rule for an agent");
  agent_enable->add_option("id", id)->required();
  agent_enable->add_option("rule", id2)->required();
  auto* agent_disable = agent->add_subcommand("disable-rule", "disable a rule for an agent");
  agent_disable->add_option("id", id)->required();
  agent_disable->add_option("rule", id2)->required();
  auto* agent_ask = agent->add_subcommand("ask", "grounded single-turn answer");
  agent_ask->add_option("id", id)->required();
  agent_ask->add_option("query", text)->required();
  agent_ask->add_option("-k", k);
  auto* agent_rules = agent->add_subcommand("rules", "list available rules");

  // kb
  auto* kb = app.add_subcommand("kb", "knowledge bases")->require_subcommand(1);
  auto* kb_create = kb->add_subcommand("create", "create a knowledge base");
  kb_create->add_option("name", text)->required();
  auto* kb_list = kb->add_subcommand("list", "list knowledge bases");
  auto* kb_ingest = kb->add_subcommand("ingest", "ingest a text document");
  kb_ingest->add_option("id", id)->required();
  kb_ingest->add_option("path", json_file, "document file")->required();
  kb_ingest->add_option("--title", title);
  kb_ingest->add_option("--boost", boost);
  auto* kb_chunks = kb->add_subcommand("chunks", "list chunks with locators");
  kb_chunks->add_option("id", id)->required();
  auto* kb_doc = kb->add_subcommand("doc", "show a stored source document");
  kb_doc->add_option("id", id)->required();
  kb_doc->add_option("doc", id2)->required();
  auto* kb_search = kb->add_subcommand("search", "top-k retrieval");
  kb_search->add_option("id", id)->required();
  kb_search->add_option("query", text)->required();
  kb_search->add_option("-k", k);
  auto* kb_sync = kb->add_subcommand("sync", "store an edited answer as curated knowledge");
  kb_sync->add_option("id", id)->required();
  kb_sync->add_option("--message", id2, "edited message id")->required();
  kb_sync->add_option("--boost", boost);

  // session
  auto* session = app.add_subcommand("session", "group chat sessions")->require_subcommand(1);
  auto* session_create = session->add_subcommand("create", "create a session");
  session_create->add_option("participants", participants, "comma-separated agent ids")->required();
  session_create->add_option("--policy", policy)->check(CLI::IsMember({"round_robin", "manual"}));
  session_create->add_option("--max-turns", max_turns);
  session_create->add_option("--mode", mode)->check(CLI::IsMember({"mapped", "naive"}));
  auto* session_list = session->add_subcommand("list", "list sessions");
  auto* session_get = session->add_subcommand("get", "show a session");
  session_get->add_option("id", id)->required();
  auto* session_turn = session->add_subcommand("turn", "post a creator message and/or take one agent turn");
  session_turn->add_option("id", id)->required();
  session_turn->add_option("--content", content);
  session_turn->add_option("--responder", responder);
  auto* session_run = session->add_subcommand("run", "run the simulation to completion");
  session_run->add_option("id", id)->required();
  auto* session_edit = session->add_subcommand("edit", "correct an agent message");
  session_edit->add_option("message", id)->required();
  session_edit->add_option("text", text)->required();
  session_edit->add_option("--note", note);
  auto* session_export = session->add_subcommand("export", "transcript as JSON lines");
  session_export->add_option("id", id)->required();

  // persona
  auto* persona = app.add_subcommand("persona", "persona agents")->require_subcommand(1);
  auto* persona_create = with_json(persona->add_subcommand("create", "create a persona agent"));
  persona_create->add_option("--fixture", fixture, "reference persona key");
  persona_create->add_option("--strategy", strategy)->check(CLI::IsMember({"descriptive", "chained", "explicit"}));
  auto* persona_list = persona->add_subcommand("list", "list personas");
  auto* persona_fixtures = persona->add_subcommand("fixtures", "list reference personas");
  auto* persona_compare = with_json(persona->add_subcommand("compare", "A/B strategy comparison"));

  // audit
  auto* audit = app.add_subcommand("audit", "transcript auditing")->require_subcommand(1);
  auto* audit_run = audit->add_subcommand("run", "audit a session or a JSONL transcript");
  std::string transcript, configs;
  audit_run->add_option("--session", id);
  audit_run->add_option("--transcript", transcript, "JSONL transcript file");
  audit_run->add_option("--configs", configs, "JSON file with check configs");
  auto* audit_config = audit->add_subcommand("config", "show or replace the check configs");
  audit_config->add_option("--set", configs, "JSON file with check configs");

  // project
  auto* project = app.add_subcommand("project", "project file")->require_subcommand(1);
  auto* project_show = project->add_subcommand("show", "dump the project");
  auto* project_validate = project->add_subcommand("validate", "check referential integrity");

  CLI11_PARSE(app, argc, argv);

  try {
    auto provider = make_provider(g);
    coforge::Api api(provider, service_config(g));

    if (serve->parsed()) {
      coforge::HttpServer server(api);
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on port " << bound << std::endl;
      server.listen();
      return 0;
    }

    auto set = [&](std::string method, std::string path, json body = json::object()) {
      request = {std::move(method), std::move(path), std::move(body)};
    };

    if (agent_create->parsed()) set("POST", "/agents", json_arg(inline_json, json_file));
    else if (agent_list->parsed()) set("GET", "/agents");
    else if (agent_get->parsed()) set("GET", "/agents/" + id);
    else if (agent_update->parsed()) set("PATCH", "/agents/" + id, json_arg(inline_json, json_file));
    else if (agent_delete->parsed()) set("DELETE", "/agents/" + id);
    else if (agent_enable->parsed()) set("POST", "/agents/" + id + "/rules/" + id2 + "/enable");
    else if (agent_disable->parsed()) set("POST", "/agents/" + id + "/rules/" + id2 + "/disable");
    else if (agent_ask->parsed()) set("POST", "/agents/" + id + "/answer", {{"query", text}, {"k", k}});
    else if (agent_rules->parsed()) set("GET", "/rules");
    else if (kb_create->parsed()) set("POST", "/kb", {{"name", text}});
    else if (kb_list->parsed()) set("GET", "/kb");
    else if (kb_ingest->parsed()) {
      json body = {{"title", title.empty() ? std::filesystem::path(json_file).filename().string() : title}, {"text", read_file(json_file)}, {"provenance", provenance}};
      if (boost >= 0.0) body["priority_boost"] = boost;
      set("POST", "/kb/" + id + "/docs", body);
    } else if (kb_chunks->parsed()) set("GET", "/kb/" + id + "/chunks");
    else if (kb_doc->parsed()) set("GET", "/kb/" + id + "/docs/" + id2);
    else if (kb_search->parsed()) set("POST", "/kb/" + id + "/search", {{"query", text}, {"k", k}});
    else if (kb_sync->parsed()) {
      json body = {{"message_id", id2}};
      if (boost >= 0.0) body["boost"] = boost;
      set("POST", "/kb/" + id + "/sync", body);
    } else if (session_create->parsed()) {
      set("POST", "/sessions",
          {{"participants", split_csv(participants)}, {"turn_policy", policy}, {"max_turns", max_turns}, {"mapping_mode", mode}});
    } else if (session_list->parsed()) set("GET", "/sessions");
    else if (session_get->parsed()) set("GET", "/sessions/" + id);
    else if (session_turn->parsed()) {
      json body = json::object();
      if (!content.empty()) body["content"] = content;
      if (!responder.empty()) body["responder"] = responder;
      set("POST", "/sessions/" + id + "/turns", body);
    } else if (session_run->parsed()) set("POST", "/sessions/" + id + "/run");
    else if (session_edit->parsed()) {
      json body = {{"corrected_text", text}};
      if (!note.empty()) body["note"] = note;
      set("PATCH", "/messages/" + id, body);
    } else if (session_export->parsed()) set("GET", "/sessions/" + id + "/export");
    else if (persona_create->parsed()) {
      json body = json_arg(inline_json, json_file);
      if (!fixture.empty()) body["fixture"] = fixture;
      if (!strategy.empty()) body["strategy"] = strategy;
      set("POST", "/personas", body);
    } else if (persona_list->parsed()) set("GET", "/personas");
    else if (persona_fixtures->parsed()) set("GET", "/personas/fixtures");
    else if (persona_compare->parsed()) set("POST", "/compare", json_arg(inline_json, json_file));
    else if (audit_run->parsed()) {
      json body = json::object();
      if (!id.empty()) body["session_id"] = id;
      if (!transcript.empty()) body["transcript"] = read_file(transcript);
      if (!configs.empty()) body["configs"] = json::parse(read_file(configs));
      set("POST", "/audit", body);
    } else if (audit_config->parsed()) {
      if (configs.empty()) set("GET", "/audit/config");
      else set("PUT", "/audit/config", json::parse(read_file(configs)));
    } else if (project_show->parsed()) set("GET", "/project");
    else if (project_validate->parsed()) set("GET", "/project/validate");

    return emit(api.handle(request));
  } catch (const coforge::Error& e) {
    std::cerr << coforge::error_body(e).dump(2) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
