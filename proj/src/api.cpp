#include "coforge/api.hpp"

#include <algorithm>
#include <filesystem>
#include <mutex>
#include <sstream>

#include "coforge/audit.hpp"
#include "coforge/serialization.hpp"
#include "coforge/syncloop.hpp"

namespace coforge {

using nlohmann::json;

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::UnknownRule:
    case ErrorCode::UnknownAgent: return 404;
    case ErrorCode::SessionNotOpen:
    case ErrorCode::Conflict: return 409;
    case ErrorCode::DocumentTooLarge: return 413;
    case ErrorCode::InvalidSpec:
    case ErrorCode::UnknownFacet:
    case ErrorCode::TooFewParticipants:
    case ErrorCode::NotAParticipant:
    case ErrorCode::NotAnAssistantMessage:
    case ErrorCode::NoPrecedingUserQuestion:
    case ErrorCode::NoKnowledgeBase:
    case ErrorCode::EmptyDocument:
    case ErrorCode::MissingAttributions: return 422;
    case ErrorCode::InvalidArgument: return 400;
    case ErrorCode::ProviderUnreachable:
    case ErrorCode::ProviderRejected:
    case ErrorCode::EmptyCompletion: return 502;
    case ErrorCode::IoError:
    case ErrorCode::VersionMismatch:
    case ErrorCode::IntegrityViolation: return 500;
  }
  return 500;
}

json error_body(const Error& e) { return {{"code", to_string(e.code())}, {"message", e.what()}, {"detail", e.detail()}}; }

namespace {

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> segs;
  std::string cur;
  const std::string clean = path.substr(0, path.find('?'));
  for (char c : clean) {
    if (c == '/') {
      if (!cur.empty()) segs.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) segs.push_back(std::move(cur));
  return segs;
}

// Matches segments against a pattern where "*" captures.
bool match(const std::vector<std::string>& segs, std::initializer_list<std::string_view> pattern,
           std::vector<std::string>& params) {
  if (segs.size() != pattern.size()) return false;
  std::vector<std::string> captured;
  std::size_t i = 0;
  for (std::string_view p : pattern) {
    if (p == "*") {
      captured.push_back(segs[i]);
    } else if (segs[i] != p) {
      return false;
    }
    ++i;
  }
  params = std::move(captured);
  return true;
}

template <typename T>
T required(const json& body, const char* key) {
  if (!body.is_object() || !body.contains(key)) {
    throw Error(ErrorCode::InvalidArgument, std::string("missing field '") + key + "'");
  }
  return body.at(key).get<T>();
}

json chunk_summary(const KnowledgeChunk& c) {
  return {{"id", c.id},
          {"doc_id", c.doc_id},
          {"ordinal", c.ordinal},
          {"text", c.text},
          {"locator", c.locator},
          {"provenance", to_string(c.provenance)},
          {"priority_boost", c.priority_boost}};
}

json kb_summary(const KnowledgeBase& kb) {
  json docs = json::array();
  for (const auto& d : kb.documents) {
    docs.push_back({{"id", d.id}, {"title", d.title}, {"provenance", to_string(d.provenance)}, {"size", d.text.size()}});
  }
  return {{"id", kb.id},
          {"name", kb.name},
          {"embedding_dimension", kb.embedding_dimension},
          {"documents", docs},
          {"chunk_count", kb.chunks.size()}};
}

json session_summary(const GroupSession& s) {
  return {{"id", s.id},
          {"participants", s.participants},
          {"turn_policy", to_string(s.turn_policy)},
          {"status", to_string(s.status)},
          {"max_turns", s.max_turns},
          {"message_count", s.transcript.size()}};
}

}  // namespace

Api::Api(std::shared_ptr<Provider> provider, ServiceConfig config, RuleRegistry rules)
    : provider_(std::move(provider)), config_(std::move(config)), rules_(std::move(rules)) {
  if (config_.project_path && std::filesystem::exists(*config_.project_path)) {
    project_ = load_project(*config_.project_path, rules_);
  }
}

Project Api::snapshot() const {
  std::shared_lock lock(mutex_);
  return project_;
}

void Api::persist() {
  if (config_.project_path) save_project(project_, *config_.project_path);
}

GroupChatContext Api::chat_context() {
  GroupChatContext ctx{project_.agents, project_.knowledge, *provider_, &rules_, config_.chat, {}};
  for (const auto& rec : project_.personas) {
    if (rec.spec.strategy == PersonaStrategy::Chained) {
      ctx.generators.emplace(rec.agent_id, chained_turn_generator(rec.spec, config_.chat.answer.params));
    }
  }
  return ctx;
}

ApiResponse Api::handle(const ApiRequest& request) {
  try {
    if (request.method == "GET") {
      std::shared_lock lock(mutex_);
      return dispatch(request);
    }
    std::unique_lock lock(mutex_);
    return dispatch(request);
  } catch (const Error& e) {
    return {http_status(e.code()), error_body(e), std::nullopt, "application/json"};
  } catch (const json::exception& e) {
    return {400, {{"code", "invalid-argument"}, {"message", "malformed request body"}, {"detail", e.what()}},
            std::nullopt, "application/json"};
  } catch (const std::exception& e) {
    return {500, {{"code", "internal"}, {"message", e.what()}, {"detail", ""}}, std::nullopt, "application/json"};
  }
}

ApiResponse Api::dispatch(const ApiRequest& req) {
  const auto segs = split_path(req.path);
  const std::string& m = req.method;
  const json& body = req.body;
  std::vector<std::string> p;
  auto ok = [](json j, int status = 200) { return ApiResponse{status, std::move(j), std::nullopt, "application/json"}; };

  // --- agents --------------------------------------------------------------
  if (m == "GET" && match(segs, {"agents"}, p)) return ok(project_.agents.list());
  if (m == "POST" && match(segs, {"agents"}, p)) {
    AgentSpec spec = body.get<AgentSpec>();
    if (spec.kb_id && project_.knowledge.find(*spec.kb_id) == nullptr) {
      throw Error(ErrorCode::NotFound, "knowledge base not found", *spec.kb_id);
    }
    for (const auto& r : spec.enabled_rules) {
      if (rules_.find(r) == nullptr) throw Error(ErrorCode::UnknownRule, "unknown rule", r);
    }
    AgentSpec created = project_.agents.create(std::move(spec));
    persist();
    return ok(created, 201);
  }
  if (m == "GET" && match(segs, {"agents", "*"}, p)) return ok(project_.agents.get(p[0]));
  if (m == "PATCH" && match(segs, {"agents", "*"}, p)) {
    AgentPatch patch = agent_patch_from_json(body);
    if (patch.kb_id && *patch.kb_id && project_.knowledge.find(**patch.kb_id) == nullptr) {
      throw Error(ErrorCode::NotFound, "knowledge base not found", **patch.kb_id);
    }
    if (patch.enabled_rules) {
      for (const auto& r : *patch.enabled_rules) {
        if (rules_.find(r) == nullptr) throw Error(ErrorCode::UnknownRule, "unknown rule", r);
      }
    }
    AgentSpec updated = project_.agents.update(p[0], patch);
    persist();
    return ok(updated);
  }
  if (m == "DELETE" && match(segs, {"agents", "*"}, p)) {
    delete_agent(project_, p[0]);
    persist();
    return ok({{"deleted", p[0]}});
  }
  if (m == "POST" && match(segs, {"agents", "*", "rules", "*", "*"}, p)) {
    if (p[2] == "enable") {
      enable_rule(project_.agents, rules_, p[0], p[1]);
    } else if (p[2] == "disable") {
      disable_rule(project_.agents, rules_, p[0], p[1]);
    } else {
      throw Error(ErrorCode::NotFound, "no such route", req.path);
    }
    persist();
    return ok(project_.agents.get(p[0]));
  }
  if (m == "POST" && match(segs, {"agents", "*", "answer"}, p)) {
    const AgentSpec& agent = project_.agents.get(p[0]);
    const KnowledgeBase* kb = agent.kb_id ? project_.knowledge.find(*agent.kb_id) : nullptr;
    AnswerOptions options = config_.chat.answer;
    options.k = body.value("k", options.k);
    const auto prior = body.value("prior_turns", std::vector<ChatTurn>{});
    RuleStateMap scratch;
    RulePipeline pipeline(rules_, agent.enabled_rules, "", scratch);
    return ok(answer(agent, kb, *provider_, prior, required<std::string>(body, "query"), options, &pipeline));
  }

  // --- rules ---------------------------------------------------------------
  if (m == "GET" && match(segs, {"rules"}, p)) return ok(rules_.descriptors());

  // --- knowledge -----------------------------------------------------------
  if (m == "GET" && match(segs, {"kb"}, p)) {
    json out = json::array();
    for (const auto& kb : project_.knowledge.list()) out.push_back(kb_summary(kb));
    return ok(out);
  }
  if (m == "POST" && match(segs, {"kb"}, p)) {
    const KnowledgeBase& kb =
        project_.knowledge.create(required<std::string>(body, "name"), provider_->embedding_dimension());
    json out = kb_summary(kb);
    persist();
    return ok(out, 201);
  }
  if (m == "GET" && match(segs, {"kb", "*"}, p)) return ok(kb_summary(project_.knowledge.get(p[0])));
  if (m == "POST" && match(segs, {"kb", "*", "docs"}, p)) {
    KnowledgeBase& kb = project_.knowledge.get(p[0]);
    IngestOptions options = config_.ingest;
    options.provenance = provenance_from_string(body.value("provenance", std::string("uploaded")));
    options.priority_boost = body.value("priority_boost", 0.0);
    const std::size_t added = ingest_document(kb, *provider_, required<std::string>(body, "title"),
                                              required<std::string>(body, "text"), options);
    json out = {{"doc_id", kb.documents.back().id}, {"chunks_added", added}};
    persist();
    return ok(out, 201);
  }
  if (m == "GET" && match(segs, {"kb", "*", "docs", "*"}, p)) {
    const KnowledgeBase& kb = project_.knowledge.get(p[0]);
    const SourceDocument* doc = kb.find_document(p[1]);
    if (doc == nullptr) throw Error(ErrorCode::NotFound, "document not found", p[1]);
    return ok(*doc);
  }
  if (m == "GET" && match(segs, {"kb", "*", "chunks"}, p)) {
    json out = json::array();
    for (const auto& c : project_.knowledge.get(p[0]).chunks) out.push_back(chunk_summary(c));
    return ok(out);
  }
  if (m == "POST" && match(segs, {"kb", "*", "search"}, p)) {
    const KnowledgeBase& kb = project_.knowledge.get(p[0]);
    return ok(search(kb, *provider_, required<std::string>(body, "query"), body.value("k", std::size_t{4})));
  }
  if (m == "POST" && match(segs, {"kb", "*", "sync"}, p)) {
    KnowledgeBase& kb = project_.knowledge.get(p[0]);
    CuratedExchange exchange;
    if (body.contains("question")) {
      exchange = body.get<CuratedExchange>();
    } else {
      const auto message_id = required<std::string>(body, "message_id");
      const GroupSession* s = project_.sessions.find_by_message(message_id);
      if (s == nullptr) throw Error(ErrorCode::NotFound, "message not found", message_id);
      exchange = exchange_for_message(*s, message_id);
      if (body.contains("note")) exchange.editor_note = body.at("note").get<std::string>();
    }
    const std::string chunk_id =
        sync_to_knowledge(kb, *provider_, exchange, body.value("boost", kDefaultCuratedBoost));
    json out = {{"chunk_id", chunk_id}, {"chunk", chunk_summary(*kb.find_chunk(chunk_id))}};
    persist();
    return ok(out, 201);
  }

  // --- sessions ------------------------------------------------------------
  if (m == "GET" && match(segs, {"sessions"}, p)) {
    json out = json::array();
    for (const auto& s : project_.sessions.list()) out.push_back(session_summary(s));
    return ok(out);
  }
  if (m == "POST" && match(segs, {"sessions"}, p)) {
    const GroupSession& s = project_.sessions.create(
        project_.agents, required<std::vector<std::string>>(body, "participants"),
        turn_policy_from_string(body.value("turn_policy", std::string("round_robin"))),
        body.value("max_turns", std::size_t{10}), mapping_mode_from_string(body.value("mapping_mode", std::string("mapped"))));
    json out = s;
    persist();
    return ok(out, 201);
  }
  if (m == "GET" && match(segs, {"sessions", "*"}, p)) return ok(project_.sessions.get(p[0]));
  if (m == "GET" && match(segs, {"sessions", "*", "export"}, p)) {
    return {200, nullptr, export_transcript_jsonl(project_.sessions.get(p[0]), project_.knowledge),
            "application/x-ndjson"};
  }
  if (m == "POST" && match(segs, {"sessions", "*", "turns"}, p)) {
    GroupSession& live = project_.sessions.get(p[0]);
    GroupSession work = live;
    GroupChatContext ctx = chat_context();
    json out = json::object();
    if (body.contains("content")) {
      out["creator_message"] = post_creator_message(work, required<std::string>(body, "content"));
    }
    const bool has_prompt = body.contains("content");
    if (body.contains("responder")) {
      out["message"] = respond(work, body.at("responder").get<std::string>(), ctx);
    } else if (work.turn_policy == TurnPolicy::RoundRobin) {
      out["message"] = next_turn(work, ctx);
    } else {
      // Manual sessions: the first active service agent answers the creator.
      auto it = std::find_if(work.participants.begin(), work.participants.end(), [](const Participant& part) {
        return part.active && part.kind == AgentKind::ServiceAgent;
      });
      if (it == work.participants.end()) it = work.participants.begin();
      if (!has_prompt && work.transcript.empty()) {
        throw Error(ErrorCode::InvalidArgument, "manual session needs creator content first");
      }
      out["message"] = respond(work, it->agent_id, ctx);
    }
    out["session_status"] = to_string(work.status);
    live = std::move(work);
    persist();
    return ok(out, 201);
  }
  if (m == "POST" && match(segs, {"sessions", "*", "run"}, p)) {
    GroupSession& s = project_.sessions.get(p[0]);
    GroupChatContext ctx = chat_context();
    try {
      run_simulation(s, ctx);
    } catch (...) {
      persist();  // completed turns are kept
      throw;
    }
    persist();
    return ok(s);
  }

  // --- messages ------------------------------------------------------------
  if (m == "PATCH" && match(segs, {"messages", "*"}, p)) {
    GroupSession* s = project_.sessions.find_by_message(p[0]);
    if (s == nullptr) throw Error(ErrorCode::NotFound, "message not found", p[0]);
    std::optional<std::string> note;
    if (body.contains("note")) note = body.at("note").get<std::string>();
    CuratedExchange ex = edit_response(*s, p[0], required<std::string>(body, "corrected_text"), note);
    json out = {{"exchange", ex}, {"message", *s->message(p[0])}};
    persist();
    return ok(out);
  }

  // --- personas ------------------------------------------------------------
  if (m == "GET" && match(segs, {"personas"}, p)) {
    json out = json::array();
    for (const auto& r : project_.personas) out.push_back({{"id", r.id}, {"spec", r.spec}, {"agent_id", r.agent_id}});
    return ok(out);
  }
  if (m == "GET" && match(segs, {"personas", "fixtures"}, p)) {
    json out = json::array();
    for (const auto& f : reference_personas()) out.push_back({{"key", f.key}, {"label", f.label}, {"spec", f.spec}});
    return ok(out);
  }
  if (m == "POST" && match(segs, {"personas"}, p)) {
    PersonaSpec spec;
    if (body.contains("fixture")) {
      const auto key = body.at("fixture").get<std::string>();
      const PersonaFixture* f = find_reference_persona(key);
      if (f == nullptr) throw Error(ErrorCode::NotFound, "unknown persona fixture", key);
      spec = f->spec;
      if (body.contains("strategy")) spec.strategy = persona_strategy_from_string(body.at("strategy").get<std::string>());
    } else {
      spec = body.get<PersonaSpec>();
    }
    const AgentSpec agent = project_.agents.create(build_persona_agent(spec));
    PersonaRecord rec{project_.persona_ids.next("persona"), spec, agent.id};
    project_.personas.push_back(rec);
    json out = {{"id", rec.id}, {"spec", rec.spec}, {"agent_id", rec.agent_id}, {"agent", agent}};
    persist();
    return ok(out, 201);
  }
  if (m == "POST" && match(segs, {"compare"}, p)) {
    std::vector<ComparisonArm> arms;
    for (const auto& a : required<json>(body, "arms")) {
      ComparisonArm arm;
      if (a.contains("persona") && !a.at("persona").is_null()) {
        const json& persona = a.at("persona");
        if (persona.is_string()) {
          const auto key = persona.get<std::string>();
          if (const PersonaFixture* f = find_reference_persona(key)) {
            arm.persona = f->spec;
          } else {
            auto rec = std::find_if(project_.personas.begin(), project_.personas.end(),
                                    [&](const PersonaRecord& r) { return r.id == key; });
            if (rec == project_.personas.end()) throw Error(ErrorCode::NotFound, "unknown persona", key);
            arm.persona = rec->spec;
          }
        } else {
          arm.persona = persona.get<PersonaSpec>();
        }
      }
      if (a.contains("script")) arm.script = a.at("script").get<std::vector<std::string>>();
      arms.push_back(std::move(arm));
    }
    // Work on copies so a failing arm leaves the project untouched.
    AgentRegistry agents = project_.agents;
    SessionStore sessions = project_.sessions;
    StrategyReport report =
        compare_strategies(agents, sessions, project_.knowledge, *provider_, &rules_,
                           required<std::string>(body, "service_agent_id"), arms, body.value("turns", std::size_t{10}),
                           config_.chat);
    project_.agents = std::move(agents);
    project_.sessions = std::move(sessions);
    persist();
    return ok(report);
  }

  // --- audit ---------------------------------------------------------------
  if (m == "GET" && match(segs, {"audit", "config"}, p)) return ok(project_.audit_configs);
  if (m == "PUT" && match(segs, {"audit", "config"}, p)) {
    auto configs = body.get<std::vector<AuditCheckConfig>>();
    for (const auto& c : configs) c.validate();
    project_.audit_configs = std::move(configs);
    persist();
    return ok(project_.audit_configs);
  }
  if (m == "POST" && match(segs, {"audit"}, p)) {
    std::vector<AuditMessage> transcript;
    if (body.contains("session_id")) {
      transcript = audit_view(project_.sessions.get(body.at("session_id").get<std::string>()), project_.knowledge);
    } else {
      transcript = parse_transcript_jsonl(required<std::string>(body, "transcript"));
    }
    const auto configs =
        body.contains("configs") ? body.at("configs").get<std::vector<AuditCheckConfig>>() : project_.audit_configs;
    const auto findings = audit_transcript(transcript, configs);
    const auto audited = static_cast<std::size_t>(std::count_if(
        transcript.begin(), transcript.end(), [](const AuditMessage& a) { return a.author_kind == AuthorKind::ServiceAgent; }));
    return ok({{"findings", findings},
               {"findings_jsonl", findings_to_jsonl(findings)},
               {"summary", summarize_findings(findings, audited)}});
  }

  // --- project -------------------------------------------------------------
  if (m == "GET" && match(segs, {"project"}, p)) return ok(project_to_json(project_));
  if (m == "GET" && match(segs, {"project", "validate"}, p)) {
    validate_integrity(project_, rules_);
    return ok({{"valid", true}});
  }

  throw Error(ErrorCode::NotFound, "no such route", m + " " + req.path);
}

}  // namespace coforge
