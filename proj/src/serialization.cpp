#include "coforge/serialization.hpp"

#include "coforge/error.hpp"

namespace coforge {

void to_json(json& j, const IdSequence& v) { j = v.counters(); }
void from_json(const json& j, IdSequence& v) { v.restore(j.get<std::map<std::string, std::uint64_t>>()); }

void to_json(json& j, const ChatTurn& v) { j = {{"role", to_string(v.role)}, {"content", v.content}}; }
void from_json(const json& j, ChatTurn& v) {
  v.role = role_from_string(j.at("role").get<std::string>());
  v.content = j.at("content").get<std::string>();
}

void to_json(json& j, const GenParams& v) {
  j = {{"temperature", v.temperature}, {"max_output_tokens", v.max_output_tokens}, {"stop_sequences", v.stop_sequences}};
}
void from_json(const json& j, GenParams& v) {
  v.temperature = j.value("temperature", v.temperature);
  v.max_output_tokens = j.value("max_output_tokens", v.max_output_tokens);
  v.stop_sequences = j.value("stop_sequences", v.stop_sequences);
}

void to_json(json& j, const EmbeddingVector& v) { j = v.components; }
void from_json(const json& j, EmbeddingVector& v) { v.components = j.get<std::vector<double>>(); }

void to_json(json& j, const Exemplar& v) { j = {{"user", v.user_text}, {"assistant", v.assistant_text}}; }
void from_json(const json& j, Exemplar& v) {
  v.user_text = j.at("user").get<std::string>();
  v.assistant_text = j.at("assistant").get<std::string>();
}

void to_json(json& j, const AgentSpec& v) {
  j = {{"id", v.id},
       {"name", v.name},
       {"kind", to_string(v.kind)},
       {"definition", v.definition},
       {"exemplars", v.exemplars},
       {"cooklist", v.cooklist.values},
       {"enabled_rules", v.enabled_rules}};
  if (v.kb_id) j["kb_id"] = *v.kb_id;
}
void from_json(const json& j, AgentSpec& v) {
  v.id = j.value("id", std::string());
  v.name = j.at("name").get<std::string>();
  v.kind = agent_kind_from_string(j.value("kind", std::string("service_agent")));
  v.definition = j.at("definition").get<std::string>();
  v.exemplars = j.value("exemplars", std::vector<Exemplar>{});
  v.cooklist = validate_cooklist(j.value("cooklist", std::map<std::string, std::string>{}));
  if (j.contains("kb_id") && !j.at("kb_id").is_null()) {
    v.kb_id = j.at("kb_id").get<std::string>();
  } else {
    v.kb_id.reset();
  }
  v.enabled_rules = j.value("enabled_rules", std::set<std::string>{});
}

AgentPatch agent_patch_from_json(const json& j) {
  AgentPatch p;
  if (j.contains("name")) p.name = j.at("name").get<std::string>();
  if (j.contains("kind")) p.kind = agent_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("definition")) p.definition = j.at("definition").get<std::string>();
  if (j.contains("exemplars")) p.exemplars = j.at("exemplars").get<std::vector<Exemplar>>();
  if (j.contains("cooklist")) p.cooklist = validate_cooklist(j.at("cooklist").get<std::map<std::string, std::string>>());
  if (j.contains("kb_id")) {
    p.kb_id = j.at("kb_id").is_null() ? std::optional<std::string>() : j.at("kb_id").get<std::string>();
  }
  if (j.contains("enabled_rules")) p.enabled_rules = j.at("enabled_rules").get<std::set<std::string>>();
  return p;
}

void to_json(json& j, const SourceLocator& v) {
  j = {{"doc_id", v.doc_id},       {"doc_title", v.doc_title},   {"start_char", v.start_char},
       {"end_char", v.end_char},   {"start_line", v.start_line}};
  if (v.page) j["page"] = *v.page;
}
void from_json(const json& j, SourceLocator& v) {
  v.doc_id = j.at("doc_id").get<std::string>();
  v.doc_title = j.at("doc_title").get<std::string>();
  v.start_char = j.at("start_char").get<std::size_t>();
  v.end_char = j.at("end_char").get<std::size_t>();
  v.start_line = j.at("start_line").get<std::size_t>();
  if (j.contains("page")) {
    v.page = j.at("page").get<std::size_t>();
  } else {
    v.page.reset();
  }
}

void to_json(json& j, const KnowledgeChunk& v) {
  j = {{"id", v.id},
       {"doc_id", v.doc_id},
       {"ordinal", v.ordinal},
       {"text", v.text},
       {"locator", v.locator},
       {"embedding", v.embedding},
       {"provenance", to_string(v.provenance)},
       {"priority_boost", v.priority_boost}};
}
void from_json(const json& j, KnowledgeChunk& v) {
  v.id = j.at("id").get<std::string>();
  v.doc_id = j.at("doc_id").get<std::string>();
  v.ordinal = j.at("ordinal").get<std::size_t>();
  v.text = j.at("text").get<std::string>();
  v.locator = j.at("locator").get<SourceLocator>();
  v.embedding = j.at("embedding").get<EmbeddingVector>();
  v.provenance = provenance_from_string(j.at("provenance").get<std::string>());
  v.priority_boost = j.at("priority_boost").get<double>();
}

void to_json(json& j, const SourceDocument& v) {
  j = {{"id", v.id}, {"title", v.title}, {"text", v.text}, {"provenance", to_string(v.provenance)}};
}
void from_json(const json& j, SourceDocument& v) {
  v.id = j.at("id").get<std::string>();
  v.title = j.at("title").get<std::string>();
  v.text = j.at("text").get<std::string>();
  v.provenance = provenance_from_string(j.at("provenance").get<std::string>());
}

void to_json(json& j, const KnowledgeBase& v) {
  j = {{"id", v.id},
       {"name", v.name},
       {"embedding_dimension", v.embedding_dimension},
       {"documents", v.documents},
       {"chunks", v.chunks},
       {"ids", v.ids}};
}
void from_json(const json& j, KnowledgeBase& v) {
  v.id = j.at("id").get<std::string>();
  v.name = j.at("name").get<std::string>();
  v.embedding_dimension = j.at("embedding_dimension").get<std::size_t>();
  v.documents = j.at("documents").get<std::vector<SourceDocument>>();
  v.chunks = j.at("chunks").get<std::vector<KnowledgeChunk>>();
  v.ids = j.at("ids").get<IdSequence>();
}

void to_json(json& j, const RetrievalResult& v) {
  j = {{"chunk_id", v.chunk_id},
       {"doc_id", v.doc_id},
       {"ordinal", v.ordinal},
       {"text", v.text},
       {"locator", v.locator},
       {"provenance", to_string(v.provenance)},
       {"raw_cosine", v.raw_cosine},
       {"priority_boost", v.priority_boost},
       {"effective_score", v.effective_score}};
}

void to_json(json& j, const AttributedResponse& v) {
  j = {{"text", v.text}, {"attributions", v.attributions}, {"retrieval_trace", v.retrieval_trace}};
}

void to_json(json& j, const RuleDescriptor& v) {
  json hooks = json::array();
  for (Hook h : v.hooks) hooks.push_back(to_string(h));
  j = {{"rule_id", v.rule_id}, {"display_name", v.display_name}, {"description", v.description}, {"hooks", hooks}};
}

void to_json(json& j, const RuleState& v) {
  j = {{"rule_id", v.rule_id}, {"session_id", v.session_id}, {"payload", v.payload}};
}
void from_json(const json& j, RuleState& v) {
  v.rule_id = j.at("rule_id").get<std::string>();
  v.session_id = j.at("session_id").get<std::string>();
  v.payload = j.at("payload");
}

void to_json(json& j, const ChatMessage& v) {
  j = {{"message_id", v.message_id},
       {"author_id", v.author_id},
       {"author_kind", to_string(v.author_kind)},
       {"content", v.content},
       {"attributions", v.attributions},
       {"edited", v.edited},
       {"edit_history", v.edit_history},
       {"created_at", v.created_at}};
  if (v.kb_id) j["kb_id"] = *v.kb_id;
}
void from_json(const json& j, ChatMessage& v) {
  v.message_id = j.at("message_id").get<std::string>();
  v.author_id = j.at("author_id").get<std::string>();
  v.author_kind = author_kind_from_string(j.at("author_kind").get<std::string>());
  v.content = j.at("content").get<std::string>();
  v.attributions = j.at("attributions").get<std::vector<SourceLocator>>();
  v.kb_id = j.contains("kb_id") ? std::optional<std::string>(j.at("kb_id").get<std::string>()) : std::nullopt;
  v.edited = j.at("edited").get<bool>();
  v.edit_history = j.at("edit_history").get<std::vector<std::string>>();
  v.created_at = j.at("created_at").get<std::int64_t>();
}

void to_json(json& j, const Participant& v) {
  j = {{"agent_id", v.agent_id}, {"display_name", v.display_name}, {"kind", to_string(v.kind)}, {"active", v.active}};
}
void from_json(const json& j, Participant& v) {
  v.agent_id = j.at("agent_id").get<std::string>();
  v.display_name = j.at("display_name").get<std::string>();
  v.kind = agent_kind_from_string(j.at("kind").get<std::string>());
  v.active = j.at("active").get<bool>();
}

void to_json(json& j, const GroupSession& v) {
  json states = json::array();
  for (const auto& [id, state] : v.rule_states) states.push_back(state);
  j = {{"id", v.id},
       {"participants", v.participants},
       {"transcript", v.transcript},
       {"turn_policy", to_string(v.turn_policy)},
       {"max_turns", v.max_turns},
       {"status", to_string(v.status)},
       {"mapping_mode", to_string(v.mapping_mode)},
       {"rule_states", states},
       {"message_ids", v.message_ids}};
}
void from_json(const json& j, GroupSession& v) {
  v.id = j.at("id").get<std::string>();
  v.participants = j.at("participants").get<std::vector<Participant>>();
  v.transcript = j.at("transcript").get<std::vector<ChatMessage>>();
  v.turn_policy = turn_policy_from_string(j.at("turn_policy").get<std::string>());
  v.max_turns = j.at("max_turns").get<std::size_t>();
  v.status = session_status_from_string(j.at("status").get<std::string>());
  v.mapping_mode = mapping_mode_from_string(j.value("mapping_mode", std::string("mapped")));
  v.rule_states.clear();
  for (const auto& s : j.at("rule_states")) {
    RuleState state = s.get<RuleState>();
    v.rule_states.emplace(state.rule_id, std::move(state));
  }
  v.message_ids = j.at("message_ids").get<IdSequence>();
}

void to_json(json& j, const CuratedExchange& v) {
  j = {{"question", v.question},
       {"corrected_answer", v.corrected_answer},
       {"source_session", v.source_session},
       {"source_message", v.source_message},
       {"created_at", v.created_at}};
  if (v.editor_note) j["editor_note"] = *v.editor_note;
}
void from_json(const json& j, CuratedExchange& v) {
  v.question = j.at("question").get<std::string>();
  v.corrected_answer = j.at("corrected_answer").get<std::string>();
  v.source_session = j.at("source_session").get<std::string>();
  v.source_message = j.at("source_message").get<std::string>();
  v.created_at = j.value("created_at", std::int64_t{0});
  if (j.contains("editor_note")) v.editor_note = j.at("editor_note").get<std::string>();
}

void to_json(json& j, const PersonaSpec& v) {
  j = {{"name", v.name},
       {"profile", v.profile},
       {"tendency_clause", v.tendency_clause},
       {"strategy", to_string(v.strategy)}};
}
void from_json(const json& j, PersonaSpec& v) {
  v.name = j.at("name").get<std::string>();
  v.profile = j.value("profile", std::string());
  v.tendency_clause = j.value("tendency_clause", std::string());
  v.strategy = persona_strategy_from_string(j.value("strategy", std::string("explicit")));
}

void to_json(json& j, const ArmMetrics& v) {
  j = {{"label", v.label},
       {"session_id", v.session_id},
       {"persona_agent_id", v.persona_agent_id},
       {"message_count", v.message_count},
       {"total_chars", v.total_chars},
       {"mean_chars_per_message", v.mean_chars_per_message},
       {"delta_chars_vs_first", v.delta_chars_vs_first}};
  j["persona"] = v.persona ? json(*v.persona) : json(nullptr);
}

void to_json(json& j, const StrategyReport& v) {
  j = {{"service_agent_id", v.service_agent_id}, {"turns", v.turns}, {"arms", v.arms}};
  j["longer_arm"] = v.longer_arm ? json(*v.longer_arm) : json(nullptr);
}

void to_json(json& j, const TopicRule& v) {
  j = {{"topic", v.topic}, {"keywords", v.keywords}, {"disclaimer", v.disclaimer}};
}
void from_json(const json& j, TopicRule& v) {
  v.topic = j.at("topic").get<std::string>();
  v.keywords = j.at("keywords").get<std::vector<std::string>>();
  v.disclaimer = j.at("disclaimer").get<std::string>();
}

void to_json(json& j, const AuditCheckConfig& v) {
  j = {{"check_id", to_string(v.check_id)},
       {"enabled", v.enabled},
       {"max_chars", v.max_chars},
       {"imperative_verbs", v.imperative_verbs},
       {"min_imperatives", v.min_imperatives},
       {"refusal_patterns", v.refusal_patterns},
       {"alternative_patterns", v.alternative_patterns},
       {"referral_patterns", v.referral_patterns},
       {"topics", v.topics},
       {"ngram_size", v.ngram_size},
       {"overlap_threshold", v.overlap_threshold},
       {"policy_title_patterns", v.policy_title_patterns}};
}
void from_json(const json& j, AuditCheckConfig& v) {
  AuditCheckConfig d;
  d.check_id = check_id_from_string(j.at("check_id").get<std::string>());
  // Missing parameters fall back to the shipped defaults for that check.
  for (const auto& def : default_audit_configs()) {
    if (def.check_id == d.check_id) d = def;
  }
  d.enabled = j.value("enabled", d.enabled);
  d.max_chars = j.value("max_chars", d.max_chars);
  d.imperative_verbs = j.value("imperative_verbs", d.imperative_verbs);
  d.min_imperatives = j.value("min_imperatives", d.min_imperatives);
  d.refusal_patterns = j.value("refusal_patterns", d.refusal_patterns);
  d.alternative_patterns = j.value("alternative_patterns", d.alternative_patterns);
  d.referral_patterns = j.value("referral_patterns", d.referral_patterns);
  d.topics = j.value("topics", d.topics);
  d.ngram_size = j.value("ngram_size", d.ngram_size);
  d.overlap_threshold = j.value("overlap_threshold", d.overlap_threshold);
  d.policy_title_patterns = j.value("policy_title_patterns", d.policy_title_patterns);
  v = std::move(d);
}

void to_json(json& j, const AuditFinding& v) {
  j = {{"check_id", to_string(v.check_id)},
       {"message_id", v.message_id},
       {"message_index", v.message_index},
       {"severity", to_string(v.severity)},
       {"explanation", v.explanation},
       {"evidence", {{"start", v.evidence_start}, {"end", v.evidence_end}}}};
}

}  // namespace coforge
