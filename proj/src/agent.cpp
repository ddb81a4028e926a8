#include "coforge/agent.hpp"

#include <algorithm>

#include "coforge/error.hpp"

namespace coforge {

const char* to_string(AgentKind kind) noexcept {
  return kind == AgentKind::ServiceAgent ? "service_agent" : "persona_agent";
}

AgentKind agent_kind_from_string(std::string_view s) {
  if (s == "service_agent") return AgentKind::ServiceAgent;
  if (s == "persona_agent") return AgentKind::PersonaAgent;
  throw Error(ErrorCode::InvalidSpec, "unknown agent kind", std::string(s));
}

bool is_cooklist_key(std::string_view key) noexcept {
  return std::find(kCooklistKeys.begin(), kCooklistKeys.end(), key) != kCooklistKeys.end();
}

std::optional<std::string> CooklistFacets::get(std::string_view key) const {
  auto it = values.find(std::string(key));
  if (it == values.end()) return std::nullopt;
  return it->second;
}

CooklistFacets validate_cooklist(const std::map<std::string, std::string>& raw) {
  for (const auto& [key, value] : raw) {
    if (!is_cooklist_key(key)) throw Error(ErrorCode::UnknownFacet, "unknown cooklist facet", key);
  }
  return CooklistFacets{raw};
}

void AgentSpec::validate() const {
  if (name.empty()) throw Error(ErrorCode::InvalidSpec, "agent name must be non-empty", "name");
  if (definition.empty()) {
    throw Error(ErrorCode::InvalidSpec, "agent definition must be non-empty", "definition");
  }
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    if (exemplars[i].user_text.empty() || exemplars[i].assistant_text.empty()) {
      throw Error(ErrorCode::InvalidSpec, "exemplar sides must be non-empty",
                  "exemplars[" + std::to_string(i) + "]");
    }
  }
  validate_cooklist(cooklist.values);
}

std::vector<ChatTurn> compose_definition(const AgentSpec& agent) {
  std::vector<ChatTurn> turns;
  turns.reserve(1 + 2 * agent.exemplars.size());
  turns.push_back({Role::System, agent.definition});
  for (const auto& ex : agent.exemplars) {
    turns.push_back({Role::User, ex.user_text});
    turns.push_back({Role::Assistant, ex.assistant_text});
  }
  return turns;
}

AgentSpec AgentRegistry::create(AgentSpec spec) {
  spec.validate();
  spec.id = ids_.next("agent");
  agents_.push_back(spec);
  return spec;
}

AgentSpec AgentRegistry::update(const std::string& id, const AgentPatch& patch) {
  AgentSpec* current = find_mutable(id);
  if (current == nullptr) throw Error(ErrorCode::NotFound, "agent not found", id);
  AgentSpec next = *current;
  if (patch.name) next.name = *patch.name;
  if (patch.kind) next.kind = *patch.kind;
  if (patch.definition) next.definition = *patch.definition;
  if (patch.exemplars) next.exemplars = *patch.exemplars;
  if (patch.cooklist) next.cooklist = *patch.cooklist;
  if (patch.kb_id) next.kb_id = *patch.kb_id;
  if (patch.enabled_rules) next.enabled_rules = *patch.enabled_rules;
  next.validate();
  *current = next;
  return next;
}

void AgentRegistry::remove(const std::string& id) {
  auto it = std::find_if(agents_.begin(), agents_.end(), [&](const AgentSpec& a) { return a.id == id; });
  if (it == agents_.end()) throw Error(ErrorCode::NotFound, "agent not found", id);
  agents_.erase(it);
}

const AgentSpec& AgentRegistry::get(const std::string& id) const {
  const AgentSpec* a = find(id);
  if (a == nullptr) throw Error(ErrorCode::NotFound, "agent not found", id);
  return *a;
}

const AgentSpec* AgentRegistry::find(const std::string& id) const noexcept {
  for (const auto& a : agents_) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

AgentSpec* AgentRegistry::find_mutable(const std::string& id) noexcept {
  return const_cast<AgentSpec*>(std::as_const(*this).find(id));
}

void AgentRegistry::restore(std::vector<AgentSpec> agents, IdSequence ids) {
  agents_ = std::move(agents);
  ids_ = std::move(ids);
}

}  // namespace coforge
