#pragma once

#include <json.hpp>

#include "coforge/agent.hpp"
#include "coforge/audit.hpp"
#include "coforge/chatgroup.hpp"
#include "coforge/ids.hpp"
#include "coforge/knowledge.hpp"
#include "coforge/persona.hpp"
#include "coforge/provider.hpp"
#include "coforge/rules.hpp"
#include "coforge/syncloop.hpp"

// nlohmann adapters for the domain types. Enums travel as their snake_case
// names; optional fields are omitted when empty.
namespace coforge {

using nlohmann::json;

void to_json(json& j, const IdSequence& v);
void from_json(const json& j, IdSequence& v);

void to_json(json& j, const ChatTurn& v);
void from_json(const json& j, ChatTurn& v);
void to_json(json& j, const GenParams& v);
void from_json(const json& j, GenParams& v);
void to_json(json& j, const EmbeddingVector& v);
void from_json(const json& j, EmbeddingVector& v);

void to_json(json& j, const Exemplar& v);
void from_json(const json& j, Exemplar& v);
void to_json(json& j, const AgentSpec& v);
void from_json(const json& j, AgentSpec& v);

void to_json(json& j, const SourceLocator& v);
void from_json(const json& j, SourceLocator& v);
void to_json(json& j, const KnowledgeChunk& v);
void from_json(const json& j, KnowledgeChunk& v);
void to_json(json& j, const SourceDocument& v);
void from_json(const json& j, SourceDocument& v);
void to_json(json& j, const KnowledgeBase& v);
void from_json(const json& j, KnowledgeBase& v);
void to_json(json& j, const RetrievalResult& v);
void to_json(json& j, const AttributedResponse& v);

void to_json(json& j, const RuleDescriptor& v);
void to_json(json& j, const RuleState& v);
void from_json(const json& j, RuleState& v);

void to_json(json& j, const ChatMessage& v);
void from_json(const json& j, ChatMessage& v);
void to_json(json& j, const Participant& v);
void from_json(const json& j, Participant& v);
void to_json(json& j, const GroupSession& v);
void from_json(const json& j, GroupSession& v);

void to_json(json& j, const CuratedExchange& v);
void from_json(const json& j, CuratedExchange& v);

void to_json(json& j, const PersonaSpec& v);
void from_json(const json& j, PersonaSpec& v);
void to_json(json& j, const ArmMetrics& v);
void to_json(json& j, const StrategyReport& v);

void to_json(json& j, const TopicRule& v);
void from_json(const json& j, TopicRule& v);
void to_json(json& j, const AuditCheckConfig& v);
void from_json(const json& j, AuditCheckConfig& v);
void to_json(json& j, const AuditFinding& v);

/// Patch from a partial agent object; absent keys leave fields unchanged.
AgentPatch agent_patch_from_json(const json& j);

}  // namespace coforge
