#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "coforge/agent.hpp"
#include "coforge/audit.hpp"
#include "coforge/chatgroup.hpp"
#include "coforge/knowledge.hpp"
#include "coforge/persona.hpp"
#include "coforge/rules.hpp"

namespace coforge {

inline constexpr std::string_view kProjectFormat = "coforge-project";
inline constexpr int kProjectVersion = 1;

struct PersonaRecord {
  std::string id;
  PersonaSpec spec;
  std::string agent_id;

  bool operator==(const PersonaRecord&) const = default;
};

/// Everything a creator works on, persisted as one self-describing JSON file.
struct Project {
  AgentRegistry agents;
  KnowledgeStore knowledge;
  SessionStore sessions;
  std::vector<PersonaRecord> personas;
  IdSequence persona_ids;
  std::vector<AuditCheckConfig> audit_configs = default_audit_configs();

  bool operator==(const Project&) const = default;
};

nlohmann::json project_to_json(const Project& project);
/// Throws VersionMismatch on a foreign format/version and IoError on a
/// malformed document. Does not check integrity.
Project project_from_json(const nlohmann::json& j);

/// Throws IntegrityViolation naming the first dangling reference.
void validate_integrity(const Project& project, const RuleRegistry& rules);

/// Writes a temp file next to `path`, fsyncs it, then renames over `path`.
void save_project(const Project& project, const std::filesystem::path& path);
Project load_project(const std::filesystem::path& path, const RuleRegistry& rules);

/// Removes the agent and marks it inactive in every session.
void delete_agent(Project& project, const std::string& agent_id);

/// Session messages in the shape the auditor reads; attribution text is
/// sliced from the stored source documents.
std::vector<AuditMessage> audit_view(const GroupSession& session, const KnowledgeStore& knowledge);

/// One JSON object per message.
std::string export_transcript_jsonl(const GroupSession& session, const KnowledgeStore& knowledge);

}  // namespace coforge
