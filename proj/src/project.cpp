#include "coforge/project.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "coforge/error.hpp"
#include "coforge/serialization.hpp"

namespace coforge {

using nlohmann::json;

namespace {

void to_json(json& j, const PersonaRecord& v) { j = {{"id", v.id}, {"spec", v.spec}, {"agent_id", v.agent_id}}; }
void from_json(const json& j, PersonaRecord& v) {
  v.id = j.at("id").get<std::string>();
  v.spec = j.at("spec").get<PersonaSpec>();
  v.agent_id = j.at("agent_id").get<std::string>();
}

[[noreturn]] void dangling(const std::string& what) {
  throw Error(ErrorCode::IntegrityViolation, "dangling reference", what);
}

void write_all(int fd, const std::string& data, const std::filesystem::path& path) {
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    const ssize_t n = ::write(fd, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::IoError, "write failed", path.string() + ": " + std::strerror(errno));
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

}  // namespace

json project_to_json(const Project& p) {
  json personas = json::array();
  for (const auto& r : p.personas) {
    json j;
    to_json(j, r);
    personas.push_back(std::move(j));
  }
  return {{"format", kProjectFormat},
          {"version", kProjectVersion},
          {"agents", p.agents.list()},
          {"agent_ids", p.agents.ids()},
          {"knowledge_bases", p.knowledge.list()},
          {"knowledge_ids", p.knowledge.ids()},
          {"sessions", p.sessions.list()},
          {"session_ids", p.sessions.ids()},
          {"personas", std::move(personas)},
          {"persona_ids", p.persona_ids},
          {"audit_configs", p.audit_configs}};
}

Project project_from_json(const json& j) {
  if (!j.is_object() || j.value("format", std::string()) != kProjectFormat) {
    throw Error(ErrorCode::VersionMismatch, "not a project file");
  }
  if (j.value("version", -1) != kProjectVersion) {
    throw Error(ErrorCode::VersionMismatch, "unsupported project version", j.value("version", json()).dump());
  }
  try {
    Project p;
    p.agents.restore(j.at("agents").get<std::vector<AgentSpec>>(), j.at("agent_ids").get<IdSequence>());
    p.knowledge.restore(j.at("knowledge_bases").get<std::vector<KnowledgeBase>>(),
                        j.at("knowledge_ids").get<IdSequence>());
    p.sessions.restore(j.at("sessions").get<std::vector<GroupSession>>(), j.at("session_ids").get<IdSequence>());
    for (const auto& r : j.at("personas")) {
      PersonaRecord rec;
      from_json(r, rec);
      p.personas.push_back(std::move(rec));
    }
    p.persona_ids = j.at("persona_ids").get<IdSequence>();
    p.audit_configs = j.at("audit_configs").get<std::vector<AuditCheckConfig>>();
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, "malformed project file", e.what());
  }
}

void validate_integrity(const Project& p, const RuleRegistry& rules) {
  for (const auto& a : p.agents.list()) {
    if (a.kb_id && p.knowledge.find(*a.kb_id) == nullptr) dangling("agent " + a.id + " -> kb " + *a.kb_id);
    for (const auto& r : a.enabled_rules) {
      if (rules.find(r) == nullptr) dangling("agent " + a.id + " -> rule " + r);
    }
  }
  for (const auto& kb : p.knowledge.list()) {
    for (const auto& c : kb.chunks) {
      const SourceDocument* doc = kb.find_document(c.doc_id);
      if (doc == nullptr) dangling("chunk " + kb.id + "/" + c.id + " -> doc " + c.doc_id);
      if (c.embedding.dimension() != kb.embedding_dimension) dangling("chunk " + c.id + " embedding dimension");
      if (c.locator.start_char >= c.locator.end_char || c.locator.end_char > doc->text.size()) {
        dangling("chunk " + c.id + " locator outside doc " + doc->id);
      }
    }
  }
  for (const auto& s : p.sessions.list()) {
    for (const auto& part : s.participants) {
      if (part.active && !p.agents.contains(part.agent_id)) dangling("session " + s.id + " -> agent " + part.agent_id);
    }
    for (const auto& [rule_id, state] : s.rule_states) {
      if (rules.find(rule_id) == nullptr) dangling("session " + s.id + " -> rule " + rule_id);
    }
    for (const auto& m : s.transcript) {
      if (m.author_kind != AuthorKind::Creator && s.participant(m.author_id) == nullptr) {
        dangling("message " + m.message_id + " -> author " + m.author_id);
      }
      if (m.attributions.empty()) continue;
      const KnowledgeBase* kb = m.kb_id ? p.knowledge.find(*m.kb_id) : nullptr;
      if (kb == nullptr) dangling("message " + m.message_id + " -> kb " + m.kb_id.value_or("(none)"));
      for (const auto& loc : m.attributions) {
        if (kb->find_document(loc.doc_id) == nullptr) dangling("message " + m.message_id + " -> doc " + loc.doc_id);
      }
    }
  }
  for (const auto& r : p.personas) {
    if (!p.agents.contains(r.agent_id)) dangling("persona " + r.id + " -> agent " + r.agent_id);
  }
}

void save_project(const Project& project, const std::filesystem::path& path) {
  const std::string data = project_to_json(project).dump();
  const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::IoError, "cannot create temp file", tmp.string() + ": " + std::strerror(errno));
  try {
    write_all(fd, data, tmp);
    if (::fsync(fd) != 0) throw Error(ErrorCode::IoError, "fsync failed", tmp.string());
  } catch (...) {
    ::close(fd);
    ::unlink(tmp.c_str());
    throw;
  }
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) {
    ::unlink(tmp.c_str());
    throw Error(ErrorCode::IoError, "rename failed", path.string() + ": " + std::strerror(errno));
  }
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  const int dfd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
}

Project load_project(const std::filesystem::path& path, const RuleRegistry& rules) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open project file", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::IoError, "project file is not valid JSON", e.what());
  }
  Project p = project_from_json(j);
  validate_integrity(p, rules);
  return p;
}

void delete_agent(Project& project, const std::string& agent_id) {
  project.agents.remove(agent_id);
  project.sessions.detach_agent(agent_id);
  std::erase_if(project.personas, [&](const PersonaRecord& r) { return r.agent_id == agent_id; });
}

std::vector<AuditMessage> audit_view(const GroupSession& session, const KnowledgeStore& knowledge) {
  std::vector<AuditMessage> out;
  out.reserve(session.transcript.size());
  for (const auto& m : session.transcript) {
    AuditMessage a;
    a.message_id = m.message_id;
    a.author_kind = m.author_kind;
    a.author_name = session.display_name(m);
    a.content = m.content;
    if (m.author_kind == AuthorKind::ServiceAgent) {
      std::vector<AttributedSource> sources;
      const KnowledgeBase* kb = m.kb_id ? knowledge.find(*m.kb_id) : nullptr;
      for (const auto& loc : m.attributions) {
        AttributedSource src{loc, {}};
        if (kb != nullptr) {
          if (const SourceDocument* doc = kb->find_document(loc.doc_id);
              doc != nullptr && loc.end_char <= doc->text.size()) {
            src.text = doc->text.substr(loc.start_char, loc.end_char - loc.start_char);
          }
        }
        sources.push_back(std::move(src));
      }
      a.sources = std::move(sources);
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::string export_transcript_jsonl(const GroupSession& session, const KnowledgeStore& knowledge) {
  const auto view = audit_view(session, knowledge);
  std::string out;
  for (std::size_t i = 0; i < view.size(); ++i) {
    const auto& a = view[i];
    const auto& m = session.transcript[i];
    json line = {{"session_id", session.id},
                 {"index", i},
                 {"message_id", a.message_id},
                 {"author_id", m.author_id},
                 {"author_name", a.author_name},
                 {"author_kind", to_string(a.author_kind)},
                 {"content", a.content},
                 {"edited", m.edited},
                 {"created_at", m.created_at}};
    if (a.sources) {
      json attributions = json::array();
      for (const auto& src : *a.sources) {
        json loc = src.locator;
        loc["text"] = src.text;
        attributions.push_back(std::move(loc));
      }
      line["attributions"] = std::move(attributions);
    }
    out += line.dump();
    out += '\n';
  }
  return out;
}

}  // namespace coforge
