#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "coforge/ids.hpp"
#include "coforge/provider.hpp"

namespace coforge {

enum class AgentKind { ServiceAgent, PersonaAgent };

const char* to_string(AgentKind kind) noexcept;
AgentKind agent_kind_from_string(std::string_view s);

/// The closed ten-facet ideation checklist.
inline constexpr std::array<std::string_view, 10> kCooklistKeys = {
    "size",     "deployment", "role",      "functionality", "dialogue",
    "engagement", "escalation", "humanness", "maintenance",   "evaluation"};

bool is_cooklist_key(std::string_view key) noexcept;

/// Descriptive metadata only; never injected into prompts.
struct CooklistFacets {
  std::map<std::string, std::string> values;

  std::optional<std::string> get(std::string_view key) const;
  bool operator==(const CooklistFacets&) const = default;
};

/// Throws UnknownFacet naming the first key outside the facet set.
CooklistFacets validate_cooklist(const std::map<std::string, std::string>& raw);

struct Exemplar {
  std::string user_text;
  std::string assistant_text;

  bool operator==(const Exemplar&) const = default;
};

struct AgentSpec {
  std::string id;
  std::string name;
  AgentKind kind = AgentKind::ServiceAgent;
  std::string definition;
  std::vector<Exemplar> exemplars;
  CooklistFacets cooklist;
  std::optional<std::string> kb_id;
  std::set<std::string> enabled_rules;

  /// Throws InvalidSpec naming the violated invariant.
  void validate() const;

  bool operator==(const AgentSpec&) const = default;
};

/// System turn with the definition, then one user/assistant pair per exemplar.
std::vector<ChatTurn> compose_definition(const AgentSpec& agent);

struct AgentPatch {
  std::optional<std::string> name;
  std::optional<AgentKind> kind;
  std::optional<std::string> definition;
  std::optional<std::vector<Exemplar>> exemplars;
  std::optional<CooklistFacets> cooklist;
  std::optional<std::optional<std::string>> kb_id;
  std::optional<std::set<std::string>> enabled_rules;
};

class AgentRegistry {
 public:
  /// Ignores any id on the input and assigns a fresh one.
  AgentSpec create(AgentSpec spec);
  AgentSpec update(const std::string& id, const AgentPatch& patch);
  void remove(const std::string& id);

  /// Creation order.
  const std::vector<AgentSpec>& list() const noexcept { return agents_; }
  const AgentSpec& get(const std::string& id) const;
  const AgentSpec* find(const std::string& id) const noexcept;
  bool contains(const std::string& id) const noexcept { return find(id) != nullptr; }

  IdSequence& ids() noexcept { return ids_; }
  const IdSequence& ids() const noexcept { return ids_; }
  /// Replaces contents wholesale (used by project load).
  void restore(std::vector<AgentSpec> agents, IdSequence ids);

  bool operator==(const AgentRegistry&) const = default;

 private:
  AgentSpec* find_mutable(const std::string& id) noexcept;

  std::vector<AgentSpec> agents_;
  IdSequence ids_;
};

}  // namespace coforge
