#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coforge/agent.hpp"
#include "coforge/chatgroup.hpp"
#include "coforge/provider.hpp"

namespace coforge {

/// descriptive: free-text profile as the system prompt.
/// chained: infer the next question, then rephrase it in the persona's tone
///          (two provider calls per turn).
/// explicit: states the kinds of questions the persona tends to ask.
enum class PersonaStrategy { Descriptive, Chained, Explicit };

const char* to_string(PersonaStrategy s) noexcept;
PersonaStrategy persona_strategy_from_string(std::string_view s);

struct PersonaSpec {
  std::string name;
  std::string profile;
  std::string tendency_clause;
  PersonaStrategy strategy = PersonaStrategy::Explicit;

  void validate() const;
  bool operator==(const PersonaSpec&) const = default;
};

struct PersonaFixture {
  std::string key;
  std::string label;
  PersonaSpec spec;
};

/// The five reference library-patron personas (explicit strategy).
const std::vector<PersonaFixture>& reference_personas();
const PersonaFixture* find_reference_persona(std::string_view key);

inline constexpr std::string_view kBaselinePatronDefinition = "You are a library patron.";

AgentSpec build_persona_agent(const PersonaSpec& persona);

std::string chain_infer_question(const PersonaSpec& persona, std::span<const ChatTurn> context, Provider& provider,
                                 const GenParams& params = {});

/// Falls back to `question` when the rephrased text is empty.
std::string chain_rephrase(std::string_view question, const PersonaSpec& persona, Provider& provider,
                           const GenParams& params = {});

/// Turn generator that runs the two-step chain for a chained persona.
TurnGenerator chained_turn_generator(PersonaSpec persona, GenParams params = {});

struct ArmMetrics {
  std::string label;
  std::optional<PersonaSpec> persona;
  std::string session_id;
  std::string persona_agent_id;
  std::size_t message_count = 0;
  std::size_t total_chars = 0;
  double mean_chars_per_message = 0.0;
  long long delta_chars_vs_first = 0;

  bool operator==(const ArmMetrics&) const = default;
};

struct StrategyReport {
  std::string service_agent_id;
  std::size_t turns = 0;
  std::vector<ArmMetrics> arms;
  std::optional<std::size_t> longer_arm;  // index with the largest total_chars; nullopt on a tie

  bool operator==(const StrategyReport&) const = default;
};

/// Length metrics (UTF-8 bytes) over every message of a transcript.
ArmMetrics measure_transcript(const GroupSession& session);

struct ComparisonArm {
  std::optional<PersonaSpec> persona;  // nullopt: bare baseline patron
  std::optional<std::vector<std::string>> script;  // per-arm mock replies
};

/// One round-robin session per arm (persona speaks first), then length
/// metrics per arm. Persona agents and sessions are added to the stores.
StrategyReport compare_strategies(AgentRegistry& agents, SessionStore& sessions, const KnowledgeStore& knowledge,
                                  Provider& provider, const RuleRegistry* rules, const std::string& service_agent_id,
                                  std::span<const ComparisonArm> arms, std::size_t turns,
                                  const GroupChatOptions& options = {});

/// Recomputes a report's metrics from the stored transcripts.
StrategyReport recompute_report(const StrategyReport& report, const SessionStore& sessions);

}  // namespace coforge
