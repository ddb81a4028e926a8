#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "coforge/provider.hpp"

namespace coforge {

class AgentRegistry;

enum class Hook { PrePrompt, PostResponse, TurnAdvance };

const char* to_string(Hook hook) noexcept;

struct RuleDescriptor {
  std::string rule_id;
  std::string display_name;
  std::string description;
  std::set<Hook> hooks;

  bool operator==(const RuleDescriptor&) const = default;
};

/// Per-session persisted state of one enabled rule. The payload is owned by
/// the rule; for step-by-step it is {"steps": [...], "cursor": n}.
struct RuleState {
  std::string rule_id;
  std::string session_id;
  nlohmann::json payload;

  bool operator==(const RuleState&) const = default;
};

using RuleStateSlot = std::optional<RuleState>;
/// Keyed by rule id.
using RuleStateMap = std::map<std::string, RuleState>;

struct RuleHooks {
  std::function<void(std::vector<ChatTurn>& prompt, const RuleStateSlot& state)> pre_prompt;
  std::function<std::string(std::string response, RuleStateSlot& state, const std::string& session_id)>
      post_response;
  /// Returns a reply that replaces the model call, or nullopt to fall through.
  std::function<std::optional<std::string>(std::string_view user_message, RuleStateSlot& state)>
      turn_advance;
};

class RuleRegistry {
 public:
  struct Entry {
    RuleDescriptor descriptor;
    RuleHooks hooks;
  };

  /// Throws InvalidArgument on a duplicate id, an empty hook set, or a
  /// declared hook without an implementation.
  void register_rule(RuleDescriptor descriptor, RuleHooks hooks);

  /// Registration order.
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::vector<RuleDescriptor> descriptors() const;
  const Entry* find(std::string_view rule_id) const noexcept;

 private:
  std::vector<Entry> entries_;
};

/// A registry with the built-in rules (currently the step-by-step rule).
RuleRegistry default_rule_registry();

void enable_rule(AgentRegistry& agents, const RuleRegistry& rules, const std::string& agent_id,
                 const std::string& rule_id);
void disable_rule(AgentRegistry& agents, const RuleRegistry& rules, const std::string& agent_id,
                  const std::string& rule_id);

/// Applies the hooks of the enabled rules in registration order against one
/// session's rule states.
class RulePipeline {
 public:
  RulePipeline(const RuleRegistry& registry, const std::set<std::string>& enabled, std::string session_id,
               RuleStateMap& states);

  std::optional<std::string> turn_advance(std::string_view user_message);
  void pre_prompt(std::vector<ChatTurn>& prompt);
  std::string post_response(std::string response);

 private:
  template <typename Fn>
  void for_each_enabled(Hook hook, Fn&& fn);

  const RuleRegistry& registry_;
  const std::set<std::string>& enabled_;
  std::string session_id_;
  RuleStateMap& states_;
};

// --- step-by-step guidance -------------------------------------------------

inline constexpr std::string_view kStepwiseRuleId = "step_by_step";
inline constexpr std::string_view kStepwiseInstruction =
    "When the answer is a procedure, format it as lines 'STEP n: instruction', one per line, nothing "
    "else between steps.";
inline constexpr std::string_view kStepwiseSuffix = "\n(Reply 'done' for the next step.)";
inline constexpr std::string_view kStepwiseCompleted = "All steps are complete.";

/// Lines matching `STEP <n>: <text>` ordered by n, then by line order.
std::vector<std::string> parse_steps(std::string_view response);
std::string render_steps(const std::vector<std::string>& steps);

/// Appends the formatting instruction unless a procedure is already active.
std::vector<ChatTurn> stepwise_pre_prompt(std::vector<ChatTurn> prompt, const RuleStateSlot& state);

RuleState make_step_state(std::string session_id, std::vector<std::string> steps);

struct StepAdvance {
  std::optional<std::string> step;  // nullopt once completed
  bool completed() const noexcept { return !step.has_value(); }
};

/// Returns steps[cursor] and moves the cursor; on an exhausted cursor returns
/// completed and clears the slot.
StepAdvance advance_step(RuleStateSlot& state);

bool is_done_reply(std::string_view user_message);

void register_stepwise_rule(RuleRegistry& registry);

}  // namespace coforge
