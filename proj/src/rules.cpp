#include "coforge/rules.hpp"

#include <algorithm>
#include <regex>

#include "coforge/agent.hpp"
#include "coforge/error.hpp"
#include "coforge/text.hpp"

namespace coforge {

const char* to_string(Hook hook) noexcept {
  switch (hook) {
    case Hook::PrePrompt: return "pre_prompt";
    case Hook::PostResponse: return "post_response";
    case Hook::TurnAdvance: return "turn_advance";
  }
  return "pre_prompt";
}

void RuleRegistry::register_rule(RuleDescriptor descriptor, RuleHooks hooks) {
  if (descriptor.rule_id.empty()) throw Error(ErrorCode::InvalidArgument, "rule id must be non-empty");
  if (find(descriptor.rule_id) != nullptr) {
    throw Error(ErrorCode::InvalidArgument, "rule already registered", descriptor.rule_id);
  }
  if (descriptor.hooks.empty()) {
    throw Error(ErrorCode::InvalidArgument, "rule must implement at least one hook", descriptor.rule_id);
  }
  const bool complete = (!descriptor.hooks.contains(Hook::PrePrompt) || hooks.pre_prompt) &&
                        (!descriptor.hooks.contains(Hook::PostResponse) || hooks.post_response) &&
                        (!descriptor.hooks.contains(Hook::TurnAdvance) || hooks.turn_advance);
  if (!complete) {
    throw Error(ErrorCode::InvalidArgument, "declared hook has no implementation", descriptor.rule_id);
  }
  entries_.push_back({std::move(descriptor), std::move(hooks)});
}

std::vector<RuleDescriptor> RuleRegistry::descriptors() const {
  std::vector<RuleDescriptor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.descriptor);
  return out;
}

const RuleRegistry::Entry* RuleRegistry::find(std::string_view rule_id) const noexcept {
  for (const auto& e : entries_) {
    if (e.descriptor.rule_id == rule_id) return &e;
  }
  return nullptr;
}

RuleRegistry default_rule_registry() {
  RuleRegistry registry;
  register_stepwise_rule(registry);
  return registry;
}

void enable_rule(AgentRegistry& agents, const RuleRegistry& rules, const std::string& agent_id,
                 const std::string& rule_id) {
  if (rules.find(rule_id) == nullptr) throw Error(ErrorCode::UnknownRule, "unknown rule", rule_id);
  auto enabled = agents.get(agent_id).enabled_rules;
  enabled.insert(rule_id);
  AgentPatch patch;
  patch.enabled_rules = std::move(enabled);
  agents.update(agent_id, patch);
}

void disable_rule(AgentRegistry& agents, const RuleRegistry& rules, const std::string& agent_id,
                  const std::string& rule_id) {
  if (rules.find(rule_id) == nullptr) throw Error(ErrorCode::UnknownRule, "unknown rule", rule_id);
  auto enabled = agents.get(agent_id).enabled_rules;
  enabled.erase(rule_id);
  AgentPatch patch;
  patch.enabled_rules = std::move(enabled);
  agents.update(agent_id, patch);
}

// ---------------------------------------------------------------------------

RulePipeline::RulePipeline(const RuleRegistry& registry, const std::set<std::string>& enabled,
                           std::string session_id, RuleStateMap& states)
    : registry_(registry), enabled_(enabled), session_id_(std::move(session_id)), states_(states) {}

template <typename Fn>
void RulePipeline::for_each_enabled(Hook hook, Fn&& fn) {
  for (const auto& entry : registry_.entries()) {
    const auto& id = entry.descriptor.rule_id;
    if (!enabled_.contains(id) || !entry.descriptor.hooks.contains(hook)) continue;
    RuleStateSlot slot;
    if (auto it = states_.find(id); it != states_.end()) slot = it->second;
    const bool stop = fn(entry, slot);
    if (slot) {
      slot->rule_id = id;
      states_[id] = *slot;
    } else {
      states_.erase(id);
    }
    if (stop) break;
  }
}

std::optional<std::string> RulePipeline::turn_advance(std::string_view user_message) {
  std::optional<std::string> reply;
  for_each_enabled(Hook::TurnAdvance, [&](const RuleRegistry::Entry& e, RuleStateSlot& slot) {
    reply = e.hooks.turn_advance(user_message, slot);
    return reply.has_value();
  });
  return reply;
}

void RulePipeline::pre_prompt(std::vector<ChatTurn>& prompt) {
  for_each_enabled(Hook::PrePrompt, [&](const RuleRegistry::Entry& e, RuleStateSlot& slot) {
    e.hooks.pre_prompt(prompt, slot);
    return false;
  });
}

std::string RulePipeline::post_response(std::string response) {
  for_each_enabled(Hook::PostResponse, [&](const RuleRegistry::Entry& e, RuleStateSlot& slot) {
    response = e.hooks.post_response(std::move(response), slot, session_id_);
    return false;
  });
  return response;
}

// --- step-by-step ----------------------------------------------------------

namespace {

// Compares decimal strings by numeric value without overflow.
bool numeric_less(std::string_view a, std::string_view b) {
  while (a.size() > 1 && a.front() == '0') a.remove_prefix(1);
  while (b.size() > 1 && b.front() == '0') b.remove_prefix(1);
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

std::string step_reply(const std::string& step) { return step + std::string(kStepwiseSuffix); }

}  // namespace

std::vector<std::string> parse_steps(std::string_view response) {
  static const std::regex kStepLine(R"(^[Ss][Tt][Ee][Pp]\s+(\d+)\s*:\s*(.+)$)");
  struct Parsed {
    std::string number;
    std::string text;
  };
  std::vector<Parsed> parsed;
  std::size_t pos = 0;
  while (pos <= response.size()) {
    std::size_t end = response.find('\n', pos);
    if (end == std::string_view::npos) end = response.size();
    std::string line(response.substr(pos, end - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (std::regex_match(line, m, kStepLine)) parsed.push_back({m[1].str(), m[2].str()});
    pos = end + 1;
  }
  std::stable_sort(parsed.begin(), parsed.end(),
                   [](const Parsed& a, const Parsed& b) { return numeric_less(a.number, b.number); });
  std::vector<std::string> steps;
  steps.reserve(parsed.size());
  for (auto& p : parsed) steps.push_back(std::move(p.text));
  return steps;
}

std::string render_steps(const std::vector<std::string>& steps) {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i > 0) out += '\n';
    out += "STEP " + std::to_string(i + 1) + ": " + steps[i];
  }
  return out;
}

std::vector<ChatTurn> stepwise_pre_prompt(std::vector<ChatTurn> prompt, const RuleStateSlot& state) {
  if (!state) prompt.push_back({Role::System, std::string(kStepwiseInstruction)});
  return prompt;
}

RuleState make_step_state(std::string session_id, std::vector<std::string> steps) {
  return RuleState{std::string(kStepwiseRuleId), std::move(session_id),
                   nlohmann::json{{"steps", std::move(steps)}, {"cursor", 0}}};
}

StepAdvance advance_step(RuleStateSlot& state) {
  if (!state) return {};
  auto& payload = state->payload;
  const auto steps = payload.at("steps").get<std::vector<std::string>>();
  const auto cursor = payload.at("cursor").get<std::size_t>();
  if (cursor >= steps.size()) {
    state.reset();
    return {};
  }
  payload["cursor"] = cursor + 1;
  return {steps[cursor]};
}

bool is_done_reply(std::string_view user_message) {
  return text::to_lower_ascii(text::trim(user_message)) == "done";
}

void register_stepwise_rule(RuleRegistry& registry) {
  RuleDescriptor descriptor{
      std::string(kStepwiseRuleId),
      "Step-by-step guidance",
      "Procedures are delivered one step at a time. The patron replies 'done' to get the next step.",
      {Hook::PrePrompt, Hook::PostResponse, Hook::TurnAdvance}};

  RuleHooks hooks;
  hooks.pre_prompt = [](std::vector<ChatTurn>& prompt, const RuleStateSlot& state) {
    prompt = stepwise_pre_prompt(std::move(prompt), state);
  };
  hooks.post_response = [](std::string response, RuleStateSlot& state, const std::string& session_id) {
    // A procedure already in progress keeps its cursor; side questions pass through.
    if (state) return response;
    auto steps = parse_steps(response);
    if (steps.empty()) return response;
    state = make_step_state(session_id, std::move(steps));
    return step_reply(*advance_step(state).step);
  };
  hooks.turn_advance = [](std::string_view user_message, RuleStateSlot& state) -> std::optional<std::string> {
    if (!state || !is_done_reply(user_message)) return std::nullopt;
    const StepAdvance next = advance_step(state);
    if (next.completed()) return std::string(kStepwiseCompleted);
    return step_reply(*next.step);
  };
  registry.register_rule(std::move(descriptor), std::move(hooks));
}

}  // namespace coforge
