#include "coforge/persona.hpp"

#include <memory>

#include "coforge/error.hpp"
#include "coforge/text.hpp"

namespace coforge {

const char* to_string(PersonaStrategy s) noexcept {
  switch (s) {
    case PersonaStrategy::Descriptive: return "descriptive";
    case PersonaStrategy::Chained: return "chained";
    case PersonaStrategy::Explicit: return "explicit";
  }
  return "explicit";
}

PersonaStrategy persona_strategy_from_string(std::string_view s) {
  if (s == "descriptive") return PersonaStrategy::Descriptive;
  if (s == "chained") return PersonaStrategy::Chained;
  if (s == "explicit") return PersonaStrategy::Explicit;
  throw Error(ErrorCode::InvalidSpec, "unknown persona strategy", std::string(s));
}

void PersonaSpec::validate() const {
  if (name.empty()) throw Error(ErrorCode::InvalidSpec, "persona name must be non-empty", "name");
  if (strategy == PersonaStrategy::Explicit && tendency_clause.empty()) {
    throw Error(ErrorCode::InvalidSpec, "explicit personas need a tendency clause", "tendency_clause");
  }
  if ((strategy == PersonaStrategy::Descriptive || strategy == PersonaStrategy::Chained) && profile.empty()) {
    throw Error(ErrorCode::InvalidSpec, "descriptive and chained personas need a profile", "profile");
  }
}

const std::vector<PersonaFixture>& reference_personas() {
  static const std::vector<PersonaFixture> fixtures = [] {
    auto make = [](std::string key, std::string label, std::string profile, std::string clause) {
      return PersonaFixture{std::move(key), label,
                            PersonaSpec{"A", std::move(profile), std::move(clause), PersonaStrategy::Explicit}};
    };
    return std::vector<PersonaFixture>{
        make("inexperienced", "Inexperienced patron", "Library patron with little experience using the scanner.",
             "Due to A's lack of experience, A tends to be not confident and ask simple questions."),
        make("experienced", "Experienced patron", "Library patron who has used the scanner before.",
             "A has some experience using the scanner so A tends to ask questions about some details."),
        make("low_literacy_elder", "Low literacy old man", "Older man with low digital literacy.",
             "A is an old man lacking modern technical knowledge so A tends to ask very simple questions and "
             "inquire about some technical terms."),
        make("high_literacy", "High literacy patron", "Patron with advanced technical knowledge.",
             "A has advanced knowledge in technical areas and tends to ask tricky questions."),
        make("curious_child", "Curious child", "A curious child visiting the library.",
             "A is a curious child, so aside from questions about how to use the scanner, A also tends to ask "
             "questions about how things work."),
    };
  }();
  return fixtures;
}

const PersonaFixture* find_reference_persona(std::string_view key) {
  for (const auto& f : reference_personas()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

AgentSpec build_persona_agent(const PersonaSpec& persona) {
  persona.validate();
  AgentSpec agent;
  agent.name = persona.name;
  agent.kind = AgentKind::PersonaAgent;
  switch (persona.strategy) {
    case PersonaStrategy::Descriptive:
      agent.definition = "You are role-playing this library patron: " + persona.profile;
      break;
    case PersonaStrategy::Explicit:
      agent.definition = "You are role-playing patron " + persona.name + ". " + persona.tendency_clause;
      break;
    case PersonaStrategy::Chained:
      agent.definition = "You are role-playing library patron " + persona.name + ". Profile: " + persona.profile;
      break;
  }
  agent.validate();
  return agent;
}

namespace {

std::string render_context(std::span<const ChatTurn> context) {
  std::string out;
  for (const auto& turn : context) {
    if (turn.role == Role::System) continue;
    if (!out.empty()) out += '\n';
    out += (turn.role == Role::Assistant ? "You: " : "") + turn.content;
  }
  return out.empty() ? "(The conversation has not started yet.)" : out;
}

}  // namespace

std::string chain_infer_question(const PersonaSpec& persona, std::span<const ChatTurn> context, Provider& provider,
                                 const GenParams& params) {
  if (persona.strategy != PersonaStrategy::Chained) {
    throw Error(ErrorCode::InvalidArgument, "question inference needs a chained persona", persona.name);
  }
  const std::vector<ChatTurn> prompt = {
      {Role::System,
       "You predict what a library patron will ask next. Patron digital literacy and experience: " + persona.profile +
           "\nInfer the single most probable question this patron would pose next in the conversation. "
           "Output only the question."},
      {Role::User, "Conversation so far:\n" + render_context(context)},
  };
  return provider.chat_complete(prompt, params);
}

std::string chain_rephrase(std::string_view question, const PersonaSpec& persona, Provider& provider,
                           const GenParams& params) {
  if (persona.strategy != PersonaStrategy::Chained) {
    throw Error(ErrorCode::InvalidArgument, "rephrasing needs a chained persona", persona.name);
  }
  const std::vector<ChatTurn> prompt = {
      {Role::System, "Rephrase the question in the tone of this library patron: " + persona.profile +
                         "\nOutput only the rephrased question."},
      {Role::User, question.empty() ? std::string("(no question)") : std::string(question)},
  };
  std::string rephrased = provider.chat_complete(prompt, params);
  if (text::trim(rephrased).empty()) return std::string(question);
  return rephrased;
}

TurnGenerator chained_turn_generator(PersonaSpec persona, GenParams params) {
  return [persona = std::move(persona), params](const AgentSpec&, const std::vector<ChatTurn>& mapped,
                                                Provider& provider) {
    const std::string question = chain_infer_question(persona, mapped, provider, params);
    return chain_rephrase(question, persona, provider, params);
  };
}

// ---------------------------------------------------------------------------

ArmMetrics measure_transcript(const GroupSession& session) {
  ArmMetrics m;
  m.session_id = session.id;
  m.message_count = session.transcript.size();
  for (const auto& msg : session.transcript) m.total_chars += msg.content.size();
  m.mean_chars_per_message =
      m.message_count == 0 ? 0.0 : static_cast<double>(m.total_chars) / static_cast<double>(m.message_count);
  return m;
}

namespace {

void finish_report(StrategyReport& report) {
  const auto first = report.arms.empty() ? 0LL : static_cast<long long>(report.arms.front().total_chars);
  std::size_t best = 0;
  bool tie = false;
  for (std::size_t i = 0; i < report.arms.size(); ++i) {
    auto& arm = report.arms[i];
    arm.delta_chars_vs_first = static_cast<long long>(arm.total_chars) - first;
    if (i == 0) continue;
    if (arm.total_chars > report.arms[best].total_chars) {
      best = i;
      tie = false;
    } else if (arm.total_chars == report.arms[best].total_chars) {
      tie = true;
    }
  }
  if (tie || report.arms.empty()) {
    report.longer_arm.reset();
  } else {
    report.longer_arm = best;
  }
}

}  // namespace

StrategyReport compare_strategies(AgentRegistry& agents, SessionStore& sessions, const KnowledgeStore& knowledge,
                                  Provider& provider, const RuleRegistry* rules, const std::string& service_agent_id,
                                  std::span<const ComparisonArm> arms, std::size_t turns,
                                  const GroupChatOptions& options) {
  if (arms.size() < 2) throw Error(ErrorCode::InvalidArgument, "comparison needs at least two arms");
  if (turns < 1) throw Error(ErrorCode::InvalidArgument, "turns must be >= 1");
  const AgentSpec& service = agents.get(service_agent_id);
  if (service.kind != AgentKind::ServiceAgent) {
    throw Error(ErrorCode::InvalidArgument, "comparison target must be a service agent", service_agent_id);
  }
  for (const auto& arm : arms) {
    if (arm.persona) arm.persona->validate();
  }

  StrategyReport report;
  report.service_agent_id = service_agent_id;
  report.turns = turns;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const ComparisonArm& arm = arms[i];
    AgentSpec patron;
    if (arm.persona) {
      patron = build_persona_agent(*arm.persona);
    } else {
      patron.name = "Patron";
      patron.kind = AgentKind::PersonaAgent;
      patron.definition = std::string(kBaselinePatronDefinition);
    }
    const AgentSpec created = agents.create(patron);

    std::unique_ptr<MockProvider> scripted;
    if (arm.script) scripted = std::make_unique<MockProvider>(*arm.script);
    Provider& arm_provider = scripted ? static_cast<Provider&>(*scripted) : provider;

    GroupSession& session = sessions.create(agents, {created.id, service_agent_id}, TurnPolicy::RoundRobin, turns);
    GroupChatContext ctx{agents, knowledge, arm_provider, rules, options, {}};
    if (arm.persona && arm.persona->strategy == PersonaStrategy::Chained) {
      ctx.generators.emplace(created.id, chained_turn_generator(*arm.persona, options.answer.params));
    }
    run_simulation(session, ctx);

    ArmMetrics metrics = measure_transcript(session);
    metrics.label = arm.persona ? arm.persona->name + " (" + to_string(arm.persona->strategy) + ")" : "no persona";
    metrics.persona = arm.persona;
    metrics.persona_agent_id = created.id;
    report.arms.push_back(std::move(metrics));
  }
  finish_report(report);
  return report;
}

StrategyReport recompute_report(const StrategyReport& report, const SessionStore& sessions) {
  StrategyReport out = report;
  for (auto& arm : out.arms) {
    ArmMetrics fresh = measure_transcript(sessions.get(arm.session_id));
    arm.message_count = fresh.message_count;
    arm.total_chars = fresh.total_chars;
    arm.mean_chars_per_message = fresh.mean_chars_per_message;
  }
  finish_report(out);
  return out;
}

}  // namespace coforge
