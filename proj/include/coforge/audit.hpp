#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coforge/chatgroup.hpp"
#include "coforge/knowledge.hpp"

namespace coforge {

enum class CheckId { H09Length, H12Steps, H13Constructive, H15Escalation, H16Disclaimer, H17Paraphrase };

const char* to_string(CheckId id) noexcept;
CheckId check_id_from_string(std::string_view s);

enum class Severity { Info, Warn };
const char* to_string(Severity s) noexcept;

struct TopicRule {
  std::string topic;
  std::vector<std::string> keywords;
  std::string disclaimer;

  bool operator==(const TopicRule&) const = default;
};

/// One check's switch and parameters. Only the fields relevant to `check_id`
/// are read. Patterns are case-insensitive ECMAScript regexes.
struct AuditCheckConfig {
  CheckId check_id = CheckId::H09Length;
  bool enabled = true;
  std::size_t max_chars = 600;
  std::vector<std::string> imperative_verbs;
  std::size_t min_imperatives = 3;
  std::vector<std::string> refusal_patterns;
  std::vector<std::string> alternative_patterns;
  std::vector<std::string> referral_patterns;
  std::vector<TopicRule> topics;
  std::size_t ngram_size = 5;
  double overlap_threshold = 0.5;
  std::vector<std::string> policy_title_patterns;

  void validate() const;
  bool operator==(const AuditCheckConfig&) const = default;
};

/// All six checks enabled with the shipped (non-normative) defaults.
std::vector<AuditCheckConfig> default_audit_configs();

struct AttributedSource {
  SourceLocator locator;
  std::string text;

  bool operator==(const AttributedSource&) const = default;
};

struct AuditMessage {
  std::string message_id;
  AuthorKind author_kind = AuthorKind::ServiceAgent;
  std::string author_name;
  std::string content;
  std::optional<std::vector<AttributedSource>> sources;  // nullopt: no attribution data
};

struct AuditFinding {
  CheckId check_id = CheckId::H09Length;
  std::string message_id;
  std::size_t message_index = 0;
  Severity severity = Severity::Warn;
  std::string explanation;
  std::size_t evidence_start = 0;
  std::size_t evidence_end = 0;

  bool operator==(const AuditFinding&) const = default;
};

/// Word n-gram containment of `answer` in `sources`: distinct answer n-grams
/// found in any source, over distinct answer n-grams. nullopt if the answer
/// has fewer than n words.
std::optional<double> ngram_overlap(std::string_view answer, std::span<const std::string> sources, std::size_t n);

/// Count of sentences that open with an imperative verb from `verbs`.
std::size_t count_imperative_sentences(std::string_view text, std::span<const std::string> verbs);

/// Findings ordered by (message index, check id). Only service-agent messages
/// are checked.
std::vector<AuditFinding> audit_transcript(std::span<const AuditMessage> transcript,
                                           std::span<const AuditCheckConfig> configs);

/// One JSON object per line; fields as written by the transcript export.
std::vector<AuditMessage> parse_transcript_jsonl(std::string_view jsonl);
std::string findings_to_jsonl(std::span<const AuditFinding> findings);
std::string summarize_findings(std::span<const AuditFinding> findings, std::size_t audited_messages);

}  // namespace coforge
