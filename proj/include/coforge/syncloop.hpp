#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "coforge/chatgroup.hpp"
#include "coforge/knowledge.hpp"
#include "coforge/provider.hpp"

namespace coforge {

/// A creator-corrected question/answer pair lifted from a transcript.
struct CuratedExchange {
  std::string question;
  std::string corrected_answer;
  std::optional<std::string> editor_note;
  std::string source_session;
  std::string source_message;
  std::int64_t created_at = 0;

  bool operator==(const CuratedExchange&) const = default;
};

inline constexpr double kDefaultCuratedBoost = 0.05;

/// Pairs a service-agent message (as it currently reads) with the nearest
/// preceding creator or persona message. Does not modify the session.
CuratedExchange exchange_for_message(const GroupSession& session, const std::string& message_id);

/// Replaces the message text in place, keeping the previous text in its edit
/// history, and returns the exchange it now forms.
CuratedExchange edit_response(GroupSession& session, const std::string& message_id, std::string corrected_text,
                              std::optional<std::string> note = std::nullopt);

std::string curated_document_title(const std::string& session_id);
std::string curated_chunk_text(const CuratedExchange& exchange);

/// Stores "Q: ...\nA: ..." as one curated chunk inside the per-session
/// synthetic document. The chunk is embedded from the question alone so that
/// question-shaped queries find it. Returns the chunk id; `kb` is untouched on
/// error.
std::string sync_to_knowledge(KnowledgeBase& kb, Provider& provider, const CuratedExchange& exchange,
                              double boost = kDefaultCuratedBoost);

}  // namespace coforge
