#include "coforge/syncloop.hpp"

#include "coforge/error.hpp"
#include "coforge/text.hpp"

namespace coforge {
namespace {

std::size_t index_of(const GroupSession& session, const std::string& message_id) {
  for (std::size_t i = 0; i < session.transcript.size(); ++i) {
    if (session.transcript[i].message_id == message_id) return i;
  }
  throw Error(ErrorCode::NotFound, "message not found", message_id);
}

}  // namespace

CuratedExchange exchange_for_message(const GroupSession& session, const std::string& message_id) {
  const std::size_t idx = index_of(session, message_id);
  const ChatMessage& answer = session.transcript[idx];
  if (answer.author_kind != AuthorKind::ServiceAgent) {
    throw Error(ErrorCode::NotAnAssistantMessage, "only service-agent replies can be curated", message_id);
  }
  for (std::size_t i = idx; i-- > 0;) {
    const ChatMessage& m = session.transcript[i];
    if (m.author_kind == AuthorKind::ServiceAgent) continue;
    CuratedExchange ex;
    ex.question = m.content;
    ex.corrected_answer = answer.content;
    ex.source_session = session.id;
    ex.source_message = message_id;
    ex.created_at = now_millis();
    return ex;
  }
  throw Error(ErrorCode::NoPrecedingUserQuestion, "no question precedes this reply", message_id);
}

CuratedExchange edit_response(GroupSession& session, const std::string& message_id, std::string corrected_text,
                              std::optional<std::string> note) {
  if (text::trim(corrected_text).empty()) {
    throw Error(ErrorCode::InvalidArgument, "corrected text must be non-empty", message_id);
  }
  // Validates role and pairing before anything changes.
  CuratedExchange ex = exchange_for_message(session, message_id);
  ChatMessage& m = session.transcript[index_of(session, message_id)];
  m.edit_history.push_back(std::move(m.content));
  m.content = std::move(corrected_text);
  m.edited = true;
  ex.corrected_answer = m.content;
  ex.editor_note = std::move(note);
  return ex;
}

std::string curated_document_title(const std::string& session_id) { return "curated:" + session_id; }

std::string curated_chunk_text(const CuratedExchange& exchange) {
  return "Q: " + exchange.question + "\nA: " + exchange.corrected_answer;
}

std::string sync_to_knowledge(KnowledgeBase& kb, Provider& provider, const CuratedExchange& exchange,
                              double boost) {
  if (exchange.question.empty() || exchange.corrected_answer.empty()) {
    throw Error(ErrorCode::InvalidArgument, "exchange needs a question and an answer");
  }
  if (boost < 0.0) throw Error(ErrorCode::InvalidArgument, "boost must be >= 0");

  EmbeddingVector embedding = provider.embed_text(exchange.question);
  if (embedding.dimension() != kb.embedding_dimension) {
    throw Error(ErrorCode::ProviderRejected, "embedding dimension does not match knowledge base");
  }

  const std::string title = curated_document_title(exchange.source_session);
  SourceDocument* doc = nullptr;
  for (auto& d : kb.documents) {
    if (d.provenance == Provenance::Curated && d.title == title) doc = &d;
  }
  if (doc == nullptr) {
    kb.documents.push_back({kb.ids.next("doc"), title, "", Provenance::Curated});
    doc = &kb.documents.back();
  }

  const std::string body = curated_chunk_text(exchange);
  if (!doc->text.empty()) doc->text += "\n\n";
  const std::size_t start = doc->text.size();
  doc->text += body;

  std::size_t ordinal = 0;
  for (const auto& c : kb.chunks) {
    if (c.doc_id == doc->id) ++ordinal;
  }

  KnowledgeChunk chunk;
  chunk.id = kb.ids.next("chunk");
  chunk.doc_id = doc->id;
  chunk.ordinal = ordinal;
  chunk.text = body;
  chunk.locator = locate(doc->text, start, start + body.size());
  chunk.locator.doc_id = doc->id;
  chunk.locator.doc_title = doc->title;
  chunk.embedding = std::move(embedding);
  chunk.provenance = Provenance::Curated;
  chunk.priority_boost = boost;
  kb.chunks.push_back(std::move(chunk));
  return kb.chunks.back().id;
}

}  // namespace coforge
