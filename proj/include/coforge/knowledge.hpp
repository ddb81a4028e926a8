#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coforge/agent.hpp"
#include "coforge/ids.hpp"
#include "coforge/provider.hpp"
#include "coforge/rules.hpp"

namespace coforge {

enum class Provenance { Uploaded, Curated };

const char* to_string(Provenance p) noexcept;
Provenance provenance_from_string(std::string_view s);

/// Where a chunk came from. Offsets are byte offsets into the stored source
/// text; lines are 1-based newline counts and pages are 1-based form-feed
/// counts (absent when the source has no form feeds).
struct SourceLocator {
  std::string doc_id;
  std::string doc_title;
  std::size_t start_char = 0;
  std::size_t end_char = 0;
  std::size_t start_line = 1;
  std::optional<std::size_t> page;

  bool operator==(const SourceLocator&) const = default;
};

/// Fills line and page for the span [start, end) of `source`.
SourceLocator locate(std::string_view source, std::size_t start, std::size_t end);

struct KnowledgeChunk {
  std::string id;
  std::string doc_id;
  std::size_t ordinal = 0;
  std::string text;
  SourceLocator locator;
  EmbeddingVector embedding;
  Provenance provenance = Provenance::Uploaded;
  double priority_boost = 0.0;

  bool operator==(const KnowledgeChunk&) const = default;
};

struct SourceDocument {
  std::string id;
  std::string title;
  std::string text;
  Provenance provenance = Provenance::Uploaded;

  bool operator==(const SourceDocument&) const = default;
};

struct KnowledgeBase {
  std::string id;
  std::string name;
  std::size_t embedding_dimension = kMockEmbeddingDimension;
  std::vector<SourceDocument> documents;
  std::vector<KnowledgeChunk> chunks;
  IdSequence ids;  // doc and chunk ids, unique within this base

  const SourceDocument* find_document(std::string_view doc_id) const noexcept;
  const KnowledgeChunk* find_chunk(std::string_view chunk_id) const noexcept;

  bool operator==(const KnowledgeBase&) const = default;
};

class KnowledgeStore {
 public:
  KnowledgeBase& create(std::string name, std::size_t embedding_dimension);
  KnowledgeBase& get(const std::string& id);
  const KnowledgeBase& get(const std::string& id) const;
  const KnowledgeBase* find(const std::string& id) const noexcept;
  const std::vector<KnowledgeBase>& list() const noexcept { return bases_; }

  const IdSequence& ids() const noexcept { return ids_; }
  void restore(std::vector<KnowledgeBase> bases, IdSequence ids);

  bool operator==(const KnowledgeStore&) const = default;

 private:
  std::vector<KnowledgeBase> bases_;
  IdSequence ids_;
};

// --- chunking --------------------------------------------------------------

struct ChunkingOptions {
  std::size_t max_chars = 800;
  std::size_t overlap_chars = 100;
};

struct ChunkSpan {
  std::string text;
  SourceLocator locator;  // doc id/title left empty
};

/// Paragraphs are separated by blank lines. Paragraphs longer than max_chars
/// are cut at the last sentence boundary that fits (hard cut otherwise), and
/// consecutive pieces overlap by overlap_chars.
std::vector<ChunkSpan> chunk_document(std::string_view text, const ChunkingOptions& options = {});

// --- ingest ----------------------------------------------------------------

struct IngestOptions {
  Provenance provenance = Provenance::Uploaded;
  double priority_boost = 0.0;
  std::size_t max_document_bytes = 2 * 1024 * 1024;
  ChunkingOptions chunking;
};

/// All chunks are embedded before anything is stored; on any error `kb` is
/// left untouched.
std::size_t ingest_document(KnowledgeBase& kb, Provider& provider, std::string_view title, std::string_view text,
                            const IngestOptions& options = {});

// --- retrieval -------------------------------------------------------------

struct RetrievalResult {
  std::string chunk_id;
  std::string doc_id;
  std::size_t ordinal = 0;
  std::string text;
  SourceLocator locator;
  Provenance provenance = Provenance::Uploaded;
  double raw_cosine = 0.0;
  double priority_boost = 0.0;
  double effective_score = 0.0;

  bool operator==(const RetrievalResult&) const = default;
};

/// Ranking order: effective score descending, then (doc_id, ordinal) ascending.
bool ranks_before(const RetrievalResult& a, const RetrievalResult& b) noexcept;

/// Exact scan over every chunk; returns the first min(k, |chunks|) in rank order.
std::vector<RetrievalResult> search(const KnowledgeBase& kb, const EmbeddingVector& query, std::size_t k);
std::vector<RetrievalResult> search(const KnowledgeBase& kb, Provider& provider, std::string_view query,
                                    std::size_t k);

struct ContextBlock {
  std::string text;
  std::size_t included = 0;  // leading results placed in the block
};

std::string source_label(const SourceLocator& locator);

/// Rank-ordered "[SOURCE title p.P l.L]" sections within char_budget. The top
/// result is always included, truncated if needed.
ContextBlock assemble_context(std::span<const RetrievalResult> results, std::size_t char_budget = 4000);

struct AttributedResponse {
  std::string text;
  std::vector<SourceLocator> attributions;
  std::vector<RetrievalResult> retrieval_trace;

  bool operator==(const AttributedResponse&) const = default;
};

inline constexpr std::string_view kGroundingInstruction = "Answer only from the following context.\n";

struct AnswerOptions {
  std::size_t k = 4;
  std::size_t char_budget = 4000;
  std::string grounding_instruction = std::string(kGroundingInstruction);
  GenParams params;
};

/// The retrieval system turn plus what it attributes.
struct GroundingTurn {
  ChatTurn turn;
  std::vector<RetrievalResult> trace;
  std::vector<SourceLocator> attributions;
};

GroundingTurn build_grounding(const KnowledgeBase& kb, Provider& provider, std::string_view query,
                              const AnswerOptions& options);

/// Grounded single-agent reply. `kb` must be the agent's knowledge base;
/// `rules` (optional) applies the agent's enabled rules.
AttributedResponse answer(const AgentSpec& agent, const KnowledgeBase* kb, Provider& provider,
                          std::span<const ChatTurn> prior_turns, std::string_view user_query,
                          const AnswerOptions& options = {}, RulePipeline* rules = nullptr);

}  // namespace coforge
