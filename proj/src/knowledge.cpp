#include "coforge/knowledge.hpp"

#include <algorithm>

#include "coforge/error.hpp"
#include "coforge/text.hpp"

namespace coforge {

const char* to_string(Provenance p) noexcept { return p == Provenance::Uploaded ? "uploaded" : "curated"; }

Provenance provenance_from_string(std::string_view s) {
  if (s == "uploaded") return Provenance::Uploaded;
  if (s == "curated") return Provenance::Curated;
  throw Error(ErrorCode::InvalidArgument, "unknown provenance", std::string(s));
}

namespace {

// Running newline/form-feed counts for monotonically increasing offsets.
class PositionCounter {
 public:
  explicit PositionCounter(std::string_view source)
      : source_(source), has_pages_(source.find('\f') != std::string_view::npos) {}

  SourceLocator locate(std::size_t start, std::size_t end) {
    if (start < pos_) {
      pos_ = 0;
      newlines_ = 0;
      form_feeds_ = 0;
    }
    for (; pos_ < start; ++pos_) {
      if (source_[pos_] == '\n') ++newlines_;
      if (source_[pos_] == '\f') ++form_feeds_;
    }
    SourceLocator loc;
    loc.start_char = start;
    loc.end_char = end;
    loc.start_line = newlines_ + 1;
    if (has_pages_) loc.page = form_feeds_ + 1;
    return loc;
  }

 private:
  std::string_view source_;
  bool has_pages_;
  std::size_t pos_ = 0;
  std::size_t newlines_ = 0;
  std::size_t form_feeds_ = 0;
};

bool is_blank(std::string_view line) { return text::trim(line).empty(); }

struct Span {
  std::size_t begin;
  std::size_t end;
};

std::vector<Span> paragraphs(std::string_view text) {
  std::vector<Span> out;
  std::optional<std::size_t> para_begin;
  std::size_t para_end = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    if (is_blank(text.substr(pos, eol - pos))) {
      if (para_begin) out.push_back({*para_begin, para_end});
      para_begin.reset();
    } else {
      if (!para_begin) para_begin = pos;
      para_end = eol;
    }
    pos = eol + 1;
  }
  if (para_begin) out.push_back({*para_begin, para_end});

  // Trim surrounding whitespace inside each paragraph span.
  for (auto& span : out) {
    const std::string_view body = text::trim(text.substr(span.begin, span.end - span.begin));
    span.begin = static_cast<std::size_t>(body.data() - text.data());
    span.end = span.begin + body.size();
  }
  return out;
}

// Last sentence boundary cut in (floor, limit], if any.
std::optional<std::size_t> sentence_cut(std::string_view text, std::size_t begin, std::size_t floor,
                                        std::size_t limit, std::size_t para_end) {
  for (std::size_t i = limit; i > begin; --i) {
    const std::size_t idx = i - 1;
    const char c = text[idx];
    std::optional<std::size_t> cut;
    if ((c == '.' || c == '?' || c == '!') && idx + 1 < para_end && text[idx + 1] == ' ') cut = idx + 1;
    if (c == '\n') cut = idx;
    if (cut && *cut > floor && *cut <= limit) return cut;
    if (idx <= floor) break;
  }
  return std::nullopt;
}

}  // namespace

SourceLocator locate(std::string_view source, std::size_t start, std::size_t end) {
  return PositionCounter(source).locate(start, end);
}

const SourceDocument* KnowledgeBase::find_document(std::string_view doc_id) const noexcept {
  for (const auto& d : documents) {
    if (d.id == doc_id) return &d;
  }
  return nullptr;
}

const KnowledgeChunk* KnowledgeBase::find_chunk(std::string_view chunk_id) const noexcept {
  for (const auto& c : chunks) {
    if (c.id == chunk_id) return &c;
  }
  return nullptr;
}

KnowledgeBase& KnowledgeStore::create(std::string name, std::size_t embedding_dimension) {
  if (name.empty()) throw Error(ErrorCode::InvalidArgument, "knowledge base name must be non-empty");
  if (embedding_dimension == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
  KnowledgeBase kb;
  kb.id = ids_.next("kb");
  kb.name = std::move(name);
  kb.embedding_dimension = embedding_dimension;
  bases_.push_back(std::move(kb));
  return bases_.back();
}

KnowledgeBase& KnowledgeStore::get(const std::string& id) {
  return const_cast<KnowledgeBase&>(std::as_const(*this).get(id));
}

const KnowledgeBase& KnowledgeStore::get(const std::string& id) const {
  const KnowledgeBase* kb = find(id);
  if (kb == nullptr) throw Error(ErrorCode::NotFound, "knowledge base not found", id);
  return *kb;
}

const KnowledgeBase* KnowledgeStore::find(const std::string& id) const noexcept {
  for (const auto& kb : bases_) {
    if (kb.id == id) return &kb;
  }
  return nullptr;
}

void KnowledgeStore::restore(std::vector<KnowledgeBase> bases, IdSequence ids) {
  bases_ = std::move(bases);
  ids_ = std::move(ids);
}

// ---------------------------------------------------------------------------

std::vector<ChunkSpan> chunk_document(std::string_view text, const ChunkingOptions& options) {
  if (options.max_chars <= options.overlap_chars) {
    throw Error(ErrorCode::InvalidArgument, "max_chars must exceed overlap_chars");
  }
  const auto paras = paragraphs(text);
  if (paras.empty()) throw Error(ErrorCode::EmptyDocument, "document has no content");

  PositionCounter counter(text);
  std::vector<ChunkSpan> out;
  auto emit = [&](std::size_t begin, std::size_t end) {
    out.push_back({std::string(text.substr(begin, end - begin)), counter.locate(begin, end)});
  };

  for (const auto& para : paras) {
    std::size_t start = para.begin;
    while (true) {
      if (para.end - start <= options.max_chars) {
        emit(start, para.end);
        break;
      }
      const std::size_t limit = start + options.max_chars;
      const std::size_t floor = start + options.overlap_chars;
      std::size_t cut = 0;
      if (auto sentence = sentence_cut(text, start, floor, limit, para.end)) {
        cut = *sentence;
      } else {
        cut = text::utf8_floor(text, limit);
        if (cut <= floor) cut = text::utf8_ceil(text, floor + 1);
      }
      emit(start, cut);
      start = text::utf8_ceil(text, cut - options.overlap_chars);
    }
  }
  return out;
}

std::size_t ingest_document(KnowledgeBase& kb, Provider& provider, std::string_view title, std::string_view text,
                            const IngestOptions& options) {
  if (text.size() > options.max_document_bytes) {
    throw Error(ErrorCode::DocumentTooLarge, "document exceeds size limit",
                std::to_string(text.size()) + " > " + std::to_string(options.max_document_bytes));
  }
  if (options.priority_boost < 0.0) throw Error(ErrorCode::InvalidArgument, "priority_boost must be >= 0");
  const auto spans = chunk_document(text, options.chunking);

  IdSequence ids = kb.ids;
  SourceDocument doc{ids.next("doc"), std::string(title), std::string(text), options.provenance};
  std::vector<KnowledgeChunk> fresh;
  fresh.reserve(spans.size());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    KnowledgeChunk chunk;
    chunk.id = ids.next("chunk");
    chunk.doc_id = doc.id;
    chunk.ordinal = i;
    chunk.text = spans[i].text;
    chunk.locator = spans[i].locator;
    chunk.locator.doc_id = doc.id;
    chunk.locator.doc_title = doc.title;
    chunk.embedding = provider.embed_text(chunk.text);
    if (chunk.embedding.dimension() != kb.embedding_dimension) {
      throw Error(ErrorCode::ProviderRejected, "embedding dimension does not match knowledge base");
    }
    chunk.provenance = options.provenance;
    chunk.priority_boost = options.provenance == Provenance::Uploaded ? 0.0 : options.priority_boost;
    fresh.push_back(std::move(chunk));
  }

  kb.ids = std::move(ids);
  kb.documents.push_back(std::move(doc));
  kb.chunks.insert(kb.chunks.end(), std::make_move_iterator(fresh.begin()), std::make_move_iterator(fresh.end()));
  return spans.size();
}

// ---------------------------------------------------------------------------

bool ranks_before(const RetrievalResult& a, const RetrievalResult& b) noexcept {
  if (a.effective_score != b.effective_score) return a.effective_score > b.effective_score;
  if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
  return a.ordinal < b.ordinal;
}

std::vector<RetrievalResult> search(const KnowledgeBase& kb, const EmbeddingVector& query, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  std::vector<RetrievalResult> results;
  results.reserve(kb.chunks.size());
  for (const auto& chunk : kb.chunks) {
    RetrievalResult r;
    r.chunk_id = chunk.id;
    r.doc_id = chunk.doc_id;
    r.ordinal = chunk.ordinal;
    r.text = chunk.text;
    r.locator = chunk.locator;
    r.provenance = chunk.provenance;
    r.raw_cosine = cosine(query, chunk.embedding);
    r.priority_boost = chunk.priority_boost;
    r.effective_score = r.raw_cosine + r.priority_boost;
    results.push_back(std::move(r));
  }
  const std::size_t n = std::min(k, results.size());
  std::partial_sort(results.begin(), results.begin() + static_cast<std::ptrdiff_t>(n), results.end(), ranks_before);
  results.resize(n);
  return results;
}

std::vector<RetrievalResult> search(const KnowledgeBase& kb, Provider& provider, std::string_view query,
                                    std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (kb.chunks.empty()) return {};
  return search(kb, provider.embed_text(query), k);
}

std::string source_label(const SourceLocator& locator) {
  std::string label = "[SOURCE " + locator.doc_title;
  if (locator.page) label += " p." + std::to_string(*locator.page);
  label += " l." + std::to_string(locator.start_line) + "]";
  return label;
}

ContextBlock assemble_context(std::span<const RetrievalResult> results, std::size_t char_budget) {
  ContextBlock block;
  for (const auto& r : results) {
    const std::string section = source_label(r.locator) + "\n" + r.text;
    if (block.included == 0) {
      block.text = section.size() <= char_budget ? section : section.substr(0, text::utf8_floor(section, char_budget));
      block.included = 1;
      continue;
    }
    if (block.text.size() + 2 + section.size() > char_budget) break;
    block.text += "\n\n";
    block.text += section;
    ++block.included;
  }
  return block;
}

GroundingTurn build_grounding(const KnowledgeBase& kb, Provider& provider, std::string_view query,
                              const AnswerOptions& options) {
  GroundingTurn g;
  g.trace = search(kb, provider, query, options.k);
  const ContextBlock context = assemble_context(g.trace, options.char_budget);
  for (std::size_t i = 0; i < context.included; ++i) g.attributions.push_back(g.trace[i].locator);
  g.turn = {Role::System, options.grounding_instruction + context.text};
  return g;
}

AttributedResponse answer(const AgentSpec& agent, const KnowledgeBase* kb, Provider& provider,
                          std::span<const ChatTurn> prior_turns, std::string_view user_query,
                          const AnswerOptions& options, RulePipeline* rules) {
  if (agent.kind != AgentKind::ServiceAgent) {
    throw Error(ErrorCode::InvalidArgument, "only service agents answer from knowledge", agent.id);
  }
  if (!agent.kb_id || kb == nullptr) throw Error(ErrorCode::NoKnowledgeBase, "agent has no knowledge base", agent.id);
  if (kb->id != *agent.kb_id) throw Error(ErrorCode::InvalidArgument, "knowledge base does not belong to agent");

  if (rules) {
    if (auto reply = rules->turn_advance(user_query)) return {*reply, {}, {}};
  }

  GroundingTurn grounding = build_grounding(*kb, provider, user_query, options);
  std::vector<ChatTurn> prompt = compose_definition(agent);
  prompt.insert(prompt.end(), prior_turns.begin(), prior_turns.end());
  prompt.push_back(std::move(grounding.turn));
  prompt.push_back({Role::User, std::string(user_query)});
  if (rules) rules->pre_prompt(prompt);

  AttributedResponse response;
  response.text = provider.chat_complete(prompt, options.params);
  if (rules) response.text = rules->post_response(std::move(response.text));
  response.attributions = std::move(grounding.attributions);
  response.retrieval_trace = std::move(grounding.trace);
  return response;
}

}  // namespace coforge
