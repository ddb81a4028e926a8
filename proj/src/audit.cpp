#include "coforge/audit.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "coforge/error.hpp"
#include "coforge/rules.hpp"
#include "coforge/serialization.hpp"
#include "coforge/text.hpp"

namespace coforge {

const char* to_string(CheckId id) noexcept {
  switch (id) {
    case CheckId::H09Length: return "H09_length";
    case CheckId::H12Steps: return "H12_steps";
    case CheckId::H13Constructive: return "H13_constructive";
    case CheckId::H15Escalation: return "H15_escalation";
    case CheckId::H16Disclaimer: return "H16_disclaimer";
    case CheckId::H17Paraphrase: return "H17_paraphrase";
  }
  return "H09_length";
}

CheckId check_id_from_string(std::string_view s) {
  for (CheckId id : {CheckId::H09Length, CheckId::H12Steps, CheckId::H13Constructive, CheckId::H15Escalation,
                     CheckId::H16Disclaimer, CheckId::H17Paraphrase}) {
    if (s == to_string(id)) return id;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown audit check", std::string(s));
}

const char* to_string(Severity s) noexcept { return s == Severity::Info ? "info" : "warn"; }

void AuditCheckConfig::validate() const {
  if (!enabled) return;
  auto require = [&](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, what, to_string(check_id));
  };
  switch (check_id) {
    case CheckId::H09Length: require(max_chars > 0, "max_chars must be positive"); break;
    case CheckId::H12Steps:
      require(min_imperatives > 0, "min_imperatives must be positive");
      require(!imperative_verbs.empty(), "imperative verb list must be non-empty");
      break;
    case CheckId::H13Constructive:
      require(!refusal_patterns.empty(), "refusal patterns must be non-empty");
      require(!alternative_patterns.empty(), "alternative patterns must be non-empty");
      break;
    case CheckId::H15Escalation:
      require(!refusal_patterns.empty(), "refusal patterns must be non-empty");
      require(!referral_patterns.empty(), "referral patterns must be non-empty");
      break;
    case CheckId::H16Disclaimer:
      require(!topics.empty(), "topic list must be non-empty");
      for (const auto& t : topics) require(!t.keywords.empty() && !t.disclaimer.empty(), "topic needs keywords and a disclaimer");
      break;
    case CheckId::H17Paraphrase:
      require(ngram_size > 0, "ngram_size must be positive");
      require(overlap_threshold > 0.0 && overlap_threshold <= 1.0, "overlap_threshold must be in (0, 1]");
      require(!policy_title_patterns.empty(), "policy title patterns must be non-empty");
      break;
  }
}

std::vector<AuditCheckConfig> default_audit_configs() {
  const std::vector<std::string> refusals = {
      "in the given context", "i do not have access to", "i don't have access to",
      "i (do not|don't) (have|know) (that|the|any) (information|answer)", "i('m| am) (unable|not able) to",
      "i cannot (help|answer|provide)", "no information (about|on)"};

  std::vector<AuditCheckConfig> out(6);
  out[0].check_id = CheckId::H09Length;
  out[0].max_chars = 600;

  out[1].check_id = CheckId::H12Steps;
  out[1].min_imperatives = 3;
  out[1].imperative_verbs = {"insert", "press", "click", "select", "enter",  "open",  "place",  "scan",
                             "tap",    "choose", "go",    "remove", "put",    "turn",  "log",    "sign",
                             "type",   "swipe", "wait",  "take",   "return", "follow", "check", "connect",
                             "visit",  "bring", "fill",  "pick",   "use",    "close", "push",   "pull",
                             "touch",  "load",  "save",  "print",  "hold",   "lift",  "find",   "ask"};

  out[2].check_id = CheckId::H13Constructive;
  out[2].refusal_patterns = refusals;
  out[2].alternative_patterns = {"here('s| is) what i found", "you (might|may|could|can) (try|also|want)",
                                 "alternatively", "instead", "i would have to research", "might be helpful",
                                 "related (resource|information)"};

  out[3].check_id = CheckId::H15Escalation;
  out[3].refusal_patterns = refusals;
  out[3].referral_patterns = {"library staff", "contact", "librarian", "reference desk", "help desk",
                              "(ask|speak (to|with)) (a|our|the) (staff|member of staff)"};

  out[4].check_id = CheckId::H16Disclaimer;
  out[4].topics = {
      {"medical", {"side effect", "diagnos", "medication", "dosage", "symptom", "prescription"},
       "This is not medical advice"},
      {"legal", {"lawsuit", "legal advice", "eviction", "custody", "court", "attorney"}, "This is not legal advice"},
      {"public_record", {"public record", "personal information", "chat history"},
       "This conversation may be part of the public record"},
  };

  out[5].check_id = CheckId::H17Paraphrase;
  out[5].ngram_size = 5;
  out[5].overlap_threshold = 0.5;
  out[5].policy_title_patterns = {"polic"};
  return out;
}

// ---------------------------------------------------------------------------

namespace {

using NGram = std::vector<std::string>;

std::set<NGram> ngrams(std::string_view text, std::size_t n) {
  const auto tokens = text::tokenize(text);
  std::set<NGram> out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    out.emplace(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
  }
  return out;
}

struct Match {
  std::size_t start;
  std::size_t end;
};

std::vector<std::regex> compile(const std::vector<std::string>& patterns) {
  std::vector<std::regex> out;
  out.reserve(patterns.size());
  for (const auto& p : patterns) {
    try {
      out.emplace_back(p, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::InvalidArgument, "invalid audit pattern", p);
    }
  }
  return out;
}

std::optional<Match> first_match(const std::string& text, const std::vector<std::regex>& patterns) {
  std::optional<Match> best;
  for (const auto& re : patterns) {
    std::smatch m;
    if (std::regex_search(text, m, re)) {
      const auto start = static_cast<std::size_t>(m.position(0));
      if (!best || start < best->start) best = Match{start, start + static_cast<std::size_t>(m.length(0))};
    }
  }
  return best;
}

struct Sentence {
  std::size_t start;
  std::size_t end;
};

std::vector<Sentence> sentences(std::string_view text) {
  std::vector<Sentence> out;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    if (end > start && !text::trim(text.substr(start, end - start)).empty()) out.push_back({start, end});
    start = end;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      flush(i);
      start = i + 1;
    } else if ((c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || text[i + 1] == ' ' || text[i + 1] == '\n')) {
      flush(i + 1);
    }
  }
  flush(text.size());
  return out;
}

std::string first_word(std::string_view sentence) {
  static const std::regex kListMarker(R"(^\s*(?:[-*]|\d+[.)])?\s*)");
  std::string s(sentence);
  s = std::regex_replace(s, kListMarker, "", std::regex_constants::format_first_only);
  std::string word;
  for (char c : s) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
      word.push_back(c);
    } else {
      break;
    }
  }
  return text::to_lower_ascii(word);
}

}  // namespace

std::optional<double> ngram_overlap(std::string_view answer, std::span<const std::string> sources, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  const auto answer_grams = ngrams(answer, n);
  if (answer_grams.empty()) return std::nullopt;
  std::set<NGram> source_grams;
  for (const auto& s : sources) source_grams.merge(ngrams(s, n));
  std::size_t shared = 0;
  for (const auto& g : answer_grams) shared += source_grams.contains(g) ? 1 : 0;
  return static_cast<double>(shared) / static_cast<double>(answer_grams.size());
}

std::size_t count_imperative_sentences(std::string_view text, std::span<const std::string> verbs) {
  std::size_t count = 0;
  for (const auto& s : sentences(text)) {
    const std::string w = first_word(text.substr(s.start, s.end - s.start));
    if (std::find(verbs.begin(), verbs.end(), w) != verbs.end()) ++count;
  }
  return count;
}

std::vector<AuditFinding> audit_transcript(std::span<const AuditMessage> transcript,
                                           std::span<const AuditCheckConfig> configs) {
  std::vector<const AuditCheckConfig*> enabled;
  for (const auto& c : configs) {
    c.validate();
    if (c.enabled) enabled.push_back(&c);
  }
  std::sort(enabled.begin(), enabled.end(),
            [](const AuditCheckConfig* a, const AuditCheckConfig* b) { return a->check_id < b->check_id; });

  const bool paraphrase_enabled = std::any_of(enabled.begin(), enabled.end(), [](const AuditCheckConfig* c) {
    return c->check_id == CheckId::H17Paraphrase;
  });
  if (paraphrase_enabled) {
    for (const auto& m : transcript) {
      if (m.author_kind == AuthorKind::ServiceAgent && !m.sources) {
        throw Error(ErrorCode::MissingAttributions, "paraphrase check needs attribution data", m.message_id);
      }
    }
  }

  std::vector<AuditFinding> findings;
  for (std::size_t idx = 0; idx < transcript.size(); ++idx) {
    const AuditMessage& msg = transcript[idx];
    if (msg.author_kind != AuthorKind::ServiceAgent) continue;
    const std::string& content = msg.content;
    auto add = [&](const AuditCheckConfig& c, Severity sev, std::string why, std::size_t start, std::size_t end) {
      findings.push_back({c.check_id, msg.message_id, idx, sev, std::move(why), start, end});
    };

    for (const AuditCheckConfig* cfg : enabled) {
      const AuditCheckConfig& c = *cfg;
      switch (c.check_id) {
        case CheckId::H09Length:
          if (content.size() > c.max_chars) {
            add(c, Severity::Info,
                "reply is " + std::to_string(content.size()) + " chars, limit " + std::to_string(c.max_chars),
                text::utf8_floor(content, c.max_chars), content.size());
          }
          break;

        case CheckId::H12Steps: {
          const std::size_t imperatives = count_imperative_sentences(content, c.imperative_verbs);
          if (imperatives >= c.min_imperatives && parse_steps(content).empty()) {
            add(c, Severity::Info,
                "procedure of " + std::to_string(imperatives) + " instructions is not delivered step by step", 0,
                content.size());
          }
          break;
        }

        case CheckId::H13Constructive: {
          const auto refusal = first_match(content, compile(c.refusal_patterns));
          if (refusal && !first_match(content, compile(c.alternative_patterns))) {
            add(c, Severity::Warn, "refusal offers no alternative or partial help", refusal->start, refusal->end);
          }
          break;
        }

        case CheckId::H15Escalation: {
          const auto refusal = first_match(content, compile(c.refusal_patterns));
          if (refusal && !first_match(content, compile(c.referral_patterns))) {
            add(c, Severity::Warn, "refusal does not direct the patron to human support", refusal->start,
                refusal->end);
          }
          break;
        }

        case CheckId::H16Disclaimer:
          for (const auto& topic : c.topics) {
            std::optional<Match> hit;
            const std::string lowered = text::to_lower_ascii(content);
            for (const auto& kw : topic.keywords) {
              const auto pos = lowered.find(text::to_lower_ascii(kw));
              if (pos != std::string::npos && (!hit || pos < hit->start)) hit = Match{pos, pos + kw.size()};
            }
            if (hit && !text::contains_icase(content, topic.disclaimer)) {
              add(c, Severity::Warn, topic.topic + " topic without the required disclaimer", hit->start, hit->end);
            }
          }
          break;

        case CheckId::H17Paraphrase: {
          const auto title_patterns = compile(c.policy_title_patterns);
          std::vector<std::string> texts;
          bool policy = false;
          for (const auto& src : *msg.sources) {
            texts.push_back(src.text);
            if (first_match(src.locator.doc_title, title_patterns)) policy = true;
          }
          if (!policy) break;
          const auto overlap = ngram_overlap(content, texts, c.ngram_size);
          if (overlap && *overlap < c.overlap_threshold) {
            std::ostringstream why;
            why << "policy answer keeps " << *overlap << " of its " << c.ngram_size
                << "-grams from the source, below " << c.overlap_threshold;
            add(c, Severity::Warn, why.str(), 0, content.size());
          }
          break;
        }
      }
    }
  }
  std::stable_sort(findings.begin(), findings.end(), [](const AuditFinding& a, const AuditFinding& b) {
    if (a.message_index != b.message_index) return a.message_index < b.message_index;
    return a.check_id < b.check_id;
  });
  return findings;
}

// ---------------------------------------------------------------------------

std::vector<AuditMessage> parse_transcript_jsonl(std::string_view jsonl) {
  std::vector<AuditMessage> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      AuditMessage m;
      m.message_id = j.at("message_id").get<std::string>();
      m.author_kind = author_kind_from_string(j.at("author_kind").get<std::string>());
      m.author_name = j.value("author_name", std::string());
      m.content = j.at("content").get<std::string>();
      if (j.contains("attributions")) {
        std::vector<AttributedSource> sources;
        for (const auto& a : j.at("attributions")) {
          AttributedSource src;
          src.locator = a.get<SourceLocator>();
          src.text = a.value("text", std::string());
          sources.push_back(std::move(src));
        }
        m.sources = std::move(sources);
      }
      out.push_back(std::move(m));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, "malformed transcript line " + std::to_string(line_no), e.what());
    }
  }
  return out;
}

std::string findings_to_jsonl(std::span<const AuditFinding> findings) {
  std::string out;
  for (const auto& f : findings) {
    out += nlohmann::json(f).dump();
    out += '\n';
  }
  return out;
}

std::string summarize_findings(std::span<const AuditFinding> findings, std::size_t audited_messages) {
  std::map<std::string, std::size_t> per_check;
  for (const auto& f : findings) ++per_check[to_string(f.check_id)];
  std::ostringstream out;
  out << findings.size() << " finding(s) across " << audited_messages << " message(s)\n";
  for (const auto& [check, count] : per_check) out << "  " << check << ": " << count << "\n";
  for (const auto& f : findings) {
    out << "  [" << to_string(f.severity) << "] " << to_string(f.check_id) << " @ " << f.message_id << ": "
        << f.explanation << "\n";
  }
  return out.str();
}

}  // namespace coforge
