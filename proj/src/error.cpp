#include "coforge/error.hpp"

namespace coforge {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::InvalidSpec: return "invalid-spec";
    case ErrorCode::UnknownFacet: return "unknown-facet";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::UnknownRule: return "unknown-rule";
    case ErrorCode::UnknownAgent: return "unknown-agent";
    case ErrorCode::TooFewParticipants: return "too-few-participants";
    case ErrorCode::NotAParticipant: return "not-a-participant";
    case ErrorCode::SessionNotOpen: return "session-not-open";
    case ErrorCode::NotAnAssistantMessage: return "not-an-assistant-message";
    case ErrorCode::NoPrecedingUserQuestion: return "no-preceding-user-question";
    case ErrorCode::NoKnowledgeBase: return "no-knowledge-base";
    case ErrorCode::EmptyDocument: return "empty-document";
    case ErrorCode::DocumentTooLarge: return "document-too-large";
    case ErrorCode::ProviderUnreachable: return "provider-unreachable";
    case ErrorCode::ProviderRejected: return "provider-rejected";
    case ErrorCode::EmptyCompletion: return "empty-completion";
    case ErrorCode::MissingAttributions: return "missing-attributions";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::IoError: return "io-error";
    case ErrorCode::VersionMismatch: return "version-mismatch";
    case ErrorCode::IntegrityViolation: return "integrity-violation";
  }
  return "unknown";
}

}  // namespace coforge
