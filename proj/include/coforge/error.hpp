#pragma once

#include <stdexcept>
#include <string>

namespace coforge {

/// Error categories surfaced across modules. The HTTP layer maps each one to a
/// status class; the string form is the wire `code`.
enum class ErrorCode {
  InvalidArgument,
  InvalidSpec,
  UnknownFacet,
  NotFound,
  UnknownRule,
  UnknownAgent,
  TooFewParticipants,
  NotAParticipant,
  SessionNotOpen,
  NotAnAssistantMessage,
  NoPrecedingUserQuestion,
  NoKnowledgeBase,
  EmptyDocument,
  DocumentTooLarge,
  ProviderUnreachable,
  ProviderRejected,
  EmptyCompletion,
  MissingAttributions,
  Conflict,
  IoError,
  VersionMismatch,
  IntegrityViolation,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace coforge
