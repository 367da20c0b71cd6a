#pragma once

#include <stdexcept>
#include <string>

namespace mvscreen {

enum class Errc {
  // ingest
  MissingField,
  MalformedRecord,
  DuplicateFrameId,
  MalformedTimestamp,
  NonMonotonicTimestamps,
  BadMagic,
  DimMismatch,
  TruncatedFile,
  TrailingData,
  NonFiniteValue,
  ZeroVector,
  EmbeddingMissing,
  OrphanEmbedding,
  // similarity-graph
  LengthMismatch,
  InvalidConfig,
  // caption
  ProviderUnavailable,
  MissingCaption,
  EmptyResponse,
  // identify
  UnknownPhrase,
  // eval
  EmptyCandidate,
  EmptyReference,
  EmptyInput,
  TooFewGroups,
  // io
  IoError,
};

const char* errc_name(Errc code) noexcept;

/// Base exception for every recoverable failure in the pipeline. The code
/// identifies the failure class; what() carries file/line context.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

  /// Provider failures map to a distinct CLI exit status.
  bool is_provider_failure() const noexcept {
    return code_ == Errc::ProviderUnavailable || code_ == Errc::MissingCaption ||
           code_ == Errc::EmptyResponse;
  }

 private:
  Errc code_;
};

}  // namespace mvscreen
