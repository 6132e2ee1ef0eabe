#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dialogic {

// Machine-readable failure categories. The CLI prints these names verbatim
// in its error JSON, so renaming one is a breaking change.
enum class ErrorCode {
  // corpus-model
  MalformedLine,
  EmptyTranscript,
  UnresolvableSpeaker,
  MissingFile,
  DuplicateId,
  ManifestSchemaError,
  // segmentation
  KTooLarge,
  InvalidArgument,
  // metrics-stats
  DegenerateSample,
  MismatchedSeries,
  // question-classify
  EmptyQuestion,
  // topic-pipeline
  InsufficientTitles,
  // llm-gateway
  AuthError,
  RateLimited,
  ProviderError,
  Timeout,
  UnscriptedPrompt,
  // synth-corpus
  InvalidProfile,
  // report-cli
  SpecError,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Error(ErrorCode code, const std::string& message, std::string file,
        std::optional<int> line = std::nullopt)
      : std::runtime_error(message),
        code_(code),
        file_(std::move(file)),
        line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& file() const noexcept { return file_; }
  std::optional<int> line() const noexcept { return line_; }

  // Same error, re-attributed to a file. Keeps an existing line number.
  Error with_file(std::string file) const {
    return Error(code_, what(), std::move(file), line_);
  }

 private:
  ErrorCode code_;
  std::string file_;
  std::optional<int> line_;
};

}  // namespace dialogic
