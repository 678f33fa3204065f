#pragma once

#include <stdexcept>
#include <string>

namespace reviewkit {

enum class ErrorCode {
    // schema / validation
    OutOfRange,
    NonInteger,
    MissingSection,
    DuplicateSection,
    MalformedScore,
    FormatError,
    EmptyDataset,
    // gateway
    InputTooLong,
    ProviderError,
    Timeout,
    MockMiss,
    // scholar
    MalformedQuestions,
    MalformedKeywords,
    RetrievalUnavailable,
    UncitedSource,
    MalformedReport,
    // pipeline
    ReviewerParseFailure,
    MalformedReliability,
    MalformedMeta,
    // eval
    MalformedVerdict,
    IdMismatch,
    DegenerateRanking,
    NoValidPairs,
    DegenerateX,
    // plumbing
    ConfigError,
    IoError,
    Usage,
};

const char* error_code_name(ErrorCode code);

// Exit-code classes used by the CLI: usage errors exit 2, data/pipeline
// errors exit 3, provider errors exit 4.
enum class ErrorClass { Usage = 2, Data = 3, Provider = 4 };

ErrorClass error_class(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }
    ErrorClass cls() const { return error_class(code_); }

private:
    ErrorCode code_;
};

} // namespace reviewkit
