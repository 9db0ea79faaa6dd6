#pragma once

#include <stdexcept>
#include <string>

namespace mislc {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyCorpusError : std::runtime_error {
    EmptyCorpusError() : std::runtime_error("EmptyCorpus") {}
};

struct OversizeParagraphError : std::runtime_error {
    explicit OversizeParagraphError(const std::string& what) : std::runtime_error(what) {}
};

struct LengthMismatchError : std::runtime_error {
    explicit LengthMismatchError(const std::string& what) : std::runtime_error(what) {}
};

struct UnknownIssueIdError : std::runtime_error {
    explicit UnknownIssueIdError(const std::string& id)
        : std::runtime_error("unknown legal issue id: " + id) {}
};

struct MissingGoldError : std::runtime_error {
    explicit MissingGoldError(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateDataError : std::runtime_error {
    explicit DegenerateDataError(const std::string& what) : std::runtime_error(what) {}
};

struct NoQualifiedExpertsError : std::runtime_error {
    NoQualifiedExpertsError() : std::runtime_error("no annotator exceeds the minimum count") {}
};

struct TransportError : std::runtime_error {
    explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

struct ProtocolError : std::runtime_error {
    explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

struct LogprobsUnavailableError : std::runtime_error {
    LogprobsUnavailableError() : std::runtime_error("backend did not return token logprobs") {}
};

struct QuotaExceededError : std::runtime_error {
    explicit QuotaExceededError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mislc
