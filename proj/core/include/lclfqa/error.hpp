#pragma once

#include <stdexcept>
#include <string>

namespace lclfqa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input (layout lines, pair files, QA datasets, model output).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Violated uniqueness or referential integrity (duplicate ids, dangling links).
class IntegrityError : public Error {
public:
    using Error::Error;
};

/// Caller broke an operation's precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Inconsistent configuration, e.g. embedding dimension drift between store and provider.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Store directory could not be written or read back.
class StoreError : public Error {
public:
    using Error::Error;
};

/// Prompt template missing or a placeholder left unbound.
class RenderError : public Error {
public:
    using Error::Error;
};

/// Chat or embedding backend failure after retries were exhausted.
class ProviderError : public Error {
public:
    using Error::Error;
};

/// A failure worth retrying (timeouts, 429, 5xx).
class TransientProviderError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

/// Model output could not be turned into the expected structure.
class GenerationError : public Error {
public:
    using Error::Error;
};

/// Failure inside one stage of the answering pipeline.
class PipelineError : public Error {
public:
    PipelineError(std::string stage, const std::string& message)
        : Error(stage + ": " + message), stage_(std::move(stage)) {}

    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace lclfqa
