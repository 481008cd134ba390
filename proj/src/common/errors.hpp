#pragma once

#include <stdexcept>
#include <string>

namespace xkde {

// Four broad failure categories. The CLI maps them onto process exit codes
// (config -> 2, model -> 3, data -> 4), so every thrown error should derive
// from one of these.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class ModelError : public Error {
public:
    using Error::Error;
};

class ServiceError : public Error {
public:
    using Error::Error;
};

// ---- data errors ----

class MalformedRecord : public DataError {
public:
    using DataError::DataError;
};

// Unknown or ill-typed field in strict parsing; remembers which field.
class SchemaViolation : public DataError {
public:
    SchemaViolation(const std::string& field, const std::string& what)
        : DataError("schema violation at field '" + field + "': " + what), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class EmptyGold : public DataError {
public:
    using DataError::DataError;
};

class MissingLanguage : public DataError {
public:
    using DataError::DataError;
};

class AllCasesSkipped : public DataError {
public:
    using DataError::DataError;
};

class DuplicateKey : public DataError {
public:
    using DataError::DataError;
};

class EmptyBatch : public DataError {
public:
    using DataError::DataError;
};

class EmptyCases : public DataError {
public:
    using DataError::DataError;
};

class EmptyResponses : public DataError {
public:
    using DataError::DataError;
};

// Sample longer than the configured maximum once formatted; callers skip
// the sample (with a log line) rather than truncating through an answer.
class OverLength : public DataError {
public:
    using DataError::DataError;
};

// ---- model errors ----

class ContextOverflow : public ModelError {
public:
    using ModelError::ModelError;
    ContextOverflow(int needed, int limit)
        : ModelError("sequence of " + std::to_string(needed) +
                     " tokens exceeds the context limit of " + std::to_string(limit)) {}
};

class NonPositiveTemperature : public ModelError {
public:
    using ModelError::ModelError;
    explicit NonPositiveTemperature(double temperature)
        : ModelError("sampling temperature must be positive, got " +
                     std::to_string(temperature)) {}
};

class ModelLoadError : public ModelError {
public:
    using ModelError::ModelError;
    ModelLoadError(const std::string& path, const std::string& why)
        : ModelError("cannot load model from '" + path + "': " + why) {}
};

class DivergedLoss : public ModelError {
public:
    using ModelError::ModelError;
};

class UnsupportedPair : public ModelError {
public:
    using ModelError::ModelError;
};

// ---- config errors ----

// Prompt template missing, malformed, or rendered with the wrong values.
class TemplateError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// ---- service errors ----

// A failure worth retrying (timeout, 5xx, simulated flake). Anything else
// raised as plain ServiceError is permanent and propagates immediately.
class TransientServiceError : public ServiceError {
public:
    using ServiceError::ServiceError;
};

class EmptyCompletion : public ServiceError {
public:
    using ServiceError::ServiceError;
};

class ParseError : public ServiceError {
public:
    using ServiceError::ServiceError;
};

class JudgeAmbiguous : public ServiceError {
public:
    using ServiceError::ServiceError;
};

class ScoreParseError : public ServiceError {
public:
    using ServiceError::ServiceError;
};

} // namespace xkde
