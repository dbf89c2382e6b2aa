#pragma once

#include <stdexcept>
#include <string>

namespace commdrop {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad user-supplied configuration: rejected before any work starts.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A caller violated an API precondition (shape mismatch, id not found, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

// Malformed persisted artifact. `pointer` is a JSON pointer into the document
// when the offending location is known.
class SchemaError : public Error {
public:
    SchemaError(const std::string& what, std::string pointer = "")
        : Error(pointer.empty() ? what : what + " (at " + pointer + ")"),
          pointer_(std::move(pointer)) {}
    const std::string& pointer() const { return pointer_; }

private:
    std::string pointer_;
};

// Agent backend failed after exhausting retries. `status` is the HTTP status
// when one was received, 0 for transport-level failures.
class BackendError : public Error {
public:
    explicit BackendError(const std::string& what, int status = 0)
        : Error(what), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

// A rollout could not produce a final answer. Carries nothing beyond the
// message; callers that want the partial record catch AggregationError.
class RolloutError : public Error {
public:
    using Error::Error;
};

// The final round emitted no output, so there was nothing to aggregate.
class AggregationError : public RolloutError {
public:
    using RolloutError::RolloutError;
};

// A pipeline stage failed. `stage` names the stage; `checkpoint` is the path
// of the last matrix checkpoint written before the failure (may be empty).
class PipelineError : public Error {
public:
    PipelineError(std::string stage, const std::string& what, std::string checkpoint = "")
        : Error("stage '" + stage + "': " + what +
                (checkpoint.empty() ? "" : " (resume from " + checkpoint + ")")),
          stage_(std::move(stage)),
          checkpoint_(std::move(checkpoint)) {}
    const std::string& stage() const { return stage_; }
    const std::string& checkpoint() const { return checkpoint_; }

private:
    std::string stage_;
    std::string checkpoint_;
};

// Enumeration-based reference requested beyond the enumerable bounds.
class OversizeError : public Error {
public:
    using Error::Error;
};

} // namespace commdrop
