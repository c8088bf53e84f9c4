#pragma once
// Typed errors used at module boundaries. Callers that can recover catch by
// kind; the CLI maps kinds onto exit codes.

#include <stdexcept>
#include <string>

namespace codegraph {

enum class ErrorKind {
    Config,         // bad configuration or violated documented range
    Io,             // filesystem failure
    Parse,          // malformed input that must be well-formed (not target code)
    Precondition,   // caller violated an operation precondition
    Provider,       // remote provider failure after retries
    ScriptMismatch, // scripted stub had no reply for the prompt
    Integrity,      // graph referential integrity violation / desynced indexes
    StaleIndex,     // repository snapshot no longer matches the index header
    FormatVersion,  // index format tag or version mismatch
    CorruptRecord,  // unreadable index record
    Process,        // external process failure
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace codegraph
