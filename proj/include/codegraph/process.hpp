#pragma once
// Minimal subprocess runner: /bin/sh -c with captured output and a wall-clock
// limit. Used by the code-testing formatter hook and the eval test commands.

#include <string>

namespace codegraph {

struct ProcessResult {
    int exit_code = -1;        // shell convention: 128+signal when killed
    bool timed_out = false;    // true when the limit fired; exit_code then -1
    std::string output;         // captured stdout
    std::string error_output;   // captured stderr
};

// Runs `command` via /bin/sh -c in `cwd` (empty = inherit), feeding
// `stdin_data` and capturing both streams until EOF. When timeout_seconds > 0
// and the deadline passes, the child is killed (SIGKILL) and timed_out set.
// Nonzero exits are data, not errors; Error{Process} covers only local
// plumbing failures (pipe/fork).
ProcessResult run_shell(const std::string& command, const std::string& cwd = "",
                        const std::string& stdin_data = "", int timeout_seconds = 0);

} // namespace codegraph
