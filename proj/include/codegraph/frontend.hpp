#pragma once
// Language front-end plug-in seam. A front-end parses one source file into
// entities and performs the syntax check used by the code-testing tool.
// The reference grammar covers Python, the benchmarks' source language.

#include "codegraph/entity.hpp"
#include "codegraph/util.hpp"

#include <memory>
#include <string>
#include <vector>

namespace codegraph {

struct SyntaxDiagnostic {
    int line = 0;
    std::string message;
};

struct SyntaxCheck {
    bool ok = true;
    std::vector<SyntaxDiagnostic> diagnostics;
};

class LanguageFrontend {
public:
    virtual ~LanguageFrontend() = default;

    virtual const char* name() const = 0;

    // File extensions handled, without dots (e.g. "py").
    virtual std::vector<std::string> extensions() const = 0;

    // Parses the file into [file entity, children...]. Never throws on bad
    // source: syntax errors degrade to a bare file entity with parse_error set.
    virtual std::vector<Entity> parse_file(const std::string& path,
                                           const std::string& source_text) const = 0;

    // Standalone syntax check for generated snippets (code-testing tool).
    virtual SyntaxCheck check_syntax(const std::string& source_text) const = 0;
};

// Returns the front-end registered under `grammar`, or throws Error{Config}.
const LanguageFrontend& frontend_for(const std::string& grammar);

// Walks `root`, parses every file matched by the globs with the front-end, and
// merges the per-file entity lists into one deterministic set. Include globs
// default to the front-end's extensions when empty.
EntitySet scan_repo(const std::string& root,
                    const LanguageFrontend& frontend,
                    const std::vector<std::string>& include_globs,
                    const std::vector<std::string>& exclude_globs,
                    Diagnostics* diagnostics = nullptr);

} // namespace codegraph
