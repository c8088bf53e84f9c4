#pragma once
// Reference grammar: a lightweight Python front-end built on a hand-written
// tokenizer (strings, comments, bracket continuation, indentation) and an
// indentation-driven block scanner for def/class suites.
//
// Scope notes, deliberate approximations:
//   - decorated and async definitions are recorded as their underlying kind
//   - lambdas are not entities
//   - calls inside f-string interpolations are not extracted
//   - a redefinition of the same name keeps the last binding; earlier
//     definitions (and their subtrees) are dropped, mirroring runtime shadowing

#include "codegraph/frontend.hpp"

namespace codegraph {

class PythonFrontend final : public LanguageFrontend {
public:
    const char* name() const override { return "python"; }
    std::vector<std::string> extensions() const override { return {"py"}; }

    std::vector<Entity> parse_file(const std::string& path,
                                   const std::string& source_text) const override;

    SyntaxCheck check_syntax(const std::string& source_text) const override;
};

} // namespace codegraph
