#pragma once
// Builds the code graph from an entity set: contain edges from lexical
// nesting, import/inherit/invoke edges from static name resolution, and
// similarity edges from embeddings over entity source text.

#include "codegraph/entity.hpp"
#include "codegraph/graph.hpp"
#include "codegraph/providers.hpp"
#include "codegraph/util.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace codegraph {

struct SscgConfig {
    double epsilon = 0.8;
    std::size_t similar_cap = 5;
};

// Static name resolution over one entity set. Resolution priority:
//   1. self.x  -> method x of the enclosing class, then its inherit chain
//                 (depth-first over declared bases, first match, cycle-guarded)
//   2. plain x -> same-file top-level function/class, else `from m import x`
//                 binding (context's lexical chain), else a star import
//   3. dotted m.x -> `import m` / `from p import m` module binding, longest
//                 module prefix first, then top-level x in that module's file
// A name that resolves to a class stands for the class node (constructor
// calls land on the class). Anything else is unresolved -> no edge.
class NameResolver {
public:
    explicit NameResolver(const EntitySet& entities);

    std::optional<std::string> resolve(const std::string& expr, const Entity& context) const;

    // Resolved base-class ids of a class entity, declaration order.
    std::vector<std::string> bases_of(const std::string& class_id) const;

    // (importing file path, imported entity id) pairs for file->entity edges.
    std::vector<std::pair<std::string, std::string>> import_edges() const;

private:
    struct FileScope {
        std::map<std::string, std::string> top_level;      // name -> entity id
        std::map<std::string, std::string> entity_imports; // local name -> entity id
        std::map<std::string, std::string> module_imports; // local dotted name -> file path
        std::vector<std::string> star_imports;             // file paths, import order
    };

    std::optional<std::string> module_file(const std::string& dotted,
                                           const std::string& importer_dir) const;
    std::optional<std::string> lookup_method(const std::string& class_id,
                                             const std::string& name) const;
    const FileScope* scope_of(const std::string& path) const;

    const EntitySet& entities_;
    std::map<std::string, FileScope> scopes_;               // file path -> scope
    std::map<std::string, std::vector<std::string>> bases_; // class id -> base ids
    std::vector<std::pair<std::string, std::string>> import_edges_;
};

// Single-shot resolution entry point; builds a resolver per call. Use
// NameResolver directly for bulk work.
std::optional<std::string> resolve_reference(const std::string& expr, const Entity& context,
                                             const EntitySet& entities);

// Cached reader for entity source text: the span's lines from the repository,
// falling back to signature + docstring when the file is unavailable
// (hand-built entity sets). hash_for feeds requirement caching.
class SourceText {
public:
    explicit SourceText(const EntitySet& entities) : entities_(entities) {}

    std::string text_for(const Entity& entity);
    std::uint64_t hash_for(const Entity& entity);

private:
    const std::vector<std::string>* file_lines(const std::string& path);

    const EntitySet& entities_;
    std::map<std::string, std::optional<std::vector<std::string>>> cache_;
};

// Similarity edges over the given (id, text) rows; shared with the RG builder.
std::vector<GraphEdge> add_similarity_edges(const std::vector<std::pair<std::string, std::string>>& rows,
                                            EmbeddingProvider& embedder, double epsilon,
                                            std::size_t similar_cap);

// embedder may be null (no similar edges). Provider failures degrade to a
// warning and zero similar edges; everything else is deterministic.
Graph build_sscg(const EntitySet& entities, EmbeddingProvider* embedder,
                 const SscgConfig& config, Diagnostics* diagnostics = nullptr);

} // namespace codegraph
