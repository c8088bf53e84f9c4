#pragma once
// Canonical code entities extracted from a repository: files, classes,
// functions, and methods, each with a stable "path::Qualified.Name" id.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace codegraph {

enum class EntityKind { File, Class, Function, Method };

const char* to_string(EntityKind kind);
std::optional<EntityKind> entity_kind_from(std::string_view text);

// Unresolved textual call target: "g", "self.m", or "mod.attr".
struct RawCallSite {
    std::string callee_expr;
    int line = 0;
};

// "import a.b [as c]" -> {module_path:"a.b", alias:"c"}
// "from a.b import x [as y]" -> {module_path:"a.b", imported_name:"x", alias:"y"}
struct RawImportSite {
    std::string module_path;
    std::optional<std::string> imported_name;
    std::optional<std::string> alias;
    int line = 0;
};

struct Entity {
    std::string id;
    EntityKind kind = EntityKind::File;
    std::string name;
    std::string path;        // repo-relative, POSIX separators
    int start_line = 1;      // 1-based inclusive
    int end_line = 1;
    std::string signature;   // declaration header text; empty for files
    std::optional<std::string> docstring;
    std::vector<std::string> bases; // class entities: base names as written ("m.Base")
    std::vector<RawCallSite> call_sites;
    std::vector<RawImportSite> import_sites;
    std::optional<std::string> parent; // lexical container id; absent for files
    bool parse_error = false;          // file entities only
};

// Renders "path::A.b" (file entities render as the bare path).
std::string entity_id(const std::string& path, const std::vector<std::string>& qualified_parts);

// Inverse of entity_id; splits at the first "::".
struct ParsedEntityId {
    std::string path;
    std::vector<std::string> qualified_parts; // empty for file ids
};
ParsedEntityId parse_entity_id(const std::string& id);

// All entities of one repository snapshot, sorted by (path, start_line, id).
// Immutable after construction; safe for concurrent readers.
class EntitySet {
public:
    EntitySet() = default;
    EntitySet(std::string repo_root, std::vector<Entity> entities);

    const std::vector<Entity>& entities() const { return entities_; }
    const std::string& repo_root() const { return repo_root_; }
    const Entity* find(const std::string& id) const;
    const Entity* parent_of(const Entity& entity) const;
    bool empty() const { return entities_.empty(); }
    std::size_t size() const { return entities_.size(); }

    // Throws Error{Integrity} when ids collide, a parent is unresolvable, or a
    // child span escapes its parent span.
    void validate() const;

    // Per-file content hashes captured at scan time; feed the graphs' snapshot
    // hashes. Hand-built sets may leave this empty (hashes default to 0).
    const std::map<std::string, std::uint64_t>& file_hashes() const { return file_hashes_; }
    void set_file_hashes(std::map<std::string, std::uint64_t> hashes) {
        file_hashes_ = std::move(hashes);
    }
    std::uint64_t file_hash(const std::string& path) const;

private:
    std::string repo_root_;
    std::vector<Entity> entities_;
    std::vector<std::size_t> by_id_; // indices sorted by id for lookup
    std::map<std::string, std::uint64_t> file_hashes_;
};

} // namespace codegraph
