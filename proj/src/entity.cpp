#include "codegraph/entity.hpp"

#include "codegraph/error.hpp"
#include "codegraph/util.hpp"

#include <algorithm>

namespace codegraph {

const char* to_string(EntityKind kind) {
    switch (kind) {
    case EntityKind::File: return "file";
    case EntityKind::Class: return "class";
    case EntityKind::Function: return "function";
    case EntityKind::Method: return "method";
    }
    return "file";
}

std::optional<EntityKind> entity_kind_from(std::string_view text) {
    if (text == "file") return EntityKind::File;
    if (text == "class") return EntityKind::Class;
    if (text == "function") return EntityKind::Function;
    if (text == "method") return EntityKind::Method;
    return std::nullopt;
}

std::string entity_id(const std::string& path, const std::vector<std::string>& qualified_parts) {
    if (qualified_parts.empty()) return path;
    return path + "::" + join(qualified_parts, ".");
}

ParsedEntityId parse_entity_id(const std::string& id) {
    ParsedEntityId parsed;
    std::size_t sep = id.find("::");
    if (sep == std::string::npos) {
        parsed.path = id;
        return parsed;
    }
    parsed.path = id.substr(0, sep);
    parsed.qualified_parts = split(id.substr(sep + 2), '.');
    return parsed;
}

EntitySet::EntitySet(std::string repo_root, std::vector<Entity> entities)
    : repo_root_(std::move(repo_root)), entities_(std::move(entities)) {
    std::sort(entities_.begin(), entities_.end(), [](const Entity& a, const Entity& b) {
        if (a.path != b.path) return a.path < b.path;
        if (a.start_line != b.start_line) return a.start_line < b.start_line;
        return a.id < b.id;
    });
    by_id_.resize(entities_.size());
    for (std::size_t i = 0; i < by_id_.size(); ++i) by_id_[i] = i;
    std::sort(by_id_.begin(), by_id_.end(), [this](std::size_t a, std::size_t b) {
        return entities_[a].id < entities_[b].id;
    });
}

const Entity* EntitySet::find(const std::string& id) const {
    auto it = std::lower_bound(by_id_.begin(), by_id_.end(), id,
                               [this](std::size_t index, const std::string& key) {
                                   return entities_[index].id < key;
                               });
    if (it == by_id_.end() || entities_[*it].id != id) return nullptr;
    return &entities_[*it];
}

const Entity* EntitySet::parent_of(const Entity& entity) const {
    if (!entity.parent) return nullptr;
    return find(*entity.parent);
}

std::uint64_t EntitySet::file_hash(const std::string& path) const {
    auto it = file_hashes_.find(path);
    return it == file_hashes_.end() ? 0 : it->second;
}

void EntitySet::validate() const {
    for (std::size_t i = 1; i < by_id_.size(); ++i) {
        const Entity& prev = entities_[by_id_[i - 1]];
        const Entity& cur = entities_[by_id_[i]];
        if (prev.id == cur.id) fail(ErrorKind::Integrity, "duplicate entity id: " + cur.id);
    }
    for (const Entity& e : entities_) {
        if (e.start_line < 1 || e.end_line < e.start_line)
            fail(ErrorKind::Integrity, "bad line span for " + e.id);
        if (e.kind == EntityKind::File) {
            if (e.parent) fail(ErrorKind::Integrity, "file entity has a parent: " + e.id);
            continue;
        }
        if (!e.parent) fail(ErrorKind::Integrity, "non-file entity without parent: " + e.id);
        const Entity* p = find(*e.parent);
        if (!p) fail(ErrorKind::Integrity, "unresolvable parent " + *e.parent + " of " + e.id);
        if (p->path != e.path)
            fail(ErrorKind::Integrity, "parent of " + e.id + " lives in another file");
        if (e.start_line < p->start_line || e.end_line > p->end_line)
            fail(ErrorKind::Integrity, "span of " + e.id + " escapes its parent");
    }
}

} // namespace codegraph
