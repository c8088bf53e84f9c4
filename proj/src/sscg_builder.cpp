#include "codegraph/sscg_builder.hpp"

#include "codegraph/error.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

namespace codegraph {

namespace {

std::string dirname(const std::string& path) {
    std::size_t pos = path.find_last_of('/');
    return pos == std::string::npos ? "" : path.substr(0, pos);
}

std::string join_path(const std::string& dir, const std::string& rel) {
    if (dir.empty()) return rel;
    if (rel.empty()) return dir;
    return dir + "/" + rel;
}

} // namespace

NameResolver::NameResolver(const EntitySet& entities) : entities_(entities) {
    std::set<std::string> known_files;
    for (const Entity& e : entities.entities()) {
        if (e.kind == EntityKind::File) {
            known_files.insert(e.path);
            scopes_.emplace(e.path, FileScope{});
        }
    }
    for (const Entity& e : entities.entities()) {
        if (e.kind == EntityKind::File || !e.parent) continue;
        if (*e.parent == e.path) // top-level definition
            scopes_[e.path].top_level[e.name] = e.id;
    }

    // Imports are file-scoped: sites anywhere in the file feed one shared
    // scope, in (entity order, site order).
    for (const Entity& e : entities.entities()) {
        FileScope& scope = scopes_[e.path];
        std::string importer_dir = dirname(e.path);
        for (const RawImportSite& site : e.import_sites) {
            if (site.imported_name) {
                if (*site.imported_name == "*") {
                    if (auto file = module_file(site.module_path, importer_dir))
                        scope.star_imports.push_back(*file);
                    continue;
                }
                std::string local = site.alias.value_or(*site.imported_name);
                if (auto file = module_file(site.module_path, importer_dir)) {
                    auto it = scopes_.find(*file);
                    if (it != scopes_.end()) {
                        auto hit = it->second.top_level.find(*site.imported_name);
                        if (hit != it->second.top_level.end()) {
                            scope.entity_imports[local] = hit->second;
                            import_edges_.emplace_back(e.path, hit->second);
                            continue;
                        }
                    }
                }
                // `from pkg import mod`: the imported name may itself be a module
                std::string submodule = site.module_path == "."
                                            ? "." + *site.imported_name
                                            : site.module_path + "." + *site.imported_name;
                if (auto file = module_file(submodule, importer_dir))
                    scope.module_imports[local] = *file;
            } else {
                std::string local = site.alias.value_or(site.module_path);
                if (auto file = module_file(site.module_path, importer_dir))
                    scope.module_imports[local] = *file;
            }
        }
    }

    // Base-class resolution happens after scopes exist; bases feed the
    // self.-method lookup chain.
    for (const Entity& e : entities.entities()) {
        if (e.kind != EntityKind::Class) continue;
        std::vector<std::string> resolved;
        for (const std::string& base : e.bases) {
            auto id = resolve(base, e);
            if (!id) continue;
            const Entity* target = entities_.find(*id);
            if (target && target->kind == EntityKind::Class && *id != e.id)
                resolved.push_back(*id);
        }
        if (!resolved.empty()) bases_[e.id] = std::move(resolved);
    }

    std::sort(import_edges_.begin(), import_edges_.end());
    import_edges_.erase(std::unique(import_edges_.begin(), import_edges_.end()),
                        import_edges_.end());
}

std::optional<std::string> NameResolver::module_file(const std::string& dotted,
                                                     const std::string& importer_dir) const {
    auto known = [this](const std::string& path) { return scopes_.count(path) != 0; };
    std::vector<std::string> candidates;
    if (!dotted.empty() && dotted[0] == '.') {
        std::size_t dots = 0;
        while (dots < dotted.size() && dotted[dots] == '.') ++dots;
        std::string base = importer_dir;
        for (std::size_t i = 1; i < dots; ++i) base = dirname(base);
        std::string rest = dotted.substr(dots);
        std::string rel = join(split(rest, '.'), "/");
        if (rest.empty()) {
            candidates.push_back(join_path(base, "__init__.py"));
        } else {
            candidates.push_back(join_path(base, rel + ".py"));
            candidates.push_back(join_path(base, rel + "/__init__.py"));
        }
    } else {
        std::string rel = join(split(dotted, '.'), "/");
        candidates.push_back(join_path(importer_dir, rel + ".py"));
        candidates.push_back(join_path(importer_dir, rel + "/__init__.py"));
        candidates.push_back(rel + ".py");
        candidates.push_back(rel + "/__init__.py");
    }
    for (const auto& c : candidates)
        if (known(c)) return c;
    return std::nullopt;
}

const NameResolver::FileScope* NameResolver::scope_of(const std::string& path) const {
    auto it = scopes_.find(path);
    return it == scopes_.end() ? nullptr : &it->second;
}

std::optional<std::string> NameResolver::lookup_method(const std::string& class_id,
                                                       const std::string& name) const {
    std::set<std::string> visited;
    std::vector<std::string> stack{class_id};
    // preorder depth-first: own members first, then bases left to right
    auto dfs = [&](auto&& self, const std::string& cid) -> std::optional<std::string> {
        if (!visited.insert(cid).second) return std::nullopt;
        std::string candidate = cid + "." + name;
        if (entities_.find(candidate)) return candidate;
        auto it = bases_.find(cid);
        if (it != bases_.end())
            for (const std::string& base : it->second)
                if (auto hit = self(self, base)) return hit;
        return std::nullopt;
    };
    return dfs(dfs, class_id);
}

std::vector<std::string> NameResolver::bases_of(const std::string& class_id) const {
    auto it = bases_.find(class_id);
    return it == bases_.end() ? std::vector<std::string>{} : it->second;
}

std::vector<std::pair<std::string, std::string>> NameResolver::import_edges() const {
    return import_edges_;
}

std::optional<std::string> NameResolver::resolve(const std::string& expr,
                                                 const Entity& context) const {
    std::vector<std::string> parts = split(expr, '.');
    if (parts.empty() || parts[0].empty()) return std::nullopt;

    if (parts[0] == "self") {
        if (parts.size() != 2) return std::nullopt;
        const Entity* cls = &context;
        while (cls && cls->kind != EntityKind::Class)
            cls = cls->parent ? entities_.find(*cls->parent) : nullptr;
        if (!cls) return std::nullopt;
        return lookup_method(cls->id, parts[1]);
    }

    const FileScope* scope = scope_of(context.path);
    if (!scope) return std::nullopt;

    if (parts.size() == 1) {
        const std::string& name = parts[0];
        if (auto it = scope->top_level.find(name); it != scope->top_level.end())
            return it->second;
        if (auto it = scope->entity_imports.find(name); it != scope->entity_imports.end())
            return it->second;
        for (const std::string& file : scope->star_imports) {
            const FileScope* other = scope_of(file);
            if (!other) continue;
            if (auto it = other->top_level.find(name); it != other->top_level.end())
                return it->second;
        }
        return std::nullopt;
    }

    // dotted: longest module-binding prefix, then one top-level member name
    for (std::size_t len = parts.size() - 1; len >= 1; --len) {
        std::string receiver = parts[0];
        for (std::size_t i = 1; i < len; ++i) receiver += "." + parts[i];
        auto it = scope->module_imports.find(receiver);
        if (it == scope->module_imports.end()) continue;
        if (len + 1 != parts.size()) return std::nullopt; // deeper chains unmodeled
        const FileScope* other = scope_of(it->second);
        if (!other) return std::nullopt;
        auto hit = other->top_level.find(parts[len]);
        if (hit != other->top_level.end()) return hit->second;
        return std::nullopt;
    }
    return std::nullopt;
}

std::optional<std::string> resolve_reference(const std::string& expr, const Entity& context,
                                             const EntitySet& entities) {
    return NameResolver(entities).resolve(expr, context);
}

std::vector<GraphEdge> add_similarity_edges(
    const std::vector<std::pair<std::string, std::string>>& rows, EmbeddingProvider& embedder,
    double epsilon, std::size_t similar_cap) {
    std::vector<std::pair<std::string, std::string>> sorted = rows;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    for (auto& [id, text] : sorted) {
        ids.push_back(id);
        texts.push_back(text);
    }
    if (ids.empty()) return {};
    std::vector<Embedding> vectors = embedder.embed(texts);
    std::vector<SimilarPair> pairs = find_similar_pairs(vectors, epsilon, similar_cap);
    return similar_edges_from_pairs(ids, pairs);
}

std::string SourceText::text_for(const Entity& e) {
    const std::vector<std::string>* lines = file_lines(e.path);
    if (lines && e.end_line <= static_cast<int>(lines->size())) {
        std::string out;
        for (int i = e.start_line; i <= e.end_line; ++i) {
            out += (*lines)[static_cast<std::size_t>(i - 1)];
            out += '\n';
        }
        return out;
    }
    std::string fallback = e.signature;
    if (e.docstring) fallback += "\n" + *e.docstring;
    return fallback;
}

std::uint64_t SourceText::hash_for(const Entity& e) {
    return fnv1a64(text_for(e));
}

const std::vector<std::string>* SourceText::file_lines(const std::string& path) {
    auto it = cache_.find(path);
    if (it != cache_.end()) return it->second ? &it->second.value() : nullptr;
    std::optional<std::vector<std::string>> lines;
    try {
        std::string full = (std::filesystem::path(entities_.repo_root()) / path).string();
        lines = split_lines(read_text_file(full));
    } catch (const Error&) {
        lines = std::nullopt;
    }
    auto [pos, _] = cache_.emplace(path, std::move(lines));
    return pos->second ? &pos->second.value() : nullptr;
}

Graph build_sscg(const EntitySet& entities, EmbeddingProvider* embedder,
                 const SscgConfig& config, Diagnostics* diagnostics) {
    if (config.epsilon < 0.0 || config.epsilon > 1.0)
        fail(ErrorKind::Config, "epsilon out of [0,1]");
    entities.validate();

    Graph graph;
    graph.kind = GraphKind::Sscg;
    graph.epsilon = config.epsilon;
    for (const Entity& e : entities.entities())
        graph.nodes.push_back(
            {e.id, e.kind, e.path, e.start_line, e.end_line, e.name, "", ""});

    NameResolver resolver(entities);
    std::vector<GraphEdge> edges;

    for (const Entity& e : entities.entities())
        if (e.parent) edges.push_back({*e.parent, EdgeKind::Contain, e.id, std::nullopt});

    for (const auto& [file, target] : resolver.import_edges())
        if (file != target) edges.push_back({file, EdgeKind::Import, target, std::nullopt});

    for (const Entity& e : entities.entities()) {
        if (e.kind == EntityKind::Class)
            for (const std::string& base : resolver.bases_of(e.id))
                edges.push_back({e.id, EdgeKind::Inherit, base, std::nullopt});
        for (const RawCallSite& site : e.call_sites) {
            auto target = resolver.resolve(site.callee_expr, e);
            if (!target || *target == e.id) {
                if (diagnostics && !target) diagnostics->count("unresolved_call_sites");
                continue;
            }
            if (diagnostics) diagnostics->count("resolved_call_sites");
            edges.push_back({e.id, EdgeKind::Invoke, *target, std::nullopt});
        }
    }

    std::sort(edges.begin(), edges.end(), edge_less);
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    if (embedder) {
        SourceText reader(entities);
        std::vector<std::pair<std::string, std::string>> rows;
        for (const Entity& e : entities.entities())
            if (e.kind != EntityKind::File) rows.emplace_back(e.id, reader.text_for(e));
        try {
            auto similar = add_similarity_edges(rows, *embedder, config.epsilon,
                                                config.similar_cap);
            edges.insert(edges.end(), similar.begin(), similar.end());
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Config) throw;
            if (diagnostics)
                diagnostics->warn(std::string("similarity edges skipped: ") + e.what());
        }
    }

    graph.edges = std::move(edges);

    std::vector<std::pair<std::string, std::uint64_t>> path_hashes;
    std::set<std::string> seen_paths;
    for (const auto& n : graph.nodes)
        if (seen_paths.insert(n.path).second)
            path_hashes.emplace_back(n.path, entities.file_hash(n.path));
    graph.snapshot_hash = combine_snapshot_hash(path_hashes);

    graph.sort_and_index();
    graph.validate();
    return graph;
}

} // namespace codegraph
