#include "codegraph/rg_builder.hpp"

#include "codegraph/error.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

namespace codegraph {

namespace {

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

} // namespace

std::map<std::string, RequirementCacheRow> load_requirement_cache(const std::string& path) {
    std::map<std::string, RequirementCacheRow> rows;
    if (!std::filesystem::exists(path)) return rows;
    std::string text = read_text_file(path);
    int line_no = 0;
    for (const std::string& line : split_lines(text)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> f = split(line, '\t');
        if (f.size() != 5 || f[0] != "R")
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) +
                                       ": expected 'R<TAB>id<TAB>hash<TAB>provenance<TAB>text'");
        RequirementCacheRow row;
        row.id = f[1];
        try {
            row.source_hash = std::stoull(f[2], nullptr, 16);
        } catch (const std::exception&) {
            fail(ErrorKind::Parse,
                 path + ":" + std::to_string(line_no) + ": bad source hash '" + f[2] + "'");
        }
        row.provenance = f[3];
        if (row.provenance != "docstring" && row.provenance != "generated")
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) +
                                       ": unknown provenance '" + row.provenance + "'");
        row.text = unescape_field(f[4]);
        rows[row.id] = std::move(row);
    }
    return rows;
}

void save_requirement_cache(const std::string& path,
                            const std::map<std::string, RequirementCacheRow>& rows) {
    std::string out;
    for (const auto& [id, row] : rows)
        out += "R\t" + id + '\t' + to_hex(row.source_hash) + '\t' + row.provenance + '\t' +
               escape_field(row.text) + '\n';
    write_text_file(path, out);
}

std::map<std::string, RequirementText> derive_requirements(const EntitySet& entities,
                                                           ChatProvider* chat,
                                                           const RgConfig& config,
                                                           Diagnostics* diagnostics) {
    std::map<std::string, RequirementCacheRow> cache;
    if (!config.cache_path.empty()) cache = load_requirement_cache(config.cache_path);

    SourceText source(entities);
    std::map<std::string, RequirementText> out;
    bool cache_dirty = false;
    for (const Entity& e : entities.entities()) {
        if (e.kind == EntityKind::File) continue;
        if (e.docstring && !e.docstring->empty()) {
            out[e.id] = {*e.docstring, "docstring"};
            continue;
        }

        std::uint64_t hash = source.hash_for(e);
        if (auto it = cache.find(e.id); it != cache.end() && it->second.source_hash == hash) {
            out[e.id] = {it->second.text, it->second.provenance};
            if (diagnostics) diagnostics->count("requirement_cache_hits");
            continue;
        }

        std::string text;
        if (chat) {
            std::string prompt = replace_all(config.requirement_prompt, "{code}",
                                             source.text_for(e));
            try {
                ChatResult reply = chat->chat({{"system", "You write software requirements."},
                                               {"user", prompt}},
                                              {});
                text = trim(reply.text);
            } catch (const Error& err) {
                if (diagnostics)
                    diagnostics->warn("requirement generation failed for " + e.id + ": " +
                                      err.what());
            }
        } else if (diagnostics) {
            diagnostics->warn("no chat provider; using signature as requirement for " + e.id);
        }
        if (text.empty()) text = e.signature;
        out[e.id] = {text, "generated"};
        if (diagnostics) diagnostics->count("requirements_generated");
        cache[e.id] = {e.id, hash, "generated", text};
        cache_dirty = true;
    }

    if (!config.cache_path.empty() && cache_dirty)
        save_requirement_cache(config.cache_path, cache);
    return out;
}

std::vector<GraphEdge> derive_parent_child(const Graph& sscg,
                                           const std::map<std::string, RequirementText>& reqs,
                                           ChatProvider* chat, const RgConfig& config,
                                           Diagnostics* diagnostics) {
    // seed: invoke edges whose endpoints both carry requirements
    std::vector<std::pair<std::string, std::string>> candidates;
    for (const GraphEdge& e : sscg.edges)
        if (e.kind == EdgeKind::Invoke && reqs.count(e.src) && reqs.count(e.dst))
            candidates.emplace_back(e.src, e.dst);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    if (config.llm_confirm && chat) {
        std::vector<std::pair<std::string, std::string>> confirmed;
        for (const auto& [src, dst] : candidates) {
            std::string prompt = replace_all(
                replace_all(config.confirm_prompt, "{parent}", reqs.at(src).text), "{child}",
                reqs.at(dst).text);
            bool keep = true;
            try {
                ChatResult reply =
                    chat->chat({{"system", "You verify requirement relationships."},
                                {"user", prompt}},
                               {});
                std::vector<std::string> words = tokenize(reply.text);
                keep = !words.empty() && words[0] == "yes";
                if (!keep && diagnostics) diagnostics->count("parent_child_unconfirmed");
            } catch (const Error& err) {
                if (diagnostics)
                    diagnostics->warn("parent-child confirmation failed for " + src + " -> " +
                                      dst + ", keeping candidate: " + err.what());
            }
            if (keep) confirmed.push_back({src, dst});
        }
        candidates = std::move(confirmed);
    }

    // ascending insertion; an edge that would close a cycle is dropped
    std::map<std::string, std::vector<std::string>> adj;
    auto reaches = [&adj](const std::string& from, const std::string& to) {
        std::vector<const std::string*> stack{&from};
        std::set<std::string> seen{from};
        while (!stack.empty()) {
            const std::string& node = *stack.back();
            stack.pop_back();
            if (node == to) return true;
            auto it = adj.find(node);
            if (it == adj.end()) continue;
            for (const std::string& next : it->second)
                if (seen.insert(next).second) stack.push_back(&next);
        }
        return false;
    };

    std::vector<GraphEdge> edges;
    for (const auto& [src, dst] : candidates) {
        if (reaches(dst, src)) {
            if (diagnostics) {
                diagnostics->count("parent_child_cycle_drops");
                diagnostics->warn("parent-child cycle: dropped " + src + " -> " + dst);
            }
            continue;
        }
        adj[src].push_back(dst);
        edges.push_back({src, EdgeKind::ParentChild, dst, std::nullopt});
    }
    return edges;
}

std::vector<GraphEdge> derive_requirement_similarity(
    const std::map<std::string, RequirementText>& reqs, EmbeddingProvider& embedder,
    double epsilon, std::size_t similar_cap) {
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& [id, req] : reqs) rows.emplace_back(id, req.text);
    return add_similarity_edges(rows, embedder, epsilon, similar_cap);
}

Graph build_rg(const EntitySet& entities, const Graph& sscg, ChatProvider* chat,
               EmbeddingProvider* embedder, const RgConfig& config,
               Diagnostics* diagnostics) {
    if (config.epsilon < 0.0 || config.epsilon > 1.0)
        fail(ErrorKind::Config, "epsilon out of [0,1]");
    entities.validate();

    std::map<std::string, RequirementText> reqs =
        derive_requirements(entities, chat, config, diagnostics);

    Graph graph;
    graph.kind = GraphKind::Rg;
    graph.epsilon = config.epsilon;
    for (const Entity& e : entities.entities()) {
        if (e.kind == EntityKind::File) continue;
        const RequirementText& req = reqs.at(e.id);
        graph.nodes.push_back(
            {e.id, e.kind, e.path, e.start_line, e.end_line, e.name, req.provenance, req.text});
    }

    graph.edges = derive_parent_child(sscg, reqs, chat, config, diagnostics);

    if (embedder) {
        try {
            auto similar =
                derive_requirement_similarity(reqs, *embedder, config.epsilon,
                                              config.similar_cap);
            graph.edges.insert(graph.edges.end(), similar.begin(), similar.end());
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Config) throw;
            if (diagnostics)
                diagnostics->warn(std::string("requirement similarity skipped: ") + e.what());
        }
    }

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
