#include "codegraph/graph.hpp"

#include "codegraph/error.hpp"
#include "codegraph/util.hpp"

#include <algorithm>
#include <map>

namespace codegraph {

const char* to_string(GraphKind kind) {
    return kind == GraphKind::Sscg ? "sscg" : "rg";
}

std::optional<GraphKind> graph_kind_from(std::string_view text) {
    if (text == "sscg") return GraphKind::Sscg;
    if (text == "rg") return GraphKind::Rg;
    return std::nullopt;
}

const char* to_string(EdgeKind kind) {
    switch (kind) {
    case EdgeKind::Import: return "import";
    case EdgeKind::Contain: return "contain";
    case EdgeKind::Inherit: return "inherit";
    case EdgeKind::Invoke: return "invoke";
    case EdgeKind::Similar: return "similar";
    case EdgeKind::ParentChild: return "parent-child";
    }
    return "contain";
}

std::optional<EdgeKind> edge_kind_from(std::string_view text) {
    if (text == "import") return EdgeKind::Import;
    if (text == "contain") return EdgeKind::Contain;
    if (text == "inherit") return EdgeKind::Inherit;
    if (text == "invoke") return EdgeKind::Invoke;
    if (text == "similar") return EdgeKind::Similar;
    if (text == "parent-child") return EdgeKind::ParentChild;
    return std::nullopt;
}

std::string node_kind_label(GraphKind graph, EntityKind kind) {
    std::string base = to_string(kind);
    if (graph == GraphKind::Rg) base += "-requirement";
    return base;
}

std::optional<EntityKind> node_kind_from_label(GraphKind graph, std::string_view label) {
    if (graph == GraphKind::Sscg) return entity_kind_from(label);
    constexpr std::string_view suffix = "-requirement";
    if (label.size() <= suffix.size() ||
        label.substr(label.size() - suffix.size()) != suffix)
        return std::nullopt;
    auto kind = entity_kind_from(label.substr(0, label.size() - suffix.size()));
    if (kind && *kind == EntityKind::File) return std::nullopt; // no file requirements
    return kind;
}

bool edge_less(const GraphEdge& a, const GraphEdge& b) {
    if (a.src != b.src) return a.src < b.src;
    std::string_view ka = to_string(a.kind), kb = to_string(b.kind);
    if (ka != kb) return ka < kb;
    return a.dst < b.dst;
}

void Graph::sort_and_index() {
    std::sort(nodes.begin(), nodes.end(),
              [](const GraphNode& a, const GraphNode& b) { return a.id < b.id; });
    std::sort(edges.begin(), edges.end(), edge_less);
    by_id_.resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) by_id_[i] = i;
}

const GraphNode* Graph::find(const std::string& id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                               [](const GraphNode& n, const std::string& key) {
                                   return n.id < key;
                               });
    if (it == nodes.end() || it->id != id) return nullptr;
    return &*it;
}

namespace {

// DFS cycle check over an adjacency map restricted to one edge kind.
bool has_cycle(const std::map<std::string, std::vector<std::string>>& adjacency) {
    std::map<std::string, int> state; // 0 unseen, 1 on stack, 2 done
    struct Frame {
        const std::string* node;
        std::size_t next = 0;
    };
    for (const auto& [start, _] : adjacency) {
        if (state[start] != 0) continue;
        std::vector<Frame> stack{{&start}};
        state[start] = 1;
        while (!stack.empty()) {
            Frame& frame = stack.back();
            auto it = adjacency.find(*frame.node);
            if (it == adjacency.end() || frame.next >= it->second.size()) {
                state[*frame.node] = 2;
                stack.pop_back();
                continue;
            }
            const std::string& next = it->second[frame.next++];
            int s = state[next];
            if (s == 1) return true;
            if (s == 0) {
                state[next] = 1;
                stack.push_back({&next});
            }
        }
    }
    return false;
}

} // namespace

void Graph::validate() const {
    if (epsilon < 0.0 || epsilon > 1.0)
        fail(ErrorKind::Integrity, "graph epsilon out of [0,1]");
    for (std::size_t i = 1; i < nodes.size(); ++i)
        if (nodes[i - 1].id >= nodes[i].id)
            fail(ErrorKind::Integrity, "node order violated at " + nodes[i].id);
    if (kind == GraphKind::Rg)
        for (const auto& n : nodes)
            if (n.kind == EntityKind::File || n.text.empty())
                fail(ErrorKind::Integrity, "invalid requirement node " + n.id);

    std::map<std::pair<std::string, std::string>, double> similar_seen;
    std::map<std::string, int> contain_in_degree;
    std::map<std::string, std::vector<std::string>> parent_child;

    for (const auto& e : edges) {
        if (!find(e.src)) fail(ErrorKind::Integrity, "dangling edge source " + e.src);
        if (!find(e.dst)) fail(ErrorKind::Integrity, "dangling edge target " + e.dst);
        if (e.src == e.dst) fail(ErrorKind::Integrity, "self edge at " + e.src);
        if (e.score.has_value() != (e.kind == EdgeKind::Similar))
            fail(ErrorKind::Integrity, "edge score presence mismatches kind at " + e.src);
        bool edge_allowed = kind == GraphKind::Sscg
                                ? e.kind != EdgeKind::ParentChild
                                : (e.kind == EdgeKind::ParentChild || e.kind == EdgeKind::Similar);
        if (!edge_allowed)
            fail(ErrorKind::Integrity, std::string("edge kind ") + to_string(e.kind) +
                                           " not allowed in " + to_string(kind) + " graph");
        if (e.kind == EdgeKind::Similar) similar_seen[{e.src, e.dst}] = *e.score;
        if (e.kind == EdgeKind::Contain) ++contain_in_degree[e.dst];
        if (e.kind == EdgeKind::ParentChild) parent_child[e.src].push_back(e.dst);
    }

    for (const auto& [key, score] : similar_seen) {
        auto mirror = similar_seen.find({key.second, key.first});
        if (mirror == similar_seen.end() || mirror->second != score)
            fail(ErrorKind::Integrity,
                 "similar edge " + key.first + " -> " + key.second + " lacks an equal mirror");
    }

    if (kind == GraphKind::Sscg) {
        std::map<std::string, std::vector<std::string>> contain_adj;
        for (const auto& e : edges)
            if (e.kind == EdgeKind::Contain) contain_adj[e.src].push_back(e.dst);
        for (const auto& [dst, degree] : contain_in_degree)
            if (degree > 1)
                fail(ErrorKind::Integrity, "contain in-degree > 1 at " + dst);
        if (has_cycle(contain_adj))
            fail(ErrorKind::Integrity, "contain edges form a cycle");
        // roots of contain trees must be file nodes
        for (const auto& n : nodes) {
            if (n.kind == EntityKind::File && contain_in_degree.count(n.id))
                fail(ErrorKind::Integrity, "file node " + n.id + " is contained");
        }
    } else if (has_cycle(parent_child)) {
        fail(ErrorKind::Integrity, "parent-child edges form a cycle");
    }
}

std::vector<GraphEdge> similar_edges_from_pairs(const std::vector<std::string>& ids,
                                                const std::vector<SimilarPair>& pairs) {
    std::vector<GraphEdge> out;
    out.reserve(pairs.size() * 2);
    for (const auto& p : pairs) {
        out.push_back({ids[p.a], EdgeKind::Similar, ids[p.b], p.score});
        out.push_back({ids[p.b], EdgeKind::Similar, ids[p.a], p.score});
    }
    return out;
}

std::string combine_snapshot_hash(
    const std::vector<std::pair<std::string, std::uint64_t>>& path_hashes) {
    std::vector<std::pair<std::string, std::uint64_t>> sorted = path_hashes;
    std::sort(sorted.begin(), sorted.end());
    std::uint64_t h = fnv1a64("");
    for (const auto& [path, hash] : sorted)
        h = fnv1a64(path + "\t" + to_hex(hash) + "\n", h);
    return to_hex(h);
}

} // namespace codegraph
