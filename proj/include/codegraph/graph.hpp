#pragma once
// In-memory model shared by the code graph and the requirement graph. One node
// and edge shape serves both: requirement nodes carry text + provenance, code
// nodes leave them empty. Graphs are sorted and index-backed after
// sort_and_index() and treated as immutable from then on.

#include "codegraph/entity.hpp"
#include "codegraph/similarity.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace codegraph {

enum class GraphKind { Sscg, Rg };

const char* to_string(GraphKind kind);
std::optional<GraphKind> graph_kind_from(std::string_view text);

enum class EdgeKind { Import, Contain, Inherit, Invoke, Similar, ParentChild };

const char* to_string(EdgeKind kind);
std::optional<EdgeKind> edge_kind_from(std::string_view text);

struct GraphNode {
    std::string id;
    EntityKind kind = EntityKind::File; // requirement nodes reuse the entity kind (never File)
    std::string path;
    int start_line = 1;
    int end_line = 1;
    std::string name;
    std::string provenance; // rg only: "docstring" | "generated"
    std::string text;       // rg only: requirement text

    bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
    std::string src;
    EdgeKind kind = EdgeKind::Contain;
    std::string dst;
    std::optional<double> score; // present iff kind == Similar

    bool operator==(const GraphEdge&) const = default;
};

// Node kind as serialized: "file|class|function|method" for the code graph,
// "class-requirement|function-requirement|method-requirement" for the RG.
std::string node_kind_label(GraphKind graph, EntityKind kind);
std::optional<EntityKind> node_kind_from_label(GraphKind graph, std::string_view label);

struct Graph {
    GraphKind kind = GraphKind::Sscg;
    std::string snapshot_hash; // 16 hex digits over the (path, file hash) pairs
    double epsilon = 0.8;
    std::vector<GraphNode> nodes; // sorted by id after sort_and_index
    std::vector<GraphEdge> edges; // sorted by (src, kind label, dst)

    // Sorts records into canonical order and rebuilds the id index.
    void sort_and_index();

    const GraphNode* find(const std::string& id) const;
    bool contains(const std::string& id) const { return find(id) != nullptr; }

    // Checks referential integrity plus the per-kind structural invariants
    // (contain forest for the code graph, parent-child acyclicity for the RG,
    // symmetric similar pairs with equal scores). Throws Error{Integrity}.
    void validate() const;

    bool operator==(const Graph& other) const {
        return kind == other.kind && snapshot_hash == other.snapshot_hash &&
               epsilon == other.epsilon && nodes == other.nodes && edges == other.edges;
    }

private:
    std::vector<std::size_t> by_id_;
};

// Canonical edge order: (src, kind label, dst).
bool edge_less(const GraphEdge& a, const GraphEdge& b);

// Expands mutually-kept similar pairs over `ids` into symmetric edge pairs.
std::vector<GraphEdge> similar_edges_from_pairs(const std::vector<std::string>& ids,
                                                const std::vector<SimilarPair>& pairs);

// Aggregates fnv1a64 over sorted "path<TAB>hexhash<LF>" lines; the per-graph
// snapshot hash uses exactly the distinct node paths of that graph.
std::string combine_snapshot_hash(
    const std::vector<std::pair<std::string, std::uint64_t>>& path_hashes);

} // namespace codegraph
