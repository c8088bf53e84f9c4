#pragma once
// On-disk index for both graphs: a line-oriented, tab-separated, UTF-8/LF
// format with a fixed sort order, so equal graphs always serialize to
// identical bytes. Loading validates structure; source text stays in the
// repository and is resolved lazily against the snapshot hash.

#include "codegraph/graph.hpp"

#include <set>
#include <string>
#include <vector>

namespace codegraph {

inline constexpr const char* kIndexFormatTag = "codegraph-index";
inline constexpr const char* kIndexFormatVersion = "1";

// Serialization without IO; save_graph writes exactly these bytes.
std::string serialize_graph(const Graph& graph);
Graph parse_graph(const std::string& content, const std::string& origin = "<memory>");

void save_graph(const Graph& graph, const std::string& path);
Graph load_graph(const std::string& path);

enum class Direction { Outbound, Inbound, Both };

std::optional<Direction> direction_from(std::string_view text);
const char* to_string(Direction direction);

struct NeighborHit {
    GraphEdge edge;
    std::string neighbor_id;

    bool operator==(const NeighborHit&) const = default;
};

// Adjacency filtered by direction and edge kinds, sorted by (edge kind label,
// neighbor id); Both merges the two directions and drops duplicate
// (kind, neighbor) hits. Throws Error{Precondition} for unknown nodes.
std::vector<NeighborHit> neighbors(const Graph& graph, const std::string& node_id,
                                   Direction direction, const std::set<EdgeKind>& edge_kinds);

// Recomputes the snapshot hash over the graph's distinct node paths from the
// files under repo_root and compares with the header. Throws Error{StaleIndex}
// on mismatch, Error{Io} when a file is missing.
void verify_snapshot(const Graph& graph, const std::string& repo_root);

// Lines [start_line, end_line] of the node's file (whole file for file
// nodes), after verify_snapshot. Throws Error{Precondition} for unknown ids.
std::string resolve_source(const Graph& graph, const std::string& node_id,
                           const std::string& repo_root);

// resolve_source without the staleness check; used once a caller has already
// verified the snapshot for this (graph, repo_root) pair.
std::string resolve_source_unchecked(const Graph& graph, const std::string& node_id,
                                     const std::string& repo_root);

} // namespace codegraph
