#include "codegraph/graph_store.hpp"

#include "codegraph/error.hpp"
#include "codegraph/util.hpp"

#include <algorithm>
#include <filesystem>

namespace codegraph {

namespace {

int parse_line_number(const std::string& text, const std::string& origin, int line_no) {
    try {
        std::size_t used = 0;
        int value = std::stoi(text, &used);
        if (used != text.size() || value < 1) throw std::invalid_argument("range");
        return value;
    } catch (const std::exception&) {
        fail(ErrorKind::CorruptRecord,
             origin + ":" + std::to_string(line_no) + ": bad line number '" + text + "'");
    }
}

} // namespace

std::string serialize_graph(const Graph& graph) {
    std::string out;
    out += "H\t";
    out += kIndexFormatTag;
    out += '\t';
    out += kIndexFormatVersion;
    out += '\t';
    out += to_string(graph.kind);
    out += '\t';
    out += graph.snapshot_hash;
    out += '\t';
    out += format_double(graph.epsilon);
    out += '\n';
    for (const auto& n : graph.nodes) {
        out += "N\t" + n.id + '\t' + node_kind_label(graph.kind, n.kind) + '\t' + n.path + '\t' +
               std::to_string(n.start_line) + '\t' + std::to_string(n.end_line) + '\t' + n.name;
        if (graph.kind == GraphKind::Rg)
            out += '\t' + n.provenance + '\t' + escape_field(n.text);
        out += '\n';
    }
    for (const auto& e : graph.edges) {
        out += "E\t" + e.src + '\t' + to_string(e.kind) + '\t' + e.dst + '\t';
        if (e.score) out += format_double(*e.score);
        out += '\n';
    }
    return out;
}

Graph parse_graph(const std::string& content, const std::string& origin) {
    std::vector<std::string> lines = split_lines(content);
    if (lines.empty()) fail(ErrorKind::CorruptRecord, origin + ": empty index");

    auto corrupt = [&origin](int line_no, const std::string& what) -> void {
        fail(ErrorKind::CorruptRecord, origin + ":" + std::to_string(line_no) + ": " + what);
    };

    std::vector<std::string> header = split(lines[0], '\t');
    if (header.size() != 6 || header[0] != "H") corrupt(1, "malformed header");
    if (header[1] != kIndexFormatTag)
        fail(ErrorKind::FormatVersion, origin + ": unknown format tag '" + header[1] + "'");
    if (header[2] != kIndexFormatVersion)
        fail(ErrorKind::FormatVersion, origin + ": unsupported format version '" + header[2] + "'");
    auto kind = graph_kind_from(header[3]);
    if (!kind) corrupt(1, "unknown graph kind '" + header[3] + "'");

    Graph graph;
    graph.kind = *kind;
    graph.snapshot_hash = header[4];
    try {
        graph.epsilon = parse_double(header[5]);
    } catch (const Error&) {
        corrupt(1, "bad epsilon '" + header[5] + "'");
    }

    const std::size_t node_fields = graph.kind == GraphKind::Rg ? 9 : 7;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        int line_no = static_cast<int>(i) + 1;
        std::vector<std::string> f = split(lines[i], '\t');
        if (f.empty()) corrupt(line_no, "blank record");
        if (f[0] == "N") {
            if (f.size() != node_fields) corrupt(line_no, "node record has wrong field count");
            GraphNode n;
            n.id = f[1];
            auto nk = node_kind_from_label(graph.kind, f[2]);
            if (!nk) corrupt(line_no, "unknown node kind '" + f[2] + "'");
            n.kind = *nk;
            n.path = f[3];
            n.start_line = parse_line_number(f[4], origin, line_no);
            n.end_line = parse_line_number(f[5], origin, line_no);
            n.name = f[6];
            if (graph.kind == GraphKind::Rg) {
                n.provenance = f[7];
                n.text = unescape_field(f[8]);
                if (n.provenance != "docstring" && n.provenance != "generated")
                    corrupt(line_no, "unknown provenance '" + n.provenance + "'");
            }
            graph.nodes.push_back(std::move(n));
        } else if (f[0] == "E") {
            if (f.size() != 5) corrupt(line_no, "edge record has wrong field count");
            GraphEdge e;
            e.src = f[1];
            auto ek = edge_kind_from(f[2]);
            if (!ek) corrupt(line_no, "unknown edge kind '" + f[2] + "'");
            e.kind = *ek;
            e.dst = f[3];
            if (!f[4].empty()) {
                try {
                    e.score = parse_double(f[4]);
                } catch (const Error&) {
                    corrupt(line_no, "bad score '" + f[4] + "'");
                }
            }
            graph.edges.push_back(std::move(e));
        } else {
            corrupt(line_no, "unknown record type '" + f[0] + "'");
        }
    }

    Graph sorted = graph;
    sorted.sort_and_index();
    if (!(sorted.nodes == graph.nodes && sorted.edges == graph.edges))
        fail(ErrorKind::CorruptRecord, origin + ": records are not in canonical order");
    sorted.validate();
    return sorted;
}

void save_graph(const Graph& graph, const std::string& path) {
    write_text_file(path, serialize_graph(graph));
}

Graph load_graph(const std::string& path) {
    return parse_graph(read_text_file(path), path);
}

std::optional<Direction> direction_from(std::string_view text) {
    if (text == "outbound") return Direction::Outbound;
    if (text == "inbound") return Direction::Inbound;
    if (text == "both") return Direction::Both;
    return std::nullopt;
}

const char* to_string(Direction direction) {
    switch (direction) {
    case Direction::Outbound: return "outbound";
    case Direction::Inbound: return "inbound";
    case Direction::Both: return "both";
    }
    return "both";
}

std::vector<NeighborHit> neighbors(const Graph& graph, const std::string& node_id,
                                   Direction direction, const std::set<EdgeKind>& edge_kinds) {
    if (!graph.contains(node_id))
        fail(ErrorKind::Precondition, "unknown node: " + node_id);
    std::vector<NeighborHit> hits;
    bool want_out = direction != Direction::Inbound;
    bool want_in = direction != Direction::Outbound;
    for (const auto& e : graph.edges) {
        if (!edge_kinds.count(e.kind)) continue;
        if (want_out && e.src == node_id) hits.push_back({e, e.dst});
        if (want_in && e.dst == node_id) hits.push_back({e, e.src});
    }
    std::sort(hits.begin(), hits.end(), [](const NeighborHit& a, const NeighborHit& b) {
        std::string_view ka = to_string(a.edge.kind), kb = to_string(b.edge.kind);
        if (ka != kb) return ka < kb;
        if (a.neighbor_id != b.neighbor_id) return a.neighbor_id < b.neighbor_id;
        return a.edge.src < b.edge.src; // stable keep order for the dedupe pass
    });
    // Both-direction duplicates (e.g. a symmetric similar pair) collapse to one
    // hit per (kind, neighbor).
    std::vector<NeighborHit> out;
    for (auto& h : hits) {
        if (!out.empty() && out.back().edge.kind == h.edge.kind &&
            out.back().neighbor_id == h.neighbor_id)
            continue;
        out.push_back(std::move(h));
    }
    return out;
}

namespace {

std::vector<std::string> distinct_paths(const Graph& graph) {
    std::vector<std::string> paths;
    for (const auto& n : graph.nodes) paths.push_back(n.path);
    std::sort(paths.begin(), paths.end());
    paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
    return paths;
}

} // namespace

void verify_snapshot(const Graph& graph, const std::string& repo_root) {
    std::vector<std::pair<std::string, std::uint64_t>> path_hashes;
    for (const auto& path : distinct_paths(graph)) {
        std::string full = (std::filesystem::path(repo_root) / path).string();
        path_hashes.emplace_back(path, fnv1a64(read_text_file(full)));
    }
    std::string recomputed = combine_snapshot_hash(path_hashes);
    if (recomputed != graph.snapshot_hash)
        fail(ErrorKind::StaleIndex, "repository snapshot no longer matches the index (" +
                                        recomputed + " != " + graph.snapshot_hash + ")");
}

std::string resolve_source_unchecked(const Graph& graph, const std::string& node_id,
                                     const std::string& repo_root) {
    const GraphNode* node = graph.find(node_id);
    if (!node) fail(ErrorKind::Precondition, "unknown node: " + node_id);
    std::string full = (std::filesystem::path(repo_root) / node->path).string();
    std::string text = read_text_file(full);
    if (node->kind == EntityKind::File && graph.kind == GraphKind::Sscg) return text;
    std::vector<std::string> lines = split_lines(text);
    if (node->end_line > static_cast<int>(lines.size()))
        fail(ErrorKind::StaleIndex, "node span of " + node_id + " exceeds file length");
    std::string out;
    for (int i = node->start_line; i <= node->end_line; ++i) {
        out += lines[static_cast<std::size_t>(i - 1)];
        out += '\n';
    }
    return out;
}

std::string resolve_source(const Graph& graph, const std::string& node_id,
                           const std::string& repo_root) {
    verify_snapshot(graph, repo_root);
    return resolve_source_unchecked(graph, node_id, repo_root);
}

} // namespace codegraph
