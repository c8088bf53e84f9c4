#pragma once
// The five agent tools over loaded graphs and providers. Each is a pure
// request -> response function; dispatch_tool adds the JSON argument surface
// the agent loop speaks.

#include "codegraph/frontend.hpp"
#include "codegraph/graph_store.hpp"
#include "codegraph/providers.hpp"

#include <json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace codegraph {

inline constexpr const char* kToolNames[] = {"RGRetrieval", "DualGraphMapping", "SSCGTraverse",
                                             "WebSearch", "CodeTesting"};

// ---------------------------------------------------------------------------
// RGRetrieval

struct ScoredRequirement {
    std::string id;
    std::string text;
    double score = 0.0; // cosine against the target requirement

    bool operator==(const ScoredRequirement&) const = default;
};

struct QueryAttachment {
    std::vector<ScoredRequirement> subrequirements;
    std::vector<ScoredRequirement> similar; // disjoint from subrequirements

    bool operator==(const QueryAttachment&) const = default;
};

struct RgRetrievalConfig {
    int candidates = 20; // top-M cosine prefilter size
    double epsilon = 0.8;
};

inline constexpr const char* kClassifyPrompt =
    "Target requirement: {target}\n"
    "Candidate requirement: {candidate}\n"
    "Reply with exactly one word: SUBREQUIREMENT if the candidate is a subrequirement of the "
    "target, SIMILAR if it is semantically similar to the target, NONE otherwise.";

// Embeds the requirement, prefilters the top `candidates` RG nodes by cosine,
// and classifies each with one chat call. Without a chat reply (null provider
// or script mismatch) the fallback rule applies: cosine >= epsilon -> SIMILAR,
// else NONE. Chat transport failure or an unrecognized reply classifies the
// candidate NONE. Both lists come back sorted by descending score (ties by
// id). Empty RG -> empty attachment plus a warning.
QueryAttachment rg_retrieval(const std::string& requirement_text, const Graph& rg,
                             EmbeddingProvider& embedder, ChatProvider* chat,
                             const RgRetrievalConfig& config, Diagnostics* diagnostics = nullptr);

// ---------------------------------------------------------------------------
// DualGraphMapping

// Identity mapping from RG node ids onto SSCG code nodes: input order kept,
// duplicates dropped. Unknown RG id -> Error{Precondition}; RG id without an
// SSCG twin -> Error{Integrity} (the graphs are out of sync).
std::vector<std::string> dual_graph_mapping(const std::vector<std::string>& req_node_ids,
                                            const Graph& rg, const Graph& sscg);

// ---------------------------------------------------------------------------
// SSCGTraverse

struct VisitedNode {
    std::string id;
    int hop = 0;                            // minimum hop from the start set
    EdgeKind via_edge_kind = EdgeKind::Invoke; // edge that first reached it
    std::vector<std::string> path;          // start ... predecessor; size() == hop

    bool operator==(const VisitedNode&) const = default;
};

// Breadth-first over `graph` honoring direction and the edge-kind filter.
// Each reachable node is reported once at its minimum hop; start nodes are
// excluded. Output is sorted by (hop, id). Predecessor ties resolve to the
// smallest-id previous-hop node, then the alphabetically first edge kind, so
// via_edge_kind and path are deterministic. Unknown start id or
// max_hops outside [1, hop_ceiling] -> Error{Precondition}.
std::vector<VisitedNode> sscg_traverse(const std::vector<std::string>& start_ids,
                                       Direction direction, int max_hops,
                                       const std::set<EdgeKind>& edge_kinds, const Graph& graph,
                                       int hop_ceiling = 3);

// ---------------------------------------------------------------------------
// WebSearch

struct WebSearchConfig {
    int top_n = 3;
    std::size_t summary_budget = 4000; // characters of page text given to the summarizer
};

struct WebAnswer {
    std::string summary;
    std::vector<std::string> urls; // cited sources, in backend order

    bool operator==(const WebAnswer&) const = default;
};

// Fetches up to top_n unblocked results, concatenates their text (clipped to
// summary_budget) and asks `chat` for one summary. No usable results or a
// provider failure degrade to an empty summary plus a warning; the agent can
// continue without web context.
WebAnswer web_search(const std::string& query, SearchBackend& backend, ChatProvider* chat,
                     const WebSearchConfig& config, Diagnostics* diagnostics = nullptr);

// ---------------------------------------------------------------------------
// CodeTesting

struct CodeTestingConfig {
    std::string formatter_command; // empty = syntax check only; reads stdin, writes stdout
    int formatter_timeout_seconds = 20;
};

struct CodeCheck {
    bool ok = false;
    std::vector<std::string> diagnostics;
    std::optional<std::string> formatted_code; // present iff the formatter ran cleanly
};

// Syntax-checks code_text with the front-end grammar, then pipes it through
// the configured formatter. Bad code is data: every failure mode lands in
// {ok=false, diagnostics}, never an exception. Empty code_text is caller
// misuse -> Error{Precondition}.
CodeCheck code_testing(const std::string& code_text, const LanguageFrontend& frontend,
                       const CodeTestingConfig& config);

// ---------------------------------------------------------------------------
// Dispatch

struct ToolContext {
    const Graph* sscg = nullptr;
    const Graph* rg = nullptr;
    EmbeddingProvider* embedder = nullptr;
    ChatProvider* chat = nullptr;
    SearchBackend* search = nullptr;
    const LanguageFrontend* frontend = nullptr;

    RgRetrievalConfig rg_retrieval;
    int hop_ceiling = 3;
    WebSearchConfig web;
    CodeTestingConfig code_testing;
    Diagnostics* diagnostics = nullptr;
};

struct ToolRequest {
    std::string name; // one of kToolNames
    nlohmann::json args = nlohmann::json::object();
};

struct ToolResponse {
    std::string name;
    nlohmann::json payload; // tool-specific object, rendered into observations
};

// Validates the argument object against the tool's schema and runs it.
// Unknown tool or missing/mistyped argument -> Error{Precondition}; tool-level
// errors propagate as their own kinds.
ToolResponse dispatch_tool(const ToolRequest& request, const ToolContext& context);

// One-line-per-tool schema summary injected into the agent system prompt.
std::string tool_schema_text();

} // namespace codegraph
