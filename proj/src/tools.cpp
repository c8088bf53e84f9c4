#include "codegraph/tools.hpp"

#include "codegraph/error.hpp"
#include "codegraph/process.hpp"
#include "codegraph/util.hpp"

#include <algorithm>
#include <map>
#include <queue>

namespace codegraph {

namespace {

std::string replace_all(std::string text, std::string_view needle, std::string_view value) {
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return text;
}

void warn_into(Diagnostics* diagnostics, std::string message) {
    if (diagnostics != nullptr) diagnostics->warn(std::move(message));
}

enum class Classification { Subrequirement, Similar, None };

Classification fallback_rule(double score, double epsilon) {
    return score >= epsilon ? Classification::Similar : Classification::None;
}

Classification classify_candidate(const std::string& requirement_text,
                                  const ScoredRequirement& candidate, ChatProvider* chat,
                                  const RgRetrievalConfig& config, Diagnostics* diagnostics) {
    if (chat == nullptr) return fallback_rule(candidate.score, config.epsilon);

    std::string prompt = replace_all(kClassifyPrompt, "{target}", requirement_text);
    prompt = replace_all(prompt, "{candidate}", candidate.text);
    try {
        const ChatResult reply = chat->chat(
            {{"system", "You classify requirement relationships."}, {"user", prompt}}, {});
        const auto tokens = tokenize(reply.text);
        const std::string head = tokens.empty() ? "" : tokens.front();
        if (head == "subrequirement") return Classification::Subrequirement;
        if (head == "similar") return Classification::Similar;
        if (head == "none") return Classification::None;
        warn_into(diagnostics, "rg_retrieval: unrecognized classification for " + candidate.id +
                                   ": " + trim(reply.text));
        return Classification::None;
    } catch (const Error& error) {
        if (error.kind() == ErrorKind::ScriptMismatch)
            return fallback_rule(candidate.score, config.epsilon);
        warn_into(diagnostics,
                  "rg_retrieval: classification failed for " + candidate.id + ": " + error.what());
        return Classification::None;
    }
}

} // namespace

QueryAttachment rg_retrieval(const std::string& requirement_text, const Graph& rg,
                             EmbeddingProvider& embedder, ChatProvider* chat,
                             const RgRetrievalConfig& config, Diagnostics* diagnostics) {
    if (trim(requirement_text).empty())
        fail(ErrorKind::Precondition, "rg_retrieval requires a non-empty requirement");
    if (config.candidates < 1) fail(ErrorKind::Config, "rg_retrieval candidate count must be >= 1");
    if (config.epsilon < 0.0 || config.epsilon > 1.0)
        fail(ErrorKind::Config, "rg_retrieval epsilon must lie in [0, 1]");

    QueryAttachment attachment;
    if (rg.nodes.empty()) {
        warn_into(diagnostics, "rg_retrieval: requirement graph is empty");
        return attachment;
    }

    std::vector<std::string> texts;
    texts.reserve(rg.nodes.size() + 1);
    texts.push_back(requirement_text);
    for (const GraphNode& node : rg.nodes) texts.push_back(node.text);
    const std::vector<Embedding> vectors = embedder.embed(texts);

    std::vector<ScoredRequirement> candidates;
    candidates.reserve(rg.nodes.size());
    for (std::size_t i = 0; i < rg.nodes.size(); ++i) {
        candidates.push_back(
            {rg.nodes[i].id, rg.nodes[i].text, cosine(vectors.front(), vectors[i + 1])});
    }
    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (candidates.size() > static_cast<std::size_t>(config.candidates))
        candidates.resize(static_cast<std::size_t>(config.candidates));

    for (const ScoredRequirement& candidate : candidates) {
        switch (classify_candidate(requirement_text, candidate, chat, config, diagnostics)) {
        case Classification::Subrequirement:
            attachment.subrequirements.push_back(candidate);
            break;
        case Classification::Similar:
            attachment.similar.push_back(candidate);
            break;
        case Classification::None:
            break;
        }
    }
    return attachment;
}

std::vector<std::string> dual_graph_mapping(const std::vector<std::string>& req_node_ids,
                                            const Graph& rg, const Graph& sscg) {
    std::vector<std::string> mapped;
    std::set<std::string> seen;
    for (const std::string& id : req_node_ids) {
        if (!rg.contains(id)) fail(ErrorKind::Precondition, "unknown requirement node: " + id);
        if (!sscg.contains(id))
            fail(ErrorKind::Integrity,
                 "requirement node has no code node (graphs out of sync): " + id);
        if (seen.insert(id).second) mapped.push_back(id);
    }
    return mapped;
}

std::vector<VisitedNode> sscg_traverse(const std::vector<std::string>& start_ids,
                                       Direction direction, int max_hops,
                                       const std::set<EdgeKind>& edge_kinds, const Graph& graph,
                                       int hop_ceiling) {
    if (max_hops < 1 || max_hops > hop_ceiling)
        fail(ErrorKind::Precondition, "max_hops must lie in [1, " + std::to_string(hop_ceiling) +
                                          "], got " + std::to_string(max_hops));
    std::set<std::string> starts;
    for (const std::string& id : start_ids) {
        if (!graph.contains(id)) fail(ErrorKind::Precondition, "unknown start node: " + id);
        starts.insert(id);
    }
    if (edge_kinds.empty() || starts.empty()) return {};

    std::map<std::string, VisitedNode> visited;
    std::vector<std::string> frontier(starts.begin(), starts.end()); // sorted
    for (int hop = 1; hop <= max_hops && !frontier.empty(); ++hop) {
        std::vector<std::string> next;
        for (const std::string& node_id : frontier) {
            std::vector<std::string> route;
            if (auto it = visited.find(node_id); it != visited.end()) route = it->second.path;
            route.push_back(node_id);
            for (const NeighborHit& hit : neighbors(graph, node_id, direction, edge_kinds)) {
                if (starts.count(hit.neighbor_id) != 0 || visited.count(hit.neighbor_id) != 0)
                    continue;
                visited.emplace(hit.neighbor_id,
                                VisitedNode{hit.neighbor_id, hop, hit.edge.kind, route});
                next.push_back(hit.neighbor_id);
            }
        }
        std::sort(next.begin(), next.end());
        frontier = std::move(next);
    }

    std::vector<VisitedNode> result;
    result.reserve(visited.size());
    for (auto& [id, node] : visited) result.push_back(std::move(node));
    std::sort(result.begin(), result.end(), [](const VisitedNode& a, const VisitedNode& b) {
        if (a.hop != b.hop) return a.hop < b.hop;
        return a.id < b.id;
    });
    return result;
}

WebAnswer web_search(const std::string& query, SearchBackend& backend, ChatProvider* chat,
                     const WebSearchConfig& config, Diagnostics* diagnostics) {
    if (trim(query).empty()) fail(ErrorKind::Precondition, "web_search requires a non-empty query");
    if (config.top_n < 1) fail(ErrorKind::Config, "web_search top_n must be >= 1");

    WebAnswer answer;
    std::vector<SearchResult> results;
    try {
        results = backend.search(query, config.top_n);
    } catch (const Error& error) {
        warn_into(diagnostics, std::string("web_search: search failed: ") + error.what());
        return answer;
    }
    if (results.size() > static_cast<std::size_t>(config.top_n))
        results.resize(static_cast<std::size_t>(config.top_n));
    if (results.empty()) {
        warn_into(diagnostics, "web_search: no usable results for query");
        return answer;
    }

    std::string pages;
    for (const SearchResult& result : results) {
        answer.urls.push_back(result.url);
        pages += "### " + result.title + "\n" + result.url + "\n" + result.content + "\n\n";
    }
    if (pages.size() > config.summary_budget) pages.resize(config.summary_budget);

    if (chat == nullptr) {
        warn_into(diagnostics, "web_search: no chat provider for summarization");
        return answer;
    }
    try {
        const ChatResult reply =
            chat->chat({{"system", "You summarize web content for a software engineer."},
                        {"user", "Query: " + query +
                                     "\n\nSummarize the following pages in a few sentences:\n\n" +
                                     pages}},
                       {});
        answer.summary = trim(reply.text);
    } catch (const Error& error) {
        warn_into(diagnostics, std::string("web_search: summarization failed: ") + error.what());
    }
    return answer;
}

CodeCheck code_testing(const std::string& code_text, const LanguageFrontend& frontend,
                       const CodeTestingConfig& config) {
    if (code_text.empty()) fail(ErrorKind::Precondition, "code_testing requires non-empty code");

    CodeCheck check;
    const SyntaxCheck syntax = frontend.check_syntax(code_text);
    if (!syntax.ok) {
        for (const SyntaxDiagnostic& diagnostic : syntax.diagnostics)
            check.diagnostics.push_back("line " + std::to_string(diagnostic.line) + ": " +
                                        diagnostic.message);
        if (check.diagnostics.empty()) check.diagnostics.push_back("syntax error");
        return check;
    }
    if (config.formatter_command.empty()) {
        check.ok = true;
        return check;
    }

    try {
        const ProcessResult run = run_shell(config.formatter_command, "", code_text,
                                            config.formatter_timeout_seconds);
        if (run.timed_out) {
            check.diagnostics.push_back("formatter timed out after " +
                                        std::to_string(config.formatter_timeout_seconds) + "s");
            return check;
        }
        if (run.exit_code != 0) {
            check.diagnostics.push_back("formatter exited with status " +
                                        std::to_string(run.exit_code));
            const std::string stderr_text = trim(run.error_output);
            if (!stderr_text.empty()) check.diagnostics.push_back(stderr_text);
            return check;
        }
        check.ok = true;
        check.formatted_code = run.output;
    } catch (const Error& error) {
        check.diagnostics.push_back(std::string("formatter failed to run: ") + error.what());
    }
    return check;
}

// ---------------------------------------------------------------------------
// Dispatch

namespace {

const nlohmann::json& need_arg(const nlohmann::json& args, const char* key) {
    const auto it = args.find(key);
    if (it == args.end())
        fail(ErrorKind::Precondition, std::string("missing tool argument: ") + key);
    return *it;
}

std::string need_string(const nlohmann::json& args, const char* key) {
    const nlohmann::json& value = need_arg(args, key);
    if (!value.is_string())
        fail(ErrorKind::Precondition, std::string("tool argument must be a string: ") + key);
    return value.get<std::string>();
}

std::vector<std::string> need_string_array(const nlohmann::json& args, const char* key) {
    const nlohmann::json& value = need_arg(args, key);
    if (!value.is_array())
        fail(ErrorKind::Precondition, std::string("tool argument must be an array: ") + key);
    std::vector<std::string> items;
    for (const nlohmann::json& item : value) {
        if (!item.is_string())
            fail(ErrorKind::Precondition,
                 std::string("tool argument must be an array of strings: ") + key);
        items.push_back(item.get<std::string>());
    }
    return items;
}

nlohmann::json requirement_list_json(const std::vector<ScoredRequirement>& list) {
    nlohmann::json out = nlohmann::json::array();
    for (const ScoredRequirement& item : list)
        out.push_back({{"id", item.id}, {"text", item.text}, {"score", item.score}});
    return out;
}

void need_context(const void* pointer, const char* what) {
    if (pointer == nullptr)
        fail(ErrorKind::Precondition, std::string("tool context is missing ") + what);
}

} // namespace

ToolResponse dispatch_tool(const ToolRequest& request, const ToolContext& context) {
    if (!request.args.is_object())
        fail(ErrorKind::Precondition, "tool arguments must be a JSON object");

    ToolResponse response;
    response.name = request.name;

    if (request.name == "RGRetrieval") {
        need_context(context.rg, "the requirement graph");
        need_context(context.embedder, "an embedding provider");
        const QueryAttachment attachment =
            rg_retrieval(need_string(request.args, "requirement"), *context.rg, *context.embedder,
                         context.chat, context.rg_retrieval, context.diagnostics);
        response.payload = {{"subrequirements", requirement_list_json(attachment.subrequirements)},
                            {"similar", requirement_list_json(attachment.similar)}};
        return response;
    }
    if (request.name == "DualGraphMapping") {
        need_context(context.rg, "the requirement graph");
        need_context(context.sscg, "the code graph");
        const auto mapped =
            dual_graph_mapping(need_string_array(request.args, "ids"), *context.rg, *context.sscg);
        response.payload = {{"code_nodes", mapped}};
        return response;
    }
    if (request.name == "SSCGTraverse") {
        need_context(context.sscg, "the code graph");
        const auto start_ids = need_string_array(request.args, "start_ids");

        Direction direction = Direction::Outbound;
        if (request.args.contains("direction")) {
            const auto parsed = direction_from(need_string(request.args, "direction"));
            if (!parsed)
                fail(ErrorKind::Precondition,
                     "unknown direction: " + request.args["direction"].dump());
            direction = *parsed;
        }

        int max_hops = 1;
        if (request.args.contains("max_hops")) {
            const nlohmann::json& value = request.args["max_hops"];
            if (!value.is_number_integer())
                fail(ErrorKind::Precondition, "tool argument must be an integer: max_hops");
            max_hops = value.get<int>();
        }

        std::set<EdgeKind> kinds = {EdgeKind::Import, EdgeKind::Contain, EdgeKind::Inherit,
                                    EdgeKind::Invoke, EdgeKind::Similar};
        if (request.args.contains("edge_kinds")) {
            kinds.clear();
            for (const std::string& label : need_string_array(request.args, "edge_kinds")) {
                const auto parsed = edge_kind_from(label);
                if (!parsed) fail(ErrorKind::Precondition, "unknown edge kind: " + label);
                kinds.insert(*parsed);
            }
        }

        const auto visited = sscg_traverse(start_ids, direction, max_hops, kinds, *context.sscg,
                                           context.hop_ceiling);
        nlohmann::json rows = nlohmann::json::array();
        for (const VisitedNode& node : visited) {
            const GraphNode* graph_node = context.sscg->find(node.id);
            rows.push_back({{"id", node.id},
                            {"kind", node_kind_label(context.sscg->kind, graph_node->kind)},
                            {"hop", node.hop},
                            {"via", to_string(node.via_edge_kind)},
                            {"path", node.path}});
        }
        response.payload = {{"visited", rows}};
        return response;
    }
    if (request.name == "WebSearch") {
        need_context(context.search, "a search backend");
        const WebAnswer answer = web_search(need_string(request.args, "query"), *context.search,
                                            context.chat, context.web, context.diagnostics);
        response.payload = {{"summary", answer.summary}, {"urls", answer.urls}};
        return response;
    }
    if (request.name == "CodeTesting") {
        need_context(context.frontend, "a language front-end");
        const CodeCheck check = code_testing(need_string(request.args, "code"), *context.frontend,
                                             context.code_testing);
        response.payload = {{"ok", check.ok}, {"diagnostics", check.diagnostics}};
        if (check.formatted_code)
            response.payload["formatted_code"] = *check.formatted_code;
        else
            response.payload["formatted_code"] = nullptr;
        return response;
    }
    fail(ErrorKind::Precondition, "unknown tool: " + request.name);
}

std::string tool_schema_text() {
    return "RGRetrieval {\"requirement\": string} -> subrequirement and similar requirement "
           "nodes with scores\n"
           "DualGraphMapping {\"ids\": [string]} -> code node ids for requirement node ids\n"
           "SSCGTraverse {\"start_ids\": [string], \"direction\": \"outbound|inbound|both\", "
           "\"max_hops\": int, \"edge_kinds\": [\"import|contain|inherit|invoke|similar\"]} -> "
           "dependency nodes reached by a bounded graph walk\n"
           "WebSearch {\"query\": string} -> short web summary with cited urls\n"
           "CodeTesting {\"code\": string} -> syntax and formatting check\n";
}

} // namespace codegraph
