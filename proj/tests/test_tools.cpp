#include <doctest.h>

#include "codegraph/error.hpp"
#include "codegraph/process.hpp"
#include "codegraph/python_frontend.hpp"
#include "codegraph/tools.hpp"
#include "codegraph/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace codegraph;

namespace {

template <typename Fn>
ErrorKind error_kind(Fn&& fn) {
    try {
        fn();
    } catch (const Error& error) {
        return error.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::Process;
}

std::string fixture_dir() {
    const char* env = std::getenv("CODEGRAPH_TEST_DATA");
    REQUIRE(env != nullptr);
    return env;
}

// Exact-text embedding stub; unknown text is a test bug.
class PresetEmbedding final : public EmbeddingProvider {
public:
    explicit PresetEmbedding(std::map<std::string, Embedding> vectors)
        : vectors_(std::move(vectors)) {
        for (auto& [text, vector] : vectors_) {
            double norm = 0.0;
            for (float v : vector) norm += double(v) * v;
            norm = std::sqrt(norm);
            for (float& v : vector) v = static_cast<float>(v / norm);
        }
    }
    std::size_t dimension() const override { return vectors_.begin()->second.size(); }
    std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
        std::vector<Embedding> out;
        for (const auto& text : texts) {
            auto it = vectors_.find(text);
            if (it == vectors_.end()) fail(ErrorKind::Precondition, "no preset vector: " + text);
            out.push_back(it->second);
        }
        return out;
    }

private:
    std::map<std::string, Embedding> vectors_;
};

class FailingChat final : public ChatProvider {
public:
    ChatResult chat(const std::vector<ChatMessage>&, const ChatParams&) override {
        ++calls;
        fail(ErrorKind::Provider, "chat endpoint unreachable");
    }
    int calls = 0;
};

class FailingSearch final : public SearchBackend {
public:
    std::vector<SearchResult> search(const std::string&, int) override {
        fail(ErrorKind::Provider, "search endpoint unreachable");
    }
};

GraphNode req_node(const std::string& id, const std::string& text) {
    const auto sep = id.find("::");
    GraphNode node;
    node.id = id;
    node.kind = EntityKind::Function;
    node.path = id.substr(0, sep);
    node.name = id.substr(sep + 2);
    node.provenance = "docstring";
    node.text = text;
    return node;
}

GraphNode code_node(const std::string& id) {
    GraphNode node = req_node(id, "");
    node.provenance.clear();
    return node;
}

Graph make_rg(const std::vector<std::pair<std::string, std::string>>& rows) {
    Graph graph;
    graph.kind = GraphKind::Rg;
    for (const auto& [id, text] : rows) graph.nodes.push_back(req_node(id, text));
    graph.sort_and_index();
    return graph;
}

Graph make_sscg(const std::vector<std::string>& ids,
                const std::vector<GraphEdge>& edges = {}) {
    Graph graph;
    graph.kind = GraphKind::Sscg;
    for (const auto& id : ids) graph.nodes.push_back(code_node(id));
    graph.edges = edges;
    graph.sort_and_index();
    return graph;
}

} // namespace

TEST_CASE("run_shell captures output and exit status") {
    const ProcessResult echo = run_shell("echo hello");
    CHECK(echo.exit_code == 0);
    CHECK_FALSE(echo.timed_out);
    CHECK(echo.output == "hello\n");
    CHECK(echo.error_output.empty());

    CHECK(run_shell("exit 7").exit_code == 7);

    const ProcessResult err = run_shell("echo oops 1>&2; exit 1");
    CHECK(err.exit_code == 1);
    CHECK(err.output.empty());
    CHECK(err.error_output == "oops\n");
}

TEST_CASE("run_shell feeds stdin and honors the working directory") {
    const ProcessResult cat = run_shell("cat", "", "first\nsecond\n");
    CHECK(cat.exit_code == 0);
    CHECK(cat.output == "first\nsecond\n");

    const std::string dir = "/tmp/codegraph_proc_test";
    run_shell("rm -rf " + dir + " && mkdir -p " + dir);
    write_text_file(dir + "/marker.txt", "present\n");
    const ProcessResult in_dir = run_shell("cat marker.txt", dir);
    CHECK(in_dir.exit_code == 0);
    CHECK(in_dir.output == "present\n");
    run_shell("rm -rf " + dir);
}

TEST_CASE("run_shell survives output larger than a pipe buffer") {
    const ProcessResult big = run_shell("head -c 300000 /dev/zero | tr '\\0' 'a'");
    CHECK(big.exit_code == 0);
    CHECK(big.output.size() == 300000);
    CHECK(big.output.find_first_not_of('a') == std::string::npos);
}

TEST_CASE("run_shell stdin write to a non-reading child does not wedge") {
    const std::string payload(1 << 18, 'x'); // larger than the pipe buffer
    const ProcessResult result = run_shell("exit 0", "", payload);
    CHECK(result.exit_code == 0);
    CHECK_FALSE(result.timed_out);
}

TEST_CASE("run_shell kills on timeout and reports signals") {
    const ProcessResult slow = run_shell("sleep 5", "", "", 1);
    CHECK(slow.timed_out);
    CHECK(slow.exit_code == -1);

    const ProcessResult killed = run_shell("kill -TERM $$");
    CHECK_FALSE(killed.timed_out);
    CHECK(killed.exit_code == 128 + 15);
}

// ---------------------------------------------------------------------------
// RGRetrieval

namespace {

const char* kTarget = "Read settings from disk.";

Graph retrieval_rg() {
    return make_rg({{"a.py::f", "Parse a config file into a dictionary."},
                    {"a.py::g", "Validate a dictionary of settings."},
                    {"b.py::h", "Compute the checksum of a file."}});
}

PresetEmbedding retrieval_embedder() {
    return PresetEmbedding({{kTarget, {1.0f, 0.0f}},
                            {"Parse a config file into a dictionary.", {1.0f, 0.0f}},
                            {"Validate a dictionary of settings.", {0.6f, 0.8f}},
                            {"Compute the checksum of a file.", {0.0f, 1.0f}}});
}

} // namespace

TEST_CASE("rg_retrieval fallback rule classifies by cosine against epsilon") {
    const Graph rg = retrieval_rg();
    PresetEmbedding embedder = retrieval_embedder();
    Diagnostics diag;

    const QueryAttachment attachment = rg_retrieval(kTarget, rg, embedder, nullptr, {}, &diag);
    REQUIRE(attachment.similar.size() == 1);
    CHECK(attachment.similar[0].id == "a.py::f");
    CHECK(attachment.similar[0].score == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(attachment.subrequirements.empty());
    CHECK(diag.warnings.empty());
}

TEST_CASE("rg_retrieval scripted classification routes candidates into both lists") {
    const Graph rg = retrieval_rg();
    PresetEmbedding embedder = retrieval_embedder();
    // Candidates arrive in descending cosine order: f (1.0), g (0.6), h (0.0).
    ScriptedChat chat({{"Parse a config file", "SIMILAR"},
                       {"Validate a dictionary", "SUBREQUIREMENT"},
                       {"Compute the checksum", "NONE"}});

    const QueryAttachment attachment = rg_retrieval(kTarget, rg, embedder, &chat, {});
    CHECK(chat.consumed() == 3);
    REQUIRE(attachment.subrequirements.size() == 1);
    CHECK(attachment.subrequirements[0].id == "a.py::g");
    CHECK(attachment.subrequirements[0].score == doctest::Approx(0.6).epsilon(1e-6));
    REQUIRE(attachment.similar.size() == 1);
    CHECK(attachment.similar[0].id == "a.py::f");
}

TEST_CASE("rg_retrieval classification prompt carries both requirement texts") {
    const Graph rg = make_rg({{"a.py::f", "Parse a config file into a dictionary."}});
    PresetEmbedding embedder = retrieval_embedder();
    ScriptedChat chat({ScriptEntry{"Target requirement: Read settings from disk.", "NONE"}});

    rg_retrieval(kTarget, rg, embedder, &chat, {});
    CHECK(chat.consumed() == 1);
}

TEST_CASE("rg_retrieval script mismatch falls back to the cosine rule without consuming") {
    const Graph rg = retrieval_rg();
    PresetEmbedding embedder = retrieval_embedder();
    ScriptedChat chat({ScriptEntry{"no such text anywhere", "SIMILAR"}});

    const QueryAttachment attachment = rg_retrieval(kTarget, rg, embedder, &chat, {});
    CHECK(chat.consumed() == 0);
    CHECK(chat.remaining() == 1);
    REQUIRE(attachment.similar.size() == 1);
    CHECK(attachment.similar[0].id == "a.py::f");
    CHECK(attachment.subrequirements.empty());
}

TEST_CASE("rg_retrieval chat transport failure classifies NONE with warnings") {
    const Graph rg = retrieval_rg();
    PresetEmbedding embedder = retrieval_embedder();
    FailingChat chat;
    Diagnostics diag;

    const QueryAttachment attachment = rg_retrieval(kTarget, rg, embedder, &chat, {}, &diag);
    CHECK(attachment.similar.empty());
    CHECK(attachment.subrequirements.empty());
    CHECK(chat.calls == 3);
    CHECK(diag.warnings.size() == 3);
    CHECK(diag.warnings[0].find("classification failed") != std::string::npos);
}

TEST_CASE("rg_retrieval unrecognized reply classifies NONE with a warning") {
    const Graph rg = make_rg({{"a.py::f", "Parse a config file into a dictionary."}});
    PresetEmbedding embedder = retrieval_embedder();
    ScriptedChat chat({ScriptEntry{"*", "MAYBE"}});
    Diagnostics diag;

    const QueryAttachment attachment = rg_retrieval(kTarget, rg, embedder, &chat, {}, &diag);
    CHECK(attachment.similar.empty());
    CHECK(attachment.subrequirements.empty());
    REQUIRE(diag.warnings.size() == 1);
    CHECK(diag.warnings[0].find("unrecognized classification") != std::string::npos);
}

TEST_CASE("rg_retrieval candidate cap limits the classified set") {
    const Graph rg = retrieval_rg();
    PresetEmbedding embedder = retrieval_embedder();
    RgRetrievalConfig config;
    config.candidates = 1;

    const QueryAttachment attachment = rg_retrieval(kTarget, rg, embedder, nullptr, config);
    REQUIRE(attachment.similar.size() == 1);
    CHECK(attachment.similar[0].id == "a.py::f");
}

TEST_CASE("rg_retrieval empty graph and precondition guards") {
    Graph empty_rg;
    empty_rg.kind = GraphKind::Rg;
    empty_rg.sort_and_index();
    PresetEmbedding embedder = retrieval_embedder();
    Diagnostics diag;

    const QueryAttachment attachment = rg_retrieval(kTarget, empty_rg, embedder, nullptr, {}, &diag);
    CHECK(attachment.similar.empty());
    CHECK(attachment.subrequirements.empty());
    REQUIRE(diag.warnings.size() == 1);
    CHECK(diag.warnings[0].find("empty") != std::string::npos);

    const Graph rg = retrieval_rg();
    CHECK(error_kind([&] { rg_retrieval("  ", rg, embedder, nullptr, {}); }) ==
          ErrorKind::Precondition);
    RgRetrievalConfig bad_m;
    bad_m.candidates = 0;
    CHECK(error_kind([&] { rg_retrieval(kTarget, rg, embedder, nullptr, bad_m); }) ==
          ErrorKind::Config);
    RgRetrievalConfig bad_eps;
    bad_eps.epsilon = 1.5;
    CHECK(error_kind([&] { rg_retrieval(kTarget, rg, embedder, nullptr, bad_eps); }) ==
          ErrorKind::Config);
}

TEST_CASE("rg_retrieval similar scores are non-increasing") {
    const Graph rg = make_rg({{"a.py::f", "alpha"}, {"a.py::g", "beta"}, {"b.py::h", "gamma"}});
    PresetEmbedding embedder({{kTarget, {1.0f, 0.0f}},
                              {"alpha", {0.9f, std::sqrt(1.0f - 0.81f)}},
                              {"beta", {1.0f, 0.0f}},
                              {"gamma", {0.95f, std::sqrt(1.0f - 0.9025f)}}});
    RgRetrievalConfig config;
    config.epsilon = 0.85;

    const QueryAttachment attachment = rg_retrieval(kTarget, rg, embedder, nullptr, config);
    REQUIRE(attachment.similar.size() == 3);
    CHECK(attachment.similar[0].id == "a.py::g");
    CHECK(attachment.similar[1].id == "b.py::h");
    CHECK(attachment.similar[2].id == "a.py::f");
    for (std::size_t i = 1; i < attachment.similar.size(); ++i)
        CHECK(attachment.similar[i - 1].score >= attachment.similar[i].score);
}

// ---------------------------------------------------------------------------
// DualGraphMapping

TEST_CASE("dual_graph_mapping is the identity with order kept and duplicates dropped") {
    const Graph rg = make_rg({{"a.py::f", "alpha"}, {"a.py::g", "beta"}});
    const Graph sscg = make_sscg({"a.py::f", "a.py::g", "a.py::extra"});

    const auto mapped = dual_graph_mapping({"a.py::g", "a.py::f", "a.py::g"}, rg, sscg);
    CHECK(mapped == std::vector<std::string>{"a.py::g", "a.py::f"});
    CHECK(dual_graph_mapping({}, rg, sscg).empty());
}

TEST_CASE("dual_graph_mapping rejects unknown and desynchronized ids") {
    const Graph rg = make_rg({{"a.py::f", "alpha"}, {"a.py::ghost", "beta"}});
    const Graph sscg = make_sscg({"a.py::f"});

    CHECK(error_kind([&] { dual_graph_mapping({"a.py::missing"}, rg, sscg); }) ==
          ErrorKind::Precondition);
    CHECK(error_kind([&] { dual_graph_mapping({"a.py::ghost"}, rg, sscg); }) ==
          ErrorKind::Integrity);
}

// ---------------------------------------------------------------------------
// SSCGTraverse

namespace {

GraphEdge edge(const std::string& src, EdgeKind kind, const std::string& dst) {
    GraphEdge e;
    e.src = src;
    e.kind = kind;
    e.dst = dst;
    if (kind == EdgeKind::Similar) e.score = 0.9;
    return e;
}

const std::set<EdgeKind> kAllSscgKinds = {EdgeKind::Import, EdgeKind::Contain, EdgeKind::Inherit,
                                          EdgeKind::Invoke, EdgeKind::Similar};

} // namespace

TEST_CASE("sscg_traverse walks an invoke chain breadth-first") {
    const Graph g = make_sscg({"a.py::a", "a.py::b", "a.py::c"},
                              {edge("a.py::a", EdgeKind::Invoke, "a.py::b"),
                               edge("a.py::b", EdgeKind::Invoke, "a.py::c")});

    const auto out =
        sscg_traverse({"a.py::a"}, Direction::Outbound, 2, {EdgeKind::Invoke}, g);
    REQUIRE(out.size() == 2);
    CHECK(out[0].id == "a.py::b");
    CHECK(out[0].hop == 1);
    CHECK(out[0].via_edge_kind == EdgeKind::Invoke);
    CHECK(out[0].path == std::vector<std::string>{"a.py::a"});
    CHECK(out[1].id == "a.py::c");
    CHECK(out[1].hop == 2);
    CHECK(out[1].path == std::vector<std::string>{"a.py::a", "a.py::b"});

    CHECK(sscg_traverse({"a.py::c"}, Direction::Outbound, 2, {EdgeKind::Invoke}, g).empty());
    CHECK(sscg_traverse({"a.py::a"}, Direction::Outbound, 1, {EdgeKind::Invoke}, g).size() == 1);

    const auto in = sscg_traverse({"a.py::c"}, Direction::Inbound, 2, {EdgeKind::Invoke}, g);
    REQUIRE(in.size() == 2);
    CHECK(in[0].id == "a.py::b");
    CHECK(in[1].id == "a.py::a");
    CHECK(in[1].path == std::vector<std::string>{"a.py::c", "a.py::b"});
}

TEST_CASE("sscg_traverse honors the edge-kind filter") {
    const Graph g = make_sscg({"a.py", "a.py::f", "b.py::g"},
                              {edge("a.py", EdgeKind::Contain, "a.py::f"),
                               edge("a.py::f", EdgeKind::Invoke, "b.py::g")});

    const auto invoke_only =
        sscg_traverse({"a.py::f"}, Direction::Both, 2, {EdgeKind::Invoke}, g);
    REQUIRE(invoke_only.size() == 1);
    CHECK(invoke_only[0].id == "b.py::g");

    CHECK(sscg_traverse({"a.py::f"}, Direction::Both, 2, {}, g).empty());

    const auto both_kinds = sscg_traverse({"a.py::f"}, Direction::Both, 1, kAllSscgKinds, g);
    REQUIRE(both_kinds.size() == 2);
    CHECK(both_kinds[0].id == "a.py");
    CHECK(both_kinds[0].via_edge_kind == EdgeKind::Contain);
    CHECK(both_kinds[1].id == "b.py::g");
}

TEST_CASE("sscg_traverse excludes start nodes even through cycles") {
    const Graph g = make_sscg({"a.py::a", "a.py::b"},
                              {edge("a.py::a", EdgeKind::Invoke, "a.py::b"),
                               edge("a.py::b", EdgeKind::Invoke, "a.py::a")});

    const auto out = sscg_traverse({"a.py::a"}, Direction::Outbound, 3, {EdgeKind::Invoke}, g);
    REQUIRE(out.size() == 1);
    CHECK(out[0].id == "a.py::b");

    const auto both_starts =
        sscg_traverse({"a.py::a", "a.py::b"}, Direction::Outbound, 3, {EdgeKind::Invoke}, g);
    CHECK(both_starts.empty());
}

TEST_CASE("sscg_traverse ties resolve to the smallest predecessor id") {
    // Both a and b reach z at hop 1; a must win the via/path slot.
    const Graph g = make_sscg({"m.py::a", "m.py::b", "m.py::z"},
                              {edge("m.py::a", EdgeKind::Invoke, "m.py::z"),
                               edge("m.py::b", EdgeKind::Import, "m.py::z")});

    const auto out =
        sscg_traverse({"m.py::a", "m.py::b"}, Direction::Outbound, 1, kAllSscgKinds, g);
    REQUIRE(out.size() == 1);
    CHECK(out[0].id == "m.py::z");
    CHECK(out[0].via_edge_kind == EdgeKind::Invoke);
    CHECK(out[0].path == std::vector<std::string>{"m.py::a"});
}

TEST_CASE("sscg_traverse validates starts and hop bounds") {
    const Graph g = make_sscg({"a.py::a"});
    CHECK(error_kind([&] {
              sscg_traverse({"a.py::missing"}, Direction::Outbound, 1, kAllSscgKinds, g);
          }) == ErrorKind::Precondition);
    CHECK(error_kind([&] { sscg_traverse({"a.py::a"}, Direction::Outbound, 0, kAllSscgKinds, g); }) ==
          ErrorKind::Precondition);
    CHECK(error_kind([&] { sscg_traverse({"a.py::a"}, Direction::Outbound, 4, kAllSscgKinds, g); }) ==
          ErrorKind::Precondition);
    CHECK(sscg_traverse({}, Direction::Outbound, 1, kAllSscgKinds, g).empty());
}

namespace {

// Independent restatement of the traversal contract: set-based level BFS plus
// the documented predecessor rule (smallest previous-hop id, then first edge
// kind in label order).
std::vector<VisitedNode> oracle_traverse(const std::vector<std::string>& start_ids,
                                         Direction direction, int max_hops,
                                         const std::set<EdgeKind>& kinds, const Graph& graph) {
    const std::set<std::string> starts(start_ids.begin(), start_ids.end());
    if (kinds.empty() || starts.empty()) return {};

    auto qualified = [&](const std::string& from, const std::string& to) {
        std::vector<EdgeKind> hits;
        for (const GraphEdge& e : graph.edges) {
            if (kinds.count(e.kind) == 0) continue;
            const bool forward = e.src == from && e.dst == to;
            const bool backward = e.src == to && e.dst == from;
            if ((direction == Direction::Outbound && forward) ||
                (direction == Direction::Inbound && backward) ||
                (direction == Direction::Both && (forward || backward)))
                hits.push_back(e.kind);
        }
        std::sort(hits.begin(), hits.end(), [](EdgeKind a, EdgeKind b) {
            return std::string(to_string(a)) < std::string(to_string(b));
        });
        return hits;
    };

    std::map<std::string, int> dist;
    for (const auto& s : starts) dist[s] = 0;
    std::set<std::string> level = starts;
    for (int hop = 1; hop <= max_hops && !level.empty(); ++hop) {
        std::set<std::string> next;
        for (const GraphNode& node : graph.nodes) {
            if (dist.count(node.id) != 0) continue;
            for (const auto& from : level) {
                if (!qualified(from, node.id).empty()) {
                    next.insert(node.id);
                    break;
                }
            }
        }
        for (const auto& id : next) dist[id] = hop;
        level = next;
    }

    std::map<std::string, VisitedNode> rows;
    for (const auto& [id, hop] : dist) {
        if (hop == 0) continue;
        std::string pred;
        for (const auto& [cand, cand_hop] : dist) { // map order = id ascending
            if (cand_hop == hop - 1 && !qualified(cand, id).empty()) {
                pred = cand;
                break;
            }
        }
        REQUIRE_FALSE(pred.empty());
        rows[id] = VisitedNode{id, hop, qualified(pred, id).front(), {}};
    }
    for (auto& [id, row] : rows) {
        std::vector<std::string> path;
        std::string cursor = id;
        while (dist.at(cursor) != 0) {
            std::string pred;
            for (const auto& [cand, cand_hop] : dist) {
                if (cand_hop == dist.at(cursor) - 1 && !qualified(cand, cursor).empty()) {
                    pred = cand;
                    break;
                }
            }
            path.insert(path.begin(), pred);
            cursor = pred;
        }
        row.path = std::move(path);
    }

    std::vector<VisitedNode> out;
    for (auto& [id, row] : rows) out.push_back(std::move(row));
    std::sort(out.begin(), out.end(), [](const VisitedNode& a, const VisitedNode& b) {
        if (a.hop != b.hop) return a.hop < b.hop;
        return a.id < b.id;
    });
    return out;
}

} // namespace

TEST_CASE("sscg_traverse equals the BFS oracle on random graphs") {
    std::mt19937 rng(20240817);
    const std::vector<EdgeKind> kind_pool = {EdgeKind::Invoke, EdgeKind::Import,
                                             EdgeKind::Inherit, EdgeKind::Contain,
                                             EdgeKind::Similar};
    const std::vector<std::set<EdgeKind>> filters = {
        kAllSscgKinds, {EdgeKind::Invoke}, {EdgeKind::Invoke, EdgeKind::Import}};

    for (int round = 0; round < 40; ++round) {
        const int n = 3 + static_cast<int>(rng() % 48); // up to 50 nodes
        std::vector<std::string> ids;
        for (int i = 0; i < n; ++i) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "g.py::n%02d", i);
            ids.emplace_back(buf);
        }
        std::set<std::tuple<std::string, EdgeKind, std::string>> seen;
        std::vector<GraphEdge> edges;
        const int edge_count = static_cast<int>(rng() % (3 * n));
        for (int i = 0; i < edge_count; ++i) {
            const std::string& src = ids[rng() % ids.size()];
            const std::string& dst = ids[rng() % ids.size()];
            if (src == dst) continue;
            const EdgeKind kind = kind_pool[rng() % kind_pool.size()];
            if (seen.emplace(src, kind, dst).second) edges.push_back(edge(src, kind, dst));
        }
        const Graph g = make_sscg(ids, edges);

        std::vector<std::string> starts;
        const int start_count = 1 + static_cast<int>(rng() % 3);
        for (int i = 0; i < start_count; ++i) starts.push_back(ids[rng() % ids.size()]);

        for (Direction direction : {Direction::Outbound, Direction::Inbound, Direction::Both}) {
            for (int hops = 1; hops <= 3; ++hops) {
                for (const auto& filter : filters) {
                    const auto got = sscg_traverse(starts, direction, hops, filter, g);
                    const auto want = oracle_traverse(starts, direction, hops, filter, g);
                    REQUIRE(got == want);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// WebSearch

TEST_CASE("web_search summarizes fetched pages with one chat call") {
    StubSearch backend({{"https://docs.example.org/a", "Guide A", "How to frobnicate widgets."},
                        {"https://docs.example.org/b", "Guide B", "Widget internals."}},
                       {});
    ScriptedChat chat({ScriptEntry{"How to frobnicate widgets.", "Frobnication is covered by Guide A."}});
    Diagnostics diag;

    const WebAnswer answer = web_search("frobnicate widgets", backend, &chat, {}, &diag);
    CHECK(answer.summary == "Frobnication is covered by Guide A.");
    CHECK(answer.urls ==
          std::vector<std::string>{"https://docs.example.org/a", "https://docs.example.org/b"});
    CHECK(chat.consumed() == 1);
    CHECK(diag.warnings.empty());
}

TEST_CASE("web_search truncates to top_n results") {
    StubSearch backend({{"https://one.example", "One", "first"},
                        {"https://two.example", "Two", "second"},
                        {"https://three.example", "Three", "third"}},
                       {});
    ScriptedChat chat({ScriptEntry{"*", "summary"}});
    WebSearchConfig config;
    config.top_n = 2;

    const WebAnswer answer = web_search("query", backend, &chat, config);
    CHECK(answer.urls == std::vector<std::string>{"https://one.example", "https://two.example"});
}

TEST_CASE("web_search degrades to an empty summary when everything is blocked") {
    StubSearch backend({{"https://spam.example.com/x", "Spam", "junk"}}, {"*.example.com"});
    ScriptedChat chat({ScriptEntry{"*", "never used"}});
    Diagnostics diag;

    const WebAnswer answer = web_search("query", backend, &chat, {}, &diag);
    CHECK(answer.summary.empty());
    CHECK(answer.urls.empty());
    CHECK(chat.consumed() == 0);
    REQUIRE(diag.warnings.size() == 1);
    CHECK(diag.warnings[0].find("no usable results") != std::string::npos);
}

TEST_CASE("web_search transport failure degrades with a warning") {
    FailingSearch backend;
    Diagnostics diag;

    const WebAnswer answer = web_search("query", backend, nullptr, {}, &diag);
    CHECK(answer.summary.empty());
    CHECK(answer.urls.empty());
    REQUIRE(diag.warnings.size() == 1);
    CHECK(diag.warnings[0].find("search failed") != std::string::npos);
}

TEST_CASE("web_search keeps urls when the summarizer fails") {
    StubSearch backend({{"https://docs.example.org/a", "Guide", "content"}}, {});
    FailingChat chat;
    Diagnostics diag;

    const WebAnswer answer = web_search("query", backend, &chat, {}, &diag);
    CHECK(answer.summary.empty());
    CHECK(answer.urls == std::vector<std::string>{"https://docs.example.org/a"});
    REQUIRE(diag.warnings.size() == 1);
    CHECK(diag.warnings[0].find("summarization failed") != std::string::npos);
}

TEST_CASE("web_search clips page text to the summary budget") {
    StubSearch backend({{"https://u.example", "T", "UNIQUEMARKER and more"}}, {});
    // The marker sits past the first 5 characters ("### T"), so a tiny budget
    // must keep it out of the summarizer prompt.
    ScriptedChat chat({ScriptEntry{"UNIQUEMARKER", "saw the marker"}});
    Diagnostics diag;

    WebSearchConfig tiny;
    tiny.summary_budget = 5;
    const WebAnswer clipped = web_search("query", backend, &chat, tiny, &diag);
    CHECK(clipped.summary.empty());
    CHECK(chat.consumed() == 0);
    REQUIRE(diag.warnings.size() == 1);

    const WebAnswer full = web_search("query", backend, &chat, {}, &diag);
    CHECK(full.summary == "saw the marker");
    CHECK(chat.consumed() == 1);
}

TEST_CASE("web_search precondition and config guards") {
    StubSearch backend({}, {});
    CHECK(error_kind([&] { web_search(" ", backend, nullptr, {}); }) == ErrorKind::Precondition);
    WebSearchConfig bad;
    bad.top_n = 0;
    CHECK(error_kind([&] { web_search("query", backend, nullptr, bad); }) == ErrorKind::Config);
}

// ---------------------------------------------------------------------------
// CodeTesting

TEST_CASE("code_testing accepts valid code and reports syntax errors as data") {
    const PythonFrontend frontend;

    const CodeCheck ok = code_testing("def f(x):\n    return x + 1\n", frontend, {});
    CHECK(ok.ok);
    CHECK(ok.diagnostics.empty());
    CHECK_FALSE(ok.formatted_code.has_value());

    const CodeCheck missing_block = code_testing("def f(x):\n", frontend, {});
    CHECK_FALSE(missing_block.ok);
    CHECK_FALSE(missing_block.diagnostics.empty());

    const CodeCheck garbled = code_testing("def f(:\n    pass\n", frontend, {});
    CHECK_FALSE(garbled.ok);
    CHECK_FALSE(garbled.diagnostics.empty());

    CHECK(error_kind([&] { code_testing("", frontend, {}); }) == ErrorKind::Precondition);
}

TEST_CASE("code_testing runs the configured formatter and is idempotent at the ok level") {
    const PythonFrontend frontend;
    CodeTestingConfig config;
    config.formatter_command = "python3 " + fixture_dir() + "/pyformat.py";

    const CodeCheck first = code_testing("def f(x):\n  return x + 1\n", frontend, config);
    REQUIRE(first.ok);
    REQUIRE(first.formatted_code.has_value());
    CHECK(*first.formatted_code == "def f(x):\n    return x + 1\n");
    CHECK(*first.formatted_code != "def f(x):\n  return x + 1\n");

    const CodeCheck second = code_testing(*first.formatted_code, frontend, config);
    CHECK(second.ok);
}

TEST_CASE("code_testing surfaces formatter failures") {
    const PythonFrontend frontend;

    CodeTestingConfig failing;
    failing.formatter_command = "echo broken 1>&2; exit 3";
    const CodeCheck failed = code_testing("x = 1\n", frontend, failing);
    CHECK_FALSE(failed.ok);
    REQUIRE(failed.diagnostics.size() == 2);
    CHECK(failed.diagnostics[0].find("status 3") != std::string::npos);
    CHECK(failed.diagnostics[1] == "broken");

    CodeTestingConfig slow;
    slow.formatter_command = "sleep 5";
    slow.formatter_timeout_seconds = 1;
    const CodeCheck timed = code_testing("x = 1\n", frontend, slow);
    CHECK_FALSE(timed.ok);
    REQUIRE(timed.diagnostics.size() == 1);
    CHECK(timed.diagnostics[0].find("timed out") != std::string::npos);
}

// ---------------------------------------------------------------------------
// dispatch_tool

namespace {

struct DispatchRig {
    Graph rg = retrieval_rg();
    Graph sscg = make_sscg({"a.py::f", "a.py::g", "b.py::h"},
                           {edge("a.py::f", EdgeKind::Invoke, "a.py::g"),
                            edge("a.py::g", EdgeKind::Invoke, "b.py::h")});
    PresetEmbedding embedder = retrieval_embedder();
    StubSearch search{{{"https://docs.example.org/a", "Guide", "page text"}}, {}};
    PythonFrontend frontend;
    Diagnostics diag;

    ToolContext context() {
        ToolContext ctx;
        ctx.rg = &rg;
        ctx.sscg = &sscg;
        ctx.embedder = &embedder;
        ctx.search = &search;
        ctx.frontend = &frontend;
        ctx.diagnostics = &diag;
        return ctx;
    }
};

} // namespace

TEST_CASE("dispatch_tool runs every tool through its JSON schema") {
    DispatchRig rig;
    const ToolContext ctx = rig.context();

    const ToolResponse retrieval =
        dispatch_tool({"RGRetrieval", {{"requirement", kTarget}}}, ctx);
    CHECK(retrieval.name == "RGRetrieval");
    REQUIRE(retrieval.payload["similar"].size() == 1);
    CHECK(retrieval.payload["similar"][0]["id"] == "a.py::f");
    CHECK(retrieval.payload["similar"][0]["score"].get<double>() == doctest::Approx(1.0));
    CHECK(retrieval.payload["subrequirements"].is_array());

    const ToolResponse mapping = dispatch_tool(
        {"DualGraphMapping", {{"ids", nlohmann::json::array({"a.py::f", "a.py::g"})}}}, ctx);
    CHECK(mapping.payload["code_nodes"] == nlohmann::json::array({"a.py::f", "a.py::g"}));

    const ToolResponse traverse = dispatch_tool(
        {"SSCGTraverse",
         {{"start_ids", nlohmann::json::array({"a.py::f"})}, {"max_hops", 2}}},
        ctx);
    REQUIRE(traverse.payload["visited"].size() == 2);
    CHECK(traverse.payload["visited"][0]["id"] == "a.py::g");
    CHECK(traverse.payload["visited"][0]["kind"] == "function");
    CHECK(traverse.payload["visited"][0]["via"] == "invoke");
    CHECK(traverse.payload["visited"][0]["hop"] == 1);
    CHECK(traverse.payload["visited"][1]["id"] == "b.py::h");
    CHECK(traverse.payload["visited"][1]["path"] ==
          nlohmann::json::array({"a.py::f", "a.py::g"}));

    const ToolResponse web = dispatch_tool({"WebSearch", {{"query", "widgets"}}}, ctx);
    CHECK(web.payload["summary"] == ""); // no chat provider configured
    CHECK(web.payload["urls"] == nlohmann::json::array({"https://docs.example.org/a"}));

    const ToolResponse code =
        dispatch_tool({"CodeTesting", {{"code", "def f():\n    return 1\n"}}}, ctx);
    CHECK(code.payload["ok"] == true);
    CHECK(code.payload["diagnostics"].is_array());
    CHECK(code.payload["formatted_code"].is_null());
}

TEST_CASE("dispatch_tool validates names and argument shapes") {
    DispatchRig rig;
    const ToolContext ctx = rig.context();

    CHECK(error_kind([&] { dispatch_tool({"NoSuchTool", nlohmann::json::object()}, ctx); }) ==
          ErrorKind::Precondition);
    CHECK(error_kind([&] { dispatch_tool({"RGRetrieval", nlohmann::json::array()}, ctx); }) ==
          ErrorKind::Precondition);
    CHECK(error_kind([&] { dispatch_tool({"RGRetrieval", nlohmann::json::object()}, ctx); }) ==
          ErrorKind::Precondition);
    CHECK(error_kind([&] { dispatch_tool({"RGRetrieval", {{"requirement", 7}}}, ctx); }) ==
          ErrorKind::Precondition);
    CHECK(error_kind([&] {
              dispatch_tool({"DualGraphMapping", {{"ids", nlohmann::json::array({1, 2})}}}, ctx);
          }) == ErrorKind::Precondition);
    CHECK(error_kind([&] {
              dispatch_tool({"SSCGTraverse",
                             {{"start_ids", nlohmann::json::array({"a.py::f"})},
                              {"direction", "sideways"}}},
                            ctx);
          }) == ErrorKind::Precondition);
    CHECK(error_kind([&] {
              dispatch_tool({"SSCGTraverse",
                             {{"start_ids", nlohmann::json::array({"a.py::f"})},
                              {"max_hops", "two"}}},
                            ctx);
          }) == ErrorKind::Precondition);
    CHECK(error_kind([&] {
              dispatch_tool({"SSCGTraverse",
                             {{"start_ids", nlohmann::json::array({"a.py::f"})},
                              {"edge_kinds", nlohmann::json::array({"teleport"})}}},
                            ctx);
          }) == ErrorKind::Precondition);

    ToolContext bare;
    CHECK(error_kind([&] { dispatch_tool({"CodeTesting", {{"code", "x = 1\n"}}}, bare); }) ==
          ErrorKind::Precondition);
}

TEST_CASE("tool_schema_text names all five tools") {
    const std::string schema = tool_schema_text();
    for (const char* name : kToolNames) CHECK(schema.find(name) != std::string::npos);
}
