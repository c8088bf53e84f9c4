#include "codegraph/commands.hpp"

#include "codegraph/agent.hpp"
#include "codegraph/error.hpp"
#include "codegraph/eval.hpp"
#include "codegraph/frontend.hpp"
#include "codegraph/graph_store.hpp"
#include "codegraph/rg_builder.hpp"
#include "codegraph/sscg_builder.hpp"
#include "codegraph/tools.hpp"
#include "codegraph/util.hpp"

#include <filesystem>
#include <memory>
#include <ostream>

namespace fs = std::filesystem;

namespace codegraph {

namespace {

struct ProviderBundle {
    std::unique_ptr<ChatProvider> chat; // null when chat_provider = none
    std::unique_ptr<EmbeddingProvider> embedder;
    std::unique_ptr<SearchBackend> search;
};

// Credentials stay behind the env-var name in the endpoint; only the remote
// transport reads the value, so no command can log it.
ProviderBundle build_providers(const Config& config) {
    ProviderBundle bundle;
    if (config.chat_provider == "scripted") {
        bundle.chat = std::make_unique<ScriptedChat>(load_script(config.chat_script));
    } else if (config.chat_provider == "remote") {
        RemoteEndpoint endpoint;
        endpoint.base_url = config.chat_endpoint;
        endpoint.path = "/v1/chat/completions";
        endpoint.model = config.chat_model;
        endpoint.api_key_env = config.api_key_env;
        bundle.chat = std::make_unique<RemoteChat>(endpoint);
    }
    if (config.embedding_provider == "remote") {
        RemoteEndpoint endpoint;
        endpoint.base_url = config.embedding_endpoint;
        endpoint.path = "/v1/embeddings";
        endpoint.model = config.embedding_model;
        endpoint.api_key_env = config.api_key_env;
        bundle.embedder = std::make_unique<RemoteEmbedding>(
            endpoint, static_cast<std::size_t>(config.embedding_dimension));
    } else {
        bundle.embedder =
            std::make_unique<StubEmbedding>(static_cast<std::size_t>(config.embedding_dimension));
    }
    if (config.search_provider == "remote") {
        RemoteEndpoint endpoint;
        endpoint.base_url = config.search_endpoint;
        endpoint.path = "/search";
        endpoint.api_key_env = config.api_key_env;
        bundle.search = std::make_unique<RemoteSearch>(endpoint, config.blocklist);
    } else {
        bundle.search =
            std::make_unique<StubSearch>(std::vector<SearchResult>{}, config.blocklist);
    }
    return bundle;
}

int report_error(const Error& error, std::ostream& err) {
    err << "error (" << to_string(error.kind()) << "): " << error.what() << "\n";
    return 1;
}

void report_warnings(const Diagnostics& diagnostics, std::ostream& err) {
    for (const std::string& warning : diagnostics.warnings)
        err << "warning: " << warning << "\n";
}

AgentConfig agent_config_from(const Config& config) {
    AgentConfig agent;
    agent.max_tool_calls = config.max_tool_calls;
    agent.repair_rounds = config.repair_rounds;
    agent.retrieved_cap = config.retrieval_budget;
    agent.max_output_tokens = config.max_output_tokens;
    return agent;
}

const EvalTask& find_task(const std::vector<EvalTask>& suite, const std::string& task_id) {
    for (const EvalTask& task : suite)
        if (task.id == task_id)
            return task;
    fail(ErrorKind::Precondition, "unknown task id: " + task_id);
}

} // namespace

int cmd_index(const std::string& repo_root, const std::string& out_dir, const Config& config,
              std::ostream& out, std::ostream& err) {
    try {
        if (!fs::exists(repo_root) || !fs::is_directory(repo_root))
            fail(ErrorKind::Io, "root not found: " + repo_root);
        Diagnostics diagnostics;
        const EntitySet entities =
            scan_repo(repo_root, frontend_for(config.language), {}, {}, &diagnostics);
        const ProviderBundle providers = build_providers(config);

        SscgConfig sscg_config;
        sscg_config.epsilon = config.epsilon;
        sscg_config.similar_cap = config.similar_cap;
        const Graph sscg = build_sscg(entities, providers.embedder.get(), sscg_config, &diagnostics);

        fs::create_directories(out_dir);
        RgConfig rg_config;
        rg_config.epsilon = config.epsilon;
        rg_config.similar_cap = config.similar_cap;
        rg_config.cache_path = out_dir + "/" + kRequirementCacheFile;
        const Graph rg = build_rg(entities, sscg, providers.chat.get(), providers.embedder.get(),
                                  rg_config, &diagnostics);

        save_graph(sscg, out_dir + "/" + kSscgIndexFile);
        save_graph(rg, out_dir + "/" + kRgIndexFile);
        report_warnings(diagnostics, err);
        out << "sscg nodes " << sscg.nodes.size() << " edges " << sscg.edges.size() << "\n";
        out << "rg nodes " << rg.nodes.size() << " edges " << rg.edges.size() << "\n";
        return 0;
    } catch (const Error& error) {
        return report_error(error, err);
    }
}

int cmd_generate(const std::string& suite_path, const std::string& task_id,
                 const std::string& index_dir, const std::string& transcript_path,
                 const Config& config, std::ostream& out, std::ostream& err) {
    try {
        const std::vector<EvalTask> suite = load_suite(suite_path);
        const EvalTask& entry = find_task(suite, task_id);
        const ProviderBundle providers = build_providers(config);
        if (providers.chat == nullptr)
            fail(ErrorKind::Config, "generation requires a scripted or remote chat provider");

        const Graph sscg = load_graph(index_dir + "/" + kSscgIndexFile);
        const Graph rg = load_graph(index_dir + "/" + kRgIndexFile);
        verify_snapshot(sscg, entry.repo_root);
        verify_snapshot(rg, entry.repo_root);

        Diagnostics diagnostics;
        ToolContext tools;
        tools.sscg = &sscg;
        tools.rg = &rg;
        tools.embedder = providers.embedder.get();
        tools.search = providers.search.get();
        tools.frontend = &frontend_for(config.language);
        tools.diagnostics = &diagnostics;
        tools.rg_retrieval.candidates = config.candidates;
        tools.rg_retrieval.epsilon = config.epsilon;
        tools.hop_ceiling = config.hop_ceiling;
        tools.web.top_n = config.web_top_n;
        tools.web.summary_budget = config.web_summary_budget;
        tools.code_testing.formatter_command = config.formatter_command;
        tools.code_testing.formatter_timeout_seconds = config.formatter_timeout_seconds;

        Task task;
        task.requirement = entry.requirement;
        task.repo_root = entry.repo_root;
        task.target_path = entry.target_path;
        task.target_name = entry.target_name;
        task.context_budget = config.context_budget;
        task.sscg_index_path = index_dir + "/" + kSscgIndexFile;
        task.rg_index_path = index_dir + "/" + kRgIndexFile;

        const AgentResult result =
            run_task(task, tools, *providers.chat, agent_config_from(config));
        write_text_file(transcript_path, serialize_transcript(result.transcript));
        out << result.code;
        report_warnings(diagnostics, err);
        err << "status: " << to_string(result.status) << "\n";
        switch (result.status) {
            case AgentStatus::Accepted: return 0;
            case AgentStatus::BudgetExhausted: return 2;
            case AgentStatus::ProviderError: return 1;
        }
        return 1;
    } catch (const Error& error) {
        return report_error(error, err);
    }
}

int cmd_eval(const std::string& suite_path, const std::string& method,
             const std::string& report_path, const Config& config, std::ostream& out,
             std::ostream& err) {
    try {
        const std::vector<EvalTask> suite = load_suite(suite_path);
        const ProviderBundle bundle = build_providers(config);
        if (bundle.chat == nullptr)
            fail(ErrorKind::Config, "evaluation requires a scripted or remote chat provider");

        EvalProviders providers;
        providers.chat = bundle.chat.get();
        providers.embedder = bundle.embedder.get();
        providers.search = bundle.search.get();
        providers.frontend = &frontend_for(config.language);

        EvalConfig eval_config;
        eval_config.n_samples = config.n_samples;
        eval_config.k_list = config.k_list;
        eval_config.retrieval_budget = config.retrieval_budget;
        eval_config.test_timeout_seconds = config.test_timeout_seconds;
        eval_config.workers = config.workers;
        eval_config.agent = agent_config_from(config);

        Diagnostics diagnostics;
        const EvalReport report = run_eval(suite, method, providers, eval_config, &diagnostics);
        write_text_file(report_path, serialize_report(report));
        out << render_report_table(report);
        report_warnings(diagnostics, err);
        return 0;
    } catch (const Error& error) {
        return report_error(error, err);
    }
}

int cmd_inspect(const std::string& index_path, const std::string& node_id, const Config& config,
                std::ostream& out, std::ostream& err) {
    (void)config;
    try {
        const Graph graph = load_graph(index_path);
        const GraphNode* node = graph.find(node_id);
        if (node == nullptr)
            fail(ErrorKind::Precondition, "unknown node: " + node_id);

        out << "id: " << node->id << "\n";
        out << "kind: " << node_kind_label(graph.kind, node->kind) << "\n";
        out << "path: " << node->path << "\n";
        out << "lines: " << node->start_line << "-" << node->end_line << "\n";
        if (!node->name.empty())
            out << "name: " << node->name << "\n";
        if (!node->provenance.empty())
            out << "provenance: " << node->provenance << "\n";
        if (!node->text.empty())
            out << "text: " << escape_field(node->text) << "\n";

        const std::set<EdgeKind> all_kinds = {EdgeKind::Import,  EdgeKind::Contain,
                                              EdgeKind::Inherit, EdgeKind::Invoke,
                                              EdgeKind::Similar, EdgeKind::ParentChild};
        bool any = false;
        for (const Direction direction : {Direction::Outbound, Direction::Inbound}) {
            const auto hits = neighbors(graph, node_id, direction, all_kinds);
            std::string open_kind;
            for (const NeighborHit& hit : hits) {
                const std::string kind = to_string(hit.edge.kind);
                if (kind != open_kind) {
                    if (!open_kind.empty())
                        out << "\n";
                    out << to_string(direction) << " " << kind << ": " << hit.neighbor_id;
                    open_kind = kind;
                } else {
                    out << ", " << hit.neighbor_id;
                }
                any = true;
            }
            if (!open_kind.empty())
                out << "\n";
        }
        if (!any)
            out << "no edges\n";
        return 0;
    } catch (const Error& error) {
        return report_error(error, err);
    }
}

} // namespace codegraph
