#include "codegraph/eval.hpp"

#include "codegraph/entity.hpp"
#include "codegraph/error.hpp"
#include "codegraph/frontend.hpp"
#include "codegraph/process.hpp"
#include "codegraph/rg_builder.hpp"
#include "codegraph/similarity.hpp"
#include "codegraph/sscg_builder.hpp"
#include "codegraph/tools.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unistd.h>
#include <unordered_map>

namespace fs = std::filesystem;

namespace codegraph {

namespace {

constexpr double kBm25K1 = 1.2;
constexpr double kBm25B = 0.75;

std::vector<std::vector<std::string>> tokenize_all(
    const std::vector<std::pair<std::string, std::string>>& corpus) {
    std::vector<std::vector<std::string>> tokens(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i)
        tokens[i] = tokenize(corpus[i].second);
    return tokens;
}

double bm25_score_one(const std::vector<std::string>& query_terms,
                      const std::vector<double>& idf,
                      const std::vector<std::string>& doc_tokens,
                      double avgdl) {
    std::unordered_map<std::string, int> counts;
    for (const std::string& token : doc_tokens)
        ++counts[token];
    const double dl = static_cast<double>(doc_tokens.size());
    const double length_norm = avgdl > 0.0 ? dl / avgdl : 0.0;
    double score = 0.0;
    for (std::size_t t = 0; t < query_terms.size(); ++t) {
        auto it = counts.find(query_terms[t]);
        if (it == counts.end())
            continue;
        const double tf = static_cast<double>(it->second);
        score += idf[t] * tf * (kBm25K1 + 1.0) /
                 (tf + kBm25K1 * (1.0 - kBm25B + kBm25B * length_norm));
    }
    return score;
}

RankedList bm25_impl(const std::string& query,
                     const std::vector<std::pair<std::string, std::string>>& corpus,
                     std::size_t k, bool parallel) {
    if (k < 1)
        fail(ErrorKind::Precondition, "bm25_retrieve requires k >= 1");
    if (corpus.empty())
        return {};

    // Distinct query terms in sorted order, so the floating-point sum order is
    // fixed and identical for the parallel and serial variants.
    std::vector<std::string> terms = tokenize(query);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

    const std::vector<std::vector<std::string>> doc_tokens = tokenize_all(corpus);
    const double n_docs = static_cast<double>(corpus.size());
    double total_len = 0.0;
    for (const auto& tokens : doc_tokens)
        total_len += static_cast<double>(tokens.size());
    const double avgdl = total_len / n_docs;

    std::vector<double> idf(terms.size(), 0.0);
    for (std::size_t t = 0; t < terms.size(); ++t) {
        double df = 0.0;
        for (const auto& tokens : doc_tokens)
            if (std::find(tokens.begin(), tokens.end(), terms[t]) != tokens.end())
                df += 1.0;
        idf[t] = std::log((n_docs - df + 0.5) / (df + 0.5) + 1.0);
    }

    std::vector<double> scores(corpus.size(), 0.0);
    if (parallel) {
        const std::int64_t count = static_cast<std::int64_t>(corpus.size());
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < count; ++i)
            scores[static_cast<std::size_t>(i)] =
                bm25_score_one(terms, idf, doc_tokens[static_cast<std::size_t>(i)], avgdl);
    } else {
        for (std::size_t i = 0; i < corpus.size(); ++i)
            scores[i] = bm25_score_one(terms, idf, doc_tokens[i], avgdl);
    }

    RankedList ranked;
    ranked.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i)
        ranked.emplace_back(corpus[i].first, scores[i]);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second)
            return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > k)
        ranked.resize(k);
    return ranked;
}

} // namespace

RankedList bm25_retrieve(const std::string& query,
                         const std::vector<std::pair<std::string, std::string>>& corpus,
                         std::size_t k) {
    return bm25_impl(query, corpus, k, true);
}

RankedList bm25_retrieve_serial(const std::string& query,
                                const std::vector<std::pair<std::string, std::string>>& corpus,
                                std::size_t k) {
    return bm25_impl(query, corpus, k, false);
}

RankedList dense_retrieve(const std::string& query,
                          const std::vector<std::pair<std::string, std::string>>& corpus,
                          EmbeddingProvider& embedder,
                          std::size_t k) {
    if (k < 1)
        fail(ErrorKind::Precondition, "dense_retrieve requires k >= 1");
    if (corpus.empty())
        return {};
    std::vector<std::string> texts;
    texts.reserve(corpus.size() + 1);
    texts.push_back(query);
    for (const auto& [id, text] : corpus)
        texts.push_back(text);
    const std::vector<Embedding> vectors = embedder.embed(texts);

    RankedList ranked;
    ranked.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i)
        ranked.emplace_back(corpus[i].first, cosine(vectors[0], vectors[i + 1]));
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second)
            return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > k)
        ranked.resize(k);
    return ranked;
}

double pass_at_k(int n, int c, int k) {
    if (n < 0 || c < 0 || c > n)
        fail(ErrorKind::Precondition, "pass_at_k requires 0 <= c <= n");
    if (k < 1 || k > n)
        fail(ErrorKind::Precondition, "pass_at_k requires 1 <= k <= n");
    if (n - c < k)
        return 1.0; // every k-subset contains a correct sample
    long double miss = 1.0L;
    for (int i = 0; i < k; ++i)
        miss *= static_cast<long double>(n - c - i) / static_cast<long double>(n - i);
    return static_cast<double>(1.0L - miss);
}

// ---------------------------------------------------------------------------
// Suite manifests

namespace {

const std::vector<std::string> kSuiteKeys = {
    "repo", "requirement", "target_path", "target_name", "test_command"};

std::string& suite_field(EvalTask& task, const std::string& key) {
    if (key == "repo")
        return task.repo_root;
    if (key == "requirement")
        return task.requirement;
    if (key == "target_path")
        return task.target_path;
    if (key == "target_name")
        return task.target_name;
    return task.test_command;
}

} // namespace

std::vector<EvalTask> load_suite(const std::string& path) {
    const std::string text = read_text_file(path);
    const fs::path base = fs::path(path).parent_path();

    std::vector<EvalTask> tasks;
    std::set<std::string> seen_keys;
    std::set<std::string> seen_ids;
    bool open = false;

    auto close_record = [&](std::size_t line_no) {
        if (!open)
            return;
        for (const std::string& key : kSuiteKeys)
            if (!seen_keys.count(key))
                fail(ErrorKind::Parse, "suite task '" + tasks.back().id + "' missing field '" +
                                           key + "' (line " + std::to_string(line_no) + ")");
        open = false;
    };

    const std::vector<std::string> lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty() || line[0] == '#')
            continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            fail(ErrorKind::Parse, "malformed suite line " + std::to_string(i + 1));
        const std::string key = line.substr(0, tab);
        const std::string value = unescape_field(line.substr(tab + 1));
        if (key == "task") {
            close_record(i + 1);
            if (value.empty())
                fail(ErrorKind::Parse, "empty task id on line " + std::to_string(i + 1));
            if (!seen_ids.insert(value).second)
                fail(ErrorKind::Parse, "duplicate task id '" + value + "'");
            tasks.push_back(EvalTask{});
            tasks.back().id = value;
            seen_keys.clear();
            open = true;
            continue;
        }
        if (std::find(kSuiteKeys.begin(), kSuiteKeys.end(), key) == kSuiteKeys.end())
            fail(ErrorKind::Parse, "unknown suite key '" + key + "' on line " + std::to_string(i + 1));
        if (!open)
            fail(ErrorKind::Parse, "field '" + key + "' before any task (line " + std::to_string(i + 1) + ")");
        if (!seen_keys.insert(key).second)
            fail(ErrorKind::Parse, "duplicate field '" + key + "' in task '" + tasks.back().id + "'");
        if (value.empty())
            fail(ErrorKind::Parse, "empty value for '" + key + "' in task '" + tasks.back().id + "'");
        std::string resolved = value;
        if (key == "repo" && fs::path(value).is_relative())
            resolved = (base / value).lexically_normal().string();
        suite_field(tasks.back(), key) = resolved;
    }
    close_record(lines.size());
    return tasks;
}

// ---------------------------------------------------------------------------
// run_eval

namespace {

std::uint64_t hash_tree(const std::string& root) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::uint64_t combined = fnv1a64("");
    for (const fs::path& file : files) {
        combined = fnv1a64(fs::relative(file, root).generic_string(), combined);
        combined = fnv1a64(read_text_file(file.string()), combined);
    }
    return combined;
}

void copy_tree(const std::string& from, const fs::path& to) {
    std::error_code ec;
    fs::remove_all(to, ec);
    fs::create_directories(to);
    fs::copy(from, to, fs::copy_options::recursive, ec);
    if (ec)
        fail(ErrorKind::Io, "cannot copy repository to " + to.string() + ": " + ec.message());
}

// Replaces lines [start_line, end_line] of the target's file with `code`,
// inserted verbatim (callers supply correctly indented code).
void splice_code(const fs::path& repo_copy, const Entity& target, const std::string& code) {
    const fs::path file = repo_copy / target.path;
    const std::vector<std::string> lines = split_lines(read_text_file(file.string()));
    if (target.start_line < 1 || static_cast<std::size_t>(target.end_line) > lines.size() ||
        target.start_line > target.end_line)
        fail(ErrorKind::Precondition, "target span out of range for " + target.id);
    std::string out;
    for (int i = 0; i < target.start_line - 1; ++i)
        out += lines[static_cast<std::size_t>(i)] + "\n";
    out += code;
    if (!code.empty() && code.back() != '\n')
        out += '\n';
    for (std::size_t i = static_cast<std::size_t>(target.end_line); i < lines.size(); ++i)
        out += lines[i] + "\n";
    write_text_file(file.string(), out);
}

// Models often wrap code in a fence; take the first fenced body when present,
// otherwise the reply verbatim.
std::string extract_code(const std::string& reply) {
    const std::vector<std::string> lines = split_lines(reply);
    std::size_t open = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i)
        if (trim(lines[i]).rfind("```", 0) == 0) {
            open = i;
            break;
        }
    if (open == lines.size())
        return reply;
    std::string body;
    for (std::size_t i = open + 1; i < lines.size(); ++i) {
        if (trim(lines[i]) == "```")
            break;
        body += lines[i];
        body += '\n';
    }
    return body;
}

std::string entity_source(const std::string& repo_root, const Entity& entity) {
    const std::vector<std::string> lines =
        split_lines(read_text_file(repo_root + "/" + entity.path));
    std::string out;
    for (int i = entity.start_line; i <= entity.end_line && i <= static_cast<int>(lines.size()); ++i)
        out += lines[static_cast<std::size_t>(i - 1)] + "\n";
    return out;
}

// Retrieval pool for the baselines: every non-file entity except the target
// itself (its current body is what the method is asked to produce).
std::vector<std::pair<std::string, std::string>> baseline_corpus(const EntitySet& entities,
                                                                 const std::string& target_id) {
    std::vector<std::pair<std::string, std::string>> corpus;
    for (const Entity& entity : entities.entities()) {
        if (entity.kind == EntityKind::File || entity.id == target_id)
            continue;
        corpus.emplace_back(entity.id, entity_source(entities.repo_root(), entity));
    }
    std::sort(corpus.begin(), corpus.end());
    return corpus;
}

std::string baseline_prompt(const EvalTask& task, const RankedList& hits,
                            const std::map<std::string, std::string>& texts) {
    std::string user;
    if (!hits.empty()) {
        user += "Context:\n";
        for (const auto& [id, score] : hits) {
            (void)score;
            auto it = texts.find(id);
            if (it == texts.end())
                continue;
            user += "\n[" + id + "]\n" + it->second;
        }
        user += "\n";
    }
    user += "Requirement:\n" + task.requirement + "\n";
    return user;
}

struct RepoIndex {
    EntitySet entities;
    Graph sscg;
    Graph rg;
};

struct EvalState {
    const EvalProviders* providers = nullptr;
    const EvalConfig* config = nullptr;
    Diagnostics* diagnostics = nullptr;
    std::string method;
    std::mutex mu; // guards providers, diagnostics, and the index cache
    std::map<std::string, std::shared_ptr<RepoIndex>> indexes;
};

std::shared_ptr<RepoIndex> repo_index(EvalState& state, const std::string& repo_root) {
    auto it = state.indexes.find(repo_root);
    if (it != state.indexes.end())
        return it->second;
    auto index = std::make_shared<RepoIndex>();
    index->entities = scan_repo(repo_root, *state.providers->frontend, {}, {}, state.diagnostics);
    SscgConfig sscg_config;
    index->sscg = build_sscg(index->entities, state.providers->embedder, sscg_config,
                             state.diagnostics);
    // Requirements come from docstrings or signatures only: a chat provider
    // here would interleave with the generation script and break determinism.
    RgConfig rg_config;
    index->rg = build_rg(index->entities, index->sscg, nullptr, state.providers->embedder,
                         rg_config, state.diagnostics);
    state.indexes.emplace(repo_root, index);
    return index;
}

// Generates one code sample; caller holds the provider lock.
std::string generate_sample(EvalState& state, const EvalTask& task, const Entity& target,
                            const std::shared_ptr<RepoIndex>& index) {
    const EvalProviders& providers = *state.providers;
    const EvalConfig& config = *state.config;
    if (state.method == "agent") {
        Task agent_task;
        agent_task.requirement = task.requirement;
        agent_task.repo_root = task.repo_root;
        agent_task.target_path = task.target_path;
        agent_task.target_name = task.target_name;
        ToolContext tools;
        tools.sscg = &index->sscg;
        tools.rg = &index->rg;
        tools.embedder = providers.embedder;
        tools.search = providers.search;
        tools.frontend = providers.frontend;
        tools.diagnostics = state.diagnostics;
        AgentResult result = run_task(agent_task, tools, *providers.chat, config.agent);
        return result.code;
    }

    std::string user;
    if (state.method == "scratch") {
        user = task.requirement;
    } else {
        const auto corpus = baseline_corpus(index->entities, target.id);
        std::map<std::string, std::string> texts(corpus.begin(), corpus.end());
        RankedList hits;
        const std::size_t k = static_cast<std::size_t>(config.retrieval_budget);
        if (state.method == "sparse")
            hits = corpus.empty() ? RankedList{} : bm25_retrieve(task.requirement, corpus, k);
        else
            hits = dense_retrieve(task.requirement, corpus, *providers.embedder, k);
        user = baseline_prompt(task, hits, texts);
    }
    ChatParams params;
    params.max_output_tokens = config.baseline_max_output;
    const ChatResult reply = providers.chat->chat(
        {{"system", "You write Python code for one repository entity."}, {"user", user}},
        params);
    return extract_code(reply.text);
}

EvalTaskResult eval_one_task(EvalState& state, const EvalTask& task, int worker) {
    const EvalConfig& config = *state.config;
    EvalTaskResult result;
    result.id = task.id;

    const std::uint64_t before = hash_tree(task.repo_root);

    std::shared_ptr<RepoIndex> index;
    const Entity* target = nullptr;
    {
        std::lock_guard<std::mutex> lock(state.mu);
        index = repo_index(state, task.repo_root);
        const std::string target_id = task.target_path + "::" + task.target_name;
        target = index->entities.find(target_id);
        if (target == nullptr) {
            result.errored = true;
            result.error = "target entity not found: " + target_id;
            if (state.diagnostics != nullptr)
                state.diagnostics->warn("task " + task.id + " excluded: " + result.error);
            return result;
        }
    }

    result.n = config.n_samples;
    const fs::path scratch_base =
        fs::temp_directory_path() /
        ("codegraph-eval-" + std::to_string(static_cast<long>(::getpid())) + "-w" +
         std::to_string(worker));
    for (int sample = 0; sample < config.n_samples; ++sample) {
        std::string code;
        {
            std::lock_guard<std::mutex> lock(state.mu);
            code = generate_sample(state, task, *target, index);
        }
        const fs::path copy = scratch_base / (task.id + "-s" + std::to_string(sample));
        copy_tree(task.repo_root, copy);
        splice_code(copy, *target, code);
        const ProcessResult run = run_shell(task.test_command, copy.string(), "",
                                            config.test_timeout_seconds);
        if (!run.timed_out && run.exit_code == 0)
            ++result.c;
        std::error_code ec;
        fs::remove_all(copy, ec);
    }

    if (hash_tree(task.repo_root) != before)
        fail(ErrorKind::Integrity, "evaluation mutated the repository snapshot: " + task.repo_root);
    return result;
}

} // namespace

EvalReport run_eval(const std::vector<EvalTask>& suite,
                    const std::string& method,
                    const EvalProviders& providers,
                    const EvalConfig& config,
                    Diagnostics* diagnostics) {
    if (method != "agent" && method != "scratch" && method != "sparse" && method != "dense")
        fail(ErrorKind::Config, "unknown eval method: " + method);
    if (config.n_samples < 1)
        fail(ErrorKind::Config, "n_samples must be >= 1");
    if (config.k_list.empty())
        fail(ErrorKind::Config, "k_list must not be empty");
    for (int k : config.k_list)
        if (k < 1 || k > config.n_samples)
            fail(ErrorKind::Config, "every k must satisfy 1 <= k <= n_samples");
    if (config.retrieval_budget < 1)
        fail(ErrorKind::Config, "retrieval_budget must be >= 1");
    if (config.test_timeout_seconds < 1)
        fail(ErrorKind::Config, "test_timeout_seconds must be >= 1");
    if (config.workers < 1)
        fail(ErrorKind::Config, "workers must be >= 1");
    if (config.baseline_max_output < 1)
        fail(ErrorKind::Config, "baseline_max_output must be >= 1");
    if (providers.frontend == nullptr)
        fail(ErrorKind::Config, "eval requires a language frontend");
    if (providers.chat == nullptr)
        fail(ErrorKind::Config, "method '" + method + "' requires a chat provider");
    if (method == "dense" && providers.embedder == nullptr)
        fail(ErrorKind::Config, "method 'dense' requires an embedding provider");

    std::set<std::string> ids;
    for (const EvalTask& task : suite) {
        if (task.id.empty() || task.repo_root.empty() || task.requirement.empty() ||
            task.target_path.empty() || task.target_name.empty() || task.test_command.empty())
            fail(ErrorKind::Precondition, "eval task with empty field");
        if (!ids.insert(task.id).second)
            fail(ErrorKind::Precondition, "duplicate task id: " + task.id);
    }

    EvalState state;
    state.providers = &providers;
    state.config = &config;
    state.diagnostics = diagnostics;
    state.method = method;

    std::vector<EvalTaskResult> results(suite.size());
    const int workers = std::min<int>(config.workers, static_cast<int>(suite.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < suite.size(); ++i)
            results[i] = eval_one_task(state, suite[i], 0);
    } else {
        std::atomic<std::size_t> next{0};
        std::mutex error_mu;
        std::exception_ptr first_error;
        std::vector<std::thread> threads;
        for (int w = 0; w < workers; ++w)
            threads.emplace_back([&, w] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= suite.size())
                        return;
                    try {
                        results[i] = eval_one_task(state, suite[i], w);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mu);
                        if (!first_error)
                            first_error = std::current_exception();
                        return;
                    }
                }
            });
        for (std::thread& thread : threads)
            thread.join();
        if (first_error)
            std::rethrow_exception(first_error);
    }

    EvalReport report;
    report.method = method;
    report.n_samples = config.n_samples;
    report.tasks = std::move(results);
    std::sort(report.tasks.begin(), report.tasks.end(),
              [](const EvalTaskResult& a, const EvalTaskResult& b) { return a.id < b.id; });

    std::size_t valid = 0;
    for (const EvalTaskResult& task : report.tasks)
        if (!task.errored)
            ++valid;
    if (valid == 0 && diagnostics != nullptr)
        diagnostics->warn("no valid tasks in suite; aggregates are zero");
    for (int k : config.k_list) {
        EvalAggregate aggregate;
        aggregate.k = k;
        if (valid > 0) {
            double total = 0.0;
            for (const EvalTaskResult& task : report.tasks)
                if (!task.errored)
                    total += pass_at_k(task.n, task.c, k);
            aggregate.value = total / static_cast<double>(valid);
        }
        report.aggregates.push_back(aggregate);
    }
    return report;
}

std::string serialize_report(const EvalReport& report) {
    std::string out = "H\tcodegraph-eval\t1\t" + report.method + "\t" +
                      std::to_string(report.n_samples) + "\n";
    for (const EvalTaskResult& task : report.tasks)
        out += "T\t" + escape_field(task.id) + "\t" + std::to_string(task.n) + "\t" +
               std::to_string(task.c) + "\t" + escape_field(task.error) + "\n";
    for (const EvalAggregate& aggregate : report.aggregates)
        out += "P\t" + std::to_string(aggregate.k) + "\t" + format_double(aggregate.value) + "\n";
    return out;
}

std::string render_report_table(const EvalReport& report) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header = {"task", "n", "c"};
    for (const EvalAggregate& aggregate : report.aggregates)
        header.push_back("pass@" + std::to_string(aggregate.k));
    rows.push_back(header);
    for (const EvalTaskResult& task : report.tasks) {
        std::vector<std::string> row = {task.id};
        if (task.errored) {
            row.push_back("-");
            row.push_back("-");
            for (std::size_t i = 0; i < report.aggregates.size(); ++i)
                row.push_back("-");
        } else {
            row.push_back(std::to_string(task.n));
            row.push_back(std::to_string(task.c));
            for (const EvalAggregate& aggregate : report.aggregates)
                row.push_back(format_double(pass_at_k(task.n, task.c, aggregate.k)));
        }
        rows.push_back(row);
    }
    std::vector<std::string> all = {"all", "-", "-"};
    for (const EvalAggregate& aggregate : report.aggregates)
        all.push_back(format_double(aggregate.value));
    rows.push_back(all);

    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.size(); ++i)
            widths[i] = std::max(widths[i], row[i].size());
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0)
                out += "  ";
            out += row[i];
            if (i + 1 < row.size())
                out += std::string(widths[i] - row[i].size(), ' ');
        }
        out += '\n';
    }
    return out;
}

} // namespace codegraph
