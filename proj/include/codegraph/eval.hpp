#pragma once
// Evaluation harness: run a generation method over a task suite, execute each
// task's test command in a scratch repository copy, and aggregate Pass@k.
// Methods: "agent" (the full tool loop), "scratch" (requirement-only prompt),
// "sparse" (BM25 top-K + requirement), "dense" (cosine top-K + requirement).

#include "codegraph/agent.hpp"
#include "codegraph/providers.hpp"
#include "codegraph/util.hpp"

#include <string>
#include <utility>
#include <vector>

namespace codegraph {

class LanguageFrontend;

// One evaluation task. Generated code replaces the span of the target entity
// (`target_path` + dotted `target_name`) in a scratch copy of `repo_root`;
// `test_command` then runs in that copy and its exit status decides pass/fail.
struct EvalTask {
    std::string id;
    std::string repo_root;
    std::string requirement;
    std::string target_path;
    std::string target_name;
    std::string test_command;
};

// Loads a suite manifest: line-oriented keyed text, one record per task.
//   task\t<id>            starts a record
//   repo\t<path>          relative paths resolve against the manifest's dir
//   requirement\t<text>   escaped (\t, \n)
//   target_path\t<path>
//   target_name\t<dotted name>
//   test_command\t<command>  escaped
// Blank lines and lines starting with '#' are ignored. Every record needs all
// six fields; duplicates (keys within a record, ids across records) are errors.
std::vector<EvalTask> load_suite(const std::string& path);

// Probability that at least one of k samples drawn without replacement from n
// generated solutions (c of them correct) passes: 1 - C(n-c,k)/C(n,k).
// Requires 0 <= c <= n and 1 <= k <= n; exact for n up to 1e6.
double pass_at_k(int n, int c, int k);

// (EntityId, score) ranking, best first.
using RankedList = std::vector<std::pair<std::string, double>>;

// Okapi BM25 (k1=1.2, b=0.75, idf = ln((N-df+0.5)/(df+0.5)+1)) of the query
// against each (id, text) document; tokenization matches tokenize(). Top-k by
// score descending, id ascending on ties. Empty corpus yields an empty list.
// bm25_retrieve scores documents in parallel; the _serial twin is the
// reference implementation the tests and the benchmark compare against.
RankedList bm25_retrieve(const std::string& query,
                         const std::vector<std::pair<std::string, std::string>>& corpus,
                         std::size_t k);
RankedList bm25_retrieve_serial(const std::string& query,
                                const std::vector<std::pair<std::string, std::string>>& corpus,
                                std::size_t k);

// Embeds the query and all documents in one batch and ranks by cosine
// descending, id ascending on ties. k beyond the corpus size returns the
// whole corpus. Provider failures propagate.
RankedList dense_retrieve(const std::string& query,
                          const std::vector<std::pair<std::string, std::string>>& corpus,
                          EmbeddingProvider& embedder,
                          std::size_t k);

struct EvalProviders {
    ChatProvider* chat = nullptr;
    EmbeddingProvider* embedder = nullptr;
    SearchBackend* search = nullptr;
    const LanguageFrontend* frontend = nullptr;
};

struct EvalConfig {
    int n_samples = 1;            // samples per task (temperature is 0)
    std::vector<int> k_list = {1}; // every k must satisfy 1 <= k <= n_samples
    int retrieval_budget = 10;    // K: max retrieved entities for baselines
    int test_timeout_seconds = 120;
    int workers = 1;              // each worker owns its repo copies
    int baseline_max_output = 500; // token cap for scratch/sparse/dense replies
    AgentConfig agent;            // agent method only (its own output cap)
};

struct EvalTaskResult {
    std::string id;
    int n = 0;
    int c = 0;              // samples passing the test command
    bool errored = false;   // e.g. splice target missing; excluded from aggregates
    std::string error;
};

struct EvalAggregate {
    int k = 1;
    double value = 0.0; // mean pass_at_k over non-errored tasks
};

struct EvalReport {
    std::string method;
    int n_samples = 1;
    std::vector<EvalTaskResult> tasks; // sorted by task id
    std::vector<EvalAggregate> aggregates;
};

// Runs the whole suite. For each task and sample: generate code with `method`,
// splice it over the target entity's span in a scratch copy of the repo, run
// the test command there with the configured timeout (timeout counts as fail),
// and record pass/fail. A missing target entity marks the task errored with a
// warning and excludes it from the aggregates. The original repository is
// hash-checked before and after; any mutation raises Error{Integrity}.
EvalReport run_eval(const std::vector<EvalTask>& suite,
                    const std::string& method,
                    const EvalProviders& providers,
                    const EvalConfig& config = {},
                    Diagnostics* diagnostics = nullptr);

// Keyed text form:
//   H\tcodegraph-eval\t1\t<method>\t<n_samples>
//   T\t<id>\t<n>\t<c>\t<escaped error or empty>
//   P\t<k>\t<value>
std::string serialize_report(const EvalReport& report);

// Fixed-width table: one row per task plus an "all" aggregate row.
std::string render_report_table(const EvalReport& report);

} // namespace codegraph
