#pragma once
// CLI configuration: a single text file of `key = value` lines ('#' comments,
// blank lines allowed). Every field has a documented default below; command
// line --set overrides go through the same set_config_value path.

#include <string>
#include <vector>

namespace codegraph {

struct Config {
    // Providers. Chat: "none" | "scripted" | "remote". Embedding and search:
    // "stub" | "remote". Remote credentials come from the environment variable
    // named by api_key_env; its value is read at request time and never
    // appears in logs, transcripts, or reports.
    std::string chat_provider = "none";
    std::string chat_script;      // scripted: path to an S-record script file
    std::string chat_endpoint;    // remote: base URL
    std::string chat_model;
    std::string embedding_provider = "stub";
    std::string embedding_endpoint;
    std::string embedding_model;
    int embedding_dimension = 256;
    std::string search_provider = "stub";
    std::string search_endpoint;
    std::string api_key_env = "CODEGRAPH_API_KEY";

    // Graph construction.
    double epsilon = 0.8; // similar-edge threshold, both graphs
    int similar_cap = 5;  // similar edges kept per node
    std::string language = "python";

    // Agent loop.
    int retrieval_budget = 10; // K: retrieved blocks kept in the prompt
    int candidates = 20;       // M: RGRetrieval cosine prefilter size
    int hop_ceiling = 3;
    int max_tool_calls = 10;
    int repair_rounds = 2;
    int context_budget = 48000; // characters
    int max_output_tokens = 2000;
    std::string grammar = "react";

    // Web search and code testing.
    int web_top_n = 3;
    int web_summary_budget = 4000;
    std::string formatter_command; // empty: no formatter
    int formatter_timeout_seconds = 20;
    int test_timeout_seconds = 120;
    std::vector<std::string> blocklist; // comma-separated host globs

    // Evaluation.
    int n_samples = 1;
    std::vector<int> k_list = {1}; // comma-separated; each k in [1, n_samples]
    int workers = 1;
};

// Parses `key = value` lines; unknown keys and malformed values raise
// Error{Config}. Does not validate ranges; load_config does.
Config parse_config(const std::string& text, const std::string& origin = "<config>");

// Reads, parses, and validates. Missing file raises Error{Io}.
Config load_config(const std::string& path);

// Applies one key/value pair (file line or --set flag).
void set_config_value(Config& config, const std::string& key, const std::string& value);

// Range and consistency checks; raises Error{Config} on the first violation.
void validate_config(const Config& config);

} // namespace codegraph
