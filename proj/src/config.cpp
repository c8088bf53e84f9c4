#include "codegraph/config.hpp"

#include "codegraph/error.hpp"
#include "codegraph/util.hpp"

#include <charconv>

namespace codegraph {

namespace {

int parse_int_value(const std::string& key, const std::string& value) {
    int parsed = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), parsed);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
        fail(ErrorKind::Config, "config key '" + key + "' expects an integer, got '" + value + "'");
    return parsed;
}

double parse_double_value(const std::string& key, const std::string& value) {
    try {
        return parse_double(value);
    } catch (const Error&) {
        fail(ErrorKind::Config, "config key '" + key + "' expects a number, got '" + value + "'");
    }
}

std::vector<std::string> parse_list(const std::string& value) {
    std::vector<std::string> items;
    for (const std::string& item : split(value, ',')) {
        const std::string trimmed = trim(item);
        if (!trimmed.empty())
            items.push_back(trimmed);
    }
    return items;
}

void require_one_of(const std::string& key, const std::string& value,
                    const std::vector<std::string>& allowed) {
    for (const std::string& candidate : allowed)
        if (value == candidate)
            return;
    fail(ErrorKind::Config, "config key '" + key + "' must be one of " + join(allowed, "|") +
                                ", got '" + value + "'");
}

} // namespace

void set_config_value(Config& config, const std::string& key, const std::string& value) {
    if (key == "chat_provider")
        config.chat_provider = value;
    else if (key == "chat_script")
        config.chat_script = value;
    else if (key == "chat_endpoint")
        config.chat_endpoint = value;
    else if (key == "chat_model")
        config.chat_model = value;
    else if (key == "embedding_provider")
        config.embedding_provider = value;
    else if (key == "embedding_endpoint")
        config.embedding_endpoint = value;
    else if (key == "embedding_model")
        config.embedding_model = value;
    else if (key == "embedding_dimension")
        config.embedding_dimension = parse_int_value(key, value);
    else if (key == "search_provider")
        config.search_provider = value;
    else if (key == "search_endpoint")
        config.search_endpoint = value;
    else if (key == "api_key_env")
        config.api_key_env = value;
    else if (key == "epsilon")
        config.epsilon = parse_double_value(key, value);
    else if (key == "similar_cap")
        config.similar_cap = parse_int_value(key, value);
    else if (key == "language")
        config.language = value;
    else if (key == "retrieval_budget")
        config.retrieval_budget = parse_int_value(key, value);
    else if (key == "candidates")
        config.candidates = parse_int_value(key, value);
    else if (key == "hop_ceiling")
        config.hop_ceiling = parse_int_value(key, value);
    else if (key == "max_tool_calls")
        config.max_tool_calls = parse_int_value(key, value);
    else if (key == "repair_rounds")
        config.repair_rounds = parse_int_value(key, value);
    else if (key == "context_budget")
        config.context_budget = parse_int_value(key, value);
    else if (key == "max_output_tokens")
        config.max_output_tokens = parse_int_value(key, value);
    else if (key == "grammar")
        config.grammar = value;
    else if (key == "web_top_n")
        config.web_top_n = parse_int_value(key, value);
    else if (key == "web_summary_budget")
        config.web_summary_budget = parse_int_value(key, value);
    else if (key == "formatter_command")
        config.formatter_command = value;
    else if (key == "formatter_timeout_seconds")
        config.formatter_timeout_seconds = parse_int_value(key, value);
    else if (key == "test_timeout_seconds")
        config.test_timeout_seconds = parse_int_value(key, value);
    else if (key == "blocklist")
        config.blocklist = parse_list(value);
    else if (key == "n_samples")
        config.n_samples = parse_int_value(key, value);
    else if (key == "k_list") {
        config.k_list.clear();
        for (const std::string& item : parse_list(value))
            config.k_list.push_back(parse_int_value(key, item));
    } else if (key == "workers")
        config.workers = parse_int_value(key, value);
    else
        fail(ErrorKind::Config, "unknown config key '" + key + "'");
}

Config parse_config(const std::string& text, const std::string& origin) {
    Config config;
    const std::vector<std::string> lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        if (line.empty() || line[0] == '#')
            continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::Config,
                 origin + ":" + std::to_string(i + 1) + ": expected 'key = value'");
        set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

Config load_config(const std::string& path) {
    Config config = parse_config(read_text_file(path), path);
    validate_config(config);
    return config;
}

void validate_config(const Config& config) {
    require_one_of("chat_provider", config.chat_provider, {"none", "scripted", "remote"});
    if (config.chat_provider == "scripted" && config.chat_script.empty())
        fail(ErrorKind::Config, "chat_provider = scripted requires chat_script");
    if (config.chat_provider == "remote" && config.chat_endpoint.empty())
        fail(ErrorKind::Config, "chat_provider = remote requires chat_endpoint");
    require_one_of("embedding_provider", config.embedding_provider, {"stub", "remote"});
    if (config.embedding_provider == "remote" && config.embedding_endpoint.empty())
        fail(ErrorKind::Config, "embedding_provider = remote requires embedding_endpoint");
    require_one_of("search_provider", config.search_provider, {"stub", "remote"});
    if (config.search_provider == "remote" && config.search_endpoint.empty())
        fail(ErrorKind::Config, "search_provider = remote requires search_endpoint");
    if (config.embedding_dimension < 1)
        fail(ErrorKind::Config, "embedding_dimension must be >= 1");
    if (config.epsilon < 0.0 || config.epsilon > 1.0)
        fail(ErrorKind::Config, "epsilon must lie in [0, 1]");
    if (config.similar_cap < 0)
        fail(ErrorKind::Config, "similar_cap must be >= 0");
    require_one_of("language", config.language, {"python"});
    if (config.retrieval_budget < 1)
        fail(ErrorKind::Config, "retrieval_budget must be >= 1");
    if (config.candidates < 1)
        fail(ErrorKind::Config, "candidates must be >= 1");
    if (config.hop_ceiling < 1)
        fail(ErrorKind::Config, "hop_ceiling must be >= 1");
    if (config.max_tool_calls < 0)
        fail(ErrorKind::Config, "max_tool_calls must be >= 0");
    if (config.repair_rounds < 0)
        fail(ErrorKind::Config, "repair_rounds must be >= 0");
    if (config.context_budget < 1)
        fail(ErrorKind::Config, "context_budget must be >= 1");
    if (config.max_output_tokens < 1)
        fail(ErrorKind::Config, "max_output_tokens must be >= 1");
    require_one_of("grammar", config.grammar, {"react"});
    if (config.web_top_n < 1)
        fail(ErrorKind::Config, "web_top_n must be >= 1");
    if (config.web_summary_budget < 1)
        fail(ErrorKind::Config, "web_summary_budget must be >= 1");
    if (config.formatter_timeout_seconds < 1)
        fail(ErrorKind::Config, "formatter_timeout_seconds must be >= 1");
    if (config.test_timeout_seconds < 1)
        fail(ErrorKind::Config, "test_timeout_seconds must be >= 1");
    if (config.n_samples < 1)
        fail(ErrorKind::Config, "n_samples must be >= 1");
    if (config.k_list.empty())
        fail(ErrorKind::Config, "k_list must not be empty");
    for (int k : config.k_list)
        if (k < 1 || k > config.n_samples)
            fail(ErrorKind::Config, "every k in k_list must satisfy 1 <= k <= n_samples");
    if (config.workers < 1)
        fail(ErrorKind::Config, "workers must be >= 1");
}

} // namespace codegraph
