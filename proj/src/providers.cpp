#include "codegraph/providers.hpp"

#include "codegraph/error.hpp"
#include "codegraph/util.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

using nlohmann::json;

namespace codegraph {

// --------------------------------------------------------------------------
// StubEmbedding

StubEmbedding::StubEmbedding(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) fail(ErrorKind::Config, "embedding dimension must be positive");
}

namespace {

Embedding embed_tokens(const std::vector<std::string>& tokens, std::size_t dimension) {
    std::vector<double> buckets(dimension, 0.0);
    for (const auto& token : tokens) buckets[fnv1a64(token) % dimension] += 1.0;
    double norm_sq = 0.0;
    for (double v : buckets) norm_sq += v * v;
    double norm = std::sqrt(norm_sq);
    Embedding out(dimension);
    for (std::size_t i = 0; i < dimension; ++i)
        out[i] = static_cast<float>(buckets[i] / norm);
    return out;
}

} // namespace

Embedding StubEmbedding::embed_one(const std::string& text) const {
    std::vector<std::string> tokens = tokenize(text);
    if (tokens.empty())
        fail(ErrorKind::Precondition, "cannot embed text without tokens");
    return embed_tokens(tokens, dimension_);
}

std::vector<Embedding> StubEmbedding::embed(const std::vector<std::string>& texts) {
    std::vector<Embedding> out(texts.size());
    std::vector<char> empty_flags(texts.size(), 0);
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(texts.size()); ++i) {
        auto idx = static_cast<std::size_t>(i);
        std::vector<std::string> tokens = tokenize(texts[idx]);
        if (tokens.empty()) {
            empty_flags[idx] = 1;
            continue;
        }
        out[idx] = embed_tokens(tokens, dimension_);
    }
    for (std::size_t i = 0; i < texts.size(); ++i)
        if (empty_flags[i])
            fail(ErrorKind::Precondition,
                 "cannot embed text without tokens (input #" + std::to_string(i) + ")");
    return out;
}

// --------------------------------------------------------------------------
// ScriptedChat

ScriptedChat::ScriptedChat(std::vector<ScriptEntry> script) : script_(std::move(script)) {}

namespace {

const std::string& last_user_content(const std::vector<ChatMessage>& messages) {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it)
        if (it->role == "user") return it->content;
    return messages.back().content;
}

} // namespace

ChatResult ScriptedChat::chat(const std::vector<ChatMessage>& messages, const ChatParams&) {
    if (messages.empty()) fail(ErrorKind::Precondition, "chat called with no messages");
    std::lock_guard lock(mutex_);
    if (cursor_ >= script_.size())
        fail(ErrorKind::ScriptMismatch, "scripted chat exhausted after " +
                                            std::to_string(script_.size()) + " replies");
    const ScriptEntry& entry = script_[cursor_];
    const std::string& prompt = last_user_content(messages);
    if (entry.match != "*" && prompt.find(entry.match) == std::string::npos)
        fail(ErrorKind::ScriptMismatch,
             "scripted chat entry " + std::to_string(cursor_) + " expects '" + entry.match +
                 "' which the prompt does not contain");
    ++cursor_;
    return {entry.reply, "stop"};
}

std::size_t ScriptedChat::consumed() const {
    std::lock_guard lock(mutex_);
    return cursor_;
}

std::size_t ScriptedChat::remaining() const {
    std::lock_guard lock(mutex_);
    return script_.size() - cursor_;
}

std::vector<ScriptEntry> load_script(const std::string& path) {
    std::vector<ScriptEntry> script;
    std::string text = read_text_file(path);
    int line_no = 0;
    for (const std::string& line : split_lines(text)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields = split(line, '\t');
        if (fields.size() != 3 || fields[0] != "S")
            fail(ErrorKind::Parse,
                 path + ":" + std::to_string(line_no) + ": expected 'S<TAB>match<TAB>reply'");
        script.push_back({unescape_field(fields[1]), unescape_field(fields[2])});
    }
    return script;
}

// --------------------------------------------------------------------------
// StubSearch and blocklist helpers

std::string url_host(const std::string& url) {
    std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) return "";
    std::size_t begin = scheme + 3;
    std::size_t end = url.find_first_of("/:?#", begin);
    return url.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
}

bool is_blocked(const std::string& url, const std::vector<std::string>& blocklist) {
    std::string host = url_host(url);
    for (const auto& pattern : blocklist)
        if (glob_match(pattern, host)) return true;
    return false;
}

StubSearch::StubSearch(std::vector<SearchResult> pages, std::vector<std::string> blocklist)
    : pages_(std::move(pages)), blocklist_(std::move(blocklist)) {}

std::vector<SearchResult> StubSearch::search(const std::string& query, int top_n) {
    if (query.empty()) fail(ErrorKind::Precondition, "empty search query");
    std::vector<SearchResult> out;
    for (const auto& page : pages_) {
        if (is_blocked(page.url, blocklist_)) continue;
        out.push_back(page);
        if (static_cast<int>(out.size()) >= top_n) break;
    }
    return out;
}

// --------------------------------------------------------------------------
// Remote providers

namespace {

std::string bearer_token(const RemoteEndpoint& endpoint) {
    if (endpoint.api_key_env.empty()) return "";
    const char* value = std::getenv(endpoint.api_key_env.c_str());
    if (!value || !*value)
        fail(ErrorKind::Config,
             "credential environment variable not set: " + endpoint.api_key_env);
    return value;
}

json post_json(const RemoteEndpoint& endpoint, const json& payload) {
    std::string token = bearer_token(endpoint);
    std::string body = payload.dump();
    std::string last_error;
    for (int attempt = 1; attempt <= endpoint.max_attempts; ++attempt) {
        if (attempt > 1) {
            long delay = endpoint.backoff_initial_ms;
            for (int i = 2; i < attempt; ++i) delay *= 2;
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        httplib::Client client(endpoint.base_url);
        client.set_connection_timeout(endpoint.timeout_seconds, 0);
        client.set_read_timeout(endpoint.timeout_seconds, 0);
        client.set_write_timeout(endpoint.timeout_seconds, 0);
        httplib::Headers headers;
        if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
        auto res = client.Post(endpoint.path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            fail(ErrorKind::Provider, "provider rejected request with http status " +
                                          std::to_string(res->status));
        json parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded())
            fail(ErrorKind::Provider, "provider returned unparseable JSON");
        return parsed;
    }
    fail(ErrorKind::Provider, "provider unreachable after " +
                                  std::to_string(endpoint.max_attempts) + " attempts: " +
                                  last_error);
}

} // namespace

RemoteChat::RemoteChat(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

ChatResult RemoteChat::chat(const std::vector<ChatMessage>& messages, const ChatParams& params) {
    if (messages.empty()) fail(ErrorKind::Precondition, "chat called with no messages");
    json payload;
    payload["model"] = endpoint_.model;
    payload["temperature"] = params.temperature;
    if (params.max_output_tokens > 0) payload["max_tokens"] = params.max_output_tokens;
    payload["messages"] = json::array();
    for (const auto& m : messages)
        payload["messages"].push_back({{"role", m.role}, {"content", m.content}});

    json reply = post_json(endpoint_, payload);
    if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty())
        fail(ErrorKind::Provider, "chat response has no choices");
    const json& choice = reply["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string())
        fail(ErrorKind::Provider, "chat response has no message content");
    ChatResult result;
    result.text = choice["message"]["content"].get<std::string>();
    result.finish_reason = choice.value("finish_reason", "stop");
    return result;
}

RemoteEmbedding::RemoteEmbedding(RemoteEndpoint endpoint, std::size_t dimension)
    : endpoint_(std::move(endpoint)), dimension_(dimension) {
    if (dimension_ == 0) fail(ErrorKind::Config, "embedding dimension must be positive");
}

std::vector<Embedding> RemoteEmbedding::embed(const std::vector<std::string>& texts) {
    for (const auto& t : texts)
        if (tokenize(t).empty())
            fail(ErrorKind::Precondition, "cannot embed text without tokens");
    json payload;
    payload["model"] = endpoint_.model;
    payload["input"] = texts;
    json reply = post_json(endpoint_, payload);
    if (!reply.contains("data") || !reply["data"].is_array() ||
        reply["data"].size() != texts.size())
        fail(ErrorKind::Provider, "embedding response size mismatch");
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& item : reply["data"]) {
        if (!item.contains("embedding") || !item["embedding"].is_array())
            fail(ErrorKind::Provider, "embedding response item malformed");
        Embedding v;
        v.reserve(item["embedding"].size());
        for (const auto& x : item["embedding"]) v.push_back(x.get<float>());
        if (v.size() != dimension_)
            fail(ErrorKind::Provider, "embedding dimension " + std::to_string(v.size()) +
                                          " does not match configured " +
                                          std::to_string(dimension_));
        double norm_sq = 0.0;
        for (float x : v) norm_sq += static_cast<double>(x) * static_cast<double>(x);
        double norm = std::sqrt(norm_sq);
        if (norm <= 0.0) fail(ErrorKind::Provider, "embedding response has zero vector");
        for (float& x : v) x = static_cast<float>(x / norm);
        out.push_back(std::move(v));
    }
    return out;
}

RemoteSearch::RemoteSearch(RemoteEndpoint endpoint, std::vector<std::string> blocklist)
    : endpoint_(std::move(endpoint)), blocklist_(std::move(blocklist)) {}

std::vector<SearchResult> RemoteSearch::search(const std::string& query, int top_n) {
    if (query.empty()) fail(ErrorKind::Precondition, "empty search query");
    json payload;
    payload["query"] = query;
    payload["top_n"] = top_n;
    json reply = post_json(endpoint_, payload);
    if (!reply.contains("results") || !reply["results"].is_array())
        fail(ErrorKind::Provider, "search response has no results array");
    std::vector<SearchResult> out;
    for (const auto& item : reply["results"]) {
        SearchResult r;
        r.url = item.value("url", "");
        r.title = item.value("title", "");
        r.content = item.value("content", "");
        if (is_blocked(r.url, blocklist_)) continue;
        out.push_back(std::move(r));
        if (static_cast<int>(out.size()) >= top_n) break;
    }
    return out;
}

} // namespace codegraph
