#pragma once
// Provider contracts: embeddings, chat completions, and web search. Each has a
// deterministic offline stub and an HTTP implementation speaking the common
// OpenAI-style JSON shapes. Stubs are the default; remote mode is opt-in via
// configuration.

#include "codegraph/similarity.hpp"

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace codegraph {

struct ChatMessage {
    std::string role; // "system" | "user" | "assistant"
    std::string content;
};

struct ChatParams {
    double temperature = 0.0;
    int max_output_tokens = 500;
};

struct ChatResult {
    std::string text;
    std::string finish_reason; // "stop" unless the backend says otherwise
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t dimension() const = 0;

    // One unit-norm vector per input text. Throws Error{Precondition} when a
    // text has no tokens, Error{Provider} on transport failure after retries.
    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;

    // messages non-empty, first message is the system prompt.
    // Throws Error{Precondition} on empty input, Error{ScriptMismatch} when the
    // scripted stub has no reply, Error{Provider} on transport failure.
    virtual ChatResult chat(const std::vector<ChatMessage>& messages,
                            const ChatParams& params) = 0;
};

struct SearchResult {
    std::string url;
    std::string title;
    std::string content; // page text

    bool operator==(const SearchResult&) const = default;
};

class SearchBackend {
public:
    virtual ~SearchBackend() = default;

    // Blocklisted domains are filtered before returning; callers never see
    // blocked results. Throws Error{Provider} on transport failure.
    virtual std::vector<SearchResult> search(const std::string& query, int top_n) = 0;
};

// ---------------------------------------------------------------------------
// Stubs

// Feature-hashes the token multiset of each text into `dimension` buckets and
// L2-normalizes. Pure function of the text; token order never matters.
class StubEmbedding final : public EmbeddingProvider {
public:
    explicit StubEmbedding(std::size_t dimension = 256);

    std::size_t dimension() const override { return dimension_; }
    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;

    // Single-text serial path; the batch overload parallelizes over this.
    Embedding embed_one(const std::string& text) const;

private:
    std::size_t dimension_;
};

// One scripted reply per expected call, consumed strictly in order.
struct ScriptEntry {
    std::string match; // "*" matches anything, otherwise substring of the last user message
    std::string reply;
};

class ScriptedChat final : public ChatProvider {
public:
    explicit ScriptedChat(std::vector<ScriptEntry> script);

    // Matches only the current entry: consumed on match, untouched (and
    // Error{ScriptMismatch}) otherwise, so callers with a fallback rule can
    // retry the same entry with their next prompt.
    ChatResult chat(const std::vector<ChatMessage>& messages, const ChatParams& params) override;

    std::size_t consumed() const;
    std::size_t remaining() const;

private:
    std::vector<ScriptEntry> script_;
    std::size_t cursor_ = 0;
    mutable std::mutex mutex_;
};

// Script files: one `S<TAB>match<TAB>reply` line per entry, fields escaped.
std::vector<ScriptEntry> load_script(const std::string& path);

// Serves a fixed result list (query-independent), minus blocklisted domains.
class StubSearch final : public SearchBackend {
public:
    StubSearch(std::vector<SearchResult> pages, std::vector<std::string> blocklist);

    std::vector<SearchResult> search(const std::string& query, int top_n) override;

private:
    std::vector<SearchResult> pages_;
    std::vector<std::string> blocklist_;
};

// Host part of a URL ("" when unparseable); used for blocklist matching.
std::string url_host(const std::string& url);

// True when the url's host matches any blocklist glob.
bool is_blocked(const std::string& url, const std::vector<std::string>& blocklist);

// ---------------------------------------------------------------------------
// Remote (HTTP)

struct RemoteEndpoint {
    std::string base_url;             // e.g. http://127.0.0.1:8089
    std::string path;                 // e.g. /v1/chat/completions
    std::string model;                // model name sent in the payload
    std::string api_key_env;          // env var holding the bearer token; empty = none
    int timeout_seconds = 60;
    int max_attempts = 3;             // total attempts; exponential backoff between
    int backoff_initial_ms = 500;
};

class RemoteChat final : public ChatProvider {
public:
    explicit RemoteChat(RemoteEndpoint endpoint);
    ChatResult chat(const std::vector<ChatMessage>& messages, const ChatParams& params) override;

private:
    RemoteEndpoint endpoint_;
};

class RemoteEmbedding final : public EmbeddingProvider {
public:
    RemoteEmbedding(RemoteEndpoint endpoint, std::size_t dimension);
    std::size_t dimension() const override { return dimension_; }
    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;

private:
    RemoteEndpoint endpoint_;
    std::size_t dimension_;
};

// POST {"query": ..., "top_n": ...} -> {"results": [{url,title,content}]}
class RemoteSearch final : public SearchBackend {
public:
    RemoteSearch(RemoteEndpoint endpoint, std::vector<std::string> blocklist);
    std::vector<SearchResult> search(const std::string& query, int top_n) override;

private:
    RemoteEndpoint endpoint_;
    std::vector<std::string> blocklist_;
};

} // namespace codegraph
