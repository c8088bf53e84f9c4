#pragma once
// Small shared helpers: hashing, tokenization, text escaping, deterministic
// number formatting, file IO. Everything here is pure except the file IO.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace codegraph {

// FNV-1a 64-bit. Used for snapshot hashes and the stub embedder's buckets.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 14695981039346656037ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t value);

// Lowercase alphanumeric runs; the shared tokenizer for BM25 and the stub
// embedder (queries and corpus must agree on it).
std::vector<std::string> tokenize(std::string_view text);

// Escapes \t, \n, \r and backslash so multi-line text fits a one-line record.
std::string escape_field(std::string_view text);
std::string unescape_field(std::string_view text);

// Shortest round-trip decimal rendering (std::to_chars). Identical doubles
// always render identically, so serialized graphs are byte-stable.
std::string format_double(double value);
double parse_double(std::string_view text); // throws Error{Parse} on garbage

std::vector<std::string> split(std::string_view text, char separator);
std::string join(const std::vector<std::string>& parts, std::string_view separator);
std::string trim(std::string_view text);

// Replaces invalid UTF-8 sequences with U+FFFD.
std::string sanitize_utf8(std::string_view bytes);

// Reads a whole file as sanitized UTF-8 text. Throws Error{Io} when absent.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

// Splits text into lines; a trailing newline does not create an empty line.
std::vector<std::string> split_lines(std::string_view text);

// Shell-style glob match with '*', '?' and '**' (matches across '/').
bool glob_match(std::string_view pattern, std::string_view path);

// Warning sink threaded through builders; counters hold debug tallies such as
// unresolved call sites.
struct Diagnostics {
    std::vector<std::string> warnings;
    std::map<std::string, long> counters;

    void warn(std::string message) { warnings.push_back(std::move(message)); }
    void count(const std::string& key, long delta = 1) { counters[key] += delta; }
};

} // namespace codegraph
