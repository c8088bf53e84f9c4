#pragma once
// Cosine similarity and the thresholded pair search shared by both graph
// builders. The pair search has an OpenMP kernel and a serial reference twin;
// they must produce identical output (the benchmark and tests compare them).

#include <cstddef>
#include <vector>

namespace codegraph {

using Embedding = std::vector<float>;

// Dot product accumulated in double and clamped to [-1, 1]. Inputs are
// expected to be unit vectors (the providers guarantee it).
// Throws Error{Config} on dimension mismatch.
double cosine(const Embedding& u, const Embedding& v);

// Mutually kept similar pair; a < b are indexes into the input vector.
struct SimilarPair {
    std::size_t a = 0;
    std::size_t b = 0;
    double score = 0.0;

    bool operator==(const SimilarPair&) const = default;
};

// All unordered pairs with cosine >= epsilon, then per-element truncation to
// the `cap` best partners (ranked by score descending, partner index
// ascending); a pair survives only if each endpoint keeps the other.
// Callers pass embeddings in id-ascending order so index order == id order.
// Output sorted by (a, b). cap = 0 removes every pair.
std::vector<SimilarPair> find_similar_pairs(const std::vector<Embedding>& embeddings,
                                            double epsilon, std::size_t cap);

// Single-threaded reference implementation used as the test oracle.
std::vector<SimilarPair> find_similar_pairs_serial(const std::vector<Embedding>& embeddings,
                                                   double epsilon, std::size_t cap);

} // namespace codegraph
