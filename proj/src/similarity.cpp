#include "codegraph/similarity.hpp"

#include "codegraph/error.hpp"

#include <algorithm>

namespace codegraph {

double cosine(const Embedding& u, const Embedding& v) {
    if (u.size() != v.size())
        fail(ErrorKind::Config, "embedding dimension mismatch: " + std::to_string(u.size()) +
                                    " vs " + std::to_string(v.size()));
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        dot += static_cast<double>(u[i]) * static_cast<double>(v[i]);
    return std::clamp(dot, -1.0, 1.0);
}

namespace {

struct Candidate {
    std::size_t partner;
    double score;
};

// Shared tail: rank each element's candidates, truncate to cap, keep pairs
// both endpoints agreed on. Pure function of the candidate rows.
std::vector<SimilarPair> select_mutual(std::vector<std::vector<Candidate>> rows,
                                       std::size_t cap) {
    const std::size_t n = rows.size();
    std::vector<std::vector<std::size_t>> kept(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& row = rows[i];
        std::sort(row.begin(), row.end(), [](const Candidate& x, const Candidate& y) {
            if (x.score != y.score) return x.score > y.score;
            return x.partner < y.partner;
        });
        if (row.size() > cap) row.resize(cap);
        for (const Candidate& c : row) kept[i].push_back(c.partner);
        std::sort(kept[i].begin(), kept[i].end());
    }
    std::vector<SimilarPair> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        for (const Candidate& c : rows[i]) {
            if (c.partner < i) continue; // emit each unordered pair once, from its low end
            if (std::binary_search(kept[c.partner].begin(), kept[c.partner].end(), i))
                pairs.push_back({i, c.partner, c.score});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const SimilarPair& x, const SimilarPair& y) {
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });
    return pairs;
}

std::vector<std::vector<Candidate>> candidate_rows(const std::vector<Embedding>& embeddings,
                                                   double epsilon, bool parallel) {
    const std::size_t n = embeddings.size();
    // upper-triangle scores; row i holds scores against j > i
    std::vector<std::vector<double>> upper(n);
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long i = 0; i < static_cast<long>(n); ++i) {
            auto& row = upper[static_cast<std::size_t>(i)];
            row.resize(n - static_cast<std::size_t>(i) - 1);
            for (std::size_t j = static_cast<std::size_t>(i) + 1; j < n; ++j)
                row[j - static_cast<std::size_t>(i) - 1] =
                    cosine(embeddings[static_cast<std::size_t>(i)], embeddings[j]);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            upper[i].resize(n - i - 1);
            for (std::size_t j = i + 1; j < n; ++j)
                upper[i][j - i - 1] = cosine(embeddings[i], embeddings[j]);
        }
    }
    std::vector<std::vector<Candidate>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double score = upper[i][j - i - 1];
            if (score >= epsilon) {
                rows[i].push_back({j, score});
                rows[j].push_back({i, score});
            }
        }
    }
    return rows;
}

std::vector<SimilarPair> find_pairs(const std::vector<Embedding>& embeddings, double epsilon,
                                    std::size_t cap, bool parallel) {
    if (epsilon < 0.0 || epsilon > 1.0)
        fail(ErrorKind::Config, "epsilon out of [0,1]: " + std::to_string(epsilon));
    if (embeddings.size() < 2 || cap == 0) return {};
    // dimensions must agree before entering the parallel region: cosine must
    // not throw from inside an omp loop
    for (const Embedding& e : embeddings)
        if (e.size() != embeddings.front().size())
            fail(ErrorKind::Config, "embedding dimension mismatch in batch");
    return select_mutual(candidate_rows(embeddings, epsilon, parallel), cap);
}

} // namespace

std::vector<SimilarPair> find_similar_pairs(const std::vector<Embedding>& embeddings,
                                            double epsilon, std::size_t cap) {
    return find_pairs(embeddings, epsilon, cap, true);
}

std::vector<SimilarPair> find_similar_pairs_serial(const std::vector<Embedding>& embeddings,
                                                   double epsilon, std::size_t cap) {
    return find_pairs(embeddings, epsilon, cap, false);
}

} // namespace codegraph
