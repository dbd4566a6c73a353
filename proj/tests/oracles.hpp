#pragma once

// Test-only oracles. Each reimplements its target independently of the
// library's retrieval/metric path so agreement is meaningful.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dialogmem/backend.hpp"
#include "dialogmem/util.hpp"

namespace oracles {

struct OracleKey {
    std::string id;
    std::vector<float> vec;
    uint64_t created_at = 0;
    bool flagged = false;
};

struct OracleHit {
    std::string id;
    double score;
};

// Full sort over all keys with the tie rules (score desc, created_at asc,
// id asc); flagged keys excluded.
inline std::vector<OracleHit> brute_force_top_k(const std::vector<OracleKey>& keys,
                                                const std::vector<float>& query, int k) {
    struct Row {
        const OracleKey* key;
        double score;
    };
    std::vector<Row> rows;
    for (const auto& key : keys) {
        if (key.flagged) continue;
        double dot = 0.0;
        for (size_t i = 0; i < query.size(); ++i) dot += double(query[i]) * double(key.vec[i]);
        rows.push_back({&key, dot});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.key->created_at != b.key->created_at) return a.key->created_at < b.key->created_at;
        return a.key->id < b.key->id;
    });
    if (rows.size() > size_t(k)) rows.resize(size_t(k));
    std::vector<OracleHit> out;
    for (const auto& row : rows) out.push_back({row.key->id, row.score});
    return out;
}

// Cosine over hashed token multisets: accumulates signed counts per bucket
// in a sparse map instead of a dense vector. Components are quantized to
// float32 after normalization because that is the storage precision of the
// artifact's embeddings.
inline double hashed_multiset_cosine(const std::string& a, const std::string& b, int dimension) {
    auto buckets_of = [&](const std::string& text) {
        std::map<size_t, double> buckets;
        for (const auto& token : dialogmem::tokenize(text)) {
            auto [bucket, sign] = dialogmem::HashEmbedder::token_slot(token, dimension);
            buckets[bucket] += double(sign);
        }
        double norm_sq = 0.0;
        for (const auto& [bucket, weight] : buckets) norm_sq += weight * weight;
        if (norm_sq > 0.0) {
            double inv = 1.0 / std::sqrt(norm_sq);
            for (auto& [bucket, weight] : buckets) {
                weight = double(float(weight * inv));
            }
        }
        return buckets;
    };
    auto ba = buckets_of(a);
    auto bb = buckets_of(b);
    if (ba.empty() || bb.empty()) return 0.0;
    double dot = 0.0;
    for (const auto& [bucket, weight] : ba) {
        auto it = bb.find(bucket);
        if (it != bb.end()) dot += weight * it->second;
    }
    return dot;
}

// Set-intersection recall.
inline double oracle_recall(const std::vector<std::string>& retrieved,
                            const std::set<std::string>& gt, int k) {
    std::set<std::string> top;
    for (int i = 0; i < k && i < int(retrieved.size()); ++i) top.insert(retrieved[size_t(i)]);
    size_t hits = 0;
    for (const auto& id : gt) {
        if (top.count(id)) ++hits;
    }
    return double(hits) / double(gt.size());
}

// DCG with binary gains computed positionally, normalized by the ideal
// prefix sum.
inline double oracle_ndcg(const std::vector<std::string>& retrieved,
                          const std::set<std::string>& gt, int k) {
    double dcg = 0.0;
    std::set<std::string> seen;
    for (int i = 0; i < k && i < int(retrieved.size()); ++i) {
        const auto& id = retrieved[size_t(i)];
        if (gt.count(id) && seen.insert(id).second) {
            dcg += 1.0 / std::log2(i + 2.0);
        }
    }
    double ideal = 0.0;
    int ideal_hits = std::min<int>(k, int(gt.size()));
    for (int i = 0; i < ideal_hits; ++i) ideal += 1.0 / std::log2(i + 2.0);
    return ideal == 0.0 ? 0.0 : dcg / ideal;
}

inline std::vector<float> random_unit_vector(std::mt19937& rng, int dimension) {
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    std::vector<float> v(static_cast<size_t>(dimension), 0.0f);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& x : v) {
            x = gauss(rng);
            norm += double(x) * double(x);
        }
    } while (norm == 0.0);
    float inv = float(1.0 / std::sqrt(norm));
    for (auto& x : v) x *= inv;
    return v;
}

inline std::string random_token_text(std::mt19937& rng, int min_tokens, int max_tokens) {
    static const char* kWords[] = {"alpha", "bravo", "charlie", "delta",  "echo",  "foxtrot",
                                   "golf",  "hotel", "india",   "juliet", "kilo",  "lima",
                                   "mike",  "nov",   "oscar",   "papa",   "quebec", "romeo"};
    std::uniform_int_distribution<int> count(min_tokens, max_tokens);
    std::uniform_int_distribution<size_t> pick(0, std::size(kWords) - 1);
    int n = count(rng);
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += " ";
        out += kWords[pick(rng)];
    }
    return out;
}

}  // namespace oracles
