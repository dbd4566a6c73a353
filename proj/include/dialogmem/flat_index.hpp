#pragma once

#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "dialogmem/backend.hpp"
#include "dialogmem/core.hpp"

namespace dialogmem {

struct ScoredKey {
    std::string key_id;
    double score = 0.0;
};

class FlatIndex;
struct LoadedFlatIndex;

struct SessionScore {
    std::string session_id;
    std::map<KeyKind, double> per_type_scores;
    double final_score = 0.0;  // arithmetic mean over present types
};

/// Exact-cosine flat vector index over KeyUnits with a key->value map.
/// Build is single-writer; searches are read-only and freely concurrent
/// after the index is frozen.
class FlatIndex {
public:
    FlatIndex(KeyStrategy strategy, int dimension);

    KeyStrategy strategy() const { return strategy_; }
    int dimension() const { return dimension_; }
    size_t size() const { return keys_.size(); }

    /// Inserts a key, assigning created_at and registering its value
    /// mapping. Session-valued keys map to every provenance session.
    const KeyUnit& add_key(KeyUnit key);

    const KeyUnit* find_key(const std::string& key_id) const;
    const std::vector<KeyUnit>& keys() const { return keys_; }

    /// Replaces the text/embedding of an existing key (update operation).
    /// key_id and created_at are preserved; provenance grows.
    void update_key(const std::string& key_id, std::string new_text, EmbeddingVector embedding,
                    const std::string& provenance_session_id);

    void remove_key(const std::string& key_id);

    /// Exact cosine top-k, descending; ties broken by ascending created_at,
    /// then key_id. Flagged degenerate keys are excluded. k <= 0 is an
    /// input error; an empty index returns an empty list.
    std::vector<ScoredKey> search(const EmbeddingVector& query, int k) const;

    /// Like search but restricted to keys matching `predicate`.
    std::vector<ScoredKey> search_filtered(
        const EmbeddingVector& query, int k,
        const std::function<bool(const KeyUnit&)>& predicate) const;

    /// Per-session mean cosine over each present key type, ranked
    /// descending. Missing types are excluded from the mean.
    std::vector<SessionScore> score_sessions_merge_by_type(const EmbeddingVector& query,
                                                           int k_sessions) const;

    /// Maps ranked keys onto values: ordered by best contributing key
    /// score, duplicates collapsed keeping the best, truncated to n_values.
    /// value_kind key returns the keys themselves.
    std::vector<ValueRef> map_to_values(const std::vector<ScoredKey>& ranked_keys, int n_values,
                                        ValueKind value_kind) const;

    struct ScoredValue {
        ValueRef ref;
        double score = 0.0;
    };
    std::vector<ScoredValue> map_to_values_scored(const std::vector<ScoredKey>& ranked_keys,
                                                  int n_values, ValueKind value_kind) const;

    /// The key->value mapping: a key's values are its provenance sessions.
    const std::vector<std::string>& values_of(const std::string& key_id) const;

    // ---- persistence (bit-exact across platforms) ----
    // Directory layout: metadata.json, keys.jsonl, embeddings.f32.
    void save(const std::string& directory, const EmbedderSpec& embedder) const;

    static constexpr const char* kFactJoin = "\n";
    static constexpr const char* kKeywordJoin = "; ";

private:
    friend LoadedFlatIndex load_flat_index(const std::string& directory);

    KeyStrategy strategy_;
    int dimension_;
    uint64_t next_created_at_ = 0;
    std::vector<KeyUnit> keys_;
    std::unordered_map<std::string, size_t> by_id_;
};

struct LoadedFlatIndex {
    FlatIndex index;
    EmbedderSpec embedder;
};

LoadedFlatIndex load_flat_index(const std::string& directory);

/// Builds the keys one session contributes under a strategy. An empty
/// extraction under a derived-keys strategy yields only the session key
/// (when the strategy includes one) or no keys at all.
std::vector<KeyUnit> build_keys(const Session& session, const FlatExtraction& extraction,
                                KeyStrategy strategy, BackendGateway& gateway);

}  // namespace dialogmem
