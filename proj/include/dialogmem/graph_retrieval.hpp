#pragma once

#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dialogmem/backend.hpp"
#include "dialogmem/core.hpp"
#include "dialogmem/graph_index.hpp"

namespace dialogmem {

struct ActivationSet {
    std::vector<std::string> seed_node_ids;  // sorted by seed score descending
    std::unordered_map<std::string, double> seed_scores;
    std::vector<std::string> expanded_node_ids;  // disjoint from seeds
    std::unordered_map<std::string, double> expanded_scores;
    EmbeddingVector query_embedding;  // carried so expansion/ranking reuse it
};

/// The (Score_e, Score_g, Score_s) tuple ordering candidate values.
struct RankScore {
    double score_e = 0.0;           // best query-node cosine over candidate keys
    int score_g = 0;                // number of candidate keys mapping to the value
    std::optional<double> score_s;  // query-session cosine (score_s mode only)
};

struct RankedValue {
    ValueRef ref;
    RankScore score;
};

/// Resolves a session id to its user text (for Score_s); nullopt when the
/// session is unknown.
using SessionTextFn = std::function<std::optional<std::string>(const std::string&)>;

/// Initial activation. entity mode: cosine top-k over node embeddings.
/// triple mode: top-k over edge triple embeddings, seeds = endpoints of the
/// selected edges (deduplicated, then ordered by their own node score).
ActivationSet activate(const MemoryGraph& graph, const EmbeddingVector& query, int k,
                       ActivationMode mode);

/// Adds unseeded neighbors ordered by (max incident edge strength desc,
/// query cosine desc, node id asc), truncated to budget.
ActivationSet expand_one_hop(const MemoryGraph& graph, ActivationSet activation, int budget);

/// Ranks candidate values (sessions or the candidate nodes themselves)
/// under the configured mode; final ties break by first-seen order.
/// session_text/gateway are needed only in score_s mode.
std::vector<RankedValue> rank_values(const MemoryGraph& graph, const ActivationSet& activation,
                                     int n_values, RerankMode mode, ValueKind value_kind,
                                     BackendGateway* gateway = nullptr,
                                     const SessionTextFn& session_text = nullptr);

struct RetrievalTrace {
    ActivationSet activation;
    std::vector<RankedValue> ranked;
};

/// activate -> optional one-hop expansion -> rank; a pure function of
/// (graph, query, config).
std::vector<ValueRef> retrieve(const MemoryGraph& graph, const MemQuery& query,
                               const PipelineConfig& config, BackendGateway& gateway,
                               const SessionTextFn& session_text = nullptr,
                               RetrievalTrace* trace = nullptr);

}  // namespace dialogmem
