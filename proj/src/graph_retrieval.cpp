#include "dialogmem/graph_retrieval.hpp"

#include <algorithm>
#include <unordered_set>

namespace dialogmem {

namespace {

struct ScoredNode {
    const GraphNode* node;
    double score;
};

bool node_ranks_before(const ScoredNode& a, const ScoredNode& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.node->created_at != b.node->created_at) return a.node->created_at < b.node->created_at;
    return a.node->node_id < b.node->node_id;
}

}  // namespace

ActivationSet activate(const MemoryGraph& graph, const EmbeddingVector& query, int k,
                       ActivationMode mode) {
    if (k <= 0) throw Error(ErrorCode::invalid_argument, "activate: k must be positive");
    ActivationSet activation;
    activation.query_embedding = query;
    if (graph.node_count() == 0) return activation;

    auto node_score = [&](const GraphNode& node) { return query.dot(node.embedding); };

    std::vector<ScoredNode> seeds;
    if (mode == ActivationMode::entity) {
        for (const auto& node : graph.nodes()) {
            if (node.embedding.flagged()) continue;
            seeds.push_back({&node, node_score(node)});
        }
        std::sort(seeds.begin(), seeds.end(), node_ranks_before);
        if (seeds.size() > size_t(k)) seeds.resize(size_t(k));
    } else {
        struct ScoredEdge {
            const GraphEdge* edge;
            double score;
        };
        std::vector<ScoredEdge> edges;
        for (const auto& edge : graph.edges()) {
            if (edge.embedding.flagged()) continue;
            edges.push_back({&edge, query.dot(edge.embedding)});
        }
        std::sort(edges.begin(), edges.end(), [](const ScoredEdge& a, const ScoredEdge& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.edge->created_at != b.edge->created_at) {
                return a.edge->created_at < b.edge->created_at;
            }
            return a.edge->edge_id < b.edge->edge_id;
        });
        if (edges.size() > size_t(k)) edges.resize(size_t(k));
        std::unordered_set<std::string> seen;
        for (const auto& scored : edges) {
            for (const auto* endpoint : {&scored.edge->src, &scored.edge->dst}) {
                if (!seen.insert(*endpoint).second) continue;
                const GraphNode* node = graph.find_node(*endpoint);
                if (node) seeds.push_back({node, node_score(*node)});
            }
        }
        std::sort(seeds.begin(), seeds.end(), node_ranks_before);
    }

    for (const auto& seed : seeds) {
        activation.seed_node_ids.push_back(seed.node->node_id);
        activation.seed_scores[seed.node->node_id] = seed.score;
    }
    return activation;
}

ActivationSet expand_one_hop(const MemoryGraph& graph, ActivationSet activation, int budget) {
    if (budget < 0) throw Error(ErrorCode::invalid_argument, "expansion budget must be >= 0");
    activation.expanded_node_ids.clear();
    activation.expanded_scores.clear();
    if (budget == 0 || activation.seed_node_ids.empty()) return activation;

    std::unordered_set<std::string> seeded(activation.seed_node_ids.begin(),
                                           activation.seed_node_ids.end());
    struct Neighbor {
        std::string node_id;
        int max_strength = 0;
        double score = 0.0;
    };
    std::unordered_map<std::string, Neighbor> frontier;
    for (const auto& seed_id : activation.seed_node_ids) {
        for (const auto& [neighbor_id, strength] : graph.neighbors(seed_id)) {
            if (seeded.count(neighbor_id)) continue;
            auto [it, inserted] = frontier.try_emplace(neighbor_id);
            if (inserted) {
                const GraphNode* node = graph.find_node(neighbor_id);
                it->second.node_id = neighbor_id;
                it->second.score =
                    node ? activation.query_embedding.dot(node->embedding) : -1.0;
            }
            it->second.max_strength = std::max(it->second.max_strength, strength);
        }
    }
    std::vector<Neighbor> ordered;
    ordered.reserve(frontier.size());
    for (auto& [_, neighbor] : frontier) ordered.push_back(std::move(neighbor));
    std::sort(ordered.begin(), ordered.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.max_strength != b.max_strength) return a.max_strength > b.max_strength;
        if (a.score != b.score) return a.score > b.score;
        return a.node_id < b.node_id;
    });
    if (ordered.size() > size_t(budget)) ordered.resize(size_t(budget));
    for (auto& neighbor : ordered) {
        activation.expanded_node_ids.push_back(neighbor.node_id);
        activation.expanded_scores[neighbor.node_id] = neighbor.score;
    }
    return activation;
}

std::vector<RankedValue> rank_values(const MemoryGraph& graph, const ActivationSet& activation,
                                     int n_values, RerankMode mode, ValueKind value_kind,
                                     BackendGateway* gateway, const SessionTextFn& session_text) {
    if (n_values <= 0) throw Error(ErrorCode::invalid_argument, "rank_values: n must be positive");

    std::vector<std::string> candidates = activation.seed_node_ids;
    candidates.insert(candidates.end(), activation.expanded_node_ids.begin(),
                      activation.expanded_node_ids.end());
    if (candidates.empty()) return {};

    auto score_of = [&](const std::string& node_id) {
        if (auto it = activation.seed_scores.find(node_id); it != activation.seed_scores.end()) {
            return it->second;
        }
        if (auto it = activation.expanded_scores.find(node_id);
            it != activation.expanded_scores.end()) {
            return it->second;
        }
        const GraphNode* node = graph.find_node(node_id);
        return node ? activation.query_embedding.dot(node->embedding) : -1.0;
    };

    struct Accumulated {
        ValueRef ref;
        RankScore score;
        size_t first_seen;
    };
    std::vector<Accumulated> values;
    std::unordered_map<std::string, size_t> by_value;

    for (const auto& node_id : candidates) {
        double node_score = score_of(node_id);
        auto touch = [&](const std::string& value_id, ValueKind kind) {
            auto [it, inserted] = by_value.try_emplace(value_id, values.size());
            if (inserted) {
                values.push_back(
                    {ValueRef{value_id, kind, value_id}, RankScore{node_score, 1, std::nullopt},
                     values.size()});
            } else {
                auto& entry = values[it->second];
                entry.score.score_e = std::max(entry.score.score_e, node_score);
                entry.score.score_g += 1;
            }
        };
        if (value_kind == ValueKind::key) {
            touch(node_id, ValueKind::key);
        } else {
            for (const auto& session_id : graph.node_session_values(node_id)) {
                touch(session_id, ValueKind::session);
            }
        }
    }

    if (mode == RerankMode::score_s) {
        if (!gateway) {
            throw Error(ErrorCode::invalid_argument, "score_s ranking requires a backend gateway");
        }
        for (auto& value : values) {
            std::optional<std::string> text;
            if (value.ref.kind == ValueKind::session && session_text) {
                text = session_text(value.ref.payload);
            } else if (value.ref.kind == ValueKind::key) {
                const GraphNode* node = graph.find_node(value.ref.payload);
                if (node && !node->descriptions.empty()) text = node->descriptions.front().text;
            }
            value.score.score_s =
                text ? activation.query_embedding.dot(gateway->embed_text(*text)) : -1e9;
        }
    }

    std::sort(values.begin(), values.end(), [&](const Accumulated& a, const Accumulated& b) {
        switch (mode) {
            case RerankMode::score_s:
                if (*a.score.score_s != *b.score.score_s) return *a.score.score_s > *b.score.score_s;
                break;
            case RerankMode::score_e:
                if (a.score.score_e != b.score.score_e) return a.score.score_e > b.score.score_e;
                break;
            case RerankMode::score_e_g:
                if (a.score.score_e != b.score.score_e) return a.score.score_e > b.score.score_e;
                if (a.score.score_g != b.score.score_g) return a.score.score_g > b.score.score_g;
                break;
        }
        if (a.first_seen != b.first_seen) return a.first_seen < b.first_seen;
        return a.ref.value_id < b.ref.value_id;
    });
    if (values.size() > size_t(n_values)) values.resize(size_t(n_values));

    std::vector<RankedValue> out;
    out.reserve(values.size());
    for (auto& value : values) out.push_back({std::move(value.ref), value.score});
    return out;
}

std::vector<ValueRef> retrieve(const MemoryGraph& graph, const MemQuery& query,
                               const PipelineConfig& config, BackendGateway& gateway,
                               const SessionTextFn& session_text, RetrievalTrace* trace) {
    auto validation = validate_config(config);
    if (!validation.ok()) {
        throw Error(ErrorCode::config, "invalid config: " + join(validation.violations, "; "));
    }
    if (graph.node_count() == 0) return {};

    EmbeddingVector query_embedding = gateway.embed_text(query.text);
    ActivationSet activation = activate(graph, query_embedding, config.k_keys, config.activation);
    if (config.expansion == ExpansionMode::one_hop) {
        activation = expand_one_hop(graph, std::move(activation), config.expansion_budget);
    }
    auto ranked = rank_values(graph, activation, config.n_values, config.rerank, config.value_kind,
                              &gateway, session_text);
    std::vector<ValueRef> out;
    out.reserve(ranked.size());
    for (const auto& value : ranked) out.push_back(value.ref);
    if (trace) {
        trace->activation = std::move(activation);
        trace->ranked = std::move(ranked);
    }
    return out;
}

}  // namespace dialogmem
