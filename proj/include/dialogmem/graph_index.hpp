#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "dialogmem/backend.hpp"
#include "dialogmem/core.hpp"
#include "dialogmem/extraction_parser.hpp"

namespace dialogmem {

struct NodeDescription {
    std::string session_id;
    std::string text;
};

struct GraphNode {
    std::string node_id;  // equals canonical_name (the alignment key)
    std::string canonical_name;
    std::string etype;
    std::vector<NodeDescription> descriptions;
    EmbeddingVector embedding;
    std::vector<std::string> provenance_session_ids;  // first-seen order, deduplicated
    uint64_t created_at = 0;
    size_t degree = 0;  // maintained incident-edge count
};

struct GraphEdge {
    std::string edge_id;  // unordered pair key
    std::string src;      // direction of first sighting, kept for display
    std::string dst;
    std::vector<NodeDescription> descriptions;
    int strength = 1;  // max over merged relations
    EmbeddingVector embedding;
    std::vector<std::string> provenance_session_ids;
    uint64_t created_at = 0;

    std::string triple_text() const;  // "src | descriptions | dst"
};

struct SimEdge {
    std::string src_group;
    std::string dst_group;
    bool judged = true;
};

struct IngestSummary {
    int nodes_added = 0;
    int nodes_merged = 0;
    int edges_added = 0;
    int edges_merged = 0;
    std::vector<std::string> warnings;
};

enum class DescriptionUpdateMode { append, summarize };

class MemoryGraph;
struct LoadedMemoryGraph;

/// Entity-centric memory graph covering the three schemas: node embeddings
/// come from entity names (know), accumulated descriptions (desc), or the
/// key-group text (sim). Ingest is single-writer in corpus order; traversal
/// after freeze is read-only.
class MemoryGraph {
public:
    MemoryGraph(GraphSchema schema, int dimension);

    GraphSchema schema() const { return schema_; }
    int dimension() const { return dimension_; }
    size_t node_count() const { return nodes_.size(); }
    size_t edge_count() const { return edges_.size(); }

    /// Aligns entities by canonical name (create or merge: descriptions
    /// appended with dedup, embedding recomputed) and merges relations on
    /// unordered node pairs with max strength.
    IngestSummary ingest_extraction(const ParseReport& report, const std::string& session_id,
                                    BackendGateway& gateway);

    const GraphNode* find_node(const std::string& canonical_name) const;
    const std::vector<GraphNode>& nodes() const { return nodes_; }
    const std::vector<GraphEdge>& edges() const { return edges_; }

    /// Provenance sessions of a node in first-seen order. Lookup error for
    /// unknown nodes.
    std::vector<std::string> node_session_values(const std::string& node_id) const;

    /// append: dedup-append plus re-embed. summarize: when the concatenated
    /// descriptions exceed char_threshold the backend collapses them into
    /// one; backend failure falls back to append.
    void update_description(const std::string& node_id, const std::string& new_text,
                            const std::string& session_id, DescriptionUpdateMode mode,
                            BackendGateway& gateway, size_t char_threshold = 1024);

    /// Unique neighbors with the strength of the connecting edge.
    std::vector<std::pair<std::string, int>> neighbors(const std::string& node_id) const;

    /// Adds a pre-embedded node (sim-graph groups). Name must be fresh.
    const GraphNode& add_prebuilt_node(GraphNode node);

    /// Adds or merges an undirected edge between existing nodes.
    void add_edge(const std::string& src, const std::string& dst, const std::string& description,
                  int strength, const std::string& session_id, BackendGateway& gateway);

    // Directory layout: metadata.json, nodes.jsonl, edges.jsonl,
    // node_embeddings.f32, edge_embeddings.f32, provenance.jsonl.
    void save(const std::string& directory, const EmbedderSpec& embedder) const;

private:
    friend LoadedMemoryGraph load_memory_graph(const std::string& directory);

    std::string node_embedding_text(const GraphNode& node) const;
    void refresh_node_embedding(GraphNode& node, BackendGateway& gateway);
    void refresh_edge_embedding(GraphEdge& edge, BackendGateway& gateway);
    GraphEdge* find_edge(const std::string& a, const std::string& b);

    GraphSchema schema_;
    int dimension_;
    uint64_t next_created_at_ = 0;
    std::vector<GraphNode> nodes_;
    std::vector<GraphEdge> edges_;
    std::unordered_map<std::string, size_t> node_by_name_;
    std::unordered_map<std::string, size_t> edge_by_pair_;
    std::vector<std::string> provenance_log_;  // one JSON line per ingest event
};

struct LoadedMemoryGraph {
    MemoryGraph graph;
    EmbedderSpec embedder;
};

LoadedMemoryGraph load_memory_graph(const std::string& directory);

/// Pairs every key group with its top-5 cosine neighbors, judges each
/// unordered pair once, and returns the accepted similarity edges.
std::vector<SimEdge> build_simgraph(const std::vector<KeyUnit>& key_groups,
                                    BackendGateway& gateway);

/// Assembles a retrievable graph from key groups plus judged sim edges.
MemoryGraph build_sim_memory_graph(const std::vector<KeyUnit>& key_groups,
                                   const std::vector<SimEdge>& sim_edges,
                                   BackendGateway& gateway);

/// Unordered-pair edge key shared by merge and persistence logic.
std::string edge_pair_key(const std::string& a, const std::string& b);

}  // namespace dialogmem
