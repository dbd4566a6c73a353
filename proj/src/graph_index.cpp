#include "dialogmem/graph_index.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "dialogmem/flat_index.hpp"

namespace fs = std::filesystem;

namespace dialogmem {

std::string edge_pair_key(const std::string& a, const std::string& b) {
    return a < b ? a + "\x1f" + b : b + "\x1f" + a;
}

std::string GraphEdge::triple_text() const {
    std::vector<std::string> parts;
    parts.reserve(descriptions.size());
    for (const auto& d : descriptions) parts.push_back(d.text);
    return src + " | " + join(parts, "; ") + " | " + dst;
}

MemoryGraph::MemoryGraph(GraphSchema schema, int dimension)
    : schema_(schema), dimension_(dimension) {
    if (dimension <= 0) throw Error(ErrorCode::invalid_argument, "graph dimension must be > 0");
}

std::string MemoryGraph::node_embedding_text(const GraphNode& node) const {
    if (schema_ == GraphSchema::know) return node.canonical_name;
    // desc and sim schemas embed accumulated descriptions; nodes that have
    // none yet (implicit entities) fall back to the name.
    if (node.descriptions.empty()) return node.canonical_name;
    std::vector<std::string> parts;
    parts.reserve(node.descriptions.size());
    for (const auto& d : node.descriptions) parts.push_back(d.text);
    return join(parts, "\n");
}

void MemoryGraph::refresh_node_embedding(GraphNode& node, BackendGateway& gateway) {
    node.embedding = gateway.embed_text(node_embedding_text(node));
}

void MemoryGraph::refresh_edge_embedding(GraphEdge& edge, BackendGateway& gateway) {
    edge.embedding = gateway.embed_text(edge.triple_text());
}

const GraphNode* MemoryGraph::find_node(const std::string& canonical_name) const {
    auto it = node_by_name_.find(canonical_name);
    return it == node_by_name_.end() ? nullptr : &nodes_[it->second];
}

GraphEdge* MemoryGraph::find_edge(const std::string& a, const std::string& b) {
    auto it = edge_by_pair_.find(edge_pair_key(a, b));
    return it == edge_by_pair_.end() ? nullptr : &edges_[it->second];
}

IngestSummary MemoryGraph::ingest_extraction(const ParseReport& report,
                                             const std::string& session_id,
                                             BackendGateway& gateway) {
    IngestSummary summary;

    auto note_provenance = [&](std::vector<std::string>& provenance) {
        if (std::find(provenance.begin(), provenance.end(), session_id) == provenance.end()) {
            provenance.push_back(session_id);
        }
    };
    auto log_event = [&](nlohmann::ordered_json j) {
        j["session_id"] = session_id;
        provenance_log_.push_back(j.dump());
    };

    for (const auto& raw : report.entities) {
        auto it = node_by_name_.find(raw.name);
        if (it == node_by_name_.end()) {
            GraphNode node;
            node.node_id = raw.name;
            node.canonical_name = raw.name;
            node.etype = raw.etype;
            if (!normalize_whitespace(raw.description).empty()) {
                node.descriptions.push_back({session_id, raw.description});
            }
            node.provenance_session_ids = {session_id};
            node.created_at = next_created_at_++;
            refresh_node_embedding(node, gateway);
            node_by_name_[node.canonical_name] = nodes_.size();
            nodes_.push_back(std::move(node));
            ++summary.nodes_added;
            log_event({{"event", "node_add"}, {"name", raw.name}});
        } else {
            GraphNode& node = nodes_[it->second];
            bool changed = false;
            std::string incoming = normalize_whitespace(raw.description);
            if (!incoming.empty()) {
                bool duplicate = std::any_of(
                    node.descriptions.begin(), node.descriptions.end(),
                    [&](const NodeDescription& d) { return normalize_whitespace(d.text) == incoming; });
                if (!duplicate) {
                    node.descriptions.push_back({session_id, raw.description});
                    changed = true;
                }
            }
            note_provenance(node.provenance_session_ids);
            if (changed && schema_ != GraphSchema::know) refresh_node_embedding(node, gateway);
            ++summary.nodes_merged;
            log_event({{"event", "node_merge"}, {"name", raw.name}});
        }
    }

    for (const auto& relation : report.relations) {
        if (!node_by_name_.count(relation.source) || !node_by_name_.count(relation.target)) {
            summary.warnings.push_back("relation endpoint missing, skipped: " + relation.source +
                                       " -> " + relation.target);
            continue;
        }
        if (relation.source == relation.target) {
            summary.warnings.push_back("self-loop skipped: " + relation.source);
            continue;
        }
        GraphEdge* existing = find_edge(relation.source, relation.target);
        if (!existing) {
            GraphEdge edge;
            edge.edge_id = edge_pair_key(relation.source, relation.target);
            edge.src = relation.source;
            edge.dst = relation.target;
            if (!normalize_whitespace(relation.description).empty()) {
                edge.descriptions.push_back({session_id, relation.description});
            }
            edge.strength = relation.strength;
            edge.provenance_session_ids = {session_id};
            edge.created_at = next_created_at_++;
            refresh_edge_embedding(edge, gateway);
            edge_by_pair_[edge.edge_id] = edges_.size();
            edges_.push_back(std::move(edge));
            nodes_[node_by_name_[relation.source]].degree++;
            nodes_[node_by_name_[relation.target]].degree++;
            ++summary.edges_added;
        } else {
            bool changed = false;
            std::string incoming = normalize_whitespace(relation.description);
            if (!incoming.empty()) {
                bool duplicate = std::any_of(existing->descriptions.begin(),
                                             existing->descriptions.end(),
                                             [&](const NodeDescription& d) {
                                                 return normalize_whitespace(d.text) == incoming;
                                             });
                if (!duplicate) {
                    existing->descriptions.push_back({session_id, relation.description});
                    changed = true;
                }
            }
            existing->strength = std::max(existing->strength, relation.strength);
            note_provenance(existing->provenance_session_ids);
            if (changed) refresh_edge_embedding(*existing, gateway);
            ++summary.edges_merged;
        }
        log_event({{"event", "relation"},
                   {"src", relation.source},
                   {"dst", relation.target},
                   {"strength", relation.strength}});
    }
    return summary;
}

std::vector<std::string> MemoryGraph::node_session_values(const std::string& node_id) const {
    const GraphNode* node = find_node(node_id);
    if (!node) throw Error(ErrorCode::not_found, "unknown graph node: " + node_id);
    return node->provenance_session_ids;
}

void MemoryGraph::update_description(const std::string& node_id, const std::string& new_text,
                                     const std::string& session_id, DescriptionUpdateMode mode,
                                     BackendGateway& gateway, size_t char_threshold) {
    auto it = node_by_name_.find(node_id);
    if (it == node_by_name_.end()) {
        throw Error(ErrorCode::not_found, "unknown graph node: " + node_id);
    }
    GraphNode& node = nodes_[it->second];

    std::string incoming = normalize_whitespace(new_text);
    bool duplicate =
        !incoming.empty() &&
        std::any_of(node.descriptions.begin(), node.descriptions.end(),
                    [&](const NodeDescription& d) { return normalize_whitespace(d.text) == incoming; });
    if (!duplicate && !incoming.empty()) {
        node.descriptions.push_back({session_id, new_text});
    }

    if (mode == DescriptionUpdateMode::summarize) {
        size_t total = 0;
        for (const auto& d : node.descriptions) total += d.text.size();
        if (total > char_threshold) {
            std::vector<std::string> texts;
            texts.reserve(node.descriptions.size());
            for (const auto& d : node.descriptions) texts.push_back(d.text);
            try {
                std::string summary = gateway.summarize_descriptions(texts, char_threshold);
                node.descriptions.clear();
                node.descriptions.push_back({session_id, summary});
            } catch (const Error&) {
                // summarizer failure: keep the appended form
            }
        }
    }
    if (std::find(node.provenance_session_ids.begin(), node.provenance_session_ids.end(),
                  session_id) == node.provenance_session_ids.end()) {
        node.provenance_session_ids.push_back(session_id);
    }
    refresh_node_embedding(node, gateway);
}

std::vector<std::pair<std::string, int>> MemoryGraph::neighbors(const std::string& node_id) const {
    if (!node_by_name_.count(node_id)) {
        throw Error(ErrorCode::not_found, "unknown graph node: " + node_id);
    }
    std::vector<std::pair<std::string, int>> out;
    for (const auto& edge : edges_) {
        if (edge.src == node_id) {
            out.emplace_back(edge.dst, edge.strength);
        } else if (edge.dst == node_id) {
            out.emplace_back(edge.src, edge.strength);
        }
    }
    return out;
}

const GraphNode& MemoryGraph::add_prebuilt_node(GraphNode node) {
    if (node_by_name_.count(node.canonical_name)) {
        throw Error(ErrorCode::invalid_argument,
                    "graph node already exists: " + node.canonical_name);
    }
    if (int(node.embedding.dimension()) != dimension_) {
        throw Error(ErrorCode::invalid_argument, "node embedding dimension mismatch");
    }
    node.node_id = node.canonical_name;
    node.created_at = next_created_at_++;
    node_by_name_[node.canonical_name] = nodes_.size();
    nodes_.push_back(std::move(node));
    return nodes_.back();
}

void MemoryGraph::add_edge(const std::string& src, const std::string& dst,
                           const std::string& description, int strength,
                           const std::string& session_id, BackendGateway& gateway) {
    ParseReport report;
    report.relations.push_back(
        RawRelation{src, dst, description, std::clamp(strength, 1, 10)});
    // Reuse the merge path; endpoints must already exist.
    auto summary = ingest_extraction(report, session_id, gateway);
    if (!summary.warnings.empty()) {
        throw Error(ErrorCode::invalid_argument, summary.warnings.front());
    }
}

// ---- persistence ------------------------------------------------------------

void MemoryGraph::save(const std::string& directory, const EmbedderSpec& embedder) const {
    fs::create_directories(directory);
    nlohmann::ordered_json meta;
    meta["format_version"] = 1;
    meta["index_kind"] = "graph";
    meta["schema"] = to_string(schema_);
    meta["dimension"] = dimension_;
    meta["embedder"] = {{"name", embedder.name},
                        {"dimension", embedder.dimension},
                        {"kind", embedder.kind == EmbedderKind::remote ? "remote" : "hash_mock"}};
    meta["node_count"] = nodes_.size();
    meta["edge_count"] = edges_.size();
    meta["next_created_at"] = next_created_at_;
    write_file((fs::path(directory) / "metadata.json").string(), meta.dump(2) + "\n");

    std::string node_lines, node_matrix;
    for (const auto& node : nodes_) {
        nlohmann::ordered_json j;
        j["name"] = node.canonical_name;
        j["etype"] = node.etype;
        nlohmann::ordered_json descs = nlohmann::ordered_json::array();
        for (const auto& d : node.descriptions) descs.push_back({{"s", d.session_id}, {"t", d.text}});
        j["descriptions"] = descs;
        j["provenance"] = node.provenance_session_ids;
        j["created_at"] = node.created_at;
        j["flagged"] = node.embedding.flagged();
        node_lines += j.dump() + "\n";
        node_matrix += encode_f32le(node.embedding.values());
    }
    write_file((fs::path(directory) / "nodes.jsonl").string(), node_lines);
    write_file((fs::path(directory) / "node_embeddings.f32").string(), node_matrix);

    std::string edge_lines, edge_matrix;
    for (const auto& edge : edges_) {
        nlohmann::ordered_json j;
        j["src"] = edge.src;
        j["dst"] = edge.dst;
        nlohmann::ordered_json descs = nlohmann::ordered_json::array();
        for (const auto& d : edge.descriptions) descs.push_back({{"s", d.session_id}, {"t", d.text}});
        j["descriptions"] = descs;
        j["strength"] = edge.strength;
        j["provenance"] = edge.provenance_session_ids;
        j["created_at"] = edge.created_at;
        j["flagged"] = edge.embedding.flagged();
        edge_lines += j.dump() + "\n";
        edge_matrix += encode_f32le(edge.embedding.values());
    }
    write_file((fs::path(directory) / "edges.jsonl").string(), edge_lines);
    write_file((fs::path(directory) / "edge_embeddings.f32").string(), edge_matrix);

    std::string provenance;
    for (const auto& line : provenance_log_) provenance += line + "\n";
    write_file((fs::path(directory) / "provenance.jsonl").string(), provenance);
}

LoadedMemoryGraph load_memory_graph(const std::string& directory) {
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_file((fs::path(directory) / "metadata.json").string()));
    } catch (const std::exception& e) {
        throw Error(ErrorCode::format, "unreadable graph metadata: " + std::string(e.what()));
    }
    if (meta.value("index_kind", "") != "graph") {
        throw Error(ErrorCode::format, "not a graph index: " + directory);
    }
    auto schema = graph_schema_from_string(meta.at("schema").get<std::string>());
    if (!schema) throw Error(ErrorCode::format, "unknown schema in graph metadata");
    int dimension = meta.at("dimension").get<int>();

    EmbedderSpec embedder;
    embedder.name = meta.at("embedder").at("name").get<std::string>();
    embedder.dimension = meta.at("embedder").at("dimension").get<int>();
    embedder.kind = meta.at("embedder").at("kind").get<std::string>() == "remote"
                        ? EmbedderKind::remote
                        : EmbedderKind::hash_mock;

    MemoryGraph graph(*schema, dimension);
    size_t row_bytes = size_t(dimension) * 4;

    auto parse_descriptions = [](const nlohmann::json& j) {
        std::vector<NodeDescription> out;
        for (const auto& d : j) out.push_back({d.at("s").get<std::string>(), d.at("t").get<std::string>()});
        return out;
    };

    std::string node_matrix = read_file((fs::path(directory) / "node_embeddings.f32").string());
    size_t row = 0;
    for (const auto& line : read_lines((fs::path(directory) / "nodes.jsonl").string())) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        GraphNode node;
        node.canonical_name = j.at("name").get<std::string>();
        node.node_id = node.canonical_name;
        node.etype = j.at("etype").get<std::string>();
        node.descriptions = parse_descriptions(j.at("descriptions"));
        node.provenance_session_ids = j.at("provenance").get<std::vector<std::string>>();
        node.created_at = j.at("created_at").get<uint64_t>();
        if ((row + 1) * row_bytes > node_matrix.size()) {
            throw Error(ErrorCode::format, "node embedding matrix shorter than node list");
        }
        node.embedding = EmbeddingVector::from_raw(
            decode_f32le(std::string_view(node_matrix).substr(row * row_bytes, row_bytes)),
            j.at("flagged").get<bool>());
        graph.node_by_name_[node.canonical_name] = graph.nodes_.size();
        graph.nodes_.push_back(std::move(node));
        ++row;
    }

    std::string edge_matrix = read_file((fs::path(directory) / "edge_embeddings.f32").string());
    row = 0;
    for (const auto& line : read_lines((fs::path(directory) / "edges.jsonl").string())) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        GraphEdge edge;
        edge.src = j.at("src").get<std::string>();
        edge.dst = j.at("dst").get<std::string>();
        edge.edge_id = edge_pair_key(edge.src, edge.dst);
        edge.descriptions = parse_descriptions(j.at("descriptions"));
        edge.strength = j.at("strength").get<int>();
        edge.provenance_session_ids = j.at("provenance").get<std::vector<std::string>>();
        edge.created_at = j.at("created_at").get<uint64_t>();
        if ((row + 1) * row_bytes > edge_matrix.size()) {
            throw Error(ErrorCode::format, "edge embedding matrix shorter than edge list");
        }
        edge.embedding = EmbeddingVector::from_raw(
            decode_f32le(std::string_view(edge_matrix).substr(row * row_bytes, row_bytes)),
            j.at("flagged").get<bool>());
        if (graph.node_by_name_.count(edge.src)) graph.nodes_[graph.node_by_name_[edge.src]].degree++;
        if (graph.node_by_name_.count(edge.dst)) graph.nodes_[graph.node_by_name_[edge.dst]].degree++;
        graph.edge_by_pair_[edge.edge_id] = graph.edges_.size();
        graph.edges_.push_back(std::move(edge));
        ++row;
    }

    std::error_code ec;
    if (fs::exists(fs::path(directory) / "provenance.jsonl", ec)) {
        graph.provenance_log_ = read_lines((fs::path(directory) / "provenance.jsonl").string());
        while (!graph.provenance_log_.empty() && graph.provenance_log_.back().empty()) {
            graph.provenance_log_.pop_back();
        }
    }
    graph.next_created_at_ = meta.at("next_created_at").get<uint64_t>();
    return LoadedMemoryGraph{std::move(graph), embedder};
}

// ---- similarity graph ----------------------------------------------------------

std::vector<SimEdge> build_simgraph(const std::vector<KeyUnit>& key_groups,
                                    BackendGateway& gateway) {
    if (key_groups.size() < 2) return {};
    const int dimension = int(key_groups.front().embedding.dimension());
    FlatIndex scratch(KeyStrategy::merge_all, dimension);
    for (const auto& group : key_groups) {
        KeyUnit copy = group;
        scratch.add_key(std::move(copy));
    }

    std::vector<SimEdge> edges;
    std::set<std::pair<std::string, std::string>> judged;
    for (const auto& group : key_groups) {
        if (group.embedding.flagged()) continue;
        // Self ranks first (cosine 1); ask for one extra and drop it.
        auto ranked = scratch.search(group.embedding, 6);
        int taken = 0;
        for (const auto& scored : ranked) {
            if (scored.key_id == group.key_id) continue;
            if (++taken > 5) break;
            auto pair = std::minmax(group.key_id, scored.key_id);
            if (!judged.insert({pair.first, pair.second}).second) continue;
            const KeyUnit* other = scratch.find_key(scored.key_id);
            if (gateway.should_link(group.text, other->text, scored.score)) {
                edges.push_back(SimEdge{pair.first, pair.second, true});
            }
        }
    }
    return edges;
}

MemoryGraph build_sim_memory_graph(const std::vector<KeyUnit>& key_groups,
                                   const std::vector<SimEdge>& sim_edges,
                                   BackendGateway& gateway) {
    if (key_groups.empty()) {
        throw Error(ErrorCode::invalid_argument, "sim graph requires at least one key group");
    }
    MemoryGraph graph(GraphSchema::sim, int(key_groups.front().embedding.dimension()));
    std::unordered_map<std::string, std::string> name_of;
    for (const auto& group : key_groups) {
        GraphNode node;
        node.canonical_name = canonical_entity_name(group.key_id);
        node.etype = "Group";
        node.descriptions.push_back({group.provenance_session_ids.front(), group.text});
        node.embedding = group.embedding;
        node.provenance_session_ids = group.provenance_session_ids;
        name_of[group.key_id] = node.canonical_name;
        graph.add_prebuilt_node(std::move(node));
    }
    for (const auto& edge : sim_edges) {
        graph.add_edge(name_of.at(edge.src_group), name_of.at(edge.dst_group), "similar content", 5,
                       "simgraph", gateway);
    }
    return graph;
}

}  // namespace dialogmem
