#include "dialogmem/flat_index.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace dialogmem {

FlatIndex::FlatIndex(KeyStrategy strategy, int dimension)
    : strategy_(strategy), dimension_(dimension) {
    if (dimension <= 0) throw Error(ErrorCode::invalid_argument, "index dimension must be > 0");
}

const KeyUnit& FlatIndex::add_key(KeyUnit key) {
    if (key.key_id.empty()) throw Error(ErrorCode::invalid_argument, "key_id must be non-empty");
    if (by_id_.count(key.key_id)) {
        throw Error(ErrorCode::invalid_argument, "duplicate key_id: " + key.key_id);
    }
    if (key.provenance_session_ids.empty()) {
        throw Error(ErrorCode::invalid_argument, "key requires at least one provenance session");
    }
    if (int(key.embedding.dimension()) != dimension_) {
        throw Error(ErrorCode::invalid_argument, "key embedding dimension mismatch");
    }
    key.created_at = next_created_at_++;
    by_id_[key.key_id] = keys_.size();
    keys_.push_back(std::move(key));
    return keys_.back();
}

const KeyUnit* FlatIndex::find_key(const std::string& key_id) const {
    auto it = by_id_.find(key_id);
    return it == by_id_.end() ? nullptr : &keys_[it->second];
}

void FlatIndex::update_key(const std::string& key_id, std::string new_text,
                           EmbeddingVector embedding, const std::string& provenance_session_id) {
    auto it = by_id_.find(key_id);
    if (it == by_id_.end()) throw Error(ErrorCode::not_found, "unknown key: " + key_id);
    if (int(embedding.dimension()) != dimension_) {
        throw Error(ErrorCode::invalid_argument, "key embedding dimension mismatch");
    }
    KeyUnit& key = keys_[it->second];
    key.text = std::move(new_text);
    key.embedding = std::move(embedding);
    auto& prov = key.provenance_session_ids;
    if (std::find(prov.begin(), prov.end(), provenance_session_id) == prov.end()) {
        prov.push_back(provenance_session_id);
    }
}

void FlatIndex::remove_key(const std::string& key_id) {
    auto it = by_id_.find(key_id);
    if (it == by_id_.end()) throw Error(ErrorCode::not_found, "unknown key: " + key_id);
    keys_.erase(keys_.begin() + static_cast<long>(it->second));
    by_id_.clear();
    for (size_t i = 0; i < keys_.size(); ++i) by_id_[keys_[i].key_id] = i;
}

namespace {

bool ranks_before(const ScoredKey& a, uint64_t a_created, const ScoredKey& b, uint64_t b_created) {
    if (a.score != b.score) return a.score > b.score;
    if (a_created != b_created) return a_created < b_created;
    return a.key_id < b.key_id;
}

}  // namespace

std::vector<ScoredKey> FlatIndex::search(const EmbeddingVector& query, int k) const {
    return search_filtered(query, k, [](const KeyUnit&) { return true; });
}

std::vector<ScoredKey> FlatIndex::search_filtered(
    const EmbeddingVector& query, int k,
    const std::function<bool(const KeyUnit&)>& predicate) const {
    if (k <= 0) throw Error(ErrorCode::invalid_argument, "search: k must be positive");
    if (keys_.empty()) return {};
    if (int(query.dimension()) != dimension_) {
        throw Error(ErrorCode::invalid_argument, "query embedding dimension mismatch");
    }

    struct Entry {
        ScoredKey scored;
        uint64_t created_at;
    };
    std::vector<Entry> entries;
    entries.reserve(keys_.size());
    for (const auto& key : keys_) {
        if (key.embedding.flagged()) continue;  // degenerate keys never retrieved
        if (!predicate(key)) continue;
        entries.push_back({{key.key_id, query.dot(key.embedding)}, key.created_at});
    }
    auto cmp = [](const Entry& a, const Entry& b) {
        return ranks_before(a.scored, a.created_at, b.scored, b.created_at);
    };
    size_t take = std::min<size_t>(entries.size(), size_t(k));
    std::partial_sort(entries.begin(), entries.begin() + static_cast<long>(take), entries.end(),
                      cmp);
    std::vector<ScoredKey> out;
    out.reserve(take);
    for (size_t i = 0; i < take; ++i) out.push_back(entries[i].scored);
    return out;
}

std::vector<SessionScore> FlatIndex::score_sessions_merge_by_type(const EmbeddingVector& query,
                                                                  int k_sessions) const {
    if (k_sessions <= 0) {
        throw Error(ErrorCode::invalid_argument, "score_sessions: k must be positive");
    }
    // Best cosine per (session, kind); multiple keys of one kind collapse
    // to their best match.
    std::vector<std::string> session_order;
    std::unordered_map<std::string, std::map<KeyKind, double>> per_session;
    for (const auto& key : keys_) {
        if (key.embedding.flagged()) continue;
        double score = query.dot(key.embedding);
        for (const auto& session_id : key.provenance_session_ids) {
            auto [it, inserted] = per_session.try_emplace(session_id);
            if (inserted) session_order.push_back(session_id);
            auto [slot, fresh] = it->second.try_emplace(key.kind, score);
            if (!fresh) slot->second = std::max(slot->second, score);
        }
    }
    std::vector<SessionScore> scores;
    scores.reserve(session_order.size());
    for (const auto& session_id : session_order) {
        const auto& types = per_session[session_id];
        double sum = 0.0;
        for (const auto& [kind, value] : types) sum += value;
        scores.push_back({session_id, types, sum / double(types.size())});
    }
    std::sort(scores.begin(), scores.end(), [](const SessionScore& a, const SessionScore& b) {
        if (a.final_score != b.final_score) return a.final_score > b.final_score;
        return a.session_id < b.session_id;
    });
    if (scores.size() > size_t(k_sessions)) scores.resize(size_t(k_sessions));
    return scores;
}

std::vector<FlatIndex::ScoredValue> FlatIndex::map_to_values_scored(
    const std::vector<ScoredKey>& ranked_keys, int n_values, ValueKind value_kind) const {
    if (n_values <= 0) {
        throw Error(ErrorCode::invalid_argument, "map_to_values: n must be positive");
    }
    std::vector<ScoredValue> out;
    std::unordered_set<std::string> seen;
    // Input is ranked descending, so the first key reaching a value carries
    // its best score and output order is already by best contributing key.
    for (const auto& scored : ranked_keys) {
        if (out.size() >= size_t(n_values)) break;
        if (value_kind == ValueKind::key) {
            if (seen.insert(scored.key_id).second) {
                out.push_back({ValueRef{scored.key_id, ValueKind::key, scored.key_id},
                               scored.score});
            }
            continue;
        }
        const KeyUnit* key = find_key(scored.key_id);
        if (!key) continue;
        for (const auto& session_id : key->provenance_session_ids) {
            if (out.size() >= size_t(n_values)) break;
            if (seen.insert(session_id).second) {
                out.push_back({ValueRef{session_id, ValueKind::session, session_id}, scored.score});
            }
        }
    }
    return out;
}

std::vector<ValueRef> FlatIndex::map_to_values(const std::vector<ScoredKey>& ranked_keys,
                                               int n_values, ValueKind value_kind) const {
    std::vector<ValueRef> out;
    for (auto& scored : map_to_values_scored(ranked_keys, n_values, value_kind)) {
        out.push_back(std::move(scored.ref));
    }
    return out;
}

const std::vector<std::string>& FlatIndex::values_of(const std::string& key_id) const {
    const KeyUnit* key = find_key(key_id);
    if (!key) throw Error(ErrorCode::not_found, "unknown key: " + key_id);
    return key->provenance_session_ids;
}

// ---- persistence -----------------------------------------------------------

void FlatIndex::save(const std::string& directory, const EmbedderSpec& embedder) const {
    fs::create_directories(directory);
    nlohmann::ordered_json meta;
    meta["format_version"] = 1;
    meta["index_kind"] = "flat";
    meta["strategy"] = to_string(strategy_);
    meta["dimension"] = dimension_;
    meta["embedder"] = {{"name", embedder.name},
                        {"dimension", embedder.dimension},
                        {"kind", embedder.kind == EmbedderKind::remote ? "remote" : "hash_mock"}};
    meta["delimiters"] = {{"fact_join", kFactJoin}, {"keyword_join", kKeywordJoin}};
    meta["key_count"] = keys_.size();
    meta["next_created_at"] = next_created_at_;
    write_file((fs::path(directory) / "metadata.json").string(), meta.dump(2) + "\n");

    std::string lines;
    std::string matrix;
    for (const auto& key : keys_) {
        nlohmann::ordered_json j;
        j["key_id"] = key.key_id;
        j["kind"] = to_string(key.kind);
        j["text"] = key.text;
        j["provenance"] = key.provenance_session_ids;
        j["created_at"] = key.created_at;
        j["flagged"] = key.embedding.flagged();
        lines += j.dump() + "\n";
        matrix += encode_f32le(key.embedding.values());
    }
    write_file((fs::path(directory) / "keys.jsonl").string(), lines);
    write_file((fs::path(directory) / "embeddings.f32").string(), matrix);
}

LoadedFlatIndex load_flat_index(const std::string& directory) {
    auto meta_path = (fs::path(directory) / "metadata.json").string();
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_file(meta_path));
    } catch (const std::exception& e) {
        throw Error(ErrorCode::format, "unreadable index metadata: " + std::string(e.what()));
    }
    if (meta.value("index_kind", "") != "flat") {
        throw Error(ErrorCode::format, "not a flat index: " + directory);
    }
    auto strategy = key_strategy_from_string(meta.at("strategy").get<std::string>());
    if (!strategy) throw Error(ErrorCode::format, "unknown strategy in index metadata");
    int dimension = meta.at("dimension").get<int>();

    EmbedderSpec embedder;
    embedder.name = meta.at("embedder").at("name").get<std::string>();
    embedder.dimension = meta.at("embedder").at("dimension").get<int>();
    embedder.kind = meta.at("embedder").at("kind").get<std::string>() == "remote"
                        ? EmbedderKind::remote
                        : EmbedderKind::hash_mock;

    FlatIndex index(*strategy, dimension);
    std::string matrix = read_file((fs::path(directory) / "embeddings.f32").string());
    size_t row_bytes = size_t(dimension) * 4;
    size_t row = 0;
    for (const auto& line : read_lines((fs::path(directory) / "keys.jsonl").string())) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        KeyUnit key;
        key.key_id = j.at("key_id").get<std::string>();
        auto kind = key_kind_from_string(j.at("kind").get<std::string>());
        if (!kind) throw Error(ErrorCode::format, "unknown key kind in " + key.key_id);
        key.kind = *kind;
        key.text = j.at("text").get<std::string>();
        key.provenance_session_ids = j.at("provenance").get<std::vector<std::string>>();
        uint64_t created_at = j.at("created_at").get<uint64_t>();
        bool flagged = j.at("flagged").get<bool>();
        if ((row + 1) * row_bytes > matrix.size()) {
            throw Error(ErrorCode::format, "embedding matrix shorter than key list");
        }
        auto values = decode_f32le(std::string_view(matrix).substr(row * row_bytes, row_bytes));
        key.embedding = EmbeddingVector::from_raw(std::move(values), flagged);
        index.add_key(std::move(key));
        index.keys_.back().created_at = created_at;  // restore original counter
        ++row;
    }
    index.next_created_at_ = meta.at("next_created_at").get<uint64_t>();
    return LoadedFlatIndex{std::move(index), embedder};
}

// ---- key building -----------------------------------------------------------

std::vector<KeyUnit> build_keys(const Session& session, const FlatExtraction& extraction,
                                KeyStrategy strategy, BackendGateway& gateway) {
    struct Pending {
        std::string id_suffix;
        KeyKind kind;
        std::string text;
    };
    std::vector<Pending> pending;
    auto push = [&](std::string suffix, KeyKind kind, std::string text) {
        if (normalize_whitespace(text).empty()) return;
        pending.push_back({std::move(suffix), kind, std::move(text)});
    };

    std::string session_text = session.user_text();
    std::string facts_joined = join(extraction.facts, FlatIndex::kFactJoin);
    std::string keywords_joined = join(extraction.keywords, FlatIndex::kKeywordJoin);
    std::vector<std::string> all_parts;
    if (!extraction.summary.empty()) all_parts.push_back(extraction.summary);
    for (const auto& f : extraction.facts) all_parts.push_back(f);
    for (const auto& k : extraction.keywords) all_parts.push_back(k);
    std::string merged_all = join(all_parts, "\n");

    switch (strategy) {
        case KeyStrategy::session_only:
            push("session", KeyKind::session_text, session_text);
            break;
        case KeyStrategy::separate_sfk:
            push("summary", KeyKind::summary, extraction.summary);
            for (size_t i = 0; i < extraction.facts.size(); ++i) {
                push("fact" + std::to_string(i), KeyKind::fact, extraction.facts[i]);
            }
            for (size_t i = 0; i < extraction.keywords.size(); ++i) {
                push("kw" + std::to_string(i), KeyKind::keyword, extraction.keywords[i]);
            }
            break;
        case KeyStrategy::merge_by_type:
            push("summary", KeyKind::summary, extraction.summary);
            push("facts", KeyKind::fact, facts_joined);
            push("keywords", KeyKind::keyword, keywords_joined);
            break;
        case KeyStrategy::merge_all:
            push("merged", KeyKind::merged_all, merged_all);
            break;
        case KeyStrategy::session_plus_merged:
            push("session", KeyKind::session_text, session_text);
            push("merged", KeyKind::merged_all, merged_all);
            break;
        case KeyStrategy::graph_entities:
            throw Error(ErrorCode::invalid_argument,
                        "graph_entities keys are built by the graph index");
    }

    if (pending.empty()) {
        std::cerr << "warning: session " << session.session_id
                  << " produced no keys under strategy " << to_string(strategy) << "\n";
        return {};
    }

    std::vector<std::string> texts;
    texts.reserve(pending.size());
    for (const auto& p : pending) texts.push_back(p.text);
    auto embeddings = gateway.embed_texts(texts);

    std::vector<KeyUnit> keys;
    keys.reserve(pending.size());
    for (size_t i = 0; i < pending.size(); ++i) {
        KeyUnit key;
        key.key_id = session.session_id + "#" + pending[i].id_suffix;
        key.kind = pending[i].kind;
        key.text = std::move(pending[i].text);
        key.embedding = embeddings[i];
        key.provenance_session_ids = {session.session_id};
        keys.push_back(std::move(key));
    }
    return keys;
}

}  // namespace dialogmem
