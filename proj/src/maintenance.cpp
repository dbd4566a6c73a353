#include "dialogmem/maintenance.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace dialogmem {

void ReconcileLog::record(const std::string& fact, MemOpDecision decision) {
    switch (decision.op) {
        case MemOp::add: ++adds; break;
        case MemOp::update: ++updates; break;
        case MemOp::noop: ++noops; break;
        case MemOp::del: ++deletes; break;
    }
    decisions.push_back({fact, std::move(decision)});
}

std::string reconcile_log_to_jsonl(const ReconcileLog& log) {
    std::string out;
    for (const auto& entry : log.decisions) {
        nlohmann::ordered_json j;
        j["session_id"] = log.session_id;
        j["fact"] = entry.fact_text;
        j["op"] = to_string(entry.decision.op);
        if (entry.decision.target_key_id) j["target_key_id"] = *entry.decision.target_key_id;
        if (entry.decision.revised_text) j["revised_text"] = *entry.decision.revised_text;
        j["rationale"] = entry.decision.rationale;
        out += j.dump() + "\n";
    }
    return out;
}

namespace {

bool is_merge_strategy(KeyStrategy strategy) {
    return strategy == KeyStrategy::merge_all || strategy == KeyStrategy::merge_by_type ||
           strategy == KeyStrategy::session_plus_merged;
}

size_t shared_prefix_tokens(const std::string& a, const std::string& b) {
    auto ta = tokenize(a);
    auto tb = tokenize(b);
    size_t n = std::min(ta.size(), tb.size());
    size_t i = 0;
    while (i < n && ta[i] == tb[i]) ++i;
    return i;
}

}  // namespace

MemoryMaintainer::MemoryMaintainer(FlatIndex& index, BackendGateway& gateway, int candidate_count)
    : index_(index), gateway_(gateway), candidate_count_(candidate_count) {
    if (candidate_count <= 0) {
        throw Error(ErrorCode::invalid_argument, "candidate_count must be positive");
    }
}

std::vector<CandidateMemory> MemoryMaintainer::candidate_memories(const std::string& new_fact,
                                                                  int m) const {
    if (m <= 0) throw Error(ErrorCode::invalid_argument, "candidate_memories: m must be positive");
    if (index_.size() == 0) return {};
    auto ranked = index_.search_filtered(
        gateway_.embed_text(new_fact), m,
        [](const KeyUnit& key) { return key.kind != KeyKind::session_text; });
    std::vector<CandidateMemory> out;
    out.reserve(ranked.size());
    for (const auto& scored : ranked) {
        out.push_back({scored.key_id, index_.find_key(scored.key_id)->text});
    }
    return out;
}

ReconcileLog MemoryMaintainer::reconcile_session(const Session& session,
                                                 const FlatExtraction& extraction,
                                                 const std::set<MemOp>& op_set) {
    return reconcile(session, extraction, op_set, op_set.count(MemOp::add) > 0);
}

ReconcileLog MemoryMaintainer::ablation_without_add(const Session& session,
                                                    const FlatExtraction& extraction) {
    return reconcile(session, extraction, {MemOp::update, MemOp::noop}, false);
}

ReconcileLog MemoryMaintainer::reconcile(const Session& session, const FlatExtraction& extraction,
                                         const std::set<MemOp>& op_set, bool allow_add) {
    ReconcileLog log;
    log.session_id = session.session_id;
    const KeyStrategy strategy = index_.strategy();

    if (strategy == KeyStrategy::graph_entities) {
        throw Error(ErrorCode::invalid_argument, "graph maintenance lives in the graph index");
    }

    // session_only keeps no fact-level memory; the session key is the
    // only artifact.
    if (strategy == KeyStrategy::session_only) {
        if (allow_add && !index_.find_key(session.session_id + "#session")) {
            for (auto& key : build_keys(session, extraction, strategy, gateway_)) {
                index_.add_key(std::move(key));
            }
        }
        return log;
    }

    const bool add_only = op_set == std::set<MemOp>{MemOp::add};
    const bool merged = is_merge_strategy(strategy);
    FlatExtraction record{extraction.summary, {}, extraction.keywords};

    for (size_t fact_index = 0; fact_index < extraction.facts.size(); ++fact_index) {
        const std::string& fact = extraction.facts[fact_index];

        auto apply_add = [&](std::string rationale) {
            if (!allow_add) {
                log.record(fact, MemOpDecision{MemOp::noop, std::nullopt, std::nullopt,
                                               "forced noop (add disabled)"});
                return;
            }
            if (merged) {
                record.facts.push_back(fact);
            } else {
                KeyUnit key;
                key.key_id = session.session_id + "#fact" + std::to_string(fact_index);
                int bump = 2;
                while (index_.find_key(key.key_id)) {
                    key.key_id = session.session_id + "#fact" + std::to_string(fact_index) + "+" +
                                 std::to_string(bump++);
                }
                key.kind = KeyKind::fact;
                key.text = fact;
                key.embedding = gateway_.embed_text(fact);
                key.provenance_session_ids = {session.session_id};
                index_.add_key(std::move(key));
            }
            log.record(fact,
                       MemOpDecision{MemOp::add, std::nullopt, std::nullopt, std::move(rationale)});
        };

        if (add_only) {
            apply_add("unconditional add");
            continue;
        }

        auto candidates = candidate_memories(fact, candidate_count_);
        MemOpDecision decision =
            candidates.empty()
                ? MemOpDecision{MemOp::add, std::nullopt, std::nullopt, "no candidates"}
                : gateway_.decide_mem_op(fact, candidates);

        if (!op_set.count(decision.op)) {
            apply_add("degraded to add: op '" + std::string(to_string(decision.op)) +
                      "' not permitted");
            continue;
        }

        switch (decision.op) {
            case MemOp::add:
                apply_add(std::move(decision.rationale));
                break;
            case MemOp::noop:
                log.record(fact, std::move(decision));
                break;
            case MemOp::update: {
                const KeyUnit* target = index_.find_key(*decision.target_key_id);
                if (!target) {
                    apply_add("degraded to add: update target vanished");
                    break;
                }
                const std::string revised = *decision.revised_text;
                if (merged && (target->kind == KeyKind::fact || target->kind == KeyKind::merged_all)) {
                    apply_update_merged(*decision.target_key_id, revised, session.session_id);
                } else {
                    // Whole-key replacement (separate keys; summary/keyword
                    // keys in merge strategies).
                    index_.update_key(*decision.target_key_id, revised,
                                      gateway_.embed_text(revised), session.session_id);
                }
                log.record(fact, std::move(decision));
                break;
            }
            case MemOp::del: {
                if (!index_.find_key(*decision.target_key_id)) {
                    apply_add("degraded to add: delete target vanished");
                    break;
                }
                index_.remove_key(*decision.target_key_id);
                log.record(fact, std::move(decision));
                break;
            }
        }
    }

    // First reconcile of a session materializes its non-fact keys (and the
    // merged keys in merge strategies). Later passes never re-add them.
    if (allow_add && !records_.count(session.session_id)) {
        if (merged) {
            records_[session.session_id] = record;
            for (auto& key : build_keys(session, record, strategy, gateway_)) {
                if (!index_.find_key(key.key_id)) index_.add_key(std::move(key));
            }
        } else {
            records_[session.session_id] = FlatExtraction{extraction.summary, {}, extraction.keywords};
            FlatExtraction side{extraction.summary, {}, extraction.keywords};
            if (!side.summary.empty() || !side.keywords.empty()) {
                for (auto& key : build_keys(session, side, strategy, gateway_)) {
                    if (!index_.find_key(key.key_id)) index_.add_key(std::move(key));
                }
            }
        }
    }
    return log;
}

void MemoryMaintainer::apply_update_merged(const std::string& target_key_id,
                                           const std::string& revised_text,
                                           const std::string& session_id) {
    const KeyUnit* target = index_.find_key(target_key_id);
    const std::string owner = target->provenance_session_ids.front();
    auto record_it = records_.find(owner);
    if (record_it == records_.end()) {
        // No constituent record (key built outside maintenance): fall back
        // to whole-key replacement.
        index_.update_key(target_key_id, revised_text, gateway_.embed_text(revised_text),
                          session_id);
        return;
    }
    auto& facts = record_it->second.facts;
    size_t best = facts.size();
    size_t best_len = 2;  // require at least the 3-token prefix
    for (size_t i = 0; i < facts.size(); ++i) {
        size_t len = shared_prefix_tokens(facts[i], revised_text);
        if (len > best_len) {
            best_len = len;
            best = i;
        }
    }
    if (best < facts.size()) {
        facts[best] = revised_text;
    } else {
        facts.push_back(revised_text);
    }
    rebuild_merged_keys(owner, session_id);
}

void MemoryMaintainer::rebuild_merged_keys(const std::string& owner_session_id,
                                           const std::string& provenance_session_id) {
    const FlatExtraction& record = records_.at(owner_session_id);
    struct Component {
        std::string key_id;
        KeyKind kind;
        std::string text;
    };
    std::vector<Component> components;

    std::vector<std::string> all_parts;
    if (!record.summary.empty()) all_parts.push_back(record.summary);
    for (const auto& f : record.facts) all_parts.push_back(f);
    for (const auto& k : record.keywords) all_parts.push_back(k);

    switch (index_.strategy()) {
        case KeyStrategy::merge_all:
        case KeyStrategy::session_plus_merged:
            components.push_back(
                {owner_session_id + "#merged", KeyKind::merged_all, join(all_parts, "\n")});
            break;
        case KeyStrategy::merge_by_type:
            components.push_back(
                {owner_session_id + "#facts", KeyKind::fact,
                 join(record.facts, FlatIndex::kFactJoin)});
            break;
        default:
            return;
    }
    for (auto& component : components) {
        if (normalize_whitespace(component.text).empty()) continue;
        if (index_.find_key(component.key_id)) {
            index_.update_key(component.key_id, component.text,
                              gateway_.embed_text(component.text), provenance_session_id);
        } else {
            KeyUnit key;
            key.key_id = component.key_id;
            key.kind = component.kind;
            key.text = component.text;
            key.embedding = gateway_.embed_text(component.text);
            key.provenance_session_ids = {owner_session_id};
            if (provenance_session_id != owner_session_id) {
                key.provenance_session_ids.push_back(provenance_session_id);
            }
            index_.add_key(std::move(key));
        }
    }
}

}  // namespace dialogmem
