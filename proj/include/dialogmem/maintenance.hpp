#pragma once

#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "dialogmem/backend.hpp"
#include "dialogmem/flat_index.hpp"

namespace dialogmem {

struct ReconcileEntry {
    std::string fact_text;
    MemOpDecision decision;
};

/// Append-only record of what one session's facts did to the index.
/// Counters always equal the multiset of applied decisions.
struct ReconcileLog {
    std::string session_id;
    std::vector<ReconcileEntry> decisions;
    int adds = 0;
    int updates = 0;
    int noops = 0;
    int deletes = 0;

    void record(const std::string& fact, MemOpDecision decision);
};

std::string reconcile_log_to_jsonl(const ReconcileLog& log);

/// Applies the maintenance operation set as sessions arrive. The single
/// writer for its index; decisions may hit the backend concurrently but
/// mutations are applied strictly in (session order, fact order).
class MemoryMaintainer {
public:
    MemoryMaintainer(FlatIndex& index, BackendGateway& gateway, int candidate_count = 5);

    /// Top-m existing derived keys by cosine (session-text keys excluded).
    std::vector<CandidateMemory> candidate_memories(const std::string& new_fact, int m) const;

    /// Reconciles one session's extraction under op_set. With {add} every
    /// fact is appended unconditionally; otherwise each fact is decided
    /// against candidate_memories and applied. A decision whose target has
    /// vanished is logged and degraded to add.
    ReconcileLog reconcile_session(const Session& session, const FlatExtraction& extraction,
                                   const std::set<MemOp>& op_set);

    /// The restricted update/noop mode: add decisions are discarded and
    /// counted as forced noops; no new keys are ever created.
    ReconcileLog ablation_without_add(const Session& session, const FlatExtraction& extraction);

    int candidate_count() const { return candidate_count_; }

private:
    ReconcileLog reconcile(const Session& session, const FlatExtraction& extraction,
                           const std::set<MemOp>& op_set, bool allow_add);

    void apply_update_merged(const std::string& target_key_id, const std::string& revised_text,
                             const std::string& session_id);
    void rebuild_merged_keys(const std::string& owner_session_id,
                             const std::string& provenance_session_id);

    FlatIndex& index_;
    BackendGateway& gateway_;
    int candidate_count_;
    // Per-session extraction records backing merged-key rebuilds.
    std::unordered_map<std::string, FlatExtraction> records_;
};

}  // namespace dialogmem
