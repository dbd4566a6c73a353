#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "dialogmem/core.hpp"

namespace dialogmem {

struct BenchmarkQuestion {
    std::string question_id;
    std::string question_text;
    std::optional<Date> question_date;
    std::string answer_text;
    std::vector<std::string> evidence_session_ids;  // canonical ids
    std::string question_type;
    bool flagged = false;  // zero resolvable evidence: excluded from retrieval metrics
    std::vector<std::string> warnings;
};

struct MemoryPoint {
    std::string text;
    std::string type;
};

class Corpus {
public:
    Corpus() = default;
    explicit Corpus(std::string name) : name_(std::move(name)) {}

    const std::string& name() const { return name_; }
    const std::vector<Session>& sessions() const { return sessions_; }
    const Session* find(const std::string& session_id) const;
    void add(Session session);
    size_t size() const { return sessions_.size(); }

    /// Stable content hash over ids, dates, and turns.
    std::string fingerprint() const;

private:
    std::string name_;
    std::vector<Session> sessions_;
    std::unordered_map<std::string, size_t> by_id_;
};

struct LoadedBenchmark {
    Corpus corpus;
    std::vector<BenchmarkQuestion> questions;
    // Optional ground-truth memory points keyed by canonical session id
    // (consumed by external judges, not by retrieval).
    std::map<std::string, std::vector<MemoryPoint>> memory_points;
    std::vector<std::string> warnings;
};

/// Loads the public multi-question benchmark layout: a JSON array of
/// entries carrying question fields plus per-question haystack sessions.
/// Repeated sessions are deduplicated by content; ids are canonicalized.
LoadedBenchmark load_longmemeval(const std::string& path, const std::string& corpus_name = "");

/// Loads the plain corpus layout: {"name", "sessions": [...], "questions":
/// [...]} with optional per-session memory_points.
LoadedBenchmark load_session_corpus(const std::string& path);

/// Sniffs the document shape and dispatches to the right loader.
LoadedBenchmark load_benchmark(const std::string& path);

// ---- metrics ----------------------------------------------------------------

/// |top-k of retrieved ∩ gt| / |gt|. Empty gt is an input error.
double recall_at_k(const std::vector<std::string>& retrieved, const std::set<std::string>& gt,
                   int k);

/// Binary-relevance NDCG: DCG = sum over hit ranks i (1-indexed, i <= k) of
/// 1/log2(i+1), normalized by the ideal DCG for |gt| relevant items at k.
double ndcg_at_k(const std::vector<std::string>& retrieved, const std::set<std::string>& gt,
                 int k);

// ---- reports -------------------------------------------------------------------

struct QuestionResult {
    std::string question_id;
    std::string question_type;
    std::vector<std::string> retrieved;  // session ids in rank order
    std::vector<double> scores;
    double recall_at_5 = 0.0;
    double recall_at_10 = 0.0;
    double ndcg_at_5 = 0.0;
    double ndcg_at_10 = 0.0;
    bool flagged = false;
    std::optional<std::string> answer;
    std::optional<bool> correct;  // nullopt = unjudged
    std::vector<std::string> warnings;
};

struct EvalReport {
    std::string config_json;
    std::string corpus_fingerprint;
    std::vector<QuestionResult> per_question;  // sorted by question_id
    int evaluated_questions = 0;  // non-flagged
    int flagged_questions = 0;
    double recall_at_5 = 0.0;  // means over evaluated questions
    double recall_at_10 = 0.0;
    double ndcg_at_5 = 0.0;
    double ndcg_at_10 = 0.0;
    std::optional<double> answer_accuracy;
    int judged_questions = 0;
    int unjudged_questions = 0;
    std::map<std::string, int> counts_by_type;
    std::map<std::string, double> recall_at_5_by_type;
    double retrieval_ms_per_query = 0.0;
    std::string value_kind = "session";

    /// Recomputes the aggregate means from per_question.
    void finalize();

    std::string to_json() const;

    /// Flat one-row table: R@5, R@10, N@5, N@10, accuracy by value kind.
    std::string to_table() const;
};

}  // namespace dialogmem
