#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dialogmem/cache.hpp"
#include "dialogmem/core.hpp"

namespace dialogmem {

// ---- backend data types ---------------------------------------------------

enum class EmbedderKind { remote, hash_mock };

struct EmbedderSpec {
    std::string name;
    int dimension = 256;
    EmbedderKind kind = EmbedderKind::hash_mock;
};

/// Session-level derived information: one summary, deduplicated factual
/// statements, keywords. All three members are always present.
struct FlatExtraction {
    std::string summary;
    std::vector<std::string> facts;
    std::vector<std::string> keywords;

    /// Drops duplicate facts (compared after whitespace normalization),
    /// keeping first occurrences.
    void dedupe_facts();
};

struct MemOpDecision {
    MemOp op = MemOp::add;
    std::optional<std::string> target_key_id;
    std::optional<std::string> revised_text;
    std::string rationale;
};

struct CandidateMemory {
    std::string key_id;
    std::string text;
};

enum class AnswerMode { direct, chain_of_note };

/// Checks the MemOpDecision structural invariants against the candidate set
/// it was produced from. Returns an explanation for the first violation.
std::optional<std::string> decision_violation(const MemOpDecision& decision,
                                              const std::vector<CandidateMemory>& candidates);

// ---- backend interfaces -----------------------------------------------------

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual const EmbedderSpec& spec() const = 0;
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

class FlatExtractor {
public:
    virtual ~FlatExtractor() = default;
    virtual FlatExtraction extract(const Session& session) = 0;
    virtual std::string version() const = 0;  // cache-key component
};

class GraphExtractor {
public:
    virtual ~GraphExtractor() = default;
    /// Returns raw delimiter-grammar text (see extraction_parser).
    virtual std::string extract(const Session& session, Date dialogue_time) = 0;
    virtual std::string version() const = 0;
};

class PrejudgeFilter {
public:
    virtual ~PrejudgeFilter() = default;
    virtual bool keep(const std::string& chunk) = 0;
    virtual std::string version() const = 0;
};

class MemOpDecider {
public:
    virtual ~MemOpDecider() = default;
    virtual MemOpDecision decide(const std::string& new_fact,
                                 const std::vector<CandidateMemory>& candidates) = 0;
    virtual std::string version() const = 0;
};

class AnswerGenerator {
public:
    virtual ~AnswerGenerator() = default;
    virtual std::string answer(const MemQuery& question, const std::vector<std::string>& contexts,
                               AnswerMode mode) = 0;
    virtual std::string version() const = 0;
};

class GroupLinkJudge {
public:
    virtual ~GroupLinkJudge() = default;
    virtual bool should_link(const std::string& a_text, const std::string& b_text,
                             double cosine) = 0;
    virtual std::string version() const = 0;
};

class DescriptionSummarizer {
public:
    virtual ~DescriptionSummarizer() = default;
    virtual std::string summarize(const std::vector<std::string>& descriptions,
                                  size_t char_limit) = 0;
    virtual std::string version() const = 0;
};

class AnswerJudgeBackend {
public:
    virtual ~AnswerJudgeBackend() = default;
    /// True when `answer` is correct given the gold answer.
    virtual bool judge(const std::string& question, const std::string& gold,
                       const std::string& answer) = 0;
    virtual std::string version() const = 0;
};

// ---- mock implementations ----------------------------------------------------

/// Feature-hashing embedder: lowercase alphanumeric tokens hashed into D
/// buckets with signed hashing, L2-normalized. Pure and deterministic.
class HashEmbedder : public Embedder {
public:
    explicit HashEmbedder(int dimension = 256);
    const EmbedderSpec& spec() const override { return spec_; }
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

    /// Bucket/sign assignment shared with test oracles.
    static std::pair<size_t, float> token_slot(const std::string& token, int dimension);

private:
    EmbedderSpec spec_;
};

/// Rule-based extractor: summary = first user sentence; facts = user
/// sentences containing a digit or a copular verb; keywords = distinct
/// non-stopword tokens in first-seen order.
class MockFlatExtractor : public FlatExtractor {
public:
    FlatExtraction extract(const Session& session) override;
    std::string version() const override { return "mock-flat-v1"; }
};

/// Rule-based entity/relation extractor emitting the delimiter grammar.
/// Entities: capitalized token runs (type Place), bare numbers (Statistic),
/// resolvable time phrases (Time), plus a synthetic USER node; every entity
/// is related to USER with strength 5.
class MockGraphExtractor : public GraphExtractor {
public:
    std::string extract(const Session& session, Date dialogue_time) override;
    std::string version() const override { return "mock-graph-v1"; }
};

/// Keep iff the chunk has at least one sentence with >= 4 tokens.
class MockPrejudge : public PrejudgeFilter {
public:
    bool keep(const std::string& chunk) override;
    std::string version() const override { return "mock-prejudge-v1"; }
};

/// Exact normalized match -> noop; matching 3-token prefix with different
/// remainder -> update against that candidate; otherwise add.
class MockMemOpDecider : public MemOpDecider {
public:
    MemOpDecision decide(const std::string& new_fact,
                         const std::vector<CandidateMemory>& candidates) override;
    std::string version() const override { return "mock-memop-v1"; }
};

/// Returns the first context line containing all question content words,
/// else "I don't know".
class MockAnswerGenerator : public AnswerGenerator {
public:
    std::string answer(const MemQuery& question, const std::vector<std::string>& contexts,
                       AnswerMode mode) override;
    std::string version() const override { return "mock-answer-v1"; }
};

/// Links iff cosine >= 0.5.
class MockGroupLinkJudge : public GroupLinkJudge {
public:
    bool should_link(const std::string& a_text, const std::string& b_text,
                     double cosine) override;
    std::string version() const override { return "mock-link-v1"; }
};

/// Concatenates and truncates to the character limit.
class MockDescriptionSummarizer : public DescriptionSummarizer {
public:
    std::string summarize(const std::vector<std::string>& descriptions,
                          size_t char_limit) override;
    std::string version() const override { return "mock-summ-v1"; }
};

/// Correct iff the normalized gold string appears in the normalized answer.
class MockAnswerJudge : public AnswerJudgeBackend {
public:
    bool judge(const std::string& question, const std::string& gold,
               const std::string& answer) override;
    std::string version() const override { return "mock-judge-v1"; }
};

// ---- counters -----------------------------------------------------------------

struct CounterSnapshot {
    uint64_t backend_calls = 0;  // executed (non-cache-hit) backend invocations
    uint64_t embed_calls = 0;
    uint64_t chat_calls = 0;
    uint64_t extraction_calls = 0;  // flat + graph extraction executions
    uint64_t prejudge_calls = 0;
    uint64_t prejudge_skips = 0;
    uint64_t cache_hits = 0;
    uint64_t cache_misses = 0;
    uint64_t tokens_in = 0;
    uint64_t tokens_out = 0;
};

// ---- gateway --------------------------------------------------------------------

struct BackendSet {
    std::unique_ptr<Embedder> embedder;
    std::unique_ptr<FlatExtractor> flat_extractor;
    std::unique_ptr<GraphExtractor> graph_extractor;
    std::unique_ptr<PrejudgeFilter> prejudge;
    std::unique_ptr<MemOpDecider> mem_op_decider;
    std::unique_ptr<AnswerGenerator> answer_generator;
    std::unique_ptr<GroupLinkJudge> link_judge;
    std::unique_ptr<DescriptionSummarizer> summarizer;
    std::unique_ptr<AnswerJudgeBackend> answer_judge;
};

/// Builds a fully mocked backend set (offline, deterministic).
BackendSet make_mock_backends(int embed_dimension = 256);

/// Single entry point for every model-backed operation. Owns the response
/// cache and the call counters; callers never talk to backends directly.
class BackendGateway {
public:
    BackendGateway(BackendSet backends, std::shared_ptr<ResponseCache> cache = nullptr,
                   int max_parallel = 16);
    ~BackendGateway();

    const EmbedderSpec& embedder_spec() const;

    std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts);
    EmbeddingVector embed_text(const std::string& text);

    FlatExtraction extract_flat(const Session& session);
    std::string extract_graph(const Session& session, Date dialogue_time);

    /// Fail-open: backend errors report keep so no memory is silently lost.
    bool prejudge(const std::string& chunk);

    /// Invalid decisions (unknown target, missing revised text) degrade to
    /// add rather than propagating a protocol error.
    MemOpDecision decide_mem_op(const std::string& new_fact,
                                const std::vector<CandidateMemory>& candidates);

    std::string generate_answer(const MemQuery& question,
                                const std::vector<std::string>& contexts, AnswerMode mode);

    bool should_link(const std::string& a_text, const std::string& b_text, double cosine);

    std::string summarize_descriptions(const std::vector<std::string>& descriptions,
                                       size_t char_limit);

    /// Backend errors propagate; the caller records the question unjudged.
    bool judge_answer(const std::string& question, const std::string& gold,
                      const std::string& answer);

    CounterSnapshot counters() const;
    void reset_counters();

    int max_parallel() const { return max_parallel_; }
    ResponseCache* cache() { return cache_.get(); }

private:
    std::string cached(const std::string& op, const std::string& version,
                       const std::string& payload, const std::function<std::string()>& call);

    BackendSet backends_;
    std::shared_ptr<ResponseCache> cache_;
    int max_parallel_;
    struct Counters;
    std::unique_ptr<Counters> counters_;
};

}  // namespace dialogmem
