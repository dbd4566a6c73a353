#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dialogmem/backend.hpp"
#include "dialogmem/core.hpp"
#include "dialogmem/eval.hpp"
#include "dialogmem/flat_index.hpp"
#include "dialogmem/graph_index.hpp"
#include "dialogmem/graph_retrieval.hpp"
#include "dialogmem/maintenance.hpp"

namespace dialogmem {

struct BackendChoice {
    EmbedderKind kind = EmbedderKind::hash_mock;
    int dimension = 256;
    std::string chat_model;   // remote only
    std::string embed_model;  // remote only
};

/// A pipeline configuration plus the backend/answering choices that select
/// one full experimental setting.
struct EngineConfig {
    PipelineConfig pipeline;
    BackendChoice backend;
    AnswerMode answer_mode = AnswerMode::direct;
};

EngineConfig engine_config_from_json(const std::string& json_text);
std::string engine_config_to_json(const EngineConfig& config);
EngineConfig engine_config_from_file(const std::string& path);

/// Immutable record written once per build: configuration snapshot, corpus
/// fingerprint, backend counters, and timings.
struct RunManifest {
    std::string config_json;
    std::string corpus_name;
    std::string corpus_fingerprint;
    size_t session_count = 0;
    EmbedderSpec embedder;
    CounterSnapshot counters;
    double extraction_minutes = 0.0;
    size_t prejudge_skipped_sessions = 0;
    std::string artifact_fingerprint;  // hash over index files (manifest excluded)

    std::string to_json() const;
    static RunManifest from_json(const std::string& json_text);
};

struct BuildOptions {
    std::string cache_dir;  // empty: no response cache
    int max_parallel = 16;
};

class AnswerJudge {
public:
    virtual ~AnswerJudge() = default;
    /// nullopt = judgement unavailable (question counted as unjudged).
    virtual std::optional<bool> judge(const std::string& question, const std::string& gold,
                                      const std::string& answer) = 0;
};

/// Correct iff the gold answer appears in the generated answer after
/// normalization (lowercased alphanumeric token sequence).
class ContainmentJudge : public AnswerJudge {
public:
    std::optional<bool> judge(const std::string& question, const std::string& gold,
                              const std::string& answer) override;
};

/// Delegates judging to the backend gateway (cached; remote when the
/// backend is remote). Backend failures surface as unjudged.
class GatewayJudge : public AnswerJudge {
public:
    explicit GatewayJudge(BackendGateway& gateway) : gateway_(gateway) {}
    std::optional<bool> judge(const std::string& question, const std::string& gold,
                              const std::string& answer) override;

private:
    BackendGateway& gateway_;
};

/// One built index directory: construction, retrieval, and evaluation.
class Engine {
public:
    /// Builds the configured index over a corpus into out_dir (which must
    /// not already contain files). Partial artifacts are removed on
    /// failure. Concurrent builds are excluded by a lock file.
    static RunManifest build(const LoadedBenchmark& benchmark, const EngineConfig& config,
                             const std::string& out_dir, const BuildOptions& options = {});
    static RunManifest build_from_file(const std::string& corpus_path, const EngineConfig& config,
                                       const std::string& out_dir,
                                       const BuildOptions& options = {});

    static Engine open(const std::string& index_dir, const BuildOptions& options = {});

    struct Retrieved {
        std::string value_id;
        ValueKind kind = ValueKind::session;
        double score = 0.0;  // cosine (flat) or score_e (graph)
        std::optional<int> score_g;
        std::optional<double> score_s;
    };
    struct Trace {
        std::vector<std::pair<std::string, double>> seeds;
        std::vector<std::string> expanded;
    };

    /// k/n overrides <= 0 mean "use the config values".
    std::vector<Retrieved> retrieve(const std::string& query_text, int k_override = 0,
                                    int n_override = 0, Trace* trace = nullptr);

    EvalReport run_retrieval_eval(const std::vector<BenchmarkQuestion>& questions);
    EvalReport run_qa_eval(const std::vector<BenchmarkQuestion>& questions, AnswerJudge* judge);

    struct Stats {
        std::string index_kind;
        size_t key_count = 0;
        size_t node_count = 0;
        size_t edge_count = 0;
        size_t session_count = 0;
        int dimension = 0;
        std::string to_json() const;
    };
    Stats stats() const;

    /// Payload text a value contributes to answering context.
    std::string value_text(const ValueRef& ref) const;

    const EngineConfig& config() const { return config_; }
    const Corpus& corpus() const { return corpus_; }
    const RunManifest& manifest() const { return manifest_; }
    BackendGateway& gateway() { return *gateway_; }
    const FlatIndex* flat_index() const { return flat_ ? &*flat_ : nullptr; }
    const MemoryGraph* graph_index() const { return graph_ ? &*graph_ : nullptr; }

private:
    Engine() = default;

    std::vector<Retrieved> retrieve_embedded(const MemQuery& query, int k, int n,
                                             ValueKind value_kind, Trace* trace);

    EngineConfig config_;
    Corpus corpus_;
    RunManifest manifest_;
    std::optional<FlatIndex> flat_;
    std::optional<MemoryGraph> graph_;
    std::shared_ptr<BackendGateway> gateway_;
};

/// Builds the gateway for a backend choice; remote credentials come from
/// the environment (DIALOGMEM_API_KEY / OPENAI_API_KEY, DIALOGMEM_BASE_URL
/// / OPENAI_BASE_URL).
std::shared_ptr<BackendGateway> make_gateway(const BackendChoice& backend,
                                             const std::string& cache_dir, int max_parallel);

}  // namespace dialogmem
