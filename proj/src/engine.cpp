#include "dialogmem/engine.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>

#include <nlohmann/json.hpp>

#include "dialogmem/extraction_parser.hpp"
#include "dialogmem/remote.hpp"

namespace fs = std::filesystem;

namespace dialogmem {

// ---- configuration ------------------------------------------------------------

EngineConfig engine_config_from_json(const std::string& json_text) {
    EngineConfig config;
    config.pipeline = pipeline_config_from_json(json_text);

    nlohmann::json j = nlohmann::json::parse(json_text);
    if (j.contains("backend")) {
        const auto& b = j.at("backend");
        std::string kind = b.value("kind", "hash_mock");
        if (kind == "remote") {
            config.backend.kind = EmbedderKind::remote;
        } else if (kind == "hash_mock") {
            config.backend.kind = EmbedderKind::hash_mock;
        } else {
            throw Error(ErrorCode::config, "config: unknown backend kind '" + kind + "'");
        }
        config.backend.dimension = b.value("dimension", config.backend.dimension);
        config.backend.chat_model = b.value("chat_model", "");
        config.backend.embed_model = b.value("embed_model", "");
    }
    if (j.contains("answer_mode")) {
        std::string mode = j.at("answer_mode").get<std::string>();
        if (mode == "direct") {
            config.answer_mode = AnswerMode::direct;
        } else if (mode == "chain_of_note") {
            config.answer_mode = AnswerMode::chain_of_note;
        } else {
            throw Error(ErrorCode::config, "config: unknown answer_mode '" + mode + "'");
        }
    }
    return config;
}

std::string engine_config_to_json(const EngineConfig& config) {
    auto j = nlohmann::ordered_json::parse(pipeline_config_to_json(config.pipeline));
    j["backend"] = {{"kind", config.backend.kind == EmbedderKind::remote ? "remote" : "hash_mock"},
                    {"dimension", config.backend.dimension},
                    {"chat_model", config.backend.chat_model},
                    {"embed_model", config.backend.embed_model}};
    j["answer_mode"] = config.answer_mode == AnswerMode::direct ? "direct" : "chain_of_note";
    return j.dump(2);
}

EngineConfig engine_config_from_file(const std::string& path) {
    return engine_config_from_json(read_file(path));
}

// ---- manifest --------------------------------------------------------------------

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["config"] = nlohmann::ordered_json::parse(config_json);
    j["corpus"] = {{"name", corpus_name},
                   {"fingerprint", corpus_fingerprint},
                   {"session_count", session_count}};
    j["embedder"] = {{"name", embedder.name},
                     {"dimension", embedder.dimension},
                     {"kind", embedder.kind == EmbedderKind::remote ? "remote" : "hash_mock"}};
    j["counters"] = {{"backend_calls", counters.backend_calls},
                     {"embed_calls", counters.embed_calls},
                     {"chat_calls", counters.chat_calls},
                     {"extraction_calls", counters.extraction_calls},
                     {"prejudge_calls", counters.prejudge_calls},
                     {"prejudge_skips", counters.prejudge_skips},
                     {"cache_hits", counters.cache_hits},
                     {"cache_misses", counters.cache_misses},
                     {"tokens_in", counters.tokens_in},
                     {"tokens_out", counters.tokens_out}};
    j["timings"] = {{"extraction_minutes", extraction_minutes}};
    j["prejudge_skipped_sessions"] = prejudge_skipped_sessions;
    j["artifact_fingerprint"] = artifact_fingerprint;
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const std::exception& e) {
        throw Error(ErrorCode::format, "unreadable manifest: " + std::string(e.what()));
    }
    RunManifest m;
    m.config_json = j.at("config").dump(2);
    m.corpus_name = j.at("corpus").at("name").get<std::string>();
    m.corpus_fingerprint = j.at("corpus").at("fingerprint").get<std::string>();
    m.session_count = j.at("corpus").at("session_count").get<size_t>();
    m.embedder.name = j.at("embedder").at("name").get<std::string>();
    m.embedder.dimension = j.at("embedder").at("dimension").get<int>();
    m.embedder.kind = j.at("embedder").at("kind").get<std::string>() == "remote"
                          ? EmbedderKind::remote
                          : EmbedderKind::hash_mock;
    const auto& c = j.at("counters");
    m.counters.backend_calls = c.value("backend_calls", 0ull);
    m.counters.embed_calls = c.value("embed_calls", 0ull);
    m.counters.chat_calls = c.value("chat_calls", 0ull);
    m.counters.extraction_calls = c.value("extraction_calls", 0ull);
    m.counters.prejudge_calls = c.value("prejudge_calls", 0ull);
    m.counters.prejudge_skips = c.value("prejudge_skips", 0ull);
    m.counters.cache_hits = c.value("cache_hits", 0ull);
    m.counters.cache_misses = c.value("cache_misses", 0ull);
    m.counters.tokens_in = c.value("tokens_in", 0ull);
    m.counters.tokens_out = c.value("tokens_out", 0ull);
    m.extraction_minutes = j.at("timings").value("extraction_minutes", 0.0);
    m.prejudge_skipped_sessions = j.value("prejudge_skipped_sessions", size_t(0));
    m.artifact_fingerprint = j.value("artifact_fingerprint", "");
    return m;
}

// ---- gateway factory ----------------------------------------------------------------

std::shared_ptr<BackendGateway> make_gateway(const BackendChoice& backend,
                                             const std::string& cache_dir, int max_parallel) {
    std::shared_ptr<ResponseCache> cache;
    if (!cache_dir.empty()) cache = std::make_shared<ResponseCache>(cache_dir);
    BackendSet set;
    if (backend.kind == EmbedderKind::hash_mock) {
        set = make_mock_backends(backend.dimension);
    } else {
        set = make_remote_backends(
            RemoteConfig::from_env(backend.chat_model, backend.embed_model, backend.dimension));
    }
    return std::make_shared<BackendGateway>(std::move(set), std::move(cache), max_parallel);
}

// ---- build helpers ---------------------------------------------------------------------

namespace {

class BuildLock {
public:
    explicit BuildLock(const std::string& dir) : path_((fs::path(dir) / ".lock").string()) {
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) {
            throw Error(ErrorCode::io,
                        "another build holds the lock for " + dir + " (remove .lock if stale)");
        }
    }
    ~BuildLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            ::unlink(path_.c_str());
        }
    }

private:
    std::string path_;
    int fd_ = -1;
};

void save_sessions(const Corpus& corpus, const std::string& out_dir) {
    std::string lines;
    for (const auto& session : corpus.sessions()) {
        nlohmann::ordered_json j;
        j["session_id"] = session.session_id;
        j["date"] = session.date.str();
        nlohmann::ordered_json turns = nlohmann::ordered_json::array();
        for (const auto& turn : session.turns) {
            turns.push_back({{"role", turn.role == Role::user ? "user" : "assistant"},
                             {"text", turn.text}});
        }
        j["turns"] = std::move(turns);
        lines += j.dump() + "\n";
    }
    write_file((fs::path(out_dir) / "sessions.jsonl").string(), lines);
}

Corpus load_sessions(const std::string& index_dir, const std::string& name) {
    Corpus corpus(name);
    for (const auto& line : read_lines((fs::path(index_dir) / "sessions.jsonl").string())) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        Session session;
        session.session_id = j.at("session_id").get<std::string>();
        if (auto date = Date::parse(j.at("date").get<std::string>())) session.date = *date;
        int index = 0;
        for (const auto& t : j.at("turns")) {
            Turn turn;
            turn.role = t.at("role").get<std::string>() == "user" ? Role::user : Role::assistant;
            turn.text = t.at("text").get<std::string>();
            turn.turn_index = index++;
            session.turns.push_back(std::move(turn));
        }
        corpus.add(std::move(session));
    }
    return corpus;
}

std::string fingerprint_directory(const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string rel = fs::relative(entry.path(), dir).string();
        if (rel == "manifest.json" || rel == ".lock") continue;
        names.push_back(rel);
    }
    std::sort(names.begin(), names.end());
    std::string acc;
    for (const auto& rel : names) {
        acc += rel + "\x1f" + content_hash(read_file((fs::path(dir) / rel).string())) + "\n";
    }
    return content_hash(acc);
}

}  // namespace

// ---- build ---------------------------------------------------------------------------------

RunManifest Engine::build_from_file(const std::string& corpus_path, const EngineConfig& config,
                                    const std::string& out_dir, const BuildOptions& options) {
    return build(load_benchmark(corpus_path), config, out_dir, options);
}

RunManifest Engine::build(const LoadedBenchmark& benchmark, const EngineConfig& config,
                          const std::string& out_dir, const BuildOptions& options) {
    auto validation = validate_config(config.pipeline);
    if (!validation.ok()) {
        throw Error(ErrorCode::config, "invalid config: " + join(validation.violations, "; "));
    }
    for (const auto& warning : validation.warnings) {
        std::cerr << "warning: " << warning << "\n";
    }

    if (fs::exists(out_dir)) {
        if (!fs::is_directory(out_dir) || !fs::is_empty(out_dir)) {
            throw Error(ErrorCode::invalid_argument,
                        "output directory must be empty or absent: " + out_dir);
        }
    } else {
        fs::create_directories(out_dir);
    }

    bool build_failed = false;
    try {
        BuildLock lock(out_dir);
        auto gateway = make_gateway(config.backend, options.cache_dir, options.max_parallel);
        const Corpus& corpus = benchmark.corpus;
        const PipelineConfig& pipeline = config.pipeline;

        auto t0 = std::chrono::steady_clock::now();
        size_t skipped = 0;

        if (pipeline.index_kind == IndexKind::flat) {
            FlatIndex index(pipeline.key_strategy, gateway->embedder_spec().dimension);
            MemoryMaintainer maintainer(index, *gateway);

            struct Prepared {
                bool keep = true;
                FlatExtraction extraction;
            };
            auto prepared = bounded_parallel_map(
                corpus.sessions(), options.max_parallel, [&](const Session& session) {
                    Prepared p;
                    if (pipeline.prejudge_enabled) p.keep = gateway->prejudge(session.user_text());
                    if (p.keep && pipeline.key_strategy != KeyStrategy::session_only) {
                        p.extraction = gateway->extract_flat(session);
                    }
                    return p;
                });

            std::string log_lines;
            for (size_t i = 0; i < corpus.sessions().size(); ++i) {
                if (!prepared[i].keep) {
                    ++skipped;
                    continue;
                }
                auto log = maintainer.reconcile_session(corpus.sessions()[i],
                                                        prepared[i].extraction, pipeline.op_set);
                log_lines += reconcile_log_to_jsonl(log);
            }
            index.save(out_dir, gateway->embedder_spec());
            write_file((fs::path(out_dir) / "reconcile_log.jsonl").string(), log_lines);
        } else if (pipeline.graph_schema == GraphSchema::sim) {
            struct Prepared {
                bool keep = true;
                FlatExtraction extraction;
            };
            auto prepared = bounded_parallel_map(
                corpus.sessions(), options.max_parallel, [&](const Session& session) {
                    Prepared p;
                    if (pipeline.prejudge_enabled) p.keep = gateway->prejudge(session.user_text());
                    if (p.keep) p.extraction = gateway->extract_flat(session);
                    return p;
                });
            std::vector<KeyUnit> groups;
            for (size_t i = 0; i < corpus.sessions().size(); ++i) {
                if (!prepared[i].keep) {
                    ++skipped;
                    continue;
                }
                auto keys = build_keys(corpus.sessions()[i], prepared[i].extraction,
                                       KeyStrategy::merge_all, *gateway);
                if (!keys.empty()) groups.push_back(std::move(keys.front()));
            }
            auto sim_edges = build_simgraph(groups, *gateway);
            MemoryGraph graph = groups.empty()
                                    ? MemoryGraph(GraphSchema::sim,
                                                  gateway->embedder_spec().dimension)
                                    : build_sim_memory_graph(groups, sim_edges, *gateway);
            graph.save(out_dir, gateway->embedder_spec());
        } else {
            MemoryGraph graph(pipeline.graph_schema, gateway->embedder_spec().dimension);
            struct Prepared {
                bool keep = true;
                std::string raw;
            };
            auto prepared = bounded_parallel_map(
                corpus.sessions(), options.max_parallel, [&](const Session& session) {
                    Prepared p;
                    if (pipeline.prejudge_enabled) p.keep = gateway->prejudge(session.user_text());
                    if (p.keep) p.raw = gateway->extract_graph(session, session.date);
                    return p;
                });
            for (size_t i = 0; i < corpus.sessions().size(); ++i) {
                if (!prepared[i].keep) {
                    ++skipped;
                    continue;
                }
                auto report = parse_extraction(prepared[i].raw);
                graph.ingest_extraction(report, corpus.sessions()[i].session_id, *gateway);
            }
            graph.save(out_dir, gateway->embedder_spec());
        }

        save_sessions(corpus, out_dir);
        auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);

        RunManifest manifest;
        manifest.config_json = engine_config_to_json(config);
        manifest.corpus_name = corpus.name();
        manifest.corpus_fingerprint = corpus.fingerprint();
        manifest.session_count = corpus.size();
        manifest.embedder = gateway->embedder_spec();
        manifest.counters = gateway->counters();
        manifest.extraction_minutes = elapsed.count() / 60.0;
        manifest.prejudge_skipped_sessions = skipped;
        manifest.artifact_fingerprint = fingerprint_directory(out_dir);
        write_file((fs::path(out_dir) / "manifest.json").string(), manifest.to_json());
        return manifest;
    } catch (...) {
        build_failed = true;
        std::error_code ec;
        fs::remove_all(out_dir, ec);  // partial artifacts are never left behind
        throw;
    }
    (void)build_failed;
}

// ---- open / retrieve --------------------------------------------------------------------------

Engine Engine::open(const std::string& index_dir, const BuildOptions& options) {
    if (!fs::exists(fs::path(index_dir) / "manifest.json")) {
        throw Error(ErrorCode::not_found, "no manifest.json in " + index_dir);
    }
    Engine engine;
    engine.manifest_ =
        RunManifest::from_json(read_file((fs::path(index_dir) / "manifest.json").string()));
    engine.config_ = engine_config_from_json(engine.manifest_.config_json);

    nlohmann::json meta =
        nlohmann::json::parse(read_file((fs::path(index_dir) / "metadata.json").string()));
    std::string kind = meta.value("index_kind", "");
    if (kind == "flat") {
        auto loaded = load_flat_index(index_dir);
        engine.flat_.emplace(std::move(loaded.index));
    } else if (kind == "graph") {
        auto loaded = load_memory_graph(index_dir);
        engine.graph_.emplace(std::move(loaded.graph));
    } else {
        throw Error(ErrorCode::format, "unknown index kind: " + kind);
    }
    engine.corpus_ = load_sessions(index_dir, engine.manifest_.corpus_name);
    engine.gateway_ = make_gateway(engine.config_.backend, options.cache_dir,
                                   options.max_parallel);
    if (engine.gateway_->embedder_spec().dimension != engine.manifest_.embedder.dimension) {
        throw Error(ErrorCode::config, "backend dimension does not match the stored index");
    }
    return engine;
}

std::vector<Engine::Retrieved> Engine::retrieve(const std::string& query_text, int k_override,
                                                int n_override, Trace* trace) {
    if (normalize_whitespace(query_text).empty()) {
        throw Error(ErrorCode::invalid_argument, "query text must be non-empty");
    }
    int k = k_override > 0 ? k_override : config_.pipeline.k_keys;
    int n = n_override > 0 ? n_override : config_.pipeline.n_values;
    if (k_override != 0 && k_override <= 0) {
        throw Error(ErrorCode::invalid_argument, "k must be positive");
    }
    if (k < n) n = k;
    MemQuery query{query_text, std::nullopt};
    return retrieve_embedded(query, k, n, config_.pipeline.value_kind, trace);
}

std::vector<Engine::Retrieved> Engine::retrieve_embedded(const MemQuery& query, int k, int n,
                                                         ValueKind value_kind, Trace* trace) {
    if (k <= 0 || n <= 0) {
        throw Error(ErrorCode::invalid_argument, "retrieval requires positive k and n");
    }
    std::vector<Retrieved> out;
    if (flat_) {
        EmbeddingVector qe = gateway_->embed_text(query.text);
        if (flat_->strategy() == KeyStrategy::merge_by_type && value_kind == ValueKind::session) {
            auto sessions = flat_->score_sessions_merge_by_type(qe, k);
            if (sessions.size() > size_t(n)) sessions.resize(size_t(n));
            for (const auto& s : sessions) {
                out.push_back({s.session_id, ValueKind::session, s.final_score, std::nullopt,
                               std::nullopt});
            }
            if (trace) {
                for (const auto& s : sessions) trace->seeds.push_back({s.session_id, s.final_score});
            }
            return out;
        }
        auto ranked = flat_->search(qe, k);
        if (trace) {
            for (const auto& key : ranked) trace->seeds.push_back({key.key_id, key.score});
        }
        for (const auto& value : flat_->map_to_values_scored(ranked, n, value_kind)) {
            out.push_back({value.ref.value_id, value.ref.kind, value.score, std::nullopt,
                           std::nullopt});
        }
        return out;
    }

    PipelineConfig pipeline = config_.pipeline;
    pipeline.k_keys = k;
    pipeline.n_values = n;
    pipeline.value_kind = value_kind;
    RetrievalTrace graph_trace;
    SessionTextFn session_text = [this](const std::string& session_id) -> std::optional<std::string> {
        const Session* session = corpus_.find(session_id);
        if (!session) return std::nullopt;
        return session->user_text();
    };
    dialogmem::retrieve(*graph_, query, pipeline, *gateway_, session_text, &graph_trace);
    for (const auto& value : graph_trace.ranked) {
        out.push_back({value.ref.value_id, value.ref.kind, value.score.score_e,
                       value.score.score_g, value.score.score_s});
    }
    if (trace) {
        for (const auto& seed : graph_trace.activation.seed_node_ids) {
            trace->seeds.push_back({seed, graph_trace.activation.seed_scores.at(seed)});
        }
        trace->expanded = graph_trace.activation.expanded_node_ids;
    }
    return out;
}

// ---- evaluation ---------------------------------------------------------------------------------

EvalReport Engine::run_retrieval_eval(const std::vector<BenchmarkQuestion>& questions) {
    EvalReport report;
    report.config_json = manifest_.config_json;
    report.corpus_fingerprint = manifest_.corpus_fingerprint;
    report.value_kind = to_string(config_.pipeline.value_kind);

    const int k = config_.pipeline.k_keys;
    const int n_eval = std::max(1, std::min(std::max(10, config_.pipeline.n_values), k));

    auto t0 = std::chrono::steady_clock::now();
    report.per_question = bounded_parallel_map(
        questions, gateway_->max_parallel(), [&](const BenchmarkQuestion& q) {
            QuestionResult r;
            r.question_id = q.question_id;
            r.question_type = q.question_type;
            r.flagged = q.flagged;
            r.warnings = q.warnings;
            if (q.flagged) return r;
            MemQuery query{q.question_text, q.question_date};
            std::vector<Retrieved> retrieved;
            try {
                retrieved = retrieve_embedded(query, k, n_eval, ValueKind::session, nullptr);
            } catch (const Error& e) {
                r.warnings.push_back(std::string("retrieval error: ") + e.what());
                r.flagged = true;
                return r;
            }
            for (const auto& value : retrieved) {
                r.retrieved.push_back(value.value_id);
                r.scores.push_back(value.score);
            }
            std::set<std::string> gt(q.evidence_session_ids.begin(),
                                     q.evidence_session_ids.end());
            r.recall_at_5 = recall_at_k(r.retrieved, gt, 5);
            r.recall_at_10 = recall_at_k(r.retrieved, gt, 10);
            r.ndcg_at_5 = ndcg_at_k(r.retrieved, gt, 5);
            r.ndcg_at_10 = ndcg_at_k(r.retrieved, gt, 10);
            return r;
        });
    auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0);
    size_t evaluated = 0;
    for (const auto& q : report.per_question) {
        if (!q.flagged) ++evaluated;
    }
    report.retrieval_ms_per_query = evaluated ? elapsed.count() / double(evaluated) : 0.0;
    report.finalize();
    return report;
}

EvalReport Engine::run_qa_eval(const std::vector<BenchmarkQuestion>& questions,
                               AnswerJudge* judge) {
    EvalReport report = run_retrieval_eval(questions);

    std::unordered_map<std::string, const BenchmarkQuestion*> by_id;
    for (const auto& q : questions) by_id[q.question_id] = &q;

    auto answers = bounded_parallel_map(
        report.per_question, gateway_->max_parallel(), [&](const QuestionResult& r) {
            std::pair<std::string, std::optional<bool>> out{"", std::nullopt};
            const BenchmarkQuestion* q = by_id.at(r.question_id);
            MemQuery query{q->question_text, q->question_date};
            std::vector<std::string> contexts;
            try {
                auto retrieved =
                    retrieve_embedded(query, config_.pipeline.k_keys, config_.pipeline.n_values,
                                      config_.pipeline.value_kind, nullptr);
                for (const auto& value : retrieved) {
                    contexts.push_back(value_text(ValueRef{value.value_id, value.kind,
                                                           value.value_id}));
                }
            } catch (const Error&) {
                contexts.clear();
            }
            out.first = gateway_->generate_answer(query, contexts, config_.answer_mode);
            if (judge) {
                try {
                    out.second = judge->judge(q->question_text, q->answer_text, out.first);
                } catch (const Error&) {
                    out.second = std::nullopt;  // unjudged
                }
            }
            return out;
        });
    for (size_t i = 0; i < report.per_question.size(); ++i) {
        report.per_question[i].answer = answers[i].first;
        report.per_question[i].correct = answers[i].second;
    }
    report.finalize();
    return report;
}

// ---- misc -----------------------------------------------------------------------------------------

std::string Engine::value_text(const ValueRef& ref) const {
    if (ref.kind == ValueKind::session) {
        const Session* session = corpus_.find(ref.payload);
        return session ? session->user_text() : std::string();
    }
    if (flat_) {
        const KeyUnit* key = flat_->find_key(ref.payload);
        return key ? key->text : std::string();
    }
    if (graph_) {
        const GraphNode* node = graph_->find_node(ref.payload);
        if (!node) return {};
        if (node->descriptions.empty()) return node->canonical_name;
        std::vector<std::string> parts;
        parts.reserve(node->descriptions.size() + 1);
        parts.push_back(node->canonical_name);
        for (const auto& d : node->descriptions) parts.push_back(d.text);
        return join(parts, "\n");
    }
    return {};
}

Engine::Stats Engine::stats() const {
    Stats s;
    s.session_count = corpus_.size();
    if (flat_) {
        s.index_kind = "flat";
        s.key_count = flat_->size();
        s.dimension = flat_->dimension();
    } else if (graph_) {
        s.index_kind = "graph";
        s.node_count = graph_->node_count();
        s.edge_count = graph_->edge_count();
        s.dimension = graph_->dimension();
    }
    return s;
}

std::string Engine::Stats::to_json() const {
    nlohmann::ordered_json j;
    j["index_kind"] = index_kind;
    if (index_kind == "flat") {
        j["keys"] = key_count;
    } else {
        j["nodes"] = node_count;
        j["edges"] = edge_count;
    }
    j["sessions"] = session_count;
    j["dimension"] = dimension;
    return j.dump(2) + "\n";
}

std::optional<bool> ContainmentJudge::judge(const std::string& /*question*/,
                                            const std::string& gold, const std::string& answer) {
    std::string needle = join(tokenize(gold), " ");
    std::string haystack = join(tokenize(answer), " ");
    if (needle.empty()) return true;  // the empty string appears everywhere
    return haystack.find(needle) != std::string::npos;
}

std::optional<bool> GatewayJudge::judge(const std::string& question, const std::string& gold,
                                        const std::string& answer) {
    try {
        return gateway_.judge_answer(question, gold, answer);
    } catch (const Error&) {
        return std::nullopt;
    }
}

}  // namespace dialogmem
