#include <filesystem>

#include "doctest.h"
#include "dialogmem/engine.hpp"
#include "synthetic.hpp"

using namespace dialogmem;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("dialogmem_engine_" + tag);
    fs::remove_all(dir);
    return dir;
}

EngineConfig mock_config(KeyStrategy strategy, int dimension = 128) {
    EngineConfig config;
    config.pipeline.key_strategy = strategy;
    config.pipeline.index_kind =
        strategy == KeyStrategy::graph_entities ? IndexKind::graph : IndexKind::flat;
    config.backend.dimension = dimension;
    return config;
}

LoadedBenchmark tiny_benchmark() {
    LoadedBenchmark b;
    b.corpus = Corpus("tiny");
    b.corpus.add(synthetic::make_session(
        "s_net", "I upgraded my internet speed to 500 Mbps last month. The router sits in the "
                 "hallway now."));
    b.corpus.add(synthetic::make_session(
        "s_cat", "My cat Biscuit is three years old. Biscuit naps on the windowsill."));
    b.corpus.add(synthetic::make_session(
        "s_run", "I finished a marathon in Oslo in 2019. Training took 16 weeks."));

    BenchmarkQuestion q1;
    q1.question_id = "q_net";
    q1.question_text = "what internet speed have I upgraded to?";
    q1.answer_text = "500 Mbps";
    q1.question_type = "single-session-user";
    q1.evidence_session_ids = {"s_net"};
    b.questions.push_back(q1);

    BenchmarkQuestion q2;
    q2.question_id = "q_run";
    q2.question_text = "marathon in Oslo?";
    q2.answer_text = "Oslo";
    q2.question_type = "single-session-user";
    q2.evidence_session_ids = {"s_run"};
    b.questions.push_back(q2);
    return b;
}

bool directory_bytes_equal(const fs::path& a, const fs::path& b,
                           const std::set<std::string>& skip = {"manifest.json", ".lock"}) {
    std::set<std::string> names_a, names_b;
    for (const auto& e : fs::directory_iterator(a)) names_a.insert(e.path().filename().string());
    for (const auto& e : fs::directory_iterator(b)) names_b.insert(e.path().filename().string());
    for (const auto& s : skip) {
        names_a.erase(s);
        names_b.erase(s);
    }
    if (names_a != names_b) return false;
    for (const auto& name : names_a) {
        if (read_file((a / name).string()) != read_file((b / name).string())) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("build + open + retrieve round trip (flat merge_all)") {
    auto out = scratch("flat_build");
    auto manifest =
        Engine::build(tiny_benchmark(), mock_config(KeyStrategy::merge_all), out.string());
    CHECK(manifest.session_count == 3);
    CHECK(manifest.counters.extraction_calls == 3);
    CHECK_FALSE(manifest.artifact_fingerprint.empty());

    auto engine = Engine::open(out.string());
    auto values = engine.retrieve("what internet speed have I upgraded to?");
    REQUIRE_FALSE(values.empty());
    CHECK(values[0].value_id == "s_net");

    SUBCASE("k override of zero keeps config; explicit bad query rejected") {
        CHECK_THROWS_AS(engine.retrieve("   "), Error);
    }
    SUBCASE("stats reflect the index") {
        auto stats = engine.stats();
        CHECK(stats.index_kind == "flat");
        CHECK(stats.session_count == 3);
        CHECK(stats.key_count >= 3);
    }
}

TEST_CASE("builds are deterministic under mocks") {
    auto out_a = scratch("det_a");
    auto out_b = scratch("det_b");
    auto config = mock_config(KeyStrategy::merge_all);
    auto manifest_a = Engine::build(tiny_benchmark(), config, out_a.string());
    auto manifest_b = Engine::build(tiny_benchmark(), config, out_b.string());
    CHECK(manifest_a.artifact_fingerprint == manifest_b.artifact_fingerprint);
    CHECK(directory_bytes_equal(out_a, out_b));
}

TEST_CASE("response cache eliminates repeat extraction") {
    auto cache = scratch("cache_dir");
    BuildOptions options;
    options.cache_dir = cache.string();

    auto out_a = scratch("cache_a");
    auto first =
        Engine::build(tiny_benchmark(), mock_config(KeyStrategy::merge_all), out_a.string(), options);
    CHECK(first.counters.extraction_calls == 3);
    CHECK(first.counters.cache_misses == first.counters.backend_calls);

    auto out_b = scratch("cache_b");
    auto second =
        Engine::build(tiny_benchmark(), mock_config(KeyStrategy::merge_all), out_b.string(), options);
    CHECK(second.counters.extraction_calls == 0);
    CHECK(second.counters.backend_calls == 0);
    CHECK(second.counters.cache_hits > 0);
    CHECK(second.artifact_fingerprint == first.artifact_fingerprint);
}

TEST_CASE("prejudge never increases extraction calls and skips noise") {
    LoadedBenchmark noisy = tiny_benchmark();
    noisy.corpus.add(synthetic::make_session("s_noise", "ok."));

    auto config_off = mock_config(KeyStrategy::merge_all);
    auto config_on = mock_config(KeyStrategy::merge_all);
    config_on.pipeline.prejudge_enabled = true;

    auto out_off = scratch("prejudge_off");
    auto out_on = scratch("prejudge_on");
    auto manifest_off = Engine::build(noisy, config_off, out_off.string());
    auto manifest_on = Engine::build(noisy, config_on, out_on.string());

    CHECK(manifest_on.counters.extraction_calls <= manifest_off.counters.extraction_calls);
    CHECK(manifest_on.prejudge_skipped_sessions == 1);
    CHECK(manifest_off.prejudge_skipped_sessions == 0);
}

TEST_CASE("retrieval eval finds planted evidence and reports deterministically") {
    auto out = scratch("eval_flat");
    auto benchmark = tiny_benchmark();
    Engine::build(benchmark, mock_config(KeyStrategy::merge_all), out.string());
    auto engine = Engine::open(out.string());

    auto report = engine.run_retrieval_eval(benchmark.questions);
    CHECK(report.evaluated_questions == 2);
    CHECK(report.recall_at_5 == doctest::Approx(1.0));
    CHECK(report.ndcg_at_5 == doctest::Approx(1.0));

    auto engine2 = Engine::open(out.string());
    auto report2 = engine2.run_retrieval_eval(benchmark.questions);
    // byte-identical regeneration (timing field excluded by zeroing)
    report.retrieval_ms_per_query = 0.0;
    report2.retrieval_ms_per_query = 0.0;
    CHECK(report.to_json() == report2.to_json());
}

TEST_CASE("qa eval with the containment judge") {
    auto out = scratch("qa_flat");
    auto benchmark = tiny_benchmark();
    BenchmarkQuestion missing;
    missing.question_id = "q_gone";
    missing.question_text = "what color is my parrot feather crown?";
    missing.answer_text = "iridescent purple";
    missing.question_type = "single-session-user";
    missing.evidence_session_ids = {"s_net"};  // resolvable, but answer is nowhere
    benchmark.questions.push_back(missing);

    Engine::build(benchmark, mock_config(KeyStrategy::merge_all), out.string());
    auto engine = Engine::open(out.string());
    ContainmentJudge judge;
    auto report = engine.run_qa_eval(benchmark.questions, &judge);

    REQUIRE(report.answer_accuracy.has_value());
    // q_net and q_run answerable by the containment mock, q_gone refuses
    CHECK(report.judged_questions == 3);
    CHECK(*report.answer_accuracy == doctest::Approx(2.0 / 3.0));
    for (const auto& q : report.per_question) {
        REQUIRE(q.answer.has_value());
        if (q.question_id == "q_gone") CHECK(*q.answer == "I don't know");
    }
}

TEST_CASE("merge_by_type retrieval uses session averaging") {
    auto out = scratch("mbt");
    auto benchmark = tiny_benchmark();
    Engine::build(benchmark, mock_config(KeyStrategy::merge_by_type), out.string());
    auto engine = Engine::open(out.string());
    auto values = engine.retrieve("what internet speed have I upgraded to?");
    REQUIRE_FALSE(values.empty());
    CHECK(values[0].value_id == "s_net");
}

TEST_CASE("graph desc build retrieves through entities") {
    auto out = scratch("graph_desc");
    auto benchmark = tiny_benchmark();
    auto config = mock_config(KeyStrategy::graph_entities);
    config.pipeline.graph_schema = GraphSchema::desc;
    auto manifest = Engine::build(benchmark, config, out.string());
    CHECK(manifest.counters.extraction_calls == 3);

    auto engine = Engine::open(out.string());
    auto stats = engine.stats();
    CHECK(stats.index_kind == "graph");
    CHECK(stats.node_count > 0);

    auto report = engine.run_retrieval_eval(benchmark.questions);
    CHECK(report.recall_at_5 == doctest::Approx(1.0));
}

TEST_CASE("build refuses non-empty directories and cleans partial output") {
    auto out = scratch("guard");
    fs::create_directories(out);
    write_file((out / "junk.txt").string(), "junk");
    CHECK_THROWS_AS(
        Engine::build(tiny_benchmark(), mock_config(KeyStrategy::merge_all), out.string()), Error);
    CHECK(fs::exists(out / "junk.txt"));  // preexisting data untouched

    SUBCASE("mid-build failures remove partial artifacts") {
        auto out2 = scratch("partial");
        auto file_as_cache = scratch("cache_file");
        write_file(file_as_cache.string(), "not a directory");
        BuildOptions options;
        options.cache_dir = file_as_cache.string();
        CHECK_THROWS_AS(Engine::build(tiny_benchmark(), mock_config(KeyStrategy::merge_all),
                                      out2.string(), options),
                        Error);
        CHECK_FALSE(fs::exists(out2));
    }
}

TEST_CASE("invalid configs are rejected before building") {
    auto out = scratch("invalid_cfg");
    auto config = mock_config(KeyStrategy::merge_all);
    config.pipeline.k_keys = 2;
    config.pipeline.n_values = 9;
    CHECK_THROWS_AS(Engine::build(tiny_benchmark(), config, out.string()), Error);
    CHECK_FALSE(fs::exists(out / "metadata.json"));
}

TEST_CASE("engine config json round trip") {
    EngineConfig config = mock_config(KeyStrategy::session_plus_merged);
    config.answer_mode = AnswerMode::chain_of_note;
    config.backend.dimension = 64;
    auto reparsed = engine_config_from_json(engine_config_to_json(config));
    CHECK(reparsed.pipeline == config.pipeline);
    CHECK(reparsed.backend.dimension == 64);
    CHECK(reparsed.answer_mode == AnswerMode::chain_of_note);
}
