#include <filesystem>
#include <random>

#include "doctest.h"
#include "dialogmem/flat_index.hpp"
#include "oracles.hpp"

using namespace dialogmem;
namespace fs = std::filesystem;

namespace {

Session one_turn_session(const std::string& id, const std::string& text) {
    Session s;
    s.session_id = id;
    s.date = Date{2023, 6, 11};
    s.turns.push_back({Role::user, text, 0});
    return s;
}

KeyUnit raw_key(const std::string& id, std::vector<float> vec, KeyKind kind = KeyKind::fact,
                const std::string& session = "s1", bool flagged = false) {
    KeyUnit key;
    key.key_id = id;
    key.kind = kind;
    key.text = id;
    key.embedding = EmbeddingVector::from_raw(std::move(vec), flagged);
    key.provenance_session_ids = {session};
    return key;
}

EmbeddingVector raw_query(std::vector<float> vec) {
    return EmbeddingVector::from_raw(std::move(vec), false);
}

}  // namespace

TEST_CASE("build_keys per strategy") {
    BackendGateway gateway(make_mock_backends(64), nullptr);
    FlatExtraction extraction{"a", {"b", "c"}, {"d"}};
    Session session = one_turn_session("s1", "hello world session");

    SUBCASE("merge_by_type yields one key per present type") {
        auto keys = build_keys(session, extraction, KeyStrategy::merge_by_type, gateway);
        REQUIRE(keys.size() == 3);
        CHECK(keys[0].kind == KeyKind::summary);
        CHECK(keys[0].text == "a");
        CHECK(keys[1].kind == KeyKind::fact);
        CHECK(keys[1].text == "b\nc");
        CHECK(keys[2].kind == KeyKind::keyword);
        CHECK(keys[2].text == "d");
    }
    SUBCASE("merge_all joins everything with newlines") {
        auto keys = build_keys(session, extraction, KeyStrategy::merge_all, gateway);
        REQUIRE(keys.size() == 1);
        CHECK(keys[0].kind == KeyKind::merged_all);
        CHECK(keys[0].text == "a\nb\nc\nd");
    }
    SUBCASE("separate_sfk yields one key per unit") {
        auto keys = build_keys(session, extraction, KeyStrategy::separate_sfk, gateway);
        CHECK(keys.size() == 4);  // 1 summary + 2 facts + 1 keyword
    }
    SUBCASE("session_plus_merged pairs the raw session with the merged key") {
        auto keys = build_keys(session, extraction, KeyStrategy::session_plus_merged, gateway);
        REQUIRE(keys.size() == 2);
        CHECK(keys[0].kind == KeyKind::session_text);
        CHECK(keys[0].text == "hello world session");
        CHECK(keys[1].kind == KeyKind::merged_all);
    }
    SUBCASE("session_only ignores the extraction") {
        auto keys = build_keys(session, extraction, KeyStrategy::session_only, gateway);
        REQUIRE(keys.size() == 1);
        CHECK(keys[0].kind == KeyKind::session_text);
    }
    SUBCASE("empty extraction under merge_all yields no keys") {
        auto keys = build_keys(session, FlatExtraction{}, KeyStrategy::merge_all, gateway);
        CHECK(keys.empty());
    }
    SUBCASE("empty extraction under session_plus_merged keeps the session key") {
        auto keys =
            build_keys(session, FlatExtraction{}, KeyStrategy::session_plus_merged, gateway);
        REQUIRE(keys.size() == 1);
        CHECK(keys[0].kind == KeyKind::session_text);
    }
    SUBCASE("provenance always carries the source session") {
        for (auto& key : build_keys(session, extraction, KeyStrategy::separate_sfk, gateway)) {
            REQUIRE(key.provenance_session_ids.size() == 1);
            CHECK(key.provenance_session_ids[0] == "s1");
        }
    }
}

TEST_CASE("search ordering and tie rules") {
    FlatIndex index(KeyStrategy::separate_sfk, 3);
    index.add_key(raw_key("k_high", {1.0f, 0.0f, 0.0f}));
    index.add_key(raw_key("k_mid", {0.0f, 1.0f, 0.0f}));
    index.add_key(raw_key("k_low", {0.0f, 0.0f, 1.0f}));
    auto query = raw_query({0.9f, 0.5f, 0.1f});

    auto top2 = index.search(query, 2);
    REQUIRE(top2.size() == 2);
    CHECK(top2[0].key_id == "k_high");
    CHECK(top2[1].key_id == "k_mid");

    SUBCASE("identical embeddings break ties by age then id") {
        FlatIndex tied(KeyStrategy::separate_sfk, 2);
        tied.add_key(raw_key("newer_but_first_alphabetically", {1.0f, 0.0f}));
        tied.add_key(raw_key("zz_same_embedding", {1.0f, 0.0f}));
        auto hits = tied.search(raw_query({1.0f, 0.0f}), 2);
        CHECK(hits[0].key_id == "newer_but_first_alphabetically");  // older wins
        CHECK(hits[1].key_id == "zz_same_embedding");
    }
    SUBCASE("k must be positive; empty index returns nothing") {
        CHECK_THROWS_AS(index.search(query, 0), Error);
        FlatIndex empty(KeyStrategy::separate_sfk, 3);
        CHECK(empty.search(query, 5).empty());
    }
    SUBCASE("flagged keys are never retrieved") {
        FlatIndex with_flagged(KeyStrategy::separate_sfk, 2);
        with_flagged.add_key(raw_key("ok", {1.0f, 0.0f}));
        with_flagged.add_key(raw_key("degenerate", {1.0f, 0.0f}, KeyKind::fact, "s1", true));
        auto hits = with_flagged.search(raw_query({1.0f, 0.0f}), 5);
        REQUIRE(hits.size() == 1);
        CHECK(hits[0].key_id == "ok");
    }
}

TEST_CASE("search matches the brute-force oracle on random indices") {
    std::mt19937 rng(2024);
    const int dim = 64;
    FlatIndex index(KeyStrategy::separate_sfk, dim);
    std::vector<oracles::OracleKey> mirror;
    for (int i = 0; i < 100; ++i) {
        auto vec = oracles::random_unit_vector(rng, dim);
        std::string id = "key" + std::to_string(i);
        index.add_key(raw_key(id, vec));
        mirror.push_back({id, vec, uint64_t(i), false});
    }
    for (int q = 0; q < 20; ++q) {
        auto qvec = oracles::random_unit_vector(rng, dim);
        auto expected = oracles::brute_force_top_k(mirror, qvec, 10);
        auto actual = index.search(raw_query(qvec), 10);
        REQUIRE(actual.size() == expected.size());
        for (size_t i = 0; i < expected.size(); ++i) {
            CHECK(actual[i].key_id == expected[i].id);
            CHECK(actual[i].score == doctest::Approx(expected[i].score).epsilon(1e-12));
        }
    }
}

TEST_CASE("search(k) is a prefix of search(k+1)") {
    std::mt19937 rng(7);
    const int dim = 16;
    FlatIndex index(KeyStrategy::separate_sfk, dim);
    for (int i = 0; i < 40; ++i) {
        index.add_key(raw_key("k" + std::to_string(i), oracles::random_unit_vector(rng, dim)));
    }
    auto qvec = oracles::random_unit_vector(rng, dim);
    auto query = raw_query(qvec);
    auto previous = index.search(query, 1);
    for (int k = 2; k <= 40; ++k) {
        auto current = index.search(query, k);
        REQUIRE(current.size() == size_t(k));
        for (size_t i = 0; i + 1 < current.size() && i < previous.size(); ++i) {
            CHECK(current[i].key_id == previous[i].key_id);
        }
        previous = current;
    }
}

TEST_CASE("merge_by_type session scoring averages present types") {
    FlatIndex index(KeyStrategy::merge_by_type, 3);
    index.add_key(raw_key("s1#summary", {1.0f, 0.0f, 0.0f}, KeyKind::summary, "sess1"));
    index.add_key(raw_key("s1#facts", {0.0f, 1.0f, 0.0f}, KeyKind::fact, "sess1"));
    index.add_key(raw_key("s1#keywords", {0.0f, 0.0f, 1.0f}, KeyKind::keyword, "sess1"));
    index.add_key(raw_key("s2#summary", {0.7f, 0.0f, 0.0f}, KeyKind::summary, "sess2"));
    auto query = raw_query({0.6f, 0.8f, 0.4f});

    auto scores = index.score_sessions_merge_by_type(query, 10);
    REQUIRE(scores.size() == 2);
    // sess1: mean(0.6, 0.8, 0.4) = 0.6; sess2: mean of one = 0.42
    CHECK(scores[0].session_id == "sess1");
    CHECK(std::abs(scores[0].final_score - 0.6) < 1e-6);
    CHECK(scores[0].per_type_scores.size() == 3);
    CHECK(scores[1].session_id == "sess2");
    CHECK(std::abs(scores[1].final_score - 0.42) < 1e-6);
    CHECK(scores[1].per_type_scores.size() == 1);
}

TEST_CASE("merge_by_type ranking matches a hand-computed oracle on a mock fixture") {
    BackendGateway gateway(make_mock_backends(128), nullptr);
    FlatIndex index(KeyStrategy::merge_by_type, 128);
    struct Fixture {
        std::string id;
        FlatExtraction extraction;
    };
    std::vector<Fixture> fixtures = {
        {"sess_cats", {"cats and kittens", {"the user owns two cats"}, {"cats", "kittens"}}},
        {"sess_bikes", {"road cycling trips", {"the user rides a bike daily"}, {"bike", "cycling"}}},
        {"sess_tea", {"tea preferences", {"green tea is preferred"}, {"tea", "oolong"}}},
        {"sess_mix", {"cats on bikes", {"the cat sat on the bike"}, {"cats", "bike"}}},
        {"sess_void", {"quantum chess", {"pawns entangle rooks"}, {"chess", "quantum"}}},
    };
    for (const auto& f : fixtures) {
        for (auto& key : build_keys(one_turn_session(f.id, "placeholder"), f.extraction,
                                    KeyStrategy::merge_by_type, gateway)) {
            index.add_key(std::move(key));
        }
    }
    std::string query_text = "does the user own cats";
    auto query = gateway.embed_text(query_text);

    // independent oracle: mean over per-kind cosines computed from raw texts
    std::vector<std::pair<std::string, double>> oracle;
    for (const auto& f : fixtures) {
        double sum = 0;
        int n = 0;
        for (const std::string& text :
             {f.extraction.summary, join(f.extraction.facts, "\n"),
              join(f.extraction.keywords, "; ")}) {
            if (text.empty()) continue;
            sum += oracles::hashed_multiset_cosine(query_text, text, 128);
            ++n;
        }
        oracle.push_back({f.id, sum / n});
    }
    std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    auto ranked = index.score_sessions_merge_by_type(query, 5);
    REQUIRE(ranked.size() == oracle.size());
    for (size_t i = 0; i < ranked.size(); ++i) {
        CHECK(ranked[i].session_id == oracle[i].first);
        CHECK(std::abs(ranked[i].final_score - oracle[i].second) < 1e-6);
    }
}

TEST_CASE("map_to_values dedupes and truncates") {
    FlatIndex index(KeyStrategy::separate_sfk, 2);
    index.add_key(raw_key("k1", {1.0f, 0.0f}, KeyKind::fact, "sessA"));
    index.add_key(raw_key("k2", {0.9f, 0.1f}, KeyKind::fact, "sessA"));
    index.add_key(raw_key("k3", {0.5f, 0.5f}, KeyKind::fact, "sessB"));
    std::vector<ScoredKey> ranked = {{"k1", 0.9}, {"k2", 0.8}, {"k3", 0.7}};

    SUBCASE("session values collapse by best score") {
        auto values = index.map_to_values(ranked, 2, ValueKind::session);
        REQUIRE(values.size() == 2);
        CHECK(values[0].payload == "sessA");
        CHECK(values[1].payload == "sessB");
    }
    SUBCASE("key values are the keys themselves") {
        auto values = index.map_to_values(ranked, 2, ValueKind::key);
        REQUIRE(values.size() == 2);
        CHECK(values[0].payload == "k1");
        CHECK(values[1].payload == "k2");
        CHECK(values[0].kind == ValueKind::key);
    }
}

TEST_CASE("map_to_values matches a max-grouping oracle on random inputs") {
    std::mt19937 rng(31337);
    const int dim = 8;
    FlatIndex index(KeyStrategy::separate_sfk, dim);
    std::vector<std::string> sessions = {"sa", "sb", "sc", "sd"};
    struct KeyInfo {
        std::string id;
        std::string session;
    };
    std::vector<KeyInfo> keys;
    for (int i = 0; i < 10; ++i) {
        std::string id = "k" + std::to_string(i);
        std::string session = sessions[rng() % sessions.size()];
        index.add_key(raw_key(id, oracles::random_unit_vector(rng, dim), KeyKind::fact, session));
        keys.push_back({id, session});
    }
    auto qvec = oracles::random_unit_vector(rng, dim);
    auto ranked = index.search(raw_query(qvec), 10);

    // oracle: group ranked keys by session, score = max, order by score then
    // first appearance
    std::map<std::string, double> best;
    std::vector<std::string> order;
    for (const auto& scored : ranked) {
        std::string session;
        for (const auto& k : keys) {
            if (k.id == scored.key_id) session = k.session;
        }
        if (!best.count(session)) {
            best[session] = scored.score;
            order.push_back(session);
        }
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](const std::string& a, const std::string& b) { return best[a] > best[b]; });

    auto values = index.map_to_values(ranked, 4, ValueKind::session);
    REQUIRE(values.size() == std::min<size_t>(4, order.size()));
    for (size_t i = 0; i < values.size(); ++i) CHECK(values[i].payload == order[i]);
}

TEST_CASE("flat index persistence round-trips bit-exactly") {
    auto dir = fs::temp_directory_path() / "dialogmem_test_flat_persist";
    fs::remove_all(dir);

    BackendGateway gateway(make_mock_backends(32), nullptr);
    FlatIndex index(KeyStrategy::merge_all, 32);
    for (int i = 0; i < 5; ++i) {
        KeyUnit key;
        key.key_id = "k" + std::to_string(i);
        key.kind = KeyKind::merged_all;
        key.text = "text number " + std::to_string(i);
        key.embedding = gateway.embed_text(key.text);
        key.provenance_session_ids = {"s" + std::to_string(i)};
        index.add_key(std::move(key));
    }
    index.save(dir.string(), gateway.embedder_spec());

    auto loaded = load_flat_index(dir.string());
    CHECK(loaded.embedder.dimension == 32);
    REQUIRE(loaded.index.size() == index.size());
    for (size_t i = 0; i < index.size(); ++i) {
        CHECK(loaded.index.keys()[i].key_id == index.keys()[i].key_id);
        CHECK(loaded.index.keys()[i].text == index.keys()[i].text);
        CHECK(loaded.index.keys()[i].created_at == index.keys()[i].created_at);
        CHECK(loaded.index.keys()[i].embedding.values() == index.keys()[i].embedding.values());
    }

    auto dir2 = fs::temp_directory_path() / "dialogmem_test_flat_persist2";
    fs::remove_all(dir2);
    loaded.index.save(dir2.string(), loaded.embedder);
    for (const char* file : {"metadata.json", "keys.jsonl", "embeddings.f32"}) {
        CHECK(read_file((dir / file).string()) == read_file((dir2 / file).string()));
    }
}
