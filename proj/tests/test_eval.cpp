#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "dialogmem/eval.hpp"
#include "oracles.hpp"

using namespace dialogmem;
namespace fs = std::filesystem;

TEST_CASE("recall fixtures") {
    std::set<std::string> gt_ab = {"a", "b"};
    CHECK(recall_at_k({"a", "x", "y", "z", "w"}, gt_ab, 5) == doctest::Approx(0.5));
    CHECK(recall_at_k({"a"}, {"a"}, 5) == doctest::Approx(1.0));
    CHECK(recall_at_k({"x", "y"}, gt_ab, 2) == doctest::Approx(0.0));
    CHECK_THROWS_AS(recall_at_k({"a"}, {}, 5), Error);
    CHECK_THROWS_AS(recall_at_k({"a"}, gt_ab, 0), Error);
}

TEST_CASE("ndcg fixtures match hand-computed values") {
    CHECK(ndcg_at_k({"s1", "s2"}, {"s1"}, 2) == doctest::Approx(1.0).epsilon(1e-9));
    // gt {s1}, retrieved [s2, s1]: DCG = 1/log2(3), IDCG = 1
    CHECK(ndcg_at_k({"s2", "s1"}, {"s1"}, 2) ==
          doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-9));
    CHECK(std::abs(ndcg_at_k({"s2", "s1"}, {"s1"}, 2) - 0.6309) < 5e-5);
    // gt {s1,s2}, retrieved [s1,s3,s2]: (1 + 1/2) / (1 + 1/log2(3))
    double expected = (1.0 + 0.5) / (1.0 + 1.0 / std::log2(3.0));
    CHECK(ndcg_at_k({"s1", "s3", "s2"}, {"s1", "s2"}, 3) ==
          doctest::Approx(expected).epsilon(1e-9));
    CHECK(std::abs(ndcg_at_k({"s1", "s3", "s2"}, {"s1", "s2"}, 3) - 0.9197) < 5e-5);
    CHECK_THROWS_AS(ndcg_at_k({"a"}, {}, 5), Error);
}

TEST_CASE("metrics agree with independent oracles on randomized cases") {
    std::mt19937 rng(777);
    for (int i = 0; i < 200; ++i) {
        std::vector<std::string> retrieved;
        std::set<std::string> pool;
        int n = 1 + int(rng() % 20);
        while (int(retrieved.size()) < n) {
            std::string id = "s" + std::to_string(rng() % 30);
            if (pool.insert(id).second) retrieved.push_back(id);
        }
        std::set<std::string> gt;
        int g = 1 + int(rng() % 6);
        for (int j = 0; j < g; ++j) gt.insert("s" + std::to_string(rng() % 30));
        int k = 1 + int(rng() % 15);
        CHECK(recall_at_k(retrieved, gt, k) ==
              doctest::Approx(oracles::oracle_recall(retrieved, gt, k)).epsilon(1e-12));
        CHECK(ndcg_at_k(retrieved, gt, k) ==
              doctest::Approx(oracles::oracle_ndcg(retrieved, gt, k)).epsilon(1e-12));
    }
}

TEST_CASE("recall is non-decreasing in k; ndcg is once k covers the ground truth") {
    // Below |gt| the ideal DCG itself still grows with k, so NDCG@k can
    // legitimately drop there; monotonicity holds from k = |gt| on.
    std::mt19937 rng(888);
    for (int i = 0; i < 50; ++i) {
        std::vector<std::string> retrieved;
        std::set<std::string> pool;
        while (retrieved.size() < 12) {
            std::string id = "s" + std::to_string(rng() % 20);
            if (pool.insert(id).second) retrieved.push_back(id);
        }
        std::set<std::string> gt = {"s1", "s5", "s9"};
        double prev_recall = 0.0;
        double prev_ndcg = 0.0;
        for (int k = 1; k <= 12; ++k) {
            double r = recall_at_k(retrieved, gt, k);
            CHECK(r >= prev_recall - 1e-12);
            prev_recall = r;
            if (k >= int(gt.size())) {
                double n = ndcg_at_k(retrieved, gt, k);
                if (k > int(gt.size())) CHECK(n >= prev_ndcg - 1e-12);
                prev_ndcg = n;
            }
        }
    }
}

TEST_CASE("ndcg is 1 exactly when all gt occupies the top ranks") {
    std::set<std::string> gt = {"a", "b"};
    CHECK(ndcg_at_k({"a", "b", "x"}, gt, 3) == doctest::Approx(1.0));
    CHECK(ndcg_at_k({"b", "a", "x"}, gt, 3) == doctest::Approx(1.0));
    CHECK(ndcg_at_k({"a", "x", "b"}, gt, 3) < 1.0);
}

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    auto path = fs::temp_directory_path() / name;
    write_file(path.string(), content);
    return path.string();
}

}  // namespace

TEST_CASE("session corpus loader") {
    std::string doc = R"({
      "name": "fix",
      "sessions": [
        {"session_id": "s1", "date": "2023/06/11",
         "turns": [{"role": "user", "text": "I bought 3 plants."}]},
        {"session_id": "s2", "date": "2023/06/12",
         "turns": [{"role": "user", "text": "My cat is orange."},
                   {"role": "assistant", "text": "Nice."}],
         "memory_points": [{"text": "user has an orange cat", "type": "fact"}]},
        {"session_id": "s1", "date": "2023/06/13",
         "turns": [{"role": "user", "text": "Different content entirely."}]}
      ],
      "questions": [
        {"question_id": "q1", "question": "what color is the cat?", "answer": "orange",
         "evidence_session_ids": ["s2"], "question_type": "single-session-user"},
        {"question_id": "q2", "question": "dangling?", "answer": "x",
         "evidence_session_ids": ["nope"]}
      ]
    })";
    auto loaded = load_session_corpus(write_temp("dialogmem_corpus_fixture.json", doc));

    SUBCASE("duplicate raw ids are canonicalized, counts conserved") {
        CHECK(loaded.corpus.size() == 3);
        CHECK(loaded.corpus.find("fix/s1"));
        CHECK(loaded.corpus.find("fix/s2"));
    }
    SUBCASE("evidence resolves to canonical ids") {
        REQUIRE(loaded.questions.size() == 2);
        CHECK(loaded.questions[0].evidence_session_ids ==
              std::vector<std::string>{"fix/s2"});
        CHECK_FALSE(loaded.questions[0].flagged);
    }
    SUBCASE("dangling evidence flags the question but load succeeds") {
        CHECK(loaded.questions[1].flagged);
        REQUIRE_FALSE(loaded.questions[1].warnings.empty());
        CHECK(loaded.questions[1].warnings[0].find("dangling") != std::string::npos);
    }
    SUBCASE("memory points ride along for external judging") {
        REQUIRE(loaded.memory_points.count("fix/s2"));
        CHECK(loaded.memory_points.at("fix/s2")[0].text == "user has an orange cat");
    }
}

TEST_CASE("benchmark array loader dedupes shared sessions") {
    std::string doc = R"([
      {"question_id": "q1", "question_type": "single-session-user",
       "question": "what speed?", "answer": "500 Mbps",
       "question_date": "2023/07/01 (Sat) 10:00",
       "haystack_session_ids": ["h1", "h2"],
       "haystack_dates": ["2023/05/20 (Sat) 02:21", "2023/05/21 (Sun) 09:00"],
       "haystack_sessions": [
         [{"role": "user", "content": "I upgraded to 500 Mbps."}],
         [{"role": "user", "content": "My cat is orange."}]
       ],
       "answer_session_ids": ["h1"]},
      {"question_id": "q2", "question_type": "multi-session",
       "question": "cat color?", "answer": "orange",
       "haystack_session_ids": ["h2", "h3"],
       "haystack_dates": ["2023/05/21 (Sun) 09:00", "2023/05/22 (Mon) 09:00"],
       "haystack_sessions": [
         [{"role": "user", "content": "My cat is orange."}],
         [{"role": "user", "content": "I planted tomatoes."}]
       ],
       "answer_session_ids": ["h2"]},
      {"question_id": "q3_abs", "question_type": "abstention",
       "question": "unanswerable?", "answer": "unknown",
       "haystack_session_ids": [], "haystack_dates": [], "haystack_sessions": [],
       "answer_session_ids": []}
    ])";
    auto loaded = load_longmemeval(write_temp("dialogmem_lme_fixture.json", doc), "lme");

    CHECK(loaded.corpus.size() == 3);  // h2 shared between q1/q2, stored once
    REQUIRE(loaded.questions.size() == 3);
    CHECK(loaded.questions[0].evidence_session_ids == std::vector<std::string>{"lme/h1"});
    CHECK(loaded.questions[1].evidence_session_ids == std::vector<std::string>{"lme/h2"});
    CHECK(loaded.questions[0].question_date->str() == "2023/07/01");
    CHECK(loaded.questions[2].flagged);  // abstention question has no evidence
    CHECK(loaded.corpus.find("lme/h1")->date.str() == "2023/05/20");

    SUBCASE("load_benchmark sniffs the array form") {
        auto sniffed = load_benchmark(write_temp("dialogmem_lme_fixture.json", doc));
        CHECK(sniffed.questions.size() == 3);
    }
    SUBCASE("unreadable file is an io error, bad schema a format error") {
        CHECK_THROWS_AS(load_benchmark("/nonexistent/path.json"), Error);
        auto bad = write_temp("dialogmem_bad.json", "{\"no_sessions\": true}");
        CHECK_THROWS_AS(load_session_corpus(bad), Error);
    }
}

TEST_CASE("report aggregates are exact means of per-question values") {
    EvalReport report;
    std::mt19937 rng(11);
    double sum5 = 0, sum10 = 0;
    for (int i = 0; i < 10; ++i) {
        QuestionResult q;
        q.question_id = "q" + std::to_string(i);
        q.question_type = i % 2 ? "multi-session" : "single-session-user";
        q.recall_at_5 = double(rng() % 100) / 100.0;
        q.recall_at_10 = double(rng() % 100) / 100.0;
        q.ndcg_at_5 = double(rng() % 100) / 100.0;
        q.ndcg_at_10 = double(rng() % 100) / 100.0;
        sum5 += q.recall_at_5;
        sum10 += q.recall_at_10;
        report.per_question.push_back(q);
    }
    QuestionResult flagged;
    flagged.question_id = "qf";
    flagged.question_type = "abstention";
    flagged.flagged = true;
    flagged.recall_at_5 = 1.0;  // must not enter the mean
    report.per_question.push_back(flagged);

    report.finalize();
    CHECK(report.evaluated_questions == 10);
    CHECK(report.flagged_questions == 1);
    CHECK(report.recall_at_5 == doctest::Approx(sum5 / 10.0).epsilon(1e-12));
    CHECK(report.recall_at_10 == doctest::Approx(sum10 / 10.0).epsilon(1e-12));
    CHECK(report.counts_by_type["abstention"] == 1);

    SUBCASE("serialization is deterministic") {
        std::string a = report.to_json();
        std::string b = report.to_json();
        CHECK(a == b);
    }
    SUBCASE("table export has the fixed column layout") {
        std::string table = report.to_table();
        CHECK(table.find("R@5\tR@10\tN@5\tN@10\tacc(V=session)\tacc(V=key)") == 0);
    }
}
