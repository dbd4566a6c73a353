// Exercises the shared-library surface exactly as an external consumer
// would: opaque handles, status codes, allocated strings.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "dialogmem.h"

namespace fs = std::filesystem;

namespace {

struct OwnedString {
    char* value = nullptr;
    ~OwnedString() { dm_string_free(value); }
    std::string str() const { return value ? value : ""; }
};

fs::path scratch(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("dialogmem_capi_" + tag);
    fs::remove_all(dir);
    return dir;
}

std::string write_temp(const std::string& name, const std::string& content) {
    auto path = fs::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

const char* kCorpus = R"({
  "name": "capi",
  "sessions": [
    {"session_id": "s_net", "date": "2023/06/11",
     "turns": [{"role": "user",
                "text": "I upgraded my internet speed to 500 Mbps last month."}]},
    {"session_id": "s_cat", "date": "2023/06/12",
     "turns": [{"role": "user", "text": "My cat Biscuit is three years old."}]}
  ],
  "questions": [
    {"question_id": "q1", "question": "what internet speed have I upgraded to?",
     "answer": "500 Mbps", "question_type": "single-session-user",
     "evidence_session_ids": ["s_net"]}
  ]
})";

const char* kConfig = R"({
  "key_strategy": "merge_all",
  "value_kind": "session",
  "index_kind": "flat",
  "op_set": ["add"],
  "k_keys": 10,
  "n_values": 5,
  "backend": {"kind": "hash_mock", "dimension": 128}
})";

}  // namespace

TEST_CASE("version and error strings are always available") {
    CHECK(dm_version() != nullptr);
    CHECK(dm_last_error() != nullptr);
}

TEST_CASE("config validation over the C surface") {
    OwnedString report;
    auto ok_path = write_temp("capi_config_ok.json", kConfig);
    CHECK(dm_config_validate(ok_path.c_str(), &report.value) == DM_OK);
    auto parsed = nlohmann::json::parse(report.str());
    CHECK(parsed.at("ok").get<bool>());

    OwnedString bad_report;
    auto bad_path = write_temp("capi_config_bad.json",
                               R"({"k_keys": 2, "n_values": 7})");
    CHECK(dm_config_validate(bad_path.c_str(), &bad_report.value) == DM_ERR_CONFIG);
    auto bad = nlohmann::json::parse(bad_report.str());
    CHECK_FALSE(bad.at("ok").get<bool>());
    CHECK(std::string(dm_last_error()).find("k_keys") != std::string::npos);

    CHECK(dm_config_validate(nullptr, nullptr) == DM_ERR_INVALID_ARGUMENT);
}

TEST_CASE("build, open, retrieve, eval, stats through the C API") {
    auto corpus_path = write_temp("capi_corpus.json", kCorpus);
    auto config_path = write_temp("capi_config.json", kConfig);
    auto out_dir = scratch("index");

    OwnedString manifest;
    REQUIRE(dm_build(corpus_path.c_str(), config_path.c_str(), out_dir.string().c_str(), nullptr,
                     0, &manifest.value) == DM_OK);
    auto manifest_json = nlohmann::json::parse(manifest.str());
    CHECK(manifest_json.at("corpus").at("session_count").get<int>() == 2);

    dm_index* index = nullptr;
    REQUIRE(dm_index_open(out_dir.string().c_str(), &index) == DM_OK);

    SUBCASE("retrieve returns ranked values with an optional trace") {
        OwnedString result;
        REQUIRE(dm_retrieve(index, "what internet speed have I upgraded to?", 0, 0, 1,
                            &result.value) == DM_OK);
        auto parsed = nlohmann::json::parse(result.str());
        REQUIRE_FALSE(parsed.at("values").empty());
        CHECK(parsed.at("values")[0].at("value_id").get<std::string>() == "capi/s_net");
        CHECK(parsed.contains("trace"));
        CHECK_FALSE(parsed.at("trace").at("seeds").empty());
    }
    SUBCASE("empty queries are invalid") {
        OwnedString result;
        CHECK(dm_retrieve(index, "   ", 0, 0, 0, &result.value) == DM_ERR_INVALID_ARGUMENT);
    }
    SUBCASE("eval produces summary metrics and report files") {
        auto report_dir = scratch("report");
        OwnedString summary;
        REQUIRE(dm_eval(index, corpus_path.c_str(), "containment",
                        report_dir.string().c_str(), &summary.value) == DM_OK);
        auto parsed = nlohmann::json::parse(summary.str());
        CHECK(parsed.at("recall_at_5").get<double>() == doctest::Approx(1.0));
        CHECK(parsed.at("answer_accuracy").get<double>() == doctest::Approx(1.0));
        CHECK(fs::exists(report_dir / "report.json"));
        CHECK(fs::exists(report_dir / "table.tsv"));

        OwnedString bad_judge;
        CHECK(dm_eval(index, corpus_path.c_str(), "vibes", nullptr, &bad_judge.value) ==
              DM_ERR_INVALID_ARGUMENT);
    }
    SUBCASE("stats expose counts and counters") {
        OwnedString stats;
        REQUIRE(dm_stats(index, &stats.value) == DM_OK);
        auto parsed = nlohmann::json::parse(stats.str());
        CHECK(parsed.at("index_kind").get<std::string>() == "flat");
        CHECK(parsed.at("keys").get<int>() >= 2);
        CHECK(parsed.contains("counters"));
    }
    dm_index_close(index);
}

TEST_CASE("failures set dm_last_error and map onto stable statuses") {
    dm_index* index = nullptr;
    CHECK(dm_index_open("/nonexistent/index/dir", &index) == DM_ERR_NOT_FOUND);
    CHECK(std::string(dm_last_error()).find("manifest") != std::string::npos);
    CHECK(index == nullptr);

    OwnedString out;
    CHECK(dm_build(nullptr, nullptr, nullptr, nullptr, 0, &out.value) ==
          DM_ERR_INVALID_ARGUMENT);
    dm_index_close(nullptr);  // harmless on null
}
