#include <random>

#include "doctest.h"
#include "dialogmem/extraction_parser.hpp"

using namespace dialogmem;

TEST_CASE("well-formed entity record") {
    auto report = parse_extraction(
        "(\"entity\"<|>\"THREE GOALS\"<|>\"Statistic\"<|>\"The user has scored 3 "
        "goals...\")##<|COMPLETE|>");
    REQUIRE(report.entities.size() == 1);
    CHECK(report.entities[0].name == "THREE GOALS");
    CHECK(report.entities[0].etype == "Statistic");
    CHECK(report.relations.empty());
    CHECK(report.complete_marker_seen);
    CHECK(report.warnings.empty());
}

TEST_CASE("relation without declared endpoints recovers implicit entities") {
    auto report =
        parse_extraction("(\"relationship\"<|>\"USER\"<|>\"PARIS\"<|>\"visited\"<|>7)##<|COMPLETE|>");
    REQUIRE(report.relations.size() == 1);
    CHECK(report.relations[0].strength == 7);
    CHECK(report.relations[0].source == "USER");
    CHECK(report.relations[0].target == "PARIS");
    REQUIRE(report.entities.size() == 2);
    CHECK(report.entities[0].etype == "Other");
    CHECK(report.entities[1].etype == "Other");
    CHECK(report.warnings.size() == 2);  // one per undeclared endpoint
}

TEST_CASE("malformed arity is skipped with a positional warning") {
    auto report = parse_extraction("(\"entity\"<|>\"X\")");
    CHECK(report.entities.empty());
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0].find("has 2 fields, expected 4") != std::string::npos);
    CHECK_FALSE(report.complete_marker_seen);
}

TEST_CASE("unquoted fields are accepted") {
    auto report =
        parse_extraction("(entity<|>Paris<|>Place<|>city visited)##<|COMPLETE|>");
    REQUIRE(report.entities.size() == 1);
    CHECK(report.entities[0].name == "PARIS");
    CHECK(report.entities[0].etype == "Place");
    CHECK(report.entities[0].description == "city visited");
}

TEST_CASE("unknown entity types map to Other with a warning") {
    auto report =
        parse_extraction("(\"entity\"<|>\"X\"<|>\"Spaceship\"<|>\"desc\")##<|COMPLETE|>");
    REQUIRE(report.entities.size() == 1);
    CHECK(report.entities[0].etype == "Other");
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0].find("Spaceship") != std::string::npos);
}

TEST_CASE("time entities must be dates or are flagged unresolved") {
    auto ok = parse_extraction("(\"entity\"<|>\"2023/06/10\"<|>\"Time\"<|>\"d\")##<|COMPLETE|>");
    REQUIRE(ok.entities.size() == 1);
    CHECK_FALSE(ok.entities[0].time_unresolved);

    auto bad = parse_extraction("(\"entity\"<|>\"SOMEDAY\"<|>\"Time\"<|>\"d\")##<|COMPLETE|>");
    REQUIRE(bad.entities.size() == 1);
    CHECK(bad.entities[0].time_unresolved);
}

TEST_CASE("relation strength is clamped, junk strength skips the record") {
    auto clamped = parse_extraction(
        "(\"entity\"<|>\"A\"<|>\"Place\"<|>\"d\")##(\"entity\"<|>\"B\"<|>\"Place\"<|>\"d\")##"
        "(\"relationship\"<|>\"A\"<|>\"B\"<|>\"r\"<|>15)##<|COMPLETE|>");
    REQUIRE(clamped.relations.size() == 1);
    CHECK(clamped.relations[0].strength == 10);
    CHECK_FALSE(clamped.warnings.empty());

    auto junk = parse_extraction("(\"relationship\"<|>\"A\"<|>\"B\"<|>\"r\"<|>lots)##<|COMPLETE|>");
    CHECK(junk.relations.empty());
}

TEST_CASE("relation description containing the field delimiter is rejoined") {
    auto report = parse_extraction(
        "(\"relationship\"<|>\"A\"<|>\"B\"<|>\"part one\"<|>\"part two\"<|>6)##<|COMPLETE|>");
    REQUIRE(report.relations.size() == 1);
    CHECK(report.relations[0].strength == 6);
    CHECK(report.relations[0].description == std::string("part one") + kFieldDelimiter + "part two");
    bool warned = false;
    for (const auto& w : report.warnings) {
        if (w.find("rejoined") != std::string::npos) warned = true;
    }
    CHECK(warned);
}

TEST_CASE("parsing is total over random bytes") {
    std::mt19937 rng(1234);
    std::uniform_int_distribution<int> len(0, 200);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int i = 0; i < 1000; ++i) {
        std::string junk;
        int n = len(rng);
        for (int j = 0; j < n; ++j) junk.push_back(static_cast<char>(byte(rng)));
        CHECK_NOTHROW(parse_extraction(junk));
    }
}

namespace {

ParseReport random_report(std::mt19937& rng) {
    const auto& vocab = entity_type_vocabulary();
    std::uniform_int_distribution<int> entity_count(1, 6);
    std::uniform_int_distribution<int> strength(1, 10);
    ParseReport report;
    int n = entity_count(rng);
    for (int i = 0; i < n; ++i) {
        RawEntity e;
        e.name = "ENTITY " + std::to_string(i);
        e.etype = vocab[rng() % vocab.size()];
        if (e.etype == "Time") e.etype = "Place";  // keep names date-free
        e.description = "description " + std::to_string(int(rng() % 100));
        report.entities.push_back(e);
    }
    std::uniform_int_distribution<int> relation_count(0, 5);
    int m = relation_count(rng);
    for (int i = 0; i < m; ++i) {
        RawRelation r;
        r.source = report.entities[rng() % report.entities.size()].name;
        r.target = report.entities[rng() % report.entities.size()].name;
        if (r.source == r.target) continue;
        r.description = "relation " + std::to_string(int(rng() % 100));
        r.strength = strength(rng);
        report.relations.push_back(r);
    }
    report.complete_marker_seen = true;
    return report;
}

}  // namespace

TEST_CASE("serialize/parse round-trip preserves records") {
    std::mt19937 rng(555);
    for (int i = 0; i < 100; ++i) {
        ParseReport original = random_report(rng);
        ParseReport reparsed = parse_extraction(serialize_extraction(original));
        CHECK(reparsed.complete_marker_seen);
        REQUIRE(reparsed.entities.size() == original.entities.size());
        REQUIRE(reparsed.relations.size() == original.relations.size());
        for (size_t e = 0; e < original.entities.size(); ++e) {
            CHECK(reparsed.entities[e].name == original.entities[e].name);
            CHECK(reparsed.entities[e].etype == original.entities[e].etype);
            CHECK(reparsed.entities[e].description == original.entities[e].description);
        }
        for (size_t r = 0; r < original.relations.size(); ++r) {
            CHECK(reparsed.relations[r].source == original.relations[r].source);
            CHECK(reparsed.relations[r].target == original.relations[r].target);
            CHECK(reparsed.relations[r].strength == original.relations[r].strength);
        }
        // count conservation: well-formed records in == records out
        CHECK(reparsed.entities.size() + reparsed.relations.size() ==
              original.entities.size() + original.relations.size());
    }
}

TEST_CASE("time normalization") {
    Date anchor{2023, 6, 11};
    CHECK(normalize_time("March 2nd", anchor)->str() == "2023/03/02");
    CHECK(normalize_time("yesterday", anchor)->str() == "2023/06/10");
    CHECK_FALSE(normalize_time("every morning", anchor).has_value());
    CHECK(normalize_time("3 days ago", anchor)->str() == "2023/06/08");
    CHECK(normalize_time("last week", anchor)->str() == "2023/06/04");
    CHECK(normalize_time("last month", anchor)->str() == "2023/05/11");
    // 2023/06/11 is a Sunday; the most recent Saturday strictly before it
    CHECK(normalize_time("last weekend", anchor)->str() == "2023/06/10");
    // Saturday anchors step a full week back
    CHECK(normalize_time("last weekend", Date{2023, 6, 10})->str() == "2023/06/03");
    // nearest-past rule for year-less dates
    CHECK(normalize_time("December 25", anchor)->str() == "2022/12/25");
    CHECK(normalize_time("March 2nd, 2021", anchor)->str() == "2021/03/02");
    CHECK(normalize_time("2024-01-05", anchor)->str() == "2024/01/05");
    CHECK(normalize_time("2023/06/10", anchor)->str() == "2023/06/10");
    CHECK_FALSE(normalize_time("", anchor).has_value());
    CHECK_FALSE(normalize_time("soon", anchor).has_value());
}
