#pragma once

// Seeded synthetic corpora shared by the engine tests and the acceptance
// suite. Everything here is deterministic for a given seed.

#include <cctype>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialogmem/eval.hpp"

namespace synthetic {

using dialogmem::BenchmarkQuestion;
using dialogmem::Corpus;
using dialogmem::LoadedBenchmark;
using dialogmem::Role;
using dialogmem::Session;
using dialogmem::Turn;

inline Session make_session(const std::string& id, const std::string& text, int day_offset = 0) {
    Session s;
    s.session_id = id;
    s.date = dialogmem::Date{2023, 6, 1}.plus_days(day_offset);
    s.turns.push_back({Role::user, text, 0});
    return s;
}

// Two-letter code so planted tokens stay digit-free.
inline std::string letter_code(int i) {
    std::string code;
    code.push_back(char('a' + (i / 26) % 26));
    code.push_back(char('a' + i % 26));
    return code;
}

// ---- evidence/distractor benchmark ------------------------------------------
//
// 20 planted evidence sessions (each answering one question through a rare
// capitalized town token inside a copular fact sentence), 30 dense
// distractor sessions that dominate full-session similarity for every
// query, and 50 filler sessions. All non-evidence sentences draw from one
// shared vocabulary pool, so distractors share well over half their
// vocabulary with each other and the filler.

struct PlantedBenchmark {
    LoadedBenchmark benchmark;
    std::vector<std::string> rare_towns;  // per question
};

inline PlantedBenchmark make_planted_benchmark(unsigned seed = 20230611,
                                               int evidence_count = 20,
                                               int dense_count = 30, int filler_count = 50) {
    std::mt19937 rng(seed);
    static const std::vector<std::string> kPool = {
        "garden", "weather", "music",  "coffee", "walk",   "morning", "evening", "market",
        "neighbor", "street", "window", "kitchen", "shelf", "river",  "cloud",   "dinner",
        "lunch",  "book",   "lamp",   "path",   "hill",   "bridge",  "corner",  "bench"};
    auto filler_sentence = [&](int words) {
        std::string out;
        for (int w = 0; w < words; ++w) {
            if (w) out += " ";
            out += kPool[rng() % kPool.size()];
        }
        out += ".";
        out[0] = char(std::toupper(out[0]));
        return out;
    };

    PlantedBenchmark out;
    out.benchmark.corpus = Corpus("synth");

    for (int i = 0; i < evidence_count; ++i) {
        std::string town = "Zephyr" + letter_code(i);
        out.rare_towns.push_back(town);
        std::string text = "My trip to " + town + " is planned for the coming days.";
        for (int f = 0; f < 12; ++f) text += " " + filler_sentence(8);
        out.benchmark.corpus.add(make_session("evidence" + letter_code(i), text, i));

        BenchmarkQuestion q;
        q.question_id = "q" + letter_code(i);
        q.question_text =
            "When is my trip to " + town + " planned? Tell me about " + town + ".";
        q.answer_text = "planned for the coming days";
        q.question_type = "single-session-user";
        q.evidence_session_ids = {"evidence" + letter_code(i)};
        out.benchmark.questions.push_back(std::move(q));
    }
    for (int i = 0; i < dense_count; ++i) {
        // bland first sentence keeps the summary away from the query words;
        // the dense remainder dominates whole-session similarity
        std::string text = filler_sentence(7);
        for (int f = 0; f < 10; ++f) {
            text += " My trip planned route and the trip planned visit schedule then the"
                    " planned trip visit.";
        }
        out.benchmark.corpus.add(make_session("dense" + letter_code(i), text, 40 + i));
    }
    for (int i = 0; i < filler_count; ++i) {
        std::string text = filler_sentence(7);
        for (int f = 0; f < 8; ++f) text += " " + filler_sentence(8);
        out.benchmark.corpus.add(make_session("filler" + letter_code(i), text, 80 + i));
    }
    return out;
}

// ---- maintenance corpus -------------------------------------------------------
//
// 25 base sessions contribute 50 unique facts; 25 follow-up sessions plant
// exactly `contradictions` updates (same three-token prefix, new value) and
// `duplicates` exact copies.

struct MaintenanceCorpus {
    LoadedBenchmark benchmark;
    std::vector<std::pair<std::string, std::string>> contradictions;  // old fact, new fact
    std::vector<std::string> duplicated_facts;
};

inline MaintenanceCorpus make_maintenance_corpus(int contradictions = 20, int duplicates = 30) {
    MaintenanceCorpus out;
    out.benchmark.corpus = Corpus("maint");

    const int base_fact_count = contradictions + duplicates;
    std::vector<std::string> base_facts;
    for (int i = 0; i < base_fact_count; ++i) {
        base_facts.push_back("User topic" + letter_code(i) + " equals value" +
                             std::to_string(i) + "x.");
    }
    int session_index = 0;
    for (int i = 0; i < base_fact_count; i += 2) {
        std::string text = "Let me note a few things. " + base_facts[size_t(i)];
        if (i + 1 < base_fact_count) text += " " + base_facts[size_t(i + 1)];
        out.benchmark.corpus.add(
            make_session("base" + letter_code(session_index), text, session_index));
        ++session_index;
    }

    std::vector<std::string> planted;
    for (int i = 0; i < contradictions; ++i) {
        std::string revised =
            "User topic" + letter_code(i) + " equals revised" + std::to_string(i) + "z.";
        out.contradictions.push_back({base_facts[size_t(i)], revised});
        planted.push_back(revised);
    }
    for (int i = 0; i < duplicates; ++i) {
        const std::string& copy = base_facts[size_t(contradictions + i)];
        out.duplicated_facts.push_back(copy);
        planted.push_back(copy);
    }
    for (size_t i = 0; i < planted.size(); i += 2) {
        std::string text = "Let me note a few things. " + planted[i];
        if (i + 1 < planted.size()) text += " " + planted[i + 1];
        out.benchmark.corpus.add(
            make_session("follow" + letter_code(session_index), text, session_index));
        ++session_index;
    }
    return out;
}

// ---- serialization to the plain corpus schema ------------------------------------

// Serializes to the multi-question array layout (per-question haystacks);
// each question sees its evidence plus a deterministic sample of others.
inline std::string to_benchmark_array_json(const LoadedBenchmark& benchmark,
                                           int haystack_size = 10, unsigned seed = 7) {
    std::mt19937 rng(seed);
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    const auto& sessions = benchmark.corpus.sessions();
    for (const auto& q : benchmark.questions) {
        std::vector<const Session*> haystack;
        std::set<std::string> taken;
        for (const auto& id : q.evidence_session_ids) {
            if (const Session* s = benchmark.corpus.find(id); s && taken.insert(id).second) {
                haystack.push_back(s);
            }
        }
        while (int(haystack.size()) < haystack_size && taken.size() < sessions.size()) {
            const Session& s = sessions[rng() % sessions.size()];
            if (taken.insert(s.session_id).second) haystack.push_back(&s);
        }
        nlohmann::ordered_json ids = nlohmann::ordered_json::array();
        nlohmann::ordered_json dates = nlohmann::ordered_json::array();
        nlohmann::ordered_json bodies = nlohmann::ordered_json::array();
        for (const Session* s : haystack) {
            ids.push_back(s->session_id);
            dates.push_back(s->date.str() + " (Day) 10:00");
            nlohmann::ordered_json turns = nlohmann::ordered_json::array();
            for (const auto& turn : s->turns) {
                turns.push_back({{"role", turn.role == Role::user ? "user" : "assistant"},
                                 {"content", turn.text}});
            }
            bodies.push_back(std::move(turns));
        }
        nlohmann::ordered_json entry;
        entry["question_id"] = q.question_id;
        entry["question_type"] = q.question_type;
        entry["question"] = q.question_text;
        entry["answer"] = q.answer_text;
        entry["question_date"] = "2023/12/01 (Fri) 09:00";
        entry["haystack_session_ids"] = std::move(ids);
        entry["haystack_dates"] = std::move(dates);
        entry["haystack_sessions"] = std::move(bodies);
        entry["answer_session_ids"] = q.evidence_session_ids;
        doc.push_back(std::move(entry));
    }
    return doc.dump(2);
}

inline std::string to_corpus_json(const LoadedBenchmark& benchmark, const std::string& name) {
    nlohmann::ordered_json doc;
    doc["name"] = name;
    nlohmann::ordered_json sessions = nlohmann::ordered_json::array();
    for (const auto& session : benchmark.corpus.sessions()) {
        nlohmann::ordered_json turns = nlohmann::ordered_json::array();
        for (const auto& turn : session.turns) {
            turns.push_back({{"role", turn.role == Role::user ? "user" : "assistant"},
                             {"text", turn.text}});
        }
        sessions.push_back({{"session_id", session.session_id},
                            {"date", session.date.str()},
                            {"turns", std::move(turns)}});
    }
    doc["sessions"] = std::move(sessions);
    nlohmann::ordered_json questions = nlohmann::ordered_json::array();
    for (const auto& q : benchmark.questions) {
        nlohmann::ordered_json entry;
        entry["question_id"] = q.question_id;
        entry["question"] = q.question_text;
        entry["answer"] = q.answer_text;
        entry["question_type"] = q.question_type;
        entry["evidence_session_ids"] = q.evidence_session_ids;
        questions.push_back(std::move(entry));
    }
    doc["questions"] = std::move(questions);
    return doc.dump(2);
}

}  // namespace synthetic
