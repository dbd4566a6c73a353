#include "dialogmem/eval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace dialogmem {

// ---- Corpus -------------------------------------------------------------------

const Session* Corpus::find(const std::string& session_id) const {
    auto it = by_id_.find(session_id);
    return it == by_id_.end() ? nullptr : &sessions_[it->second];
}

void Corpus::add(Session session) {
    if (session.session_id.empty()) {
        throw Error(ErrorCode::invalid_argument, "session id must be non-empty");
    }
    if (by_id_.count(session.session_id)) {
        throw Error(ErrorCode::invalid_argument, "duplicate session id: " + session.session_id);
    }
    by_id_[session.session_id] = sessions_.size();
    sessions_.push_back(std::move(session));
}

std::string Corpus::fingerprint() const {
    std::string acc;
    for (const auto& session : sessions_) {
        acc += session.session_id + "\x1f" + session.date.str() + "\x1f";
        for (const auto& turn : session.turns) {
            acc += (turn.role == Role::user ? "u:" : "a:");
            acc += turn.text;
            acc += "\x1e";
        }
        acc += "\n";
    }
    return content_hash(acc);
}

// ---- loaders --------------------------------------------------------------------

namespace {

std::string session_content_key(const nlohmann::json& turns) { return turns.dump(); }

std::optional<Date> parse_leading_date(const std::string& text) {
    // Dates may carry trailing decoration ("2023/05/20 (Sat) 02:21").
    auto head = text.substr(0, text.find(' '));
    return Date::parse(head);
}

std::vector<Turn> parse_turns(const nlohmann::json& turns_json,
                              std::vector<std::string>& warnings, const std::string& where) {
    std::vector<Turn> turns;
    int index = 0;
    for (const auto& t : turns_json) {
        if (!t.is_object()) {
            warnings.push_back(where + ": non-object turn skipped");
            continue;
        }
        Turn turn;
        std::string role = t.value("role", "");
        if (role == "user") {
            turn.role = Role::user;
        } else if (role == "assistant") {
            turn.role = Role::assistant;
        } else {
            warnings.push_back(where + ": unknown role '" + role + "', treated as assistant");
            turn.role = Role::assistant;
        }
        if (t.contains("content")) {
            turn.text = t.at("content").is_string() ? t.at("content").get<std::string>()
                                                    : t.at("content").dump();
        } else if (t.contains("text")) {
            turn.text = t.at("text").is_string() ? t.at("text").get<std::string>()
                                                 : t.at("text").dump();
        } else {
            warnings.push_back(where + ": turn without content skipped");
            continue;
        }
        turn.turn_index = index++;
        turns.push_back(std::move(turn));
    }
    return turns;
}

std::string json_to_text(const nlohmann::json& j) {
    return j.is_string() ? j.get<std::string>() : j.dump();
}

}  // namespace

LoadedBenchmark load_longmemeval(const std::string& path, const std::string& corpus_name) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::format, "benchmark parse error: " + std::string(e.what()));
    }
    if (!doc.is_array()) {
        throw Error(ErrorCode::format, "benchmark document must be a JSON array");
    }

    std::string name = corpus_name;
    if (name.empty()) {
        auto slash = path.find_last_of('/');
        name = slash == std::string::npos ? path : path.substr(slash + 1);
        auto dot = name.find('.');
        if (dot != std::string::npos) name = name.substr(0, dot);
    }

    LoadedBenchmark out;
    out.corpus = Corpus(name);
    SessionIdCanonicalizer canonicalizer(name);
    // (raw id, content hash) -> canonical id, so a session repeated across
    // questions is stored once.
    std::unordered_map<std::string, std::string> canonical_of;

    int entry_number = 0;
    for (const auto& entry : doc) {
        ++entry_number;
        const std::string where = "entry " + std::to_string(entry_number);
        if (!entry.is_object()) {
            out.warnings.push_back(where + ": not an object, skipped");
            continue;
        }
        BenchmarkQuestion question;
        if (!entry.contains("question_id") || !entry.contains("question")) {
            out.warnings.push_back(where + ": missing question_id/question, skipped");
            continue;
        }
        question.question_id = json_to_text(entry.at("question_id"));
        question.question_text = json_to_text(entry.at("question"));
        question.answer_text = entry.contains("answer") ? json_to_text(entry.at("answer")) : "";
        question.question_type = entry.value("question_type", "unknown");
        if (entry.contains("question_date")) {
            question.question_date = parse_leading_date(json_to_text(entry.at("question_date")));
        }

        std::unordered_map<std::string, std::string> local_canonical;
        if (entry.contains("haystack_sessions")) {
            const auto& sessions = entry.at("haystack_sessions");
            const auto& ids = entry.contains("haystack_session_ids")
                                  ? entry.at("haystack_session_ids")
                                  : nlohmann::json::array();
            const auto& dates = entry.contains("haystack_dates") ? entry.at("haystack_dates")
                                                                 : nlohmann::json::array();
            for (size_t i = 0; i < sessions.size(); ++i) {
                std::string raw_id = i < ids.size() ? json_to_text(ids[i])
                                                    : question.question_id + "_h" + std::to_string(i);
                if (raw_id.empty()) {
                    out.warnings.push_back(where + ": empty session id, skipped");
                    continue;
                }
                std::string content = session_content_key(sessions[i]);
                std::string dedupe_key = raw_id + "\x1f" + content_hash(content);
                auto hit = canonical_of.find(dedupe_key);
                if (hit != canonical_of.end()) {
                    local_canonical[raw_id] = hit->second;
                    continue;
                }
                Session session;
                session.session_id = canonicalizer.canonical(raw_id, content);
                if (i < dates.size()) {
                    if (auto date = parse_leading_date(json_to_text(dates[i]))) {
                        session.date = *date;
                    } else {
                        out.warnings.push_back(where + ": unparseable session date '" +
                                               json_to_text(dates[i]) + "', default used");
                    }
                }
                session.turns = parse_turns(sessions[i], out.warnings, where);
                canonical_of[dedupe_key] = session.session_id;
                local_canonical[raw_id] = session.session_id;
                out.corpus.add(std::move(session));
            }
        }

        if (entry.contains("answer_session_ids")) {
            for (const auto& raw : entry.at("answer_session_ids")) {
                std::string raw_id = json_to_text(raw);
                auto it = local_canonical.find(raw_id);
                if (it != local_canonical.end()) {
                    question.evidence_session_ids.push_back(it->second);
                } else {
                    question.warnings.push_back("dangling evidence session id: " + raw_id);
                }
            }
        }
        if (question.evidence_session_ids.empty()) question.flagged = true;
        out.questions.push_back(std::move(question));
    }
    return out;
}

LoadedBenchmark load_session_corpus(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::format, "corpus parse error: " + std::string(e.what()));
    }
    if (!doc.is_object() || !doc.contains("sessions")) {
        throw Error(ErrorCode::format, "corpus document requires a 'sessions' field");
    }
    std::string name = doc.value("name", "corpus");

    LoadedBenchmark out;
    out.corpus = Corpus(name);
    SessionIdCanonicalizer canonicalizer(name);
    std::unordered_map<std::string, std::string> canonical_of;  // raw -> canonical

    int session_number = 0;
    for (const auto& s : doc.at("sessions")) {
        ++session_number;
        const std::string where = "session " + std::to_string(session_number);
        if (!s.is_object() || !s.contains("session_id") || !s.contains("turns")) {
            out.warnings.push_back(where + ": missing session_id/turns, skipped");
            continue;
        }
        std::string raw_id = json_to_text(s.at("session_id"));
        Session session;
        session.session_id = canonicalizer.canonical(raw_id, s.at("turns").dump());
        if (!canonical_of.count(raw_id)) canonical_of[raw_id] = session.session_id;
        if (s.contains("date")) {
            if (auto date = Date::parse(json_to_text(s.at("date")))) {
                session.date = *date;
            } else {
                out.warnings.push_back(where + ": invalid date, default used");
            }
        }
        session.turns = parse_turns(s.at("turns"), out.warnings, where);
        if (s.contains("memory_points")) {
            std::vector<MemoryPoint> points;
            for (const auto& p : s.at("memory_points")) {
                points.push_back({p.value("text", ""), p.value("type", "")});
            }
            out.memory_points[session.session_id] = std::move(points);
        }
        out.corpus.add(std::move(session));
    }

    if (doc.contains("questions")) {
        for (const auto& q : doc.at("questions")) {
            BenchmarkQuestion question;
            question.question_id = json_to_text(q.at("question_id"));
            question.question_text = json_to_text(q.at("question"));
            question.answer_text = q.contains("answer") ? json_to_text(q.at("answer")) : "";
            question.question_type = q.value("question_type", "unknown");
            if (q.contains("question_date")) {
                question.question_date = parse_leading_date(json_to_text(q.at("question_date")));
            }
            if (q.contains("evidence_session_ids")) {
                for (const auto& raw : q.at("evidence_session_ids")) {
                    std::string raw_id = json_to_text(raw);
                    auto it = canonical_of.find(raw_id);
                    if (it != canonical_of.end() && out.corpus.find(it->second)) {
                        question.evidence_session_ids.push_back(it->second);
                    } else {
                        question.warnings.push_back("dangling evidence session id: " + raw_id);
                    }
                }
            }
            if (question.evidence_session_ids.empty()) question.flagged = true;
            out.questions.push_back(std::move(question));
        }
    }
    return out;
}

LoadedBenchmark load_benchmark(const std::string& path) {
    std::string text = read_file(path);
    size_t i = 0;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i < text.size() && text[i] == '[') return load_longmemeval(path);
    return load_session_corpus(path);
}

// ---- metrics ---------------------------------------------------------------------

double recall_at_k(const std::vector<std::string>& retrieved, const std::set<std::string>& gt,
                   int k) {
    if (gt.empty()) {
        throw Error(ErrorCode::invalid_argument, "recall undefined for empty ground truth");
    }
    if (k <= 0) throw Error(ErrorCode::invalid_argument, "recall: k must be positive");
    std::unordered_set<std::string> hit;
    size_t limit = std::min(retrieved.size(), size_t(k));
    for (size_t i = 0; i < limit; ++i) {
        if (gt.count(retrieved[i])) hit.insert(retrieved[i]);
    }
    return double(hit.size()) / double(gt.size());
}

double ndcg_at_k(const std::vector<std::string>& retrieved, const std::set<std::string>& gt,
                 int k) {
    if (gt.empty()) {
        throw Error(ErrorCode::invalid_argument, "ndcg undefined for empty ground truth");
    }
    if (k <= 0) throw Error(ErrorCode::invalid_argument, "ndcg: k must be positive");
    double dcg = 0.0;
    std::unordered_set<std::string> counted;
    size_t limit = std::min(retrieved.size(), size_t(k));
    for (size_t i = 0; i < limit; ++i) {
        if (gt.count(retrieved[i]) && counted.insert(retrieved[i]).second) {
            dcg += 1.0 / std::log2(double(i) + 2.0);
        }
    }
    double ideal = 0.0;
    size_t ideal_hits = std::min(gt.size(), size_t(k));
    for (size_t i = 0; i < ideal_hits; ++i) ideal += 1.0 / std::log2(double(i) + 2.0);
    return dcg / ideal;
}

// ---- reports ------------------------------------------------------------------------

void EvalReport::finalize() {
    std::sort(per_question.begin(), per_question.end(),
              [](const QuestionResult& a, const QuestionResult& b) {
                  return a.question_id < b.question_id;
              });
    evaluated_questions = 0;
    flagged_questions = 0;
    judged_questions = 0;
    unjudged_questions = 0;
    recall_at_5 = recall_at_10 = ndcg_at_5 = ndcg_at_10 = 0.0;
    counts_by_type.clear();
    recall_at_5_by_type.clear();

    std::map<std::string, int> evaluated_by_type;
    int correct = 0;
    for (const auto& q : per_question) {
        counts_by_type[q.question_type] += 1;
        if (q.answer) {
            if (q.correct) {
                ++judged_questions;
                if (*q.correct) ++correct;
            } else {
                ++unjudged_questions;
            }
        }
        if (q.flagged) {
            ++flagged_questions;
            continue;
        }
        ++evaluated_questions;
        recall_at_5 += q.recall_at_5;
        recall_at_10 += q.recall_at_10;
        ndcg_at_5 += q.ndcg_at_5;
        ndcg_at_10 += q.ndcg_at_10;
        recall_at_5_by_type[q.question_type] += q.recall_at_5;
        evaluated_by_type[q.question_type] += 1;
    }
    if (evaluated_questions > 0) {
        recall_at_5 /= evaluated_questions;
        recall_at_10 /= evaluated_questions;
        ndcg_at_5 /= evaluated_questions;
        ndcg_at_10 /= evaluated_questions;
    }
    for (auto& [type, total] : recall_at_5_by_type) total /= evaluated_by_type[type];
    if (judged_questions > 0) {
        answer_accuracy = double(correct) / double(judged_questions);
    }
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["config"] = nlohmann::ordered_json::parse(config_json.empty() ? "{}" : config_json);
    j["corpus_fingerprint"] = corpus_fingerprint;
    j["metric_definitions"] = {
        {"recall", "set recall of ground-truth evidence sessions, averaged over questions"},
        {"ndcg", "binary relevance, ideal DCG normalized at cutoff"},
    };
    j["aggregates"] = {{"evaluated_questions", evaluated_questions},
                       {"flagged_questions", flagged_questions},
                       {"recall_at_5", recall_at_5},
                       {"recall_at_10", recall_at_10},
                       {"ndcg_at_5", ndcg_at_5},
                       {"ndcg_at_10", ndcg_at_10},
                       {"retrieval_ms_per_query", retrieval_ms_per_query},
                       {"value_kind", value_kind}};
    if (answer_accuracy) {
        j["aggregates"]["answer_accuracy"] = *answer_accuracy;
        j["aggregates"]["judged_questions"] = judged_questions;
        j["aggregates"]["unjudged_questions"] = unjudged_questions;
    }
    j["counts_by_type"] = counts_by_type;
    j["recall_at_5_by_type"] = recall_at_5_by_type;
    nlohmann::ordered_json per = nlohmann::ordered_json::array();
    for (const auto& q : per_question) {
        nlohmann::ordered_json e;
        e["question_id"] = q.question_id;
        e["question_type"] = q.question_type;
        e["flagged"] = q.flagged;
        e["retrieved"] = q.retrieved;
        e["scores"] = q.scores;
        e["recall_at_5"] = q.recall_at_5;
        e["recall_at_10"] = q.recall_at_10;
        e["ndcg_at_5"] = q.ndcg_at_5;
        e["ndcg_at_10"] = q.ndcg_at_10;
        if (q.answer) e["answer"] = *q.answer;
        if (q.correct) e["correct"] = *q.correct;
        if (!q.warnings.empty()) e["warnings"] = q.warnings;
        per.push_back(std::move(e));
    }
    j["per_question"] = std::move(per);
    return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
    char line[256];
    std::string acc_session = "-";
    std::string acc_key = "-";
    if (answer_accuracy) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", *answer_accuracy);
        (value_kind == "key" ? acc_key : acc_session) = buf;
    }
    std::string out = "R@5\tR@10\tN@5\tN@10\tacc(V=session)\tacc(V=key)\n";
    std::snprintf(line, sizeof(line), "%.4f\t%.4f\t%.4f\t%.4f\t%s\t%s\n", recall_at_5,
                  recall_at_10, ndcg_at_5, ndcg_at_10, acc_session.c_str(), acc_key.c_str());
    out += line;
    return out;
}

}  // namespace dialogmem
