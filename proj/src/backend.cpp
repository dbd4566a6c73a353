#include "dialogmem/backend.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <unordered_set>
#include <utility>

#include <nlohmann/json.hpp>

#include "dialogmem/extraction_parser.hpp"

namespace dialogmem {

void FlatExtraction::dedupe_facts() {
    std::unordered_set<std::string> seen;
    std::vector<std::string> kept;
    for (auto& fact : facts) {
        std::string norm = normalize_whitespace(fact);
        if (norm.empty()) continue;
        if (seen.insert(norm).second) kept.push_back(fact);
    }
    facts = std::move(kept);
}

std::optional<std::string> decision_violation(const MemOpDecision& decision,
                                              const std::vector<CandidateMemory>& candidates) {
    auto target_known = [&] {
        if (!decision.target_key_id) return false;
        for (const auto& c : candidates) {
            if (c.key_id == *decision.target_key_id) return true;
        }
        return false;
    };
    switch (decision.op) {
        case MemOp::update:
            if (!decision.target_key_id) return "update without target_key_id";
            if (!target_known()) return "update target not among candidates";
            if (!decision.revised_text || normalize_whitespace(*decision.revised_text).empty()) {
                return "update without revised_text";
            }
            return std::nullopt;
        case MemOp::del:
            if (!decision.target_key_id) return "delete without target_key_id";
            if (!target_known()) return "delete target not among candidates";
            return std::nullopt;
        case MemOp::add:
        case MemOp::noop:
            if (decision.target_key_id) return "add/noop must not carry a target";
            return std::nullopt;
    }
    return "unknown op";
}

// ---- HashEmbedder ----------------------------------------------------------

HashEmbedder::HashEmbedder(int dimension) {
    if (dimension <= 0) throw Error(ErrorCode::invalid_argument, "embedder dimension must be > 0");
    spec_ = EmbedderSpec{"hash-mock", dimension, EmbedderKind::hash_mock};
}

std::pair<size_t, float> HashEmbedder::token_slot(const std::string& token, int dimension) {
    uint64_t h = fnv1a64(token);
    size_t bucket = h % uint64_t(dimension);
    float sign = ((h >> 32) & 1) ? 1.0f : -1.0f;
    return {bucket, sign};
}

std::vector<EmbeddingVector> HashEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        std::vector<float> acc(spec_.dimension, 0.0f);
        bool any = false;
        for (const auto& token : tokenize(text)) {
            auto [bucket, sign] = token_slot(token, spec_.dimension);
            acc[bucket] += sign;
            any = true;
        }
        double norm_sq = 0.0;
        for (float v : acc) norm_sq += double(v) * double(v);
        if (!any || norm_sq == 0.0) {
            out.push_back(EmbeddingVector::reserved_flagged(spec_.dimension));
        } else {
            out.push_back(EmbeddingVector::normalized(std::move(acc)));
        }
    }
    return out;
}

// ---- MockFlatExtractor -------------------------------------------------------

namespace {

bool has_digit(std::string_view text) {
    for (unsigned char c : text) {
        if (std::isdigit(c)) return true;
    }
    return false;
}

bool has_copular_verb(const std::vector<std::string>& tokens) {
    static const std::unordered_set<std::string_view> kCopular = {
        "is", "are", "was", "were", "am", "be", "been", "being",
    };
    for (const auto& t : tokens) {
        if (kCopular.count(t)) return true;
    }
    return false;
}

}  // namespace

FlatExtraction MockFlatExtractor::extract(const Session& session) {
    FlatExtraction out;
    std::string text = session.user_text();
    if (normalize_whitespace(text).empty()) return out;

    auto sentences = split_sentences(text);
    if (!sentences.empty()) out.summary = sentences.front();

    for (const auto& sentence : sentences) {
        auto tokens = tokenize(sentence);
        if (has_digit(sentence) || has_copular_verb(tokens)) {
            out.facts.push_back(sentence);
        }
    }
    out.dedupe_facts();

    std::unordered_set<std::string> seen;
    for (const auto& token : tokenize(text)) {
        if (is_stopword(token)) continue;
        if (seen.insert(token).second) out.keywords.push_back(token);
    }
    return out;
}

// ---- MockGraphExtractor --------------------------------------------------------

namespace {

// Whitespace-split with leading/trailing punctuation stripped, original case.
std::vector<std::string> words_of(const std::string& sentence) {
    std::vector<std::string> words;
    std::string cur;
    auto flush = [&] {
        size_t begin = 0, end = cur.size();
        while (begin < end && !std::isalnum(static_cast<unsigned char>(cur[begin]))) ++begin;
        while (end > begin && !std::isalnum(static_cast<unsigned char>(cur[end - 1]))) --end;
        if (end > begin) words.push_back(cur.substr(begin, end - begin));
        cur.clear();
    };
    for (char c : sentence) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            cur.push_back(c);
        }
    }
    flush();
    return words;
}

bool is_capitalized_word(const std::string& word) {
    if (word.empty() || word == "I") return false;
    if (!std::isupper(static_cast<unsigned char>(word[0]))) return false;
    for (size_t i = 1; i < word.size(); ++i) {
        if (!std::isalnum(static_cast<unsigned char>(word[i]))) return false;
    }
    return word.size() > 1 || std::isalpha(static_cast<unsigned char>(word[0]));
}

bool is_number_word(const std::string& word) {
    if (word.empty()) return false;
    for (unsigned char c : word) {
        if (!std::isdigit(c)) return false;
    }
    return true;
}

// Candidate time phrases within a sentence; normalize_time decides which
// of them actually resolve.
std::vector<std::string> time_phrases(const std::string& sentence) {
    std::vector<std::string> phrases;
    std::string lower = to_lower(sentence);
    for (const char* phrase : {"yesterday", "last week", "last weekend", "last month"}) {
        if (lower.find(phrase) != std::string::npos) phrases.emplace_back(phrase);
    }
    auto words = words_of(lower);
    for (size_t i = 0; i + 2 < words.size(); ++i) {
        if (is_number_word(words[i]) && (words[i + 1] == "days" || words[i + 1] == "day") &&
            words[i + 2] == "ago") {
            phrases.push_back(words[i] + " " + words[i + 1] + " ago");
        }
    }
    // Whitespace-split without punctuation stripping keeps YYYY/MM/DD intact.
    std::string raw_word;
    std::vector<std::string> raw_words;
    for (char c : sentence) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!raw_word.empty()) raw_words.push_back(std::exchange(raw_word, {}));
        } else {
            raw_word.push_back(c);
        }
    }
    if (!raw_word.empty()) raw_words.push_back(raw_word);
    for (const auto& w : raw_words) {
        std::string trimmed = w;
        while (!trimmed.empty() && (trimmed.back() == '.' || trimmed.back() == ',' ||
                                    trimmed.back() == '!' || trimmed.back() == '?')) {
            trimmed.pop_back();
        }
        if (Date::parse(trimmed)) phrases.push_back(trimmed);
    }
    for (size_t i = 0; i + 1 < words.size(); ++i) {
        if (!is_month_name(words[i])) continue;
        if (i + 2 < words.size() && is_number_word(words[i + 2])) {
            phrases.push_back(words[i] + " " + words[i + 1] + " " + words[i + 2]);
        }
        phrases.push_back(words[i] + " " + words[i + 1]);
    }
    return phrases;
}

}  // namespace

std::string MockGraphExtractor::extract(const Session& session, Date dialogue_time) {
    std::string text = session.user_text();
    if (normalize_whitespace(text).empty()) return kCompleteMarker;

    ParseReport report;
    std::unordered_set<std::string> seen_names;
    auto add_entity = [&](const std::string& name, const std::string& etype,
                          const std::string& description) {
        std::string canonical = canonical_entity_name(name);
        if (canonical.empty() || !seen_names.insert(canonical).second) return;
        report.entities.push_back(RawEntity{canonical, etype, description, false});
    };

    add_entity("USER", "User", "The user speaking in this conversation.");

    for (const auto& sentence : split_sentences(text)) {
        auto words = words_of(sentence);
        for (size_t i = 0; i < words.size();) {
            if (is_capitalized_word(words[i])) {
                size_t j = i;
                while (j < words.size() && is_capitalized_word(words[j])) ++j;
                bool sentence_initial_single = (i == 0 && j == i + 1);
                if (!sentence_initial_single) {
                    std::vector<std::string> run(words.begin() + i, words.begin() + j);
                    add_entity(join(run, " "), "Place", "Mentioned by the user: " + sentence);
                }
                i = j;
            } else {
                if (is_number_word(words[i])) {
                    add_entity(words[i], "Statistic",
                               "The user mentioned the quantity " + words[i] + ": " + sentence);
                }
                ++i;
            }
        }
        for (const auto& phrase : time_phrases(sentence)) {
            if (auto date = normalize_time(phrase, dialogue_time)) {
                add_entity(date->str(), "Time", "What happened around this time: " + sentence);
            }
        }
    }

    for (const auto& entity : report.entities) {
        if (entity.name == "USER") continue;
        report.relations.push_back(
            RawRelation{"USER", entity.name, "The user mentioned " + entity.name + ".", 5});
    }
    return serialize_extraction(report);
}

// ---- MockPrejudge ---------------------------------------------------------------

bool MockPrejudge::keep(const std::string& chunk) {
    for (const auto& sentence : split_sentences(chunk)) {
        if (tokenize(sentence).size() >= 4) return true;
    }
    return false;
}

// ---- MockMemOpDecider -------------------------------------------------------------

MemOpDecision MockMemOpDecider::decide(const std::string& new_fact,
                                       const std::vector<CandidateMemory>& candidates) {
    auto new_tokens = tokenize(new_fact);
    for (const auto& candidate : candidates) {
        if (tokenize(candidate.text) == new_tokens) {
            return MemOpDecision{MemOp::noop, std::nullopt, std::nullopt,
                                 "duplicate of " + candidate.key_id};
        }
    }
    if (new_tokens.size() >= 3) {
        for (const auto& candidate : candidates) {
            auto existing = tokenize(candidate.text);
            if (existing.size() >= 3 && existing != new_tokens &&
                std::equal(new_tokens.begin(), new_tokens.begin() + 3, existing.begin())) {
                return MemOpDecision{MemOp::update, candidate.key_id, new_fact,
                                     "revises " + candidate.key_id};
            }
        }
    }
    return MemOpDecision{MemOp::add, std::nullopt, std::nullopt, "novel fact"};
}

// ---- MockAnswerGenerator ------------------------------------------------------------

std::string MockAnswerGenerator::answer(const MemQuery& question,
                                        const std::vector<std::string>& contexts,
                                        AnswerMode /*mode*/) {
    for (const auto& context : contexts) {
        size_t pos = 0;
        while (pos <= context.size()) {
            size_t next = context.find('\n', pos);
            std::string line = context.substr(pos, next == std::string::npos ? next : next - pos);
            if (contains_all_content_words(line, question.text)) {
                return normalize_whitespace(line);
            }
            if (next == std::string::npos) break;
            pos = next + 1;
        }
    }
    return "I don't know";
}

// ---- MockGroupLinkJudge / MockDescriptionSummarizer -----------------------------------

bool MockGroupLinkJudge::should_link(const std::string&, const std::string&, double cosine) {
    return cosine >= 0.5;
}

std::string MockDescriptionSummarizer::summarize(const std::vector<std::string>& descriptions,
                                                 size_t char_limit) {
    std::string merged = join(descriptions, " ");
    if (merged.size() > char_limit) merged.resize(char_limit);
    return merged;
}

bool MockAnswerJudge::judge(const std::string&, const std::string& gold,
                            const std::string& answer) {
    std::string needle = join(tokenize(gold), " ");
    if (needle.empty()) return true;
    return join(tokenize(answer), " ").find(needle) != std::string::npos;
}

// ---- gateway ----------------------------------------------------------------------------

BackendSet make_mock_backends(int embed_dimension) {
    BackendSet set;
    set.embedder = std::make_unique<HashEmbedder>(embed_dimension);
    set.flat_extractor = std::make_unique<MockFlatExtractor>();
    set.graph_extractor = std::make_unique<MockGraphExtractor>();
    set.prejudge = std::make_unique<MockPrejudge>();
    set.mem_op_decider = std::make_unique<MockMemOpDecider>();
    set.answer_generator = std::make_unique<MockAnswerGenerator>();
    set.link_judge = std::make_unique<MockGroupLinkJudge>();
    set.summarizer = std::make_unique<MockDescriptionSummarizer>();
    set.answer_judge = std::make_unique<MockAnswerJudge>();
    return set;
}

struct BackendGateway::Counters {
    std::atomic<uint64_t> backend_calls{0};
    std::atomic<uint64_t> embed_calls{0};
    std::atomic<uint64_t> chat_calls{0};
    std::atomic<uint64_t> extraction_calls{0};
    std::atomic<uint64_t> prejudge_calls{0};
    std::atomic<uint64_t> prejudge_skips{0};
    std::atomic<uint64_t> cache_hits{0};
    std::atomic<uint64_t> cache_misses{0};
    std::atomic<uint64_t> tokens_in{0};
    std::atomic<uint64_t> tokens_out{0};
};

BackendGateway::~BackendGateway() = default;

BackendGateway::BackendGateway(BackendSet backends, std::shared_ptr<ResponseCache> cache,
                               int max_parallel)
    : backends_(std::move(backends)),
      cache_(std::move(cache)),
      max_parallel_(max_parallel > 0 ? max_parallel : 16),
      counters_(std::make_unique<Counters>()) {
    if (!backends_.embedder) {
        throw Error(ErrorCode::invalid_argument, "backend set requires an embedder");
    }
}

const EmbedderSpec& BackendGateway::embedder_spec() const { return backends_.embedder->spec(); }

std::string BackendGateway::cached(const std::string& op, const std::string& version,
                                   const std::string& payload,
                                   const std::function<std::string()>& call) {
    std::string key = content_hash(op + "\x1f" + version + "\x1f" + payload);
    if (cache_) {
        if (auto hit = cache_->get(key)) {
            counters_->cache_hits.fetch_add(1);
            return *hit;
        }
    }
    counters_->cache_misses.fetch_add(1);
    counters_->backend_calls.fetch_add(1);
    counters_->tokens_in.fetch_add(approx_token_count(payload));
    std::string response = call();
    counters_->tokens_out.fetch_add(approx_token_count(response));
    if (cache_) cache_->put(key, op, response);
    return response;
}

std::vector<EmbeddingVector> BackendGateway::embed_texts(const std::vector<std::string>& texts) {
    if (texts.empty()) {
        throw Error(ErrorCode::invalid_argument, "embed_texts: empty input list");
    }
    const auto& spec = backends_.embedder->spec();
    const std::string version = spec.name + "/" + std::to_string(spec.dimension);

    std::vector<EmbeddingVector> out(texts.size());
    std::vector<size_t> misses;
    std::vector<std::string> keys(texts.size());
    for (size_t i = 0; i < texts.size(); ++i) {
        keys[i] = content_hash("embed\x1f" + version + "\x1f" + texts[i]);
        if (cache_) {
            if (auto hit = cache_->get(keys[i])) {
                counters_->cache_hits.fetch_add(1);
                auto values = decode_f32le(std::string_view(*hit).substr(1));
                out[i] = EmbeddingVector::from_raw(std::move(values), (*hit)[0] != 0);
                continue;
            }
        }
        misses.push_back(i);
    }
    if (!misses.empty()) {
        std::vector<std::string> pending;
        pending.reserve(misses.size());
        for (size_t i : misses) pending.push_back(texts[i]);
        auto embedded = backends_.embedder->embed(pending);
        if (embedded.size() != pending.size()) {
            throw Error(ErrorCode::backend, "embedder returned wrong batch size");
        }
        counters_->cache_misses.fetch_add(misses.size());
        counters_->backend_calls.fetch_add(misses.size());
        counters_->embed_calls.fetch_add(misses.size());
        for (size_t j = 0; j < misses.size(); ++j) {
            counters_->tokens_in.fetch_add(approx_token_count(pending[j]));
            out[misses[j]] = embedded[j];
            if (cache_) {
                std::string blob;
                blob.push_back(embedded[j].flagged() ? 1 : 0);
                blob += encode_f32le(embedded[j].values());
                cache_->put(keys[misses[j]], "embed", blob);
            }
        }
    }
    return out;
}

EmbeddingVector BackendGateway::embed_text(const std::string& text) {
    return embed_texts({text}).front();
}

FlatExtraction BackendGateway::extract_flat(const Session& session) {
    const std::string payload = session.user_text();
    std::string raw =
        cached("extract_flat", backends_.flat_extractor->version(), payload, [&] {
            counters_->extraction_calls.fetch_add(1);
            counters_->chat_calls.fetch_add(1);
            FlatExtraction extraction = backends_.flat_extractor->extract(session);
            extraction.dedupe_facts();
            nlohmann::ordered_json j;
            j["summary"] = extraction.summary;
            j["facts"] = extraction.facts;
            j["keywords"] = extraction.keywords;
            return j.dump();
        });
    try {
        auto j = nlohmann::json::parse(raw);
        FlatExtraction extraction;
        extraction.summary = j.at("summary").get<std::string>();
        extraction.facts = j.at("facts").get<std::vector<std::string>>();
        extraction.keywords = j.at("keywords").get<std::vector<std::string>>();
        extraction.dedupe_facts();
        return extraction;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::format, std::string("cached flat extraction unreadable: ") + e.what());
    }
}

std::string BackendGateway::extract_graph(const Session& session, Date dialogue_time) {
    const std::string payload = dialogue_time.str() + "\x1f" + session.user_text();
    return cached("extract_graph", backends_.graph_extractor->version(), payload, [&] {
        counters_->extraction_calls.fetch_add(1);
        counters_->chat_calls.fetch_add(1);
        return backends_.graph_extractor->extract(session, dialogue_time);
    });
}

bool BackendGateway::prejudge(const std::string& chunk) {
    bool keep = true;
    try {
        std::string verdict =
            cached("prejudge", backends_.prejudge->version(), chunk, [&] {
                counters_->prejudge_calls.fetch_add(1);
                counters_->chat_calls.fetch_add(1);
                return backends_.prejudge->keep(chunk) ? std::string("keep")
                                                       : std::string("skip");
            });
        keep = verdict != "skip";
    } catch (const Error&) {
        keep = true;  // fail-open: losing memory is worse than one extra call
    }
    if (!keep) counters_->prejudge_skips.fetch_add(1);
    return keep;
}

MemOpDecision BackendGateway::decide_mem_op(const std::string& new_fact,
                                            const std::vector<CandidateMemory>& candidates) {
    std::string payload = new_fact;
    for (const auto& c : candidates) payload += "\x1e" + c.key_id + "\x1f" + c.text;
    std::string raw =
        cached("decide_mem_op", backends_.mem_op_decider->version(), payload, [&] {
            counters_->chat_calls.fetch_add(1);
            MemOpDecision decision = backends_.mem_op_decider->decide(new_fact, candidates);
            nlohmann::ordered_json j;
            j["op"] = to_string(decision.op);
            if (decision.target_key_id) j["target_key_id"] = *decision.target_key_id;
            if (decision.revised_text) j["revised_text"] = *decision.revised_text;
            j["rationale"] = decision.rationale;
            return j.dump();
        });

    MemOpDecision decision;
    try {
        auto j = nlohmann::json::parse(raw);
        auto op = mem_op_from_string(j.at("op").get<std::string>());
        if (!op) throw std::runtime_error("unknown op");
        decision.op = *op;
        if (j.contains("target_key_id")) decision.target_key_id = j["target_key_id"].get<std::string>();
        if (j.contains("revised_text")) decision.revised_text = j["revised_text"].get<std::string>();
        if (j.contains("rationale")) decision.rationale = j["rationale"].get<std::string>();
    } catch (const std::exception&) {
        return MemOpDecision{MemOp::add, std::nullopt, std::nullopt,
                             "degraded to add: unreadable decision"};
    }
    if (auto violation = decision_violation(decision, candidates)) {
        return MemOpDecision{MemOp::add, std::nullopt, std::nullopt,
                             "degraded to add: " + *violation};
    }
    return decision;
}

std::string BackendGateway::generate_answer(const MemQuery& question,
                                            const std::vector<std::string>& contexts,
                                            AnswerMode mode) {
    std::string payload = std::string(mode == AnswerMode::direct ? "direct" : "chain_of_note") +
                          "\x1f" + question.text;
    for (const auto& c : contexts) payload += "\x1e" + c;
    return cached("generate_answer", backends_.answer_generator->version(), payload, [&] {
        counters_->chat_calls.fetch_add(1);
        return backends_.answer_generator->answer(question, contexts, mode);
    });
}

bool BackendGateway::should_link(const std::string& a_text, const std::string& b_text,
                                 double cosine) {
    char cosine_text[32];
    std::snprintf(cosine_text, sizeof(cosine_text), "%.6f", cosine);
    std::string payload = a_text + "\x1f" + b_text + "\x1f" + cosine_text;
    std::string verdict = cached("should_link", backends_.link_judge->version(), payload, [&] {
        counters_->chat_calls.fetch_add(1);
        return backends_.link_judge->should_link(a_text, b_text, cosine) ? std::string("yes")
                                                                         : std::string("no");
    });
    return verdict == "yes";
}

std::string BackendGateway::summarize_descriptions(const std::vector<std::string>& descriptions,
                                                   size_t char_limit) {
    std::string payload = std::to_string(char_limit);
    for (const auto& d : descriptions) payload += "\x1e" + d;
    return cached("summarize", backends_.summarizer->version(), payload, [&] {
        counters_->chat_calls.fetch_add(1);
        return backends_.summarizer->summarize(descriptions, char_limit);
    });
}

bool BackendGateway::judge_answer(const std::string& question, const std::string& gold,
                                  const std::string& answer) {
    std::string payload = question + "\x1f" + gold + "\x1f" + answer;
    std::string verdict =
        cached("judge_answer", backends_.answer_judge->version(), payload, [&] {
            counters_->chat_calls.fetch_add(1);
            return backends_.answer_judge->judge(question, gold, answer)
                       ? std::string("correct")
                       : std::string("incorrect");
        });
    return verdict == "correct";
}

CounterSnapshot BackendGateway::counters() const {
    CounterSnapshot s;
    s.backend_calls = counters_->backend_calls.load();
    s.embed_calls = counters_->embed_calls.load();
    s.chat_calls = counters_->chat_calls.load();
    s.extraction_calls = counters_->extraction_calls.load();
    s.prejudge_calls = counters_->prejudge_calls.load();
    s.prejudge_skips = counters_->prejudge_skips.load();
    s.cache_hits = counters_->cache_hits.load();
    s.cache_misses = counters_->cache_misses.load();
    s.tokens_in = counters_->tokens_in.load();
    s.tokens_out = counters_->tokens_out.load();
    return s;
}

void BackendGateway::reset_counters() { counters_ = std::make_unique<Counters>(); }

}  // namespace dialogmem
