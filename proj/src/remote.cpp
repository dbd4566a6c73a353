#include "dialogmem/remote.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "httplib.h"

namespace fs = std::filesystem;

namespace dialogmem {

namespace {

std::string env_or(const char* primary, const char* fallback, const std::string& default_value) {
    if (const char* v = std::getenv(primary); v && *v) return v;
    if (fallback) {
        if (const char* v = std::getenv(fallback); v && *v) return v;
    }
    return default_value;
}

// Strips markdown code fences so JSON replies parse.
std::string strip_fences(std::string text) {
    auto start = text.find("```");
    if (start == std::string::npos) return text;
    auto line_end = text.find('\n', start);
    if (line_end == std::string::npos) return text;
    auto close = text.find("```", line_end);
    if (close == std::string::npos) return text;
    return text.substr(line_end + 1, close - line_end - 1);
}

}  // namespace

RemoteConfig RemoteConfig::from_env(const std::string& chat_model, const std::string& embed_model,
                                    int embed_dimension) {
    RemoteConfig config;
    config.base_url = env_or("DIALOGMEM_BASE_URL", "OPENAI_BASE_URL", "https://api.openai.com");
    config.api_key = env_or("DIALOGMEM_API_KEY", "OPENAI_API_KEY", "");
    config.chat_model = chat_model.empty() ? "gpt-4o-mini" : chat_model;
    config.embed_model = embed_model.empty() ? "text-embedding-3-small" : embed_model;
    config.embed_dimension = embed_dimension > 0 ? embed_dimension : 1536;
    if (config.api_key.empty()) {
        throw Error(ErrorCode::config,
                    "remote backend requires DIALOGMEM_API_KEY or OPENAI_API_KEY");
    }
    return config;
}

struct OpenAiClient::Impl {
    std::unique_ptr<httplib::Client> client;
    std::string path_prefix;
    std::mt19937 rng{std::random_device{}()};
    std::mutex rng_mutex;
};

OpenAiClient::OpenAiClient(RemoteConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>()) {
    std::string url = config_.base_url;
    auto scheme_end = url.find("://");
    size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = url.find('/', host_start);
    std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    impl_->path_prefix = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!impl_->path_prefix.empty() && impl_->path_prefix.back() == '/') {
        impl_->path_prefix.pop_back();
    }
    impl_->client = std::make_unique<httplib::Client>(origin);
    impl_->client->set_connection_timeout(config_.timeout_seconds);
    impl_->client->set_read_timeout(config_.timeout_seconds);
    impl_->client->set_write_timeout(config_.timeout_seconds);
}

OpenAiClient::~OpenAiClient() = default;

std::string OpenAiClient::post_json(const std::string& path, const std::string& body) {
    httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};
    std::string endpoint = impl_->path_prefix + path;
    int last_status = 0;
    std::string last_detail;

    for (int attempt = 0; attempt < config_.max_retries; ++attempt) {
        if (attempt > 0) {
            int backoff = config_.initial_backoff_ms << (attempt - 1);
            int jitter;
            {
                std::lock_guard<std::mutex> lock(impl_->rng_mutex);
                std::uniform_int_distribution<int> dist(-backoff / 4, backoff / 4);
                jitter = dist(impl_->rng);
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff + jitter));
        }
        auto res = impl_->client->Post(endpoint, headers, body, "application/json");
        if (!res) {
            last_status = -1;
            last_detail = "transport error: " + httplib::to_string(res.error());
            continue;  // retryable
        }
        if (res->status == 200) return res->body;
        last_status = res->status;
        last_detail = res->body.substr(0, 300);
        if (res->status == 429 || res->status >= 500) continue;  // retryable
        throw Error(ErrorCode::backend, "remote call failed (status " +
                                            std::to_string(res->status) + "): " + last_detail);
    }
    throw Error(ErrorCode::backend,
                "remote call failed after " + std::to_string(config_.max_retries) +
                    " attempts, last status " + std::to_string(last_status) + ": " + last_detail);
}

std::string OpenAiClient::chat(const std::string& system_prompt, const std::string& user_prompt) {
    nlohmann::ordered_json body;
    body["model"] = config_.chat_model;
    nlohmann::ordered_json messages = nlohmann::ordered_json::array();
    if (!system_prompt.empty()) {
        messages.push_back({{"role", "system"}, {"content", system_prompt}});
    }
    messages.push_back({{"role", "user"}, {"content", user_prompt}});
    body["messages"] = std::move(messages);
    body["temperature"] = config_.temperature;

    std::string raw = post_json("/v1/chat/completions", body.dump());
    try {
        auto j = nlohmann::json::parse(raw);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
        throw Error(ErrorCode::backend,
                    "malformed chat completion response: " + std::string(e.what()));
    }
}

std::vector<std::vector<float>> OpenAiClient::embed(const std::vector<std::string>& texts) {
    nlohmann::ordered_json body;
    body["model"] = config_.embed_model;
    body["input"] = texts;

    std::string raw = post_json("/v1/embeddings", body.dump());
    try {
        auto j = nlohmann::json::parse(raw);
        std::vector<std::vector<float>> out(texts.size());
        for (const auto& item : j.at("data")) {
            size_t index = item.at("index").get<size_t>();
            if (index >= out.size()) throw std::runtime_error("embedding index out of range");
            out[index] = item.at("embedding").get<std::vector<float>>();
        }
        for (const auto& v : out) {
            if (v.empty()) throw std::runtime_error("missing embedding row");
        }
        return out;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::backend, "malformed embeddings response: " + std::string(e.what()));
    }
}

// ---- prompt templates -------------------------------------------------------

PromptTemplate PromptTemplate::from_file(const std::string& path) {
    return from_text(read_file(path));
}

PromptTemplate PromptTemplate::from_text(std::string text) {
    PromptTemplate t;
    t.version_ = content_hash(text).substr(0, 16);
    t.text_ = std::move(text);
    return t;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& slots) const {
    std::string out = text_;
    for (const auto& [name, value] : slots) {
        std::string needle = "{" + name + "}";
        size_t pos = 0;
        while ((pos = out.find(needle, pos)) != std::string::npos) {
            out.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    return out;
}

std::string prompt_asset_path(const std::string& name) {
    std::vector<std::string> candidates;
    if (const char* dir = std::getenv("DIALOGMEM_PROMPT_DIR"); dir && *dir) {
        candidates.push_back(std::string(dir) + "/" + name);
    }
    candidates.push_back("assets/prompts/" + name);
#ifdef DIALOGMEM_PROMPT_DIR_DEFAULT
    candidates.push_back(std::string(DIALOGMEM_PROMPT_DIR_DEFAULT) + "/" + name);
#endif
    for (const auto& candidate : candidates) {
        if (fs::exists(candidate)) return candidate;
    }
    throw Error(ErrorCode::not_found, "prompt asset not found: " + name);
}

// ---- remote backends -----------------------------------------------------------

namespace {

class RemoteEmbedder : public Embedder {
public:
    RemoteEmbedder(std::shared_ptr<OpenAiClient> client)
        : client_(std::move(client)),
          spec_{"remote:" + client_->config().embed_model, client_->config().embed_dimension,
                EmbedderKind::remote} {}

    const EmbedderSpec& spec() const override { return spec_; }

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        constexpr size_t kBatch = 128;
        for (size_t start = 0; start < texts.size(); start += kBatch) {
            size_t end = std::min(texts.size(), start + kBatch);
            std::vector<std::string> batch(texts.begin() + long(start), texts.begin() + long(end));
            // The API rejects empty strings; embed a placeholder and flag it.
            std::vector<size_t> degenerate;
            for (size_t i = 0; i < batch.size(); ++i) {
                if (normalize_whitespace(batch[i]).empty()) {
                    degenerate.push_back(i);
                    batch[i] = "-";
                }
            }
            auto rows = client_->embed(batch);
            for (size_t i = 0; i < rows.size(); ++i) {
                if (int(rows[i].size()) != spec_.dimension) {
                    throw Error(ErrorCode::backend,
                                "embedding dimension mismatch: expected " +
                                    std::to_string(spec_.dimension) + ", got " +
                                    std::to_string(rows[i].size()));
                }
                bool flagged =
                    std::find(degenerate.begin(), degenerate.end(), i) != degenerate.end();
                if (flagged) {
                    out.push_back(EmbeddingVector::reserved_flagged(size_t(spec_.dimension)));
                } else {
                    out.push_back(EmbeddingVector::normalized(std::move(rows[i])));
                }
            }
        }
        return out;
    }

private:
    std::shared_ptr<OpenAiClient> client_;
    EmbedderSpec spec_;
};

class RemoteFlatExtractor : public FlatExtractor {
public:
    explicit RemoteFlatExtractor(std::shared_ptr<OpenAiClient> client)
        : client_(std::move(client)),
          prompt_(PromptTemplate::from_file(prompt_asset_path("flat_extraction.txt"))) {}

    FlatExtraction extract(const Session& session) override {
        std::string user = prompt_.render({{"input_text", session.user_text()}});
        std::string raw = client_->chat("", user);
        if (auto parsed = try_parse(raw)) return *parsed;
        raw = client_->chat("", user + "\n\nReturn strictly the JSON object, nothing else.");
        if (auto parsed = try_parse(raw)) return *parsed;
        throw Error(ErrorCode::backend, "unparseable extraction reply: " + raw.substr(0, 300));
    }

    std::string version() const override {
        return "remote-flat/" + prompt_.version() + "/" + client_->config().chat_model;
    }

private:
    static std::optional<FlatExtraction> try_parse(const std::string& raw) {
        try {
            auto j = nlohmann::json::parse(strip_fences(raw));
            FlatExtraction out;
            out.summary = j.value("summary", "");
            if (j.contains("facts")) out.facts = j.at("facts").get<std::vector<std::string>>();
            if (j.contains("keywords")) {
                out.keywords = j.at("keywords").get<std::vector<std::string>>();
            }
            out.dedupe_facts();
            return out;
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }

    std::shared_ptr<OpenAiClient> client_;
    PromptTemplate prompt_;
};

class RemoteGraphExtractor : public GraphExtractor {
public:
    explicit RemoteGraphExtractor(std::shared_ptr<OpenAiClient> client)
        : client_(std::move(client)),
          prompt_(PromptTemplate::from_file(
              prompt_asset_path("entity_relation_extraction.txt"))) {}

    std::string extract(const Session& session, Date dialogue_time) override {
        std::string user = prompt_.render(
            {{"dialogue_time", dialogue_time.str()}, {"input_text", session.user_text()}});
        return client_->chat("", user);
    }

    std::string version() const override {
        return "remote-graph/" + prompt_.version() + "/" + client_->config().chat_model;
    }

private:
    std::shared_ptr<OpenAiClient> client_;
    PromptTemplate prompt_;
};

class RemotePrejudge : public PrejudgeFilter {
public:
    explicit RemotePrejudge(std::shared_ptr<OpenAiClient> client)
        : client_(std::move(client)),
          prompt_(PromptTemplate::from_file(prompt_asset_path("prejudge.txt"))) {}

    bool keep(const std::string& chunk) override {
        std::string reply = to_lower(client_->chat("", prompt_.render({{"input_text", chunk}})));
        if (reply.find("skip") != std::string::npos && reply.find("keep") == std::string::npos) {
            return false;
        }
        return true;
    }

    std::string version() const override {
        return "remote-prejudge/" + prompt_.version() + "/" + client_->config().chat_model;
    }

private:
    std::shared_ptr<OpenAiClient> client_;
    PromptTemplate prompt_;
};

class RemoteMemOpDecider : public MemOpDecider {
public:
    explicit RemoteMemOpDecider(std::shared_ptr<OpenAiClient> client)
        : client_(std::move(client)),
          prompt_(PromptTemplate::from_file(prompt_asset_path("mem_op.txt"))) {}

    MemOpDecision decide(const std::string& new_fact,
                         const std::vector<CandidateMemory>& candidates) override {
        if (candidates.empty()) {
            return {MemOp::add, std::nullopt, std::nullopt, "no candidates"};
        }
        std::string listing;
        for (size_t i = 0; i < candidates.size(); ++i) {
            listing += std::to_string(i + 1) + ". [" + candidates[i].key_id + "] " +
                       candidates[i].text + "\n";
        }
        std::string raw = client_->chat(
            "", prompt_.render({{"new_fact", new_fact}, {"candidates", listing}}));
        try {
            auto j = nlohmann::json::parse(strip_fences(raw));
            MemOpDecision decision;
            auto op = mem_op_from_string(to_lower(j.value("op", "add")));
            decision.op = op.value_or(MemOp::add);
            if (j.contains("target")) {
                if (j.at("target").is_number_integer()) {
                    size_t index = j.at("target").get<size_t>();
                    if (index >= 1 && index <= candidates.size()) {
                        decision.target_key_id = candidates[index - 1].key_id;
                    }
                } else {
                    decision.target_key_id = j.at("target").get<std::string>();
                }
            }
            if (j.contains("revised_text")) {
                decision.revised_text = j.at("revised_text").get<std::string>();
            }
            decision.rationale = j.value("rationale", "");
            return decision;
        } catch (const std::exception&) {
            return {MemOp::add, std::nullopt, std::nullopt, "unparseable decision reply"};
        }
    }

    std::string version() const override {
        return "remote-memop/" + prompt_.version() + "/" + client_->config().chat_model;
    }

private:
    std::shared_ptr<OpenAiClient> client_;
    PromptTemplate prompt_;
};

class RemoteAnswerGenerator : public AnswerGenerator {
public:
    explicit RemoteAnswerGenerator(std::shared_ptr<OpenAiClient> client)
        : client_(std::move(client)),
          direct_(PromptTemplate::from_file(prompt_asset_path("answer_direct.txt"))),
          chain_(PromptTemplate::from_file(prompt_asset_path("answer_chain_of_note.txt"))) {}

    std::string answer(const MemQuery& question, const std::vector<std::string>& contexts,
                       AnswerMode mode) override {
        std::string context;
        for (size_t i = 0; i < contexts.size(); ++i) {
            context += "[" + std::to_string(i + 1) + "] " + contexts[i] + "\n\n";
        }
        const PromptTemplate& prompt = mode == AnswerMode::direct ? direct_ : chain_;
        std::map<std::string, std::string> slots = {{"question", question.text},
                                                    {"context", context}};
        slots["question_date"] =
            question.query_date ? question.query_date->str() : std::string("unknown");
        return client_->chat("", prompt.render(slots));
    }

    std::string version() const override {
        return "remote-answer/" + direct_.version() + "/" + chain_.version() + "/" +
               client_->config().chat_model;
    }

private:
    std::shared_ptr<OpenAiClient> client_;
    PromptTemplate direct_;
    PromptTemplate chain_;
};

class RemoteGroupLinkJudge : public GroupLinkJudge {
public:
    explicit RemoteGroupLinkJudge(std::shared_ptr<OpenAiClient> client)
        : client_(std::move(client)),
          prompt_(PromptTemplate::from_file(prompt_asset_path("sim_judge.txt"))) {}

    bool should_link(const std::string& a_text, const std::string& b_text,
                     double /*cosine*/) override {
        std::string reply =
            to_lower(client_->chat("", prompt_.render({{"a", a_text}, {"b", b_text}})));
        return reply.find("yes") != std::string::npos;
    }

    std::string version() const override {
        return "remote-link/" + prompt_.version() + "/" + client_->config().chat_model;
    }

private:
    std::shared_ptr<OpenAiClient> client_;
    PromptTemplate prompt_;
};

class RemoteDescriptionSummarizer : public DescriptionSummarizer {
public:
    explicit RemoteDescriptionSummarizer(std::shared_ptr<OpenAiClient> client)
        : client_(std::move(client)),
          prompt_(PromptTemplate::from_file(prompt_asset_path("summarize_descriptions.txt"))) {}

    std::string summarize(const std::vector<std::string>& descriptions,
                          size_t char_limit) override {
        std::string listing;
        for (const auto& d : descriptions) listing += "- " + d + "\n";
        std::string out = client_->chat(
            "", prompt_.render({{"descriptions", listing},
                                {"limit", std::to_string(char_limit)}}));
        if (out.size() > char_limit) out.resize(char_limit);
        return out;
    }

    std::string version() const override {
        return "remote-summ/" + prompt_.version() + "/" + client_->config().chat_model;
    }

private:
    std::shared_ptr<OpenAiClient> client_;
    PromptTemplate prompt_;
};

class RemoteAnswerJudge : public AnswerJudgeBackend {
public:
    explicit RemoteAnswerJudge(std::shared_ptr<OpenAiClient> client)
        : client_(std::move(client)),
          prompt_(PromptTemplate::from_file(prompt_asset_path("judge.txt"))) {}

    bool judge(const std::string& question, const std::string& gold,
               const std::string& answer) override {
        std::string reply = to_lower(client_->chat(
            "", prompt_.render({{"question", question}, {"gold", gold}, {"answer", answer}})));
        return reply.find("yes") != std::string::npos;
    }

    std::string version() const override {
        return "remote-judge/" + prompt_.version() + "/" + client_->config().chat_model;
    }

private:
    std::shared_ptr<OpenAiClient> client_;
    PromptTemplate prompt_;
};

}  // namespace

BackendSet make_remote_backends(const RemoteConfig& config) {
    auto client = std::make_shared<OpenAiClient>(config);
    BackendSet set;
    set.embedder = std::make_unique<RemoteEmbedder>(client);
    set.flat_extractor = std::make_unique<RemoteFlatExtractor>(client);
    set.graph_extractor = std::make_unique<RemoteGraphExtractor>(client);
    set.prejudge = std::make_unique<RemotePrejudge>(client);
    set.mem_op_decider = std::make_unique<RemoteMemOpDecider>(client);
    set.answer_generator = std::make_unique<RemoteAnswerGenerator>(client);
    set.link_judge = std::make_unique<RemoteGroupLinkJudge>(client);
    set.summarizer = std::make_unique<RemoteDescriptionSummarizer>(client);
    set.answer_judge = std::make_unique<RemoteAnswerJudge>(client);
    return set;
}

}  // namespace dialogmem
