#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dialogmem/backend.hpp"

namespace dialogmem {

struct RemoteConfig {
    std::string base_url;  // scheme://host[:port], optionally with a path prefix
    std::string api_key;
    std::string chat_model;
    std::string embed_model;
    int embed_dimension = 1536;
    int max_retries = 3;
    int initial_backoff_ms = 500;
    double temperature = 0.0;
    int timeout_seconds = 120;

    /// Reads base URL / API key from DIALOGMEM_* (falling back to OPENAI_*)
    /// environment variables.
    static RemoteConfig from_env(const std::string& chat_model, const std::string& embed_model,
                                 int embed_dimension);
};

/// Minimal chat-completions + embeddings client. Retries transport errors
/// and 429/5xx with exponential backoff and jitter; other statuses fail
/// immediately as backend errors.
class OpenAiClient {
public:
    explicit OpenAiClient(RemoteConfig config);
    ~OpenAiClient();

    std::string chat(const std::string& system_prompt, const std::string& user_prompt);
    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts);

    const RemoteConfig& config() const { return config_; }

private:
    std::string post_json(const std::string& path, const std::string& body);

    RemoteConfig config_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// A prompt asset with named {slot} placeholders. The version hash keys the
/// response cache so editing a template invalidates stale entries.
class PromptTemplate {
public:
    static PromptTemplate from_file(const std::string& path);
    static PromptTemplate from_text(std::string text);

    std::string render(const std::map<std::string, std::string>& slots) const;
    const std::string& version() const { return version_; }

private:
    std::string text_;
    std::string version_;
};

/// Locates a prompt asset directory: $DIALOGMEM_PROMPT_DIR, ./assets/prompts,
/// or the path baked in at build time.
std::string prompt_asset_path(const std::string& name);

/// Builds the remote backend set (all interfaces backed by the client).
BackendSet make_remote_backends(const RemoteConfig& config);

}  // namespace dialogmem
