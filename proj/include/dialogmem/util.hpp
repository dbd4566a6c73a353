#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace dialogmem {

enum class ErrorCode {
    invalid_argument,
    config,
    io,
    format,
    backend,
    not_found,
    internal,
};

/// Library-wide exception. Carries a stable code so the C API can map
/// failures onto numeric statuses without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

// ---- hashing ----------------------------------------------------------

uint64_t fnv1a64(std::string_view data, uint64_t seed = 0xcbf29ce484222325ull);

/// 128-bit content hash rendered as 32 lowercase hex chars. Two independently
/// seeded FNV-1a passes; stable across platforms and runs.
std::string content_hash(std::string_view data);

std::string to_hex(uint64_t value);

// ---- text -------------------------------------------------------------

/// Lowercase alphanumeric tokens, everything else is a separator.
std::vector<std::string> tokenize(std::string_view text);

/// Sentence split on [.!?] followed by whitespace or end of text.
std::vector<std::string> split_sentences(std::string_view text);

/// Collapse runs of whitespace to single spaces and trim both ends.
std::string normalize_whitespace(std::string_view text);

std::string to_lower(std::string_view text);
std::string to_upper(std::string_view text);

bool is_stopword(std::string_view token);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Case-insensitive "all content words of `query` appear as tokens of `line`".
bool contains_all_content_words(std::string_view line, std::string_view query);

// ---- filesystem helpers -----------------------------------------------

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view data);
std::vector<std::string> read_lines(const std::string& path);

/// Whitespace-token count; the approximation used for token accounting.
size_t approx_token_count(std::string_view text);

// ---- binary encoding ----------------------------------------------------

/// Little-endian float32 packing, independent of host byte order.
std::string encode_f32le(const std::vector<float>& values);
std::vector<float> decode_f32le(std::string_view bytes);

// ---- bounded parallelism ---------------------------------------------------

/// Applies fn to every item with at most max_workers threads; results keep
/// input order. The first exception (if any) is rethrown after all workers
/// finish.
template <typename In, typename Fn>
auto bounded_parallel_map(const std::vector<In>& items, int max_workers, Fn fn)
    -> std::vector<decltype(fn(items[size_t(0)]))> {
    using Out = decltype(fn(items[size_t(0)]));
    std::vector<Out> results(items.size());
    if (items.empty()) return results;
    int workers = std::max(1, std::min<int>(max_workers, int(items.size())));
    if (workers == 1) {
        for (size_t i = 0; i < items.size(); ++i) results[i] = fn(items[i]);
        return results;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(size_t(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                size_t i = next.fetch_add(1);
                if (i >= items.size()) return;
                try {
                    results[i] = fn(items[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

}  // namespace dialogmem
