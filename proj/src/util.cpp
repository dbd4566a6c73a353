#include "dialogmem/util.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace dialogmem {

uint64_t fnv1a64(std::string_view data, uint64_t seed) {
    uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string to_hex(uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

std::string content_hash(std::string_view data) {
    uint64_t a = fnv1a64(data);
    uint64_t b = fnv1a64(data, 0x9e3779b97f4a7c15ull);
    return to_hex(a) + to_hex(b);
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    std::string cur;
    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        cur.push_back(c);
        if (c == '.' || c == '!' || c == '?') {
            bool at_end = i + 1 >= text.size();
            bool boundary = at_end || std::isspace(static_cast<unsigned char>(text[i + 1]));
            if (boundary) {
                std::string s = normalize_whitespace(cur);
                if (!s.empty()) sentences.push_back(std::move(s));
                cur.clear();
            }
        }
    }
    std::string tail = normalize_whitespace(cur);
    if (!tail.empty()) sentences.push_back(std::move(tail));
    return sentences;
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_space = true;  // leading whitespace dropped
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(static_cast<char>(c));
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string to_upper(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

bool is_stopword(std::string_view token) {
    static const std::unordered_set<std::string_view> kStopwords = {
        "a",     "an",    "the",  "i",     "you",   "he",    "she",   "it",
        "we",    "they",  "me",   "my",    "your",  "his",   "her",   "its",
        "our",   "their", "this", "that",  "these", "those", "to",    "of",
        "in",    "on",    "at",   "for",   "with",  "and",   "or",    "but",
        "is",    "are",   "was",  "were",  "am",    "be",    "been",  "being",
        "do",    "does",  "did",  "have",  "has",   "had",   "not",   "no",
        "so",    "as",    "by",   "from",  "up",    "out",   "if",    "then",
        "than",  "too",   "very", "can",   "will",  "just",  "about", "into",
        "over",  "under", "what", "when",  "where", "who",   "why",   "how",
        "there", "here",  "s",    "t",     "m",     "re",    "d",     "ll",
        "ve",    "any",   "some", "such",  "also",  "now",
    };
    return kStopwords.count(token) > 0;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

bool contains_all_content_words(std::string_view line, std::string_view query) {
    auto query_tokens = tokenize(query);
    std::vector<std::string> content;
    for (auto& t : query_tokens) {
        if (!is_stopword(t)) content.push_back(t);
    }
    if (content.empty()) return false;
    auto line_tokens = tokenize(line);
    std::unordered_set<std::string_view> have(line_tokens.begin(), line_tokens.end());
    for (const auto& t : content) {
        if (!have.count(t)) return false;
    }
    return true;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write file: " + path);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(ErrorCode::io, "short write: " + path);
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::string encode_f32le(const std::vector<float>& values) {
    std::string out;
    out.reserve(values.size() * 4);
    for (float v : values) {
        uint32_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        out.push_back(static_cast<char>(bits & 0xff));
        out.push_back(static_cast<char>((bits >> 8) & 0xff));
        out.push_back(static_cast<char>((bits >> 16) & 0xff));
        out.push_back(static_cast<char>((bits >> 24) & 0xff));
    }
    return out;
}

std::vector<float> decode_f32le(std::string_view bytes) {
    if (bytes.size() % 4 != 0) {
        throw Error(ErrorCode::format, "float matrix is not a multiple of 4 bytes");
    }
    std::vector<float> out(bytes.size() / 4);
    for (size_t i = 0; i < out.size(); ++i) {
        uint32_t bits = (uint32_t(uint8_t(bytes[4 * i])) << 0) |
                        (uint32_t(uint8_t(bytes[4 * i + 1])) << 8) |
                        (uint32_t(uint8_t(bytes[4 * i + 2])) << 16) |
                        (uint32_t(uint8_t(bytes[4 * i + 3])) << 24);
        std::memcpy(&out[i], &bits, sizeof(float));
    }
    return out;
}

size_t approx_token_count(std::string_view text) {
    size_t count = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

}  // namespace dialogmem
