#include "dialogmem/cache.hpp"

#include <filesystem>
#include <iostream>

#include <nlohmann/json.hpp>

#include "dialogmem/util.hpp"

namespace fs = std::filesystem;

namespace dialogmem {

ResponseCache::ResponseCache(std::string directory) : dir_(std::move(directory)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::io, "cache: cannot create directory " + dir_);
}

std::string ResponseCache::entry_path(const std::string& key) const {
    return (fs::path(dir_) / (key + ".entry")).string();
}

std::optional<std::string> ResponseCache::get(const std::string& key) {
    std::string raw;
    {
        std::shared_lock lock(mutex_);
        const std::string path = entry_path(key);
        if (!fs::exists(path)) return std::nullopt;
        try {
            raw = read_file(path);
        } catch (const Error&) {
            return std::nullopt;
        }
    }
    auto newline = raw.find('\n');
    if (newline == std::string::npos) {
        std::cerr << "warning: cache entry without metadata line, discarding: " << key << "\n";
        std::unique_lock lock(mutex_);
        fs::remove(entry_path(key));
        return std::nullopt;
    }
    std::string response = raw.substr(newline + 1);
    try {
        auto meta = nlohmann::json::parse(raw.substr(0, newline));
        if (meta.at("key").get<std::string>() != key ||
            meta.at("response_hash").get<std::string>() != content_hash(response) ||
            meta.at("response_size").get<size_t>() != response.size()) {
            throw std::runtime_error("metadata mismatch");
        }
    } catch (const std::exception&) {
        std::cerr << "warning: corrupt cache entry discarded: " << key << "\n";
        std::unique_lock lock(mutex_);
        fs::remove(entry_path(key));
        return std::nullopt;
    }
    return response;
}

void ResponseCache::put(const std::string& key, const std::string& op,
                        const std::string& response) {
    nlohmann::ordered_json meta;
    meta["key"] = key;
    meta["op"] = op;
    meta["response_hash"] = content_hash(response);
    meta["response_size"] = response.size();
    std::string data = meta.dump() + "\n" + response;

    std::unique_lock lock(mutex_);
    const std::string path = entry_path(key);
    const std::string tmp = path + ".tmp";
    write_file(tmp, data);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::io, "cache: cannot publish entry " + path);
    }
}

size_t ResponseCache::entry_count() const {
    std::shared_lock lock(mutex_);
    size_t count = 0;
    for (const auto& item : fs::directory_iterator(dir_)) {
        if (item.path().extension() == ".entry") ++count;
    }
    return count;
}

}  // namespace dialogmem
