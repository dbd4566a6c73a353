#pragma once

#include <optional>
#include <shared_mutex>
#include <string>

namespace dialogmem {

/// Append-only on-disk response cache keyed by content hash. One file per
/// entry: a metadata line (JSON: key, op, response hash, response size)
/// followed by the raw response bytes. Entries survive process restarts.
/// Concurrent readers are allowed; writes are serialized.
class ResponseCache {
public:
    explicit ResponseCache(std::string directory);

    /// Returns the stored response, or nullopt when absent. Entries whose
    /// metadata or response hash does not match are discarded (corruption)
    /// and reported as absent.
    std::optional<std::string> get(const std::string& key);

    void put(const std::string& key, const std::string& op, const std::string& response);

    const std::string& directory() const { return dir_; }
    size_t entry_count() const;

private:
    std::string entry_path(const std::string& key) const;

    std::string dir_;
    mutable std::shared_mutex mutex_;
};

}  // namespace dialogmem
