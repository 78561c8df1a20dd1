#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace drainguard {

/// Flat `key = value` text file. `#` starts a comment, blank lines are
/// ignored, keys are dotted lower-case paths. Unit suffixes are part of the
/// key name (`_j`, `_s`, `_ms`, `_days`, `_a`, `_v`).
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig load(const std::filesystem::path& path);

    bool contains(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    /// Keys starting with `prefix`, in lexical order.
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

    /// Keys that were never read through a getter; used to reject typos.
    std::vector<std::string> unread_keys() const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::optional<std::string> find(const std::string& key) const;

    std::map<std::string, std::string> entries_;
    mutable std::set<std::string> read_;
};

} // namespace drainguard
