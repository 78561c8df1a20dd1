#include "drainguard/config_file.hpp"

#include "drainguard/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace drainguard {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(Errc::ConfigError, "line " + std::to_string(line_no) + ": expected key = value");
        }
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw Error(Errc::ConfigError, "line " + std::to_string(line_no) + ": empty key or value");
        }
        if (cfg.entries_.contains(key)) {
            throw Error(Errc::ConfigError, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        cfg.entries_.emplace(std::move(key), std::move(value));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::ConfigError, "cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

bool KeyValueConfig::contains(const std::string& key) const { return entries_.contains(key); }

void KeyValueConfig::set(const std::string& key, const std::string& value) { entries_[key] = value; }

std::optional<std::string> KeyValueConfig::find(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    read_.insert(key);
    return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key) const {
    auto v = find(key);
    if (!v) {
        throw Error(Errc::ConfigError, "missing key '" + key + "'");
    }
    return *v;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    return find(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key) const {
    const auto text = get_string(key);
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception&) {
        throw Error(Errc::ConfigError, "key '" + key + "': not a number: " + text);
    }
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    return contains(key) ? get_double(key) : fallback;
}

std::int64_t KeyValueConfig::get_int(const std::string& key) const {
    const auto text = get_string(key);
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(Errc::ConfigError, "key '" + key + "': not an integer: " + text);
    }
    return v;
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
    return contains(key) ? get_int(key) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const auto v = find(key);
    if (!v) {
        return fallback;
    }
    if (*v == "true" || *v == "1" || *v == "yes") {
        return true;
    }
    if (*v == "false" || *v == "0" || *v == "no") {
        return false;
    }
    throw Error(Errc::ConfigError, "key '" + key + "': not a boolean: " + *v);
}

std::vector<std::string> KeyValueConfig::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (auto it = entries_.lower_bound(prefix); it != entries_.end() && it->first.starts_with(prefix); ++it) {
        out.push_back(it->first);
    }
    return out;
}

std::vector<std::string> KeyValueConfig::unread_keys() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : entries_) {
        if (!read_.contains(key)) {
            out.push_back(key);
        }
    }
    return out;
}

} // namespace drainguard
