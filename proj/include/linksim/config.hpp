#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "linksim/errors.hpp"

namespace linksim {

// Flat `key = value` configuration text: one pair per line, `#` comments,
// blank lines ignored. Values are plain decimal numbers, booleans
// (true/false), strings, or comma-separated lists.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig load(const std::string& path);
    static KeyValueConfig parse(std::istream& in, const std::string& origin);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::map<std::string, std::string>& entries() const { return values_; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    int64_t get_i64(const std::string& key, int64_t fallback) const;
    uint64_t get_u64(const std::string& key, uint64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;

    // "0-1,2-3" -> {{0,1},{2,3}}
    std::vector<std::pair<int, int>> get_link_pairs(const std::string& key) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

private:
    std::string raw(const std::string& key) const;

    std::map<std::string, std::string> values_;
    std::string origin_;
};

} // namespace linksim
