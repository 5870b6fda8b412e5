#include "linksim/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace linksim {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return "";
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw config_error("config file '" + path + "': cannot open");
    }
    return parse(in, path);
}

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& origin) {
    KeyValueConfig cfg;
    cfg.origin_ = origin;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error(origin + ":" + std::to_string(lineno) +
                               ": expected `key = value`, got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw config_error(origin + ":" + std::to_string(lineno) + ": empty key");
        }
        if (cfg.values_.count(key)) {
            throw config_error(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                               key + "'");
        }
        cfg.values_[key] = value;
    }
    return cfg;
}

std::string KeyValueConfig::raw(const std::string& key) const {
    return values_.at(key);
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) {
        return fallback;
    }
    const std::string v = raw(key);
    if (v == "true" || v == "1") {
        return true;
    }
    if (v == "false" || v == "0") {
        return false;
    }
    throw config_error("key '" + key + "': expected true/false, got '" + v + "'");
}

int64_t KeyValueConfig::get_i64(const std::string& key, int64_t fallback) const {
    if (!has(key)) {
        return fallback;
    }
    const std::string v = raw(key);
    int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw config_error("key '" + key + "': expected integer, got '" + v + "'");
    }
    return out;
}

uint64_t KeyValueConfig::get_u64(const std::string& key, uint64_t fallback) const {
    if (!has(key)) {
        return fallback;
    }
    const std::string v = raw(key);
    uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw config_error("key '" + key + "': expected unsigned integer, got '" + v + "'");
    }
    return out;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    if (!has(key)) {
        return fallback;
    }
    const std::string v = raw(key);
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size()) {
            throw std::invalid_argument(v);
        }
        return out;
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': expected number, got '" + v + "'");
    }
}

std::vector<std::pair<int, int>> KeyValueConfig::get_link_pairs(const std::string& key) const {
    std::vector<std::pair<int, int>> pairs;
    if (!has(key)) {
        return pairs;
    }
    std::stringstream ss(raw(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        const auto dash = item.find('-');
        if (dash == std::string::npos) {
            throw config_error("key '" + key + "': expected `a-b` pairs, got '" + item + "'");
        }
        try {
            const int a = std::stoi(trim(item.substr(0, dash)));
            const int b = std::stoi(trim(item.substr(dash + 1)));
            pairs.emplace_back(a, b);
        } catch (const std::exception&) {
            throw config_error("key '" + key + "': expected `a-b` pairs, got '" + item + "'");
        }
    }
    if (pairs.empty()) {
        throw config_error("key '" + key + "': empty link list");
    }
    return pairs;
}

} // namespace linksim
