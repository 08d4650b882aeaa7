#include "kinbridge/config.hpp"

#include <fstream>
#include <sstream>

#include "kinbridge/errors.hpp"

namespace kinbridge {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigurationError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigurationError("config line " + std::to_string(lineno) + ": empty key");
        if (cfg.entries_.count(key)) throw ConfigurationError("config key repeated: " + key);
        cfg.entries_[key] = value;
    }
    return cfg;
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

void KeyValueConfig::set(const std::string& key, const std::string& value) { entries_[key] = value; }

const std::string* KeyValueConfig::lookup(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    const std::string* v = lookup(key);
    return v ? *v : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const std::string* v = lookup(key);
    if (!v) return fallback;
    try {
        std::size_t pos = 0;
        const double d = std::stod(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument(*v);
        return d;
    } catch (const std::exception&) {
        throw ConfigurationError("config key " + key + ": not a number: " + *v);
    }
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const {
    const std::string* v = lookup(key);
    if (!v) return fallback;
    try {
        std::size_t pos = 0;
        const long n = std::stol(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument(*v);
        return n;
    } catch (const std::exception&) {
        throw ConfigurationError("config key " + key + ": not an integer: " + *v);
    }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const std::string* v = lookup(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigurationError("config key " + key + ": not a boolean: " + *v);
}

std::vector<double> KeyValueConfig::get_list(const std::string& key, const std::vector<double>& fallback) const {
    const std::string* v = lookup(key);
    if (!v) return fallback;
    std::vector<double> out;
    std::istringstream in(*v);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigurationError("config key " + key + ": bad list entry " + item);
        }
    }
    if (out.empty()) throw ConfigurationError("config key " + key + ": empty list");
    return out;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_)
        if (!used_.count(k)) out.push_back(k);
    return out;
}

} // namespace kinbridge
