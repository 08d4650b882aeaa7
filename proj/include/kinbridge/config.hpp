#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace kinbridge {

// Flat "key = value" file with dotted keys; '#' starts a comment.
class KeyValueConfig {
public:
    static KeyValueConfig parse_file(const std::string& path);
    static KeyValueConfig parse_string(const std::string& text);

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long get_int(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

    // Keys present in the file but never read; used to reject typos.
    std::vector<std::string> unused_keys() const;

private:
    const std::string* lookup(const std::string& key) const;
    std::map<std::string, std::string> entries_;
    mutable std::set<std::string> used_;
};

} // namespace kinbridge
