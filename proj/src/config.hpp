#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "domain.hpp"

namespace storarb {

// Flat "section.key" -> raw-value store parsed from a small TOML subset:
// [section] headers, scalar key = value pairs (quoted strings, numbers,
// booleans), '#' comments. Enough for run configs; nesting and arrays are
// deliberately unsupported. All parse errors carry ErrorCode::config.
class ConfigMap {
public:
    static ConfigMap parse_text(const std::string& text);
    static ConfigMap parse_file(const std::string& path);

    bool has(const std::string& key) const;
    // Dotted-path override, e.g. set("controller.epsilon", "0.2"); the same
    // path syntax parameter sweeps use.
    void set(const std::string& key, const std::string& raw);

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& entries() const noexcept { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace storarb
