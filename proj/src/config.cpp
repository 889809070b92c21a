#include "config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace storarb {
namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Strips a trailing '#' comment, honoring quoted strings.
std::string strip_comment(const std::string& line) {
    bool in_quote = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '"') in_quote = !in_quote;
        if (c == '#' && !in_quote) return line.substr(0, i);
    }
    return line;
}

bool valid_identifier(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    }
    return true;
}

bool looks_numeric(const std::string& s) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
    if (i == s.size()) return false;
    bool digit = false;
    for (; i < s.size(); ++i) {
        char c = s[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digit = true;
        } else if (c != '.' && c != 'e' && c != 'E' && c != '+' && c != '-' && c != '_') {
            return false;
        }
    }
    return digit;
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
    std::ostringstream os;
    os << "config line " << line_no << ": " << what;
    throw_config(os.str());
}

double parse_double_value(const std::string& key, const std::string& raw) {
    std::string s = raw;
    std::erase(s, '_');
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw_config("key '" + key + "': expected a number, got '" + raw + "'");
    }
}

}  // namespace

ConfigMap ConfigMap::parse_text(const std::string& text) {
    ConfigMap cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') parse_fail(line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!valid_identifier(section)) parse_fail(line_no, "bad section name '" + section + "'");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) parse_fail(line_no, "expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!valid_identifier(key)) parse_fail(line_no, "bad key '" + key + "'");
        if (value.empty()) parse_fail(line_no, "missing value for '" + key + "'");
        if (value.front() == '"') {
            if (value.size() < 2 || value.back() != '"') {
                parse_fail(line_no, "unterminated string for '" + key + "'");
            }
            value = value.substr(1, value.size() - 2);
        } else if (value != "true" && value != "false" && !looks_numeric(value)) {
            parse_fail(line_no, "value for '" + key + "' must be quoted, numeric, or boolean");
        }
        std::string full = section.empty() ? key : section + "." + key;
        if (cfg.values_.count(full) != 0) parse_fail(line_no, "duplicate key '" + full + "'");
        cfg.values_[full] = value;
    }
    return cfg;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_config("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

bool ConfigMap::has(const std::string& key) const { return values_.count(key) != 0; }

void ConfigMap::set(const std::string& key, const std::string& raw) {
    if (key.empty()) throw_config("empty config key");
    values_[key] = raw;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_double_value(key, it->second);
}

std::int64_t ConfigMap::get_int(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    double v = parse_double_value(key, it->second);
    auto i = static_cast<std::int64_t>(v);
    if (static_cast<double>(i) != v) {
        throw_config("key '" + key + "': expected an integer, got '" + it->second + "'");
    }
    return i;
}

std::uint64_t ConfigMap::get_uint(const std::string& key, std::uint64_t fallback) const {
    std::int64_t v = get_int(key, 0);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (v < 0) throw_config("key '" + key + "': expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw_config("key '" + key + "': expected true or false, got '" + it->second + "'");
}

}  // namespace storarb
