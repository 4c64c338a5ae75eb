#include "epilatent/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "epilatent/csv.hpp"
#include "epilatent/errors.hpp"

namespace epilatent {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text, const std::string& origin) {
    KeyValueConfig cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (cfg.values_.count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        cfg.values_[key] = value;
    }
    return cfg;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    values_[key] = value;
}

bool KeyValueConfig::has(const std::string& key) const {
    if (values_.count(key)) {
        consumed_.insert(key);
        return true;
    }
    return false;
}

std::string KeyValueConfig::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(origin_ + ": missing required key '" + key + "'");
    consumed_.insert(key);
    return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

long long KeyValueConfig::get_int(const std::string& key) const {
    const std::string s = get_string(key);
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || end == s.c_str() || *end != '\0')
        throw ConfigError(origin_ + ": key '" + key + "': '" + s + "' is not an integer");
    return v;
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

double KeyValueConfig::get_double(const std::string& key) const {
    const std::string s = get_string(key);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end == s.c_str() || *end != '\0')
        throw ConfigError(origin_ + ": key '" + key + "': '" + s + "' is not a number");
    return v;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key) const {
    const std::string s = get_string(key);
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (errno != 0 || end == item.c_str() || *end != '\0')
            throw ConfigError(origin_ + ": key '" + key + "': '" + item + "' is not a number");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError(origin_ + ": key '" + key + "' has no values");
    return out;
}

std::vector<std::vector<double>> KeyValueConfig::get_matrix(const std::string& key) const {
    const std::string s = get_string(key);
    std::vector<std::vector<double>> out;
    std::stringstream rows(s);
    std::string row;
    while (std::getline(rows, row, ';')) {
        std::vector<double> vals;
        std::stringstream cols(row);
        std::string item;
        while (std::getline(cols, item, ',')) {
            item = trim(item);
            errno = 0;
            char* end = nullptr;
            const double v = std::strtod(item.c_str(), &end);
            if (errno != 0 || end == item.c_str() || *end != '\0')
                throw ConfigError(origin_ + ": key '" + key + "': '" + item + "' is not a number");
            vals.push_back(v);
        }
        if (!vals.empty()) out.push_back(vals);
    }
    if (out.empty()) throw ConfigError(origin_ + ": key '" + key + "' has no rows");
    for (const auto& r : out)
        if (r.size() != out[0].size())
            throw ConfigError(origin_ + ": key '" + key + "': ragged matrix rows");
    return out;
}

void KeyValueConfig::check_all_consumed() const {
    std::string unknown;
    for (const auto& [k, v] : values_)
        if (!consumed_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
    if (!unknown.empty()) throw ConfigError(origin_ + ": unknown key(s): " + unknown);
}

std::string KeyValueConfig::to_string() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
    return out.str();
}

void KeyValueConfig::write_file(const std::string& path) const { write_file_atomic(path, to_string()); }

}  // namespace epilatent
