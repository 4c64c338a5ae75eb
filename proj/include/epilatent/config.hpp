#ifndef EPILATENT_CONFIG_HPP
#define EPILATENT_CONFIG_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace epilatent {

/// Flat `key = value` text config. Lines starting with '#' (and blank lines)
/// are ignored; keys are unique; values keep internal whitespace. After
/// reading, `check_all_consumed` rejects unknown keys, so typos fail loudly.
class KeyValueConfig {
public:
    KeyValueConfig() = default;
    static KeyValueConfig parse_file(const std::string& path);
    static KeyValueConfig parse_string(const std::string& text, const std::string& origin = "<string>");

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;  // comma-separated
    std::vector<std::vector<double>> get_matrix(const std::string& key) const;  // ';' rows, ',' cols

    /// Throws ConfigError listing keys that were never read.
    void check_all_consumed() const;

    /// Canonical text form (sorted keys) for the resolved-config copy.
    std::string to_string() const;
    void write_file(const std::string& path) const;

private:
    std::string origin_ = "<memory>";
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> consumed_;
};

}  // namespace epilatent

#endif
