#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmc/fd_benchmark.hpp"
#include "mmc/pricer.hpp"

namespace mmc {

// Flat view of an INI-style file: [section] headers (dots allowed for
// nesting), key = value lines, '#' comments.
class ConfigFile {
public:
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key)
        const;
    double get_double(const std::string& section, const std::string& key)
        const;
    long get_int(const std::string& section, const std::string& key) const;
    std::vector<double> get_doubles(const std::string& section,
                                    const std::string& key) const;

    // Defaulting accessors record which keys fell back to defaults.
    double get_double_or(const std::string& section, const std::string& key,
                         double fallback, std::vector<std::string>* defaulted)
        const;

    const std::map<std::string, std::string>& entries() const {
        return entries_;
    }

private:
    std::map<std::string, std::string> entries_;  // "section.key" -> value
};

struct LoadedConfig {
    PricingConfig pricing;
    FdGrid fd;
    // Keys absent from the file and filled with documented defaults.
    std::vector<std::string> defaulted_keys;
    std::string source_path;

    // One-line-per-entry echo of the effective configuration, with the
    // defaulted keys marked.
    std::string echo(const std::string& line_prefix = "") const;
};

LoadedConfig load_config(const std::string& path);
LoadedConfig config_from_string(const std::string& text);

}  // namespace mmc
