// Sectioned key = value configuration files with line-accurate error
// reporting; every run archives its resolved config beside the outputs.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace nematic::config {

class Config {
public:
    static Config parse_file(const std::filesystem::path& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long get_int(const std::string& section, const std::string& key) const;
    long get_int(const std::string& section, const std::string& key, long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

    /// Serialized (resolved) form, ready to archive.
    std::string to_string() const;

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return data_;
    }

private:
    std::map<std::string, std::map<std::string, std::string>> data_;
    std::map<std::string, int> lines_; // "section.key" -> line, for messages
    std::string origin_;

    [[noreturn]] void fail(const std::string& section, const std::string& key,
                           const std::string& why) const;
};

} // namespace nematic::config
