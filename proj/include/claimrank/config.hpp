#pragma once

#include <map>
#include <string>

#include "claimrank/error.hpp"
#include "claimrank/hash.hpp"
#include "claimrank/io.hpp"

namespace claimrank::cfg {

// Line-based configuration: `key = value` entries grouped under [section]
// headers (keys become "section.key"). Full-line comments start with '#' or
// ';'. Later assignments win, which is how flag overrides are layered on.
class Config {
 public:
  static Config parse_text(const std::string& text, const std::string& origin) {
    Config config;
    std::string section;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const std::string line = trim(lines[i]);
      if (line.empty() || line[0] == '#' || line[0] == ';') continue;
      const std::string where = origin + ":" + std::to_string(i + 1);
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ParseError(where + ": unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        if (section.empty()) throw ParseError(where + ": empty section name");
        continue;
      }
      const std::size_t equals = line.find('=');
      if (equals == std::string::npos)
        throw ParseError(where + ": expected key = value");
      const std::string key = trim(line.substr(0, equals));
      if (key.empty()) throw ParseError(where + ": empty key");
      const std::string value = trim(line.substr(equals + 1));
      config.set(section.empty() ? key : section + "." + key, value);
    }
    return config;
  }

  static Config parse_file(const std::string& path) {
    return parse_text(read_file(path), path);
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback = "") const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end())
      throw ConfigError("missing required config key '" + key + "'");
    return it->second;
  }

  long long get_int(const std::string& key, long long fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_int(it->second, "config key " + key);
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback
                               : parse_double(it->second, "config key " + key);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    throw ConfigError("config key '" + key + "' is not a boolean: " + it->second);
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  // Stable content hash for provenance lines (keys are already sorted).
  std::string hash() const {
    std::string canonical;
    for (const auto& [key, value] : values_) canonical += key + "=" + value + "\n";
    return hex64(fnv1a64(canonical));
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace claimrank::cfg
