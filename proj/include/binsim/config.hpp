#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace binsim {

// Configuration problems map to exit code 2 at the CLI boundary.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat `key = value` store with dotted keys. Later assignments win, which
// is how file values, repeated keys, and command-line overrides compose.
class Config {
 public:
  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    Config cfg;
    cfg.parse(buf.str(), path);
    return cfg;
  }

  static Config from_string(std::string_view text, const std::string& origin = "<inline>") {
    Config cfg;
    cfg.parse(text, origin);
    return cfg;
  }

  // Accepts a single "key=value" token, as given to --override.
  void set_override(std::string_view assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
      throw config_error("override must look like key=value: " + std::string(assignment));
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  }

  void set(std::string_view key, std::string_view value) {
    std::string k = std::string(trim(key));
    if (k.empty() || !valid_key(k)) throw config_error("bad config key: '" + k + "'");
    values_[k] = std::string(trim(value));
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) out.push_back(k);
    return out;
  }

  std::string get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw config_error("missing config key: " + key);
    return it->second;
  }

  std::string get_string_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::uint64_t get_u64(const std::string& key) const { return parse_u64(key, get_string(key)); }

  std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_u64(key, it->second);
  }

  double get_double(const std::string& key) const { return parse_double(key, get_string(key)); }

  double get_double_or(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_double(key, it->second);
  }

  bool get_bool_or(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw config_error("key '" + key + "': expected a boolean, got '" + v + "'");
  }

  // Rejects any present key outside the known set, so typos fail loudly
  // instead of silently falling back to defaults.
  void require_known(const std::vector<std::string>& known) const {
    for (const auto& [k, v] : values_) {
      if (std::find(known.begin(), known.end(), k) == known.end())
        throw config_error("unknown config key: '" + k + "'");
    }
  }

 private:
  static std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  }

  static bool valid_key(const std::string& k) {
    for (char c : k) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
    }
    return true;
  }

  static std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
      throw config_error("key '" + key + "': expected an unsigned integer, got '" + v + "'");
    return out;
  }

  static double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
      throw config_error("key '" + key + "': expected a number, got '" + v + "'");
    return out;
  }

  void parse(std::string_view text, const std::string& origin) {
    std::size_t lineno = 0;
    while (!text.empty()) {
      auto nl = text.find('\n');
      std::string_view line = text.substr(0, nl);
      text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw config_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
      set(line.substr(0, eq), line.substr(eq + 1));
    }
  }

  std::map<std::string, std::string> values_;
};

}  // namespace binsim
