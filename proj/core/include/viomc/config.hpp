#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace viomc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key-value configuration read from the TOML subset used by the
/// shipped presets: `[section]` headers, `key = value` pairs, `#` comments.
/// Values are numbers, booleans, double-quoted strings or arrays of numbers.
/// Keys are addressed as "section.key".
class ConfigTable {
 public:
  static ConfigTable parse(std::string_view text, const std::string& source = "<string>");
  static ConfigTable load(const std::filesystem::path& path);

  /// Override from a "section.key=value" string; value uses file syntax.
  void set_override(std::string_view assignment);
  void set(const std::string& key, std::string raw_value);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;

  /// Keys present in the table but never read. Readers call this after
  /// consuming everything they understand.
  std::vector<std::string> unread_keys() const;

 private:
  const std::string* raw(const std::string& key) const;

  std::map<std::string, std::string> values_;  // key -> raw value text
  std::string source_;
  mutable std::set<std::string> read_;
};

}  // namespace viomc
