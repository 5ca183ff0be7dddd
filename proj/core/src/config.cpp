#include "viomc/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace viomc {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Removes a trailing comment, ignoring '#' inside strings.
std::string strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && in_string) {
      ++i;
    } else if (line[i] == '"') {
      in_string = !in_string;
    } else if (line[i] == '#' && !in_string) {
      return std::string(line.substr(0, i));
    }
  }
  return std::string(line);
}

bool is_bare_key(std::string_view k) {
  return !k.empty() && std::all_of(k.begin(), k.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

double parse_double(std::string_view text, const std::string& where) {
  std::string s = trim(text);
  s.erase(std::remove(s.begin(), s.end(), '_'), s.end());
  if (s == "inf" || s == "+inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s[0] == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(where + ": expected a number, got '" + s + "'");
  }
  return v;
}

}  // namespace

ConfigTable ConfigTable::parse(std::string_view text, const std::string& source) {
  ConfigTable table;
  table.source_ = source;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(std::string_view(body).substr(1, body.size() - 2));
      if (!is_bare_key(section)) throw ConfigError(where + ": invalid section name '" + section + "'");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (!is_bare_key(key)) throw ConfigError(where + ": invalid key '" + key + "'");
    // Arrays may span lines.
    if (!value.empty() && value.front() == '[') {
      while (value.find(']') == std::string::npos) {
        if (!std::getline(in, line)) throw ConfigError(where + ": unterminated array");
        ++lineno;
        value += ' ' + trim(strip_comment(line));
      }
    }
    if (value.empty()) throw ConfigError(where + ": missing value for '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    if (table.values_.count(full)) throw ConfigError(where + ": duplicate key '" + full + "'");
    table.values_[full] = value;
  }
  return table;
}

ConfigTable ConfigTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void ConfigTable::set_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form section.key=value");
  }
  const std::string key = trim(assignment.substr(0, eq));
  if (!is_bare_key(key)) throw ConfigError("override: invalid key '" + key + "'");
  set(key, trim(assignment.substr(eq + 1)));
}

void ConfigTable::set(const std::string& key, std::string raw_value) { values_[key] = std::move(raw_value); }

const std::string* ConfigTable::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  read_.insert(key);
  return &it->second;
}

double ConfigTable::number(const std::string& key, double fallback) const {
  const auto* r = raw(key);
  return r ? parse_double(*r, source_ + ": " + key) : fallback;
}

std::int64_t ConfigTable::integer(const std::string& key, std::int64_t fallback) const {
  const auto* r = raw(key);
  if (!r) return fallback;
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(r->data(), r->data() + r->size(), v);
  if (ec != std::errc() || ptr != r->data() + r->size()) {
    throw ConfigError(source_ + ": " + key + ": expected an integer, got '" + *r + "'");
  }
  return v;
}

std::uint64_t ConfigTable::unsigned_integer(const std::string& key, std::uint64_t fallback) const {
  const auto* r = raw(key);
  if (!r) return fallback;
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(r->data(), r->data() + r->size(), v);
  if (ec != std::errc() || ptr != r->data() + r->size()) {
    throw ConfigError(source_ + ": " + key + ": expected a non-negative integer, got '" + *r + "'");
  }
  return v;
}

bool ConfigTable::boolean(const std::string& key, bool fallback) const {
  const auto* r = raw(key);
  if (!r) return fallback;
  if (*r == "true") return true;
  if (*r == "false") return false;
  throw ConfigError(source_ + ": " + key + ": expected true or false, got '" + *r + "'");
}

std::string ConfigTable::string(const std::string& key, const std::string& fallback) const {
  const auto* r = raw(key);
  if (!r) return fallback;
  if (r->size() < 2 || r->front() != '"' || r->back() != '"') {
    throw ConfigError(source_ + ": " + key + ": expected a quoted string, got '" + *r + "'");
  }
  std::string out;
  for (std::size_t i = 1; i + 1 < r->size(); ++i) {
    char c = (*r)[i];
    if (c == '\\' && i + 2 < r->size()) {
      c = (*r)[++i];
      if (c == 'n') c = '\n';
      if (c == 't') c = '\t';
    }
    out.push_back(c);
  }
  return out;
}

std::vector<double> ConfigTable::numbers(const std::string& key, const std::vector<double>& fallback) const {
  const auto* r = raw(key);
  if (!r) return fallback;
  const std::string where = source_ + ": " + key;
  if (r->size() < 2 || r->front() != '[' || r->back() != ']') {
    throw ConfigError(where + ": expected an array of numbers, got '" + *r + "'");
  }
  std::vector<double> out;
  std::stringstream ss(r->substr(1, r->size() - 2));
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (trim(cell).empty()) continue;  // trailing comma
    out.push_back(parse_double(cell, where));
  }
  return out;
}

std::vector<std::string> ConfigTable::unread_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!read_.count(k)) out.push_back(k);
  }
  return out;
}

}  // namespace viomc
