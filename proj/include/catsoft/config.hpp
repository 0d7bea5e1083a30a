#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "catsoft/errors.hpp"

namespace catsoft {

// Flat "key = value" text, one pair per line, '#' starts a comment. Keys may
// repeat; the last occurrence wins. Knows nothing about which keys exist —
// the consumer validates against its schema.
using KeyValues = std::map<std::string, std::string>;

namespace detail {

inline std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string stripped = detail::strip(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = detail::strip(stripped.substr(0, eq));
    const std::string val = detail::strip(stripped.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    out[key] = val;
  }
  return out;
}

inline KeyValues parse_key_values(const std::string& text) {
  std::istringstream in(text);
  return parse_key_values(in);
}

inline KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_key_values(in);
}

// Typed conversions that name the offending key on failure.

inline double to_double(const std::string& key, const std::string& val) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(val, &pos);
    if (pos != val.size()) throw std::invalid_argument(val);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for '" + key + "': " + val);
  }
}

inline long to_long(const std::string& key, const std::string& val) {
  long x = 0;
  const auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), x);
  if (ec != std::errc() || ptr != val.data() + val.size())
    throw ConfigError("invalid integer for '" + key + "': " + val);
  return x;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& val) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), x);
  if (ec != std::errc() || ptr != val.data() + val.size())
    throw ConfigError("invalid unsigned integer for '" + key + "': " + val);
  return x;
}

inline bool to_bool(const std::string& key, const std::string& val) {
  if (val == "true" || val == "1" || val == "yes" || val == "on") return true;
  if (val == "false" || val == "0" || val == "no" || val == "off") return false;
  throw ConfigError("invalid boolean for '" + key + "': " + val);
}

}  // namespace catsoft
