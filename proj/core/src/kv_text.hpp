// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

// Flat `key = value` text files shared by run configs and dataset recipes.

#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "prosfda/error.hpp"

namespace prosfda::kv {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

/// Parses lines of `key = value`; `#` starts a comment. Duplicate keys and
/// keys outside `allowed` throw ConfigError.
inline std::map<std::string, std::string> parse(std::string_view text,
                                                const std::set<std::string>& allowed,
                                                std::string_view what) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(what) + " line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (!allowed.contains(key)) {
      throw ConfigError(std::string(what) + " line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (!out.emplace(key, value).second) {
      throw ConfigError(std::string(what) + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

inline double to_double(const std::string& key, std::string_view v) {
  double x = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': not a number: '" + std::string(v) + "'");
  }
  return x;
}

inline std::uint64_t to_u64(const std::string& key, std::string_view v) {
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': not a non-negative integer: '" + std::string(v) + "'");
  }
  return x;
}

inline std::int64_t to_i64(const std::string& key, std::string_view v) {
  std::int64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': not an integer: '" + std::string(v) + "'");
  }
  return x;
}

inline bool to_bool(const std::string& key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + std::string(v) + "'");
}

inline std::vector<std::size_t> to_size_list(const std::string& key, std::string_view v) {
  std::vector<std::size_t> out;
  while (true) {
    const auto comma = v.find(',');
    out.push_back(to_u64(key, trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v = v.substr(comma + 1);
  }
  return out;
}

/// Shortest representation that parses back to the same double.
inline std::string format(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, p);
}

inline std::string format(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

}  // namespace prosfda::kv
