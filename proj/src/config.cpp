#include "domcert/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "domcert/rng.hpp"
#include "domcert/types.hpp"

namespace domcert {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InputError(fmt::format("config line {}: expected 'key = value'", line_no));
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw InputError(fmt::format("config line {}: empty key", line_no));
    if (kv.has(key)) throw InputError(fmt::format("config line {}: duplicate key '{}'", line_no, key));
    kv.values_.emplace(key, std::string(trim(line.substr(eq + 1))));
  }
  return kv;
}

KeyValues KeyValues::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot read config file '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

const std::string& KeyValues::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw InputError(fmt::format("missing config key '{}'", key));
  return it->second;
}

std::string KeyValues::get_or(const std::string& key, std::string fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

KeyValues KeyValues::section(std::string_view prefix) const {
  KeyValues out;
  for (const auto& [key, value] : values_)
    if (key.size() > prefix.size() && std::string_view(key).substr(0, prefix.size()) == prefix)
      out.values_.emplace(key.substr(prefix.size()), value);
  return out;
}

void KeyValues::merge(const KeyValues& other) {
  for (const auto& [key, value] : other.values_) values_[key] = value;
}

std::vector<std::string> KeyValues::keys() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& entry : values_) out.push_back(entry.first);
  return out;
}

double parse_double(std::string_view text) {
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw InputError(fmt::format("'{}' is not a number", s));
  return v;
}

std::int64_t parse_int(std::string_view text) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw InputError(fmt::format("'{}' is not an integer", text));
  return v;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_double(get(key)) : fallback;
}

std::int64_t KeyValues::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? parse_int(get(key)) : fallback;
}

std::uint64_t KeyValues::get_uint(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const auto& text = get(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw InputError(fmt::format("config key '{}': '{}' is not a non-negative integer", key, text));
  return v;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InputError(fmt::format("config key '{}' is not a boolean: '{}'", key, v));
}

std::vector<double> KeyValues::get_doubles(const std::string& key,
                                           std::vector<double> fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(get(key))) out.push_back(parse_double(item));
  return out;
}

void KeyValues::set(const std::string& key, std::string value) { values_[key] = std::move(value); }

std::string KeyValues::to_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += fmt::format("{} = {}\n", k, v);
  return out;
}

std::uint64_t KeyValues::hash() const {
  const auto text = to_text();
  return fnv1a64(text.data(), text.size());
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

}  // namespace domcert
