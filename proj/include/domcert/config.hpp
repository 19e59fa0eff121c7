#pragma once
// Minimal "key = value" text config blocks. '#' starts a comment; keys are
// unique; order is preserved for hashing.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace domcert {

class KeyValues {
 public:
  static KeyValues parse(std::string_view text);
  static KeyValues load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;  // throws InputError
  std::string get_or(const std::string& key, std::string fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;

  void set(const std::string& key, std::string value);
  // Keys starting with `prefix`, with the prefix stripped.
  KeyValues section(std::string_view prefix) const;
  // Values of `other` replace or extend this block's.
  void merge(const KeyValues& other);
  std::vector<std::string> keys() const;
  std::string to_text() const;  // canonical: sorted keys, "key = value"
  std::uint64_t hash() const;   // of to_text()

 private:
  std::map<std::string, std::string> values_;
};

std::vector<std::string> split_list(std::string_view text);  // on ',' and whitespace

double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

}  // namespace domcert
