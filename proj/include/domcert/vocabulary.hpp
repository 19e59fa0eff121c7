#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "domcert/types.hpp"

namespace domcert {

// Dense token ids 0..V-1 over unique element strings. One of the elements is
// EOS; BOS is a reserved context marker with id V that models never predict.
class Vocabulary {
 public:
  static constexpr std::string_view kDefaultEos = "</s>";

  Vocabulary() = default;
  // Appends EOS unless `elements` already contains `eos`.
  explicit Vocabulary(std::vector<std::string> elements,
                      std::string eos = std::string(kDefaultEos));

  std::size_t size() const { return elements_.size(); }
  TokenId eos() const { return eos_; }
  TokenId bos() const { return static_cast<TokenId>(elements_.size()); }

  const std::string& element(TokenId id) const;
  const std::vector<std::string>& elements() const { return elements_; }
  std::optional<TokenId> find(std::string_view element) const;
  TokenId id(std::string_view element) const;  // throws InputError

  bool contains(TokenId id) const { return id < elements_.size(); }
  void validate(std::span<const TokenId> tokens) const;  // throws InputError

  Sequence encode(std::string_view space_separated) const;
  std::string decode(std::span<const TokenId> tokens) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.elements_ == b.elements_ && a.eos_ == b.eos_;
  }

 private:
  std::vector<std::string> elements_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId eos_ = 0;
};

}  // namespace domcert
