#include "domcert/vocabulary.hpp"

#include <fmt/format.h>

#include <sstream>

namespace domcert {

Vocabulary::Vocabulary(std::vector<std::string> elements, std::string eos)
    : elements_(std::move(elements)) {
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    const auto& e = elements_[i];
    if (e.empty() || e.find_first_of(" \t\r\n") != std::string::npos)
      throw InputError(fmt::format("vocabulary element {} is empty or has whitespace", i));
    if (!index_.emplace(e, static_cast<TokenId>(i)).second)
      throw InputError(fmt::format("duplicate vocabulary element '{}'", e));
  }
  if (auto it = index_.find(eos); it != index_.end()) {
    eos_ = it->second;
  } else {
    eos_ = static_cast<TokenId>(elements_.size());
    index_.emplace(eos, eos_);
    elements_.push_back(std::move(eos));
  }
}

const std::string& Vocabulary::element(TokenId id) const {
  if (!contains(id)) throw InputError(fmt::format("unknown token id {}", id));
  return elements_[id];
}

std::optional<TokenId> Vocabulary::find(std::string_view element) const {
  auto it = index_.find(std::string(element));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view element) const {
  if (auto found = find(element)) return *found;
  throw InputError(fmt::format("unknown element '{}'", element));
}

void Vocabulary::validate(std::span<const TokenId> tokens) const {
  for (TokenId t : tokens)
    if (!contains(t))
      throw InputError(fmt::format("token id {} outside vocabulary of size {}", t, size()));
}

Sequence Vocabulary::encode(std::string_view space_separated) const {
  Sequence out;
  std::istringstream in{std::string(space_separated)};
  std::string word;
  while (in >> word) out.push_back(id(word));
  return out;
}

std::string Vocabulary::decode(std::span<const TokenId> tokens) const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += element(tokens[i]);
  }
  return out;
}

}  // namespace domcert
