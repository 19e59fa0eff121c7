#include "domcert/tabular_model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <memory>

namespace domcert {

TabularModel::TabularModel(Vocabulary vocab, Rule rule)
    : vocab_(std::move(vocab)), rule_(std::move(rule)) {
  if (!rule_) throw InputError("tabular model needs a rule");
}

std::vector<double> TabularModel::next_distribution(std::span<const TokenId> prompt,
                                                    std::span<const TokenId> prefix) const {
  auto row = rule_(prompt, prefix);
  if (row.size() != vocab_.size())
    throw InputError(fmt::format("row has {} entries, vocabulary has {}", row.size(), vocab_.size()));
  double total = 0.0;
  for (double p : row) {
    if (!(p >= 0.0)) throw InputError("row has a negative or NaN entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw InputError(fmt::format("row sums to {:.17g}, not 1", total));
  return row;
}

namespace {

std::uint64_t hash_tokens(std::uint64_t h, std::span<const TokenId> tokens) {
  for (TokenId t : tokens) h = Rng::splitmix64(h ^ (static_cast<std::uint64_t>(t) + 1));
  return h;
}

}  // namespace

TabularModel TabularModel::random(Vocabulary vocab, std::uint64_t seed, RandomTableOptions options) {
  const std::size_t v = vocab.size();
  const TokenId eos = vocab.eos();
  auto rule = [v, eos, seed, options](std::span<const TokenId> prompt,
                                      std::span<const TokenId> prefix) {
    std::uint64_t h = Rng::splitmix64(seed);
    if (options.prompt_sensitive) h = hash_tokens(h, prompt);
    // separator so (x=[a], prefix=[]) and (x=[], prefix=[a]) differ
    h = Rng::splitmix64(h ^ 0x5bd1e995ULL);
    h = hash_tokens(h, prefix);
    // counter-mode splitmix64: far cheaper per row than seeding an engine
    std::vector<double> row(v);
    double total = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
      const double u = static_cast<double>(Rng::splitmix64(h + i) >> 11) * 0x1.0p-53;
      const double e = -std::log1p(-u);  // Exp(1)
      row[i] = std::pow(e, options.sharpness) * (i == eos ? options.eos_weight : 1.0);
      total += row[i];
    }
    for (double& p : row) p /= total;
    return row;
  };
  return TabularModel(std::move(vocab), std::move(rule));
}

TabularModel TabularModel::point_mass(Vocabulary vocab, Sequence y) {
  vocab.validate(y);
  if (y.empty() || y.back() != vocab.eos())
    throw InputError("point-mass sequence must end in EOS");
  const std::size_t v = vocab.size();
  auto rule = [v, y = std::move(y)](std::span<const TokenId>, std::span<const TokenId> prefix) {
    std::vector<double> row(v, 0.0);
    const bool on_path =
        prefix.size() < y.size() && std::equal(prefix.begin(), prefix.end(), y.begin());
    if (on_path) {
      row[y[prefix.size()]] = 1.0;
    } else {
      for (double& p : row) p = 1.0 / static_cast<double>(v);
    }
    return row;
  };
  return TabularModel(std::move(vocab), std::move(rule));
}

TabularModel TabularModel::constant(Vocabulary vocab, std::vector<double> row) {
  auto rule = [row = std::move(row)](std::span<const TokenId>, std::span<const TokenId>) {
    return row;
  };
  return TabularModel(std::move(vocab), std::move(rule));
}

TabularModel TabularModel::from_table(Vocabulary vocab, std::map<Key, std::vector<double>> table,
                                      Rule fallback) {
  auto shared = std::make_shared<const std::map<Key, std::vector<double>>>(std::move(table));
  auto rule = [shared, fallback = std::move(fallback)](std::span<const TokenId> prompt,
                                                       std::span<const TokenId> prefix) {
    Key key{Sequence(prompt.begin(), prompt.end()), Sequence(prefix.begin(), prefix.end())};
    if (auto it = shared->find(key); it != shared->end()) return it->second;
    return fallback(prompt, prefix);
  };
  return TabularModel(std::move(vocab), std::move(rule));
}

Vocabulary toy_vocabulary(std::size_t n_elements) {
  std::vector<std::string> elements;
  for (std::size_t i = 0; i < n_elements; ++i) elements.push_back(fmt::format("t{}", i));
  return Vocabulary(std::move(elements));
}

}  // namespace domcert
