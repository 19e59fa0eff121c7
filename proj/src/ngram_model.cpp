#include "domcert/ngram_model.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace domcert {

namespace {
constexpr const char* kMagic = "domcert-ngram";
constexpr int kFormatVersion = 1;
}  // namespace

NGramModel::NGramModel(Vocabulary vocab, int order, double alpha)
    : vocab_(std::move(vocab)), order_(order), alpha_(alpha) {
  if (order_ < 1) throw InputError(fmt::format("n-gram order must be >= 1, got {}", order_));
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_))
    throw InputError(fmt::format("smoothing alpha must be positive, got {}", alpha_));
}

Sequence NGramModel::context_key(std::span<const TokenId> prompt,
                                 std::span<const TokenId> prefix) const {
  const std::size_t width = static_cast<std::size_t>(order_ - 1);
  Sequence key(width, vocab_.bos());
  // fill from the right: prefix first, then prompt, BOS padding stays on the left
  std::size_t slot = width;
  for (auto it = prefix.rbegin(); it != prefix.rend() && slot > 0; ++it) key[--slot] = *it;
  for (auto it = prompt.rbegin(); it != prompt.rend() && slot > 0; ++it) key[--slot] = *it;
  return key;
}

std::vector<double> NGramModel::next_distribution(std::span<const TokenId> prompt,
                                                  std::span<const TokenId> prefix) const {
  const double v = static_cast<double>(vocab_.size());
  const auto it = table_.find(context_key(prompt, prefix));
  const double total = it == table_.end() ? 0.0 : static_cast<double>(it->second.total);
  const double denom = total + alpha_ * v;
  std::vector<double> row(vocab_.size(), alpha_ / denom);
  if (it != table_.end())
    for (const auto& [token, count] : it->second.counts)
      row[token] = (static_cast<double>(count) + alpha_) / denom;
  return row;
}

double NGramModel::next_prob(std::span<const TokenId> prompt, std::span<const TokenId> prefix,
                             TokenId token) const {
  const double v = static_cast<double>(vocab_.size());
  const auto it = table_.find(context_key(prompt, prefix));
  if (it == table_.end()) return alpha_ / (alpha_ * v);
  const auto c = it->second.counts.find(token);
  const double count = c == it->second.counts.end() ? 0.0 : static_cast<double>(c->second);
  return (count + alpha_) / (static_cast<double>(it->second.total) + alpha_ * v);
}

void NGramModel::add(std::span<const TokenId> sequence) {
  vocab_.validate(sequence);
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    auto& ctx = table_[context_key({}, sequence.first(i))];
    ++ctx.total;
    ++ctx.counts[sequence[i]];
  }
}

NGramModel train_ngram(const Vocabulary& vocab, std::span<const Sequence> corpus, int order,
                       double alpha) {
  if (corpus.empty()) throw InputError("cannot train an n-gram model on an empty corpus");
  NGramModel model(vocab, order, alpha);
  for (const auto& seq : corpus) model.add(seq);
  return model;
}

void NGramModel::save(std::ostream& out) const {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "order " << order_ << '\n';
  out << "alpha " << fmt::format("{:a}", alpha_) << '\n';
  out << "vocab " << vocab_.size() << " eos " << vocab_.eos() << '\n';
  for (const auto& e : vocab_.elements()) out << e << '\n';
  out << "contexts " << table_.size() << '\n';
  for (const auto& [key, ctx] : table_) {
    for (TokenId t : key) out << t << ' ';
    out << ctx.total << ' ' << ctx.counts.size();
    for (const auto& [token, count] : ctx.counts) out << ' ' << token << ' ' << count;
    out << '\n';
  }
}

namespace {

void expect_word(std::istream& in, const char* word) {
  std::string got;
  if (!(in >> got) || got != word)
    throw InputError(fmt::format("model file: expected '{}', got '{}'", word, got));
}

}  // namespace

NGramModel NGramModel::load(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic)
    throw InputError("not a domcert n-gram model file");
  if (version != kFormatVersion)
    throw InputError(fmt::format("unsupported model format version {}", version));
  int order = 0;
  std::string alpha_text;
  std::size_t v = 0;
  TokenId eos = 0;
  expect_word(in, "order");
  in >> order;
  expect_word(in, "alpha");
  in >> alpha_text;
  expect_word(in, "vocab");
  in >> v;
  expect_word(in, "eos");
  in >> eos;
  if (!in) throw InputError("model file: malformed header");
  std::vector<std::string> elements(v);
  for (auto& e : elements)
    if (!(in >> e)) throw InputError("model file: truncated vocabulary");
  if (eos >= v) throw InputError("model file: eos id outside vocabulary");
  Vocabulary vocab(elements, elements[eos]);
  if (vocab.eos() != eos) throw InputError("model file: inconsistent eos id");

  NGramModel model(std::move(vocab), order, std::strtod(alpha_text.c_str(), nullptr));
  std::size_t n_contexts = 0;
  expect_word(in, "contexts");
  in >> n_contexts;
  const auto width = static_cast<std::size_t>(order - 1);
  for (std::size_t c = 0; c < n_contexts; ++c) {
    Sequence key(width);
    for (auto& t : key) {
      in >> t;
      if (t > v) throw InputError("model file: context token out of range");
    }
    ContextCounts ctx;
    std::size_t entries = 0;
    in >> ctx.total >> entries;
    for (std::size_t i = 0; i < entries; ++i) {
      TokenId token = 0;
      std::uint64_t count = 0;
      in >> token >> count;
      if (token >= v) throw InputError("model file: count token out of range");
      ctx.counts.emplace(token, count);
    }
    if (!in) throw InputError("model file: truncated context table");
    model.table_.emplace(std::move(key), std::move(ctx));
  }
  return model;
}

void NGramModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write model file '{}'", path));
  save(out);
}

NGramModel NGramModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot read model file '{}'", path));
  return load(in);
}

}  // namespace domcert
