#pragma once
// Add-alpha smoothed n-gram models. The next token is conditioned on the last
// order-1 tokens of BOS^(order-1) ++ prompt ++ prefix, so the same model
// serves as L (with prompt) and as G (empty prompt).

#include <bit>
#include <iosfwd>
#include <map>
#include <string>

#include "domcert/sequence_model.hpp"

namespace domcert {

class NGramModel : public SequenceModel {
 public:
  struct ContextCounts {
    std::uint64_t total = 0;
    std::map<TokenId, std::uint64_t> counts;

    friend bool operator==(const ContextCounts&, const ContextCounts&) = default;
  };

  NGramModel(Vocabulary vocab, int order, double alpha);

  const Vocabulary& vocab() const override { return vocab_; }
  std::vector<double> next_distribution(std::span<const TokenId> prompt,
                                        std::span<const TokenId> prefix) const override;
  double next_prob(std::span<const TokenId> prompt, std::span<const TokenId> prefix,
                   TokenId token) const override;

  int order() const { return order_; }
  double alpha() const { return alpha_; }
  std::size_t num_contexts() const { return table_.size(); }
  const std::map<Sequence, ContextCounts>& table() const { return table_; }

  // Counts every token of `sequence` exactly as given (append EOS first if
  // the sequence is meant to terminate).
  void add(std::span<const TokenId> sequence);

  // Versioned text format; alpha is written as a hex float so a save/load
  // round trip is bit-exact.
  void save(std::ostream& out) const;
  static NGramModel load(std::istream& in);
  void save(const std::string& path) const;
  static NGramModel load(const std::string& path);

  friend bool operator==(const NGramModel& a, const NGramModel& b) {
    return a.vocab_ == b.vocab_ && a.order_ == b.order_ &&
           std::bit_cast<std::uint64_t>(a.alpha_) == std::bit_cast<std::uint64_t>(b.alpha_) &&
           a.table_ == b.table_;
  }

 private:
  Sequence context_key(std::span<const TokenId> prompt, std::span<const TokenId> prefix) const;

  Vocabulary vocab_;
  int order_;
  double alpha_;
  std::map<Sequence, ContextCounts> table_;
};

// P(t | ctx) = (count + alpha) / (total + alpha V) with BOS padding. Throws
// InputError for an empty corpus, order < 1 or alpha <= 0.
NGramModel train_ngram(const Vocabulary& vocab, std::span<const Sequence> corpus, int order,
                       double alpha);

}  // namespace domcert
