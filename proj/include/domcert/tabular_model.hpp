#pragma once
// Explicit, enumerable models for brute-force oracles. The conditional table
// is a pure function of (prompt, prefix) so the model stays immutable and the
// full table never has to be materialized.

#include <functional>
#include <map>
#include <utility>

#include "domcert/sequence_model.hpp"

namespace domcert {

struct RandomTableOptions {
  bool prompt_sensitive = true;  // false gives a marginal model that ignores x
  double sharpness = 1.5;        // >1 makes the rows peakier
  double eos_weight = 1.0;       // scales the EOS entry before normalizing
};

class TabularModel : public SequenceModel {
 public:
  using Rule = std::function<std::vector<double>(std::span<const TokenId> prompt,
                                                 std::span<const TokenId> prefix)>;
  using Key = std::pair<Sequence, Sequence>;  // (prompt, prefix)

  // Rows produced by `rule` are checked to be distributions (sum 1 within
  // 1e-9, no negatives); violations throw InputError at lookup time.
  TabularModel(Vocabulary vocab, Rule rule);

  // Rows drawn from a hash of (seed, prompt, prefix).
  static TabularModel random(Vocabulary vocab, std::uint64_t seed,
                             RandomTableOptions options = {});
  // All mass on `y` (which must end in EOS) regardless of the prompt.
  static TabularModel point_mass(Vocabulary vocab, Sequence y);
  // Same per-token row everywhere.
  static TabularModel constant(Vocabulary vocab, std::vector<double> row);
  // Explicit rows for listed keys, `fallback` everywhere else.
  static TabularModel from_table(Vocabulary vocab, std::map<Key, std::vector<double>> table,
                                 Rule fallback);

  const Vocabulary& vocab() const override { return vocab_; }
  std::vector<double> next_distribution(std::span<const TokenId> prompt,
                                        std::span<const TokenId> prefix) const override;

 private:
  Vocabulary vocab_;
  Rule rule_;
};

// Symbolic vocabulary "t0".."t{n-1}" plus EOS; V = n + 1.
Vocabulary toy_vocabulary(std::size_t n_elements);

}  // namespace domcert
