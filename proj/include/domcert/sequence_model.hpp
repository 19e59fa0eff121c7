#pragma once
// The sequence-model contract: anything that exposes per-token conditional
// distributions l(. | y_<n, x). Scoring, sampling and exhaustive enumeration
// are free functions over that contract.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "domcert/rng.hpp"
#include "domcert/types.hpp"
#include "domcert/vocabulary.hpp"

namespace domcert {

class SequenceModel {
 public:
  virtual ~SequenceModel() = default;

  virtual const Vocabulary& vocab() const = 0;

  // Distribution over the V predictable tokens for the position following
  // `prompt ++ prefix`. Sums to 1; BOS is never part of it.
  virtual std::vector<double> next_distribution(std::span<const TokenId> prompt,
                                                std::span<const TokenId> prefix) const = 0;

  // Single entry of next_distribution; models with sparse storage override.
  virtual double next_prob(std::span<const TokenId> prompt, std::span<const TokenId> prefix,
                           TokenId token) const {
    return next_distribution(prompt, prefix)[token];
  }
};

using ModelPtr = std::shared_ptr<const SequenceModel>;

// log2 L(y|x) = sum_n log2 l(y_n | y_<n, x). Throws InputError on an empty y
// or a token outside the vocabulary.
LogProb logprob_conditional(const SequenceModel& model, std::span<const TokenId> y,
                            std::span<const TokenId> x);

// log2 G(y): the response scored with an empty prompt.
LogProb logprob_marginal(const SequenceModel& model, std::span<const TokenId> y);

struct SampleResult {
  Sequence tokens;
  bool truncated = false;  // max_len reached without EOS
};

// Ancestral sampling until EOS (included in the result) or max_len tokens.
SampleResult sample(const SequenceModel& model, std::span<const TokenId> x, std::size_t max_len,
                    Rng& rng);

// Argmax decoding, lowest token id wins ties.
SampleResult greedy_decode(const SequenceModel& model, std::span<const TokenId> x,
                           std::size_t max_len);

struct SupportEntry {
  Sequence y;  // ends in EOS
  double prob = 0.0;
};

struct Support {
  std::vector<SupportEntry> terminated;
  double truncated_mass = 0.0;  // mass of length-max_len prefixes without EOS

  double terminated_mass() const;
};

inline constexpr std::uint64_t kDefaultEnumerationGuard = 10'000'000;

// Every terminated response of length <= max_len with its exact probability
// (product of per-token probabilities, zero-probability branches pruned), in
// depth-first lexicographic order. Throws ResourceError when the tree has
// more than `max_leaves` leaves.
Support enumerate_support(const SequenceModel& model, std::span<const TokenId> x,
                          std::size_t max_len,
                          std::uint64_t max_leaves = kDefaultEnumerationGuard);

// Number of leaves the enumeration tree would have; saturates at UINT64_MAX.
std::uint64_t enumeration_leaves(std::size_t vocab_size, std::size_t max_len);

// Rescales per-token logits by 1/t and renormalizes. t == 1 returns the base
// distributions untouched. Throws InputError for t <= 0.
ModelPtr apply_temperature(ModelPtr base, double t);

class TemperatureModel : public SequenceModel {
 public:
  TemperatureModel(ModelPtr base, double temperature);

  const Vocabulary& vocab() const override { return base_->vocab(); }
  std::vector<double> next_distribution(std::span<const TokenId> prompt,
                                        std::span<const TokenId> prefix) const override;
  double temperature() const { return temperature_; }

 private:
  ModelPtr base_;
  double temperature_;
};

}  // namespace domcert
