#pragma once
// Exhaustive prompt-space adversaries. Against L the attacker maximizes
// L(y|x); against M only prompts under which y is accepted count, so the
// best attack maximizes L(y|x) subject to L(y|x) <= 2^(k N_y) G(y) (for
// T > 1 the exact M(y|x) is maximized instead).

#include <optional>

#include <nlohmann/json.hpp>

#include "domcert/certificates.hpp"
#include "domcert/sequence_model.hpp"

namespace domcert {

inline constexpr std::uint64_t kDefaultPromptGuard = 1'000'000;

// All prompts of length 0..max_prompt_len over the non-EOS tokens, ordered
// lexicographically. Throws ResourceError beyond `max_prompts`.
std::vector<Sequence> enumerate_prompts(const Vocabulary& vocab, std::size_t max_prompt_len,
                                        std::uint64_t max_prompts = kDefaultPromptGuard);

struct AdversaryResult {
  Sequence x;
  double value = 0.0;
};

// argmax_x L(y|x); ties go to the lexicographically smallest prompt.
AdversaryResult find_adversary_l(const SequenceModel& l, std::span<const TokenId> y,
                                 std::span<const Sequence> prompts);

// argmax_x M(y|x) over prompts that accept y; nullopt when none does. For
// T = 1 this needs only scores; T > 1 enumerates L(.|x) up to max_len to get
// the rejection probability of each prompt.
std::optional<AdversaryResult> find_adversary_m(const SequenceModel& l, const SequenceModel& g,
                                                double k_bits, std::size_t max_iterations,
                                                std::span<const TokenId> y,
                                                std::span<const Sequence> prompts,
                                                std::size_t max_len);

struct AttackReport {
  Sequence target;
  Sequence x_adv_l;
  double l_value = 0.0;            // L(y | x_adv_l)
  std::optional<Sequence> x_adv_m;
  double m_value = 0.0;            // M(y | x_adv_m), 0 when infeasible
  AtomicCertificate certificate;
  bool violated = false;

  double certificate_linear() const { return std::exp2(certificate.log2_eps); }
  nlohmann::json to_json(const Vocabulary& vocab) const;
};

struct AttackSummary {
  std::vector<AttackReport> reports;
  std::size_t violations = 0;
  nlohmann::json to_json(const Vocabulary& vocab) const;
};

// Both adversaries for every target plus the certificate comparison. A
// violation is M(y|x_adv_m) > eps_y (1 + rel_tol).
AttackSummary verify_bound_under_attack(const SequenceModel& l, const SequenceModel& g,
                                        double k_bits, std::size_t max_iterations,
                                        std::span<const Sequence> targets,
                                        std::span<const Sequence> prompts, std::size_t max_len,
                                        double rel_tol = 1e-12);

}  // namespace domcert
