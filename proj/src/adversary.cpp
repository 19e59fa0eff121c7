#include "domcert/adversary.hpp"

#include <fmt/format.h>

#include "domcert/analysis.hpp"
#include "domcert/valid_sampler.hpp"

namespace domcert {

namespace {

void extend_prompts(const std::vector<TokenId>& alphabet, std::size_t remaining, Sequence& prefix,
                    std::vector<Sequence>& out) {
  out.push_back(prefix);
  if (remaining == 0) return;
  for (TokenId t : alphabet) {
    prefix.push_back(t);
    extend_prompts(alphabet, remaining - 1, prefix, out);
    prefix.pop_back();
  }
}

// Prompt-by-prompt view of M(y|x) for one target.
struct PromptScore {
  double l = 0.0;
  double m = 0.0;
  bool accepted = false;
};

class PromptScorer {
 public:
  PromptScorer(const SequenceModel& l, const SequenceModel& g, double k_bits,
               std::size_t max_iterations, std::span<const Sequence> prompts, std::size_t max_len)
      : l_(l), g_(g), k_(k_bits), t_(max_iterations), prompts_(prompts), max_len_(max_len) {
    if (t_ > 1) {
      // rejection probability per prompt does not depend on the target
      multipliers_.reserve(prompts.size());
      for (const auto& x : prompts) {
        const auto dist = exact_m_distribution(l, g, k_bits, t_, x, max_len);
        multipliers_.push_back(dist.multiplier);
      }
    }
  }

  PromptScore score(std::size_t prompt_index, std::span<const TokenId> y, LogProb log_g) const {
    const auto& x = prompts_[prompt_index];
    const auto log_l = logprob_conditional(l_, y, x);
    PromptScore s;
    s.l = log_l.prob();
    // a response longer than max_len is never emitted whole
    s.accepted = y.size() <= max_len_ && acceptance_test(log_l, log_g, y.size(), k_);
    if (s.accepted) s.m = t_ > 1 ? s.l * multipliers_[prompt_index] : s.l;
    return s;
  }

  const SequenceModel& guide() const { return g_; }
  std::span<const Sequence> prompts() const { return prompts_; }

 private:
  const SequenceModel& l_;
  const SequenceModel& g_;
  double k_;
  std::size_t t_;
  std::span<const Sequence> prompts_;
  std::size_t max_len_;
  std::vector<double> multipliers_;
};

bool better(double value, const Sequence& x, const std::optional<AdversaryResult>& best) {
  if (!best) return true;
  if (value != best->value) return value > best->value;
  return x < best->x;
}

}  // namespace

std::vector<Sequence> enumerate_prompts(const Vocabulary& vocab, std::size_t max_prompt_len,
                                        std::uint64_t max_prompts) {
  std::vector<TokenId> alphabet;
  for (TokenId t = 0; t < vocab.size(); ++t)
    if (t != vocab.eos()) alphabet.push_back(t);
  std::uint64_t count = 0;
  std::uint64_t level = 1;
  for (std::size_t d = 0; d <= max_prompt_len; ++d) {
    count += level;
    if (count > max_prompts)
      throw ResourceError(fmt::format("prompt space up to length {} over {} tokens exceeds guard {}",
                                      max_prompt_len, alphabet.size(), max_prompts));
    level *= alphabet.size();
  }
  std::vector<Sequence> out;
  out.reserve(count);
  Sequence prefix;
  extend_prompts(alphabet, max_prompt_len, prefix, out);
  return out;
}

AdversaryResult find_adversary_l(const SequenceModel& l, std::span<const TokenId> y,
                                 std::span<const Sequence> prompts) {
  if (prompts.empty()) throw InputError("adversary needs a non-empty prompt space");
  std::optional<AdversaryResult> best;
  for (const auto& x : prompts) {
    const double value = logprob_conditional(l, y, x).prob();
    if (better(value, x, best)) best = AdversaryResult{x, value};
  }
  return *best;
}

namespace {

std::optional<AdversaryResult> constrained_best(const PromptScorer& scorer, std::span<const TokenId> y,
                                                LogProb log_g) {
  std::optional<AdversaryResult> best;
  const auto prompts = scorer.prompts();
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto s = scorer.score(i, y, log_g);
    if (s.accepted && better(s.m, prompts[i], best)) best = AdversaryResult{prompts[i], s.m};
  }
  return best;
}

}  // namespace

std::optional<AdversaryResult> find_adversary_m(const SequenceModel& l, const SequenceModel& g,
                                                double k_bits, std::size_t max_iterations,
                                                std::span<const TokenId> y,
                                                std::span<const Sequence> prompts,
                                                std::size_t max_len) {
  if (prompts.empty()) throw InputError("adversary needs a non-empty prompt space");
  const PromptScorer scorer(l, g, k_bits, max_iterations, prompts, max_len);
  return constrained_best(scorer, y, logprob_marginal(g, y));
}

AttackSummary verify_bound_under_attack(const SequenceModel& l, const SequenceModel& g,
                                        double k_bits, std::size_t max_iterations,
                                        std::span<const Sequence> targets,
                                        std::span<const Sequence> prompts, std::size_t max_len,
                                        double rel_tol) {
  if (prompts.empty()) throw InputError("adversary needs a non-empty prompt space");
  const PromptScorer scorer(l, g, k_bits, max_iterations, prompts, max_len);
  AttackSummary summary;
  summary.reports.reserve(targets.size());
  for (const auto& y : targets) {
    AttackReport r;
    r.target = y;
    const auto log_g = logprob_marginal(g, y);
    r.certificate = atomic_certificate(log_g, y.size(), k_bits, max_iterations);
    const auto adv_l = find_adversary_l(l, y, prompts);
    r.x_adv_l = adv_l.x;
    r.l_value = adv_l.value;
    if (const auto adv_m = constrained_best(scorer, y, log_g)) {
      r.x_adv_m = adv_m->x;
      r.m_value = adv_m->value;
    }
    r.violated = r.m_value > r.certificate_linear() * (1.0 + rel_tol);
    if (r.violated) ++summary.violations;
    summary.reports.push_back(std::move(r));
  }
  return summary;
}

nlohmann::json AttackReport::to_json(const Vocabulary& vocab) const {
  nlohmann::json j = {{"target", vocab.decode(target)},
                      {"x_adv_L", vocab.decode(x_adv_l)},
                      {"L_at_x_adv_L", l_value},
                      {"feasible", x_adv_m.has_value()},
                      {"M_at_x_adv_M", m_value},
                      {"certificate_log2_eps", certificate.log2_eps},
                      {"L_exceeds_certificate", l_value > certificate_linear()},
                      {"violated", violated}};
  j["x_adv_M"] = x_adv_m ? nlohmann::json(vocab.decode(*x_adv_m)) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json AttackSummary::to_json(const Vocabulary& vocab) const {
  nlohmann::json j = {{"violations", violations}, {"targets", reports.size()}};
  j["reports"] = nlohmann::json::array();
  for (const auto& r : reports) j["reports"].push_back(r.to_json(vocab));
  return j;
}

}  // namespace domcert
