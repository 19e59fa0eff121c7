#include "domcert/sequence_model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace domcert {

LogProb logprob_conditional(const SequenceModel& model, std::span<const TokenId> y,
                            std::span<const TokenId> x) {
  if (y.empty()) throw InputError("cannot score an empty response");
  const auto& vocab = model.vocab();
  vocab.validate(x);
  vocab.validate(y);
  LogProb total = LogProb::certain();
  for (std::size_t n = 0; n < y.size(); ++n)
    total += LogProb::from_prob(model.next_prob(x, y.first(n), y[n]));
  return total;
}

LogProb logprob_marginal(const SequenceModel& model, std::span<const TokenId> y) {
  return logprob_conditional(model, y, {});
}

namespace {

TokenId draw(const std::vector<double>& dist, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  TokenId last_positive = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= 0.0) continue;
    cumulative += dist[i];
    last_positive = static_cast<TokenId>(i);
    if (u < cumulative) return last_positive;
  }
  // u landed in the rounding gap above the accumulated total
  return last_positive;
}

}  // namespace

SampleResult sample(const SequenceModel& model, std::span<const TokenId> x, std::size_t max_len,
                    Rng& rng) {
  if (max_len == 0) throw InputError("max_len must be at least 1");
  model.vocab().validate(x);
  const TokenId eos = model.vocab().eos();
  SampleResult out;
  while (out.tokens.size() < max_len) {
    const TokenId t = draw(model.next_distribution(x, out.tokens), rng);
    out.tokens.push_back(t);
    if (t == eos) return out;
  }
  out.truncated = true;
  return out;
}

SampleResult greedy_decode(const SequenceModel& model, std::span<const TokenId> x,
                           std::size_t max_len) {
  if (max_len == 0) throw InputError("max_len must be at least 1");
  model.vocab().validate(x);
  const TokenId eos = model.vocab().eos();
  SampleResult out;
  while (out.tokens.size() < max_len) {
    const auto dist = model.next_distribution(x, out.tokens);
    const auto best = std::max_element(dist.begin(), dist.end());
    const auto t = static_cast<TokenId>(best - dist.begin());
    out.tokens.push_back(t);
    if (t == eos) return out;
  }
  out.truncated = true;
  return out;
}

double Support::terminated_mass() const {
  double total = 0.0;
  for (const auto& e : terminated) total += e.prob;
  return total;
}

std::uint64_t enumeration_leaves(std::size_t vocab_size, std::size_t max_len) {
  // Each non-EOS prefix of length d < max_len ends one terminated leaf; the
  // (V-1)^max_len prefixes at full depth are truncation leaves.
  const std::uint64_t branch = vocab_size > 0 ? vocab_size - 1 : 0;
  std::uint64_t level = 1;
  std::uint64_t total = 0;
  for (std::size_t d = 0; d < max_len; ++d) {
    total += level;  // EOS leaf below each prefix at this depth
    if (branch != 0 && level > UINT64_MAX / branch) return UINT64_MAX;
    level *= branch;
    if (total > UINT64_MAX - level) return UINT64_MAX;
  }
  return total + level;
}

namespace {

void expand(const SequenceModel& model, std::span<const TokenId> x, std::size_t max_len,
            Sequence& prefix, double mass, Support& out) {
  if (prefix.size() == max_len) {
    out.truncated_mass += mass;
    return;
  }
  const TokenId eos = model.vocab().eos();
  const auto dist = model.next_distribution(x, prefix);
  for (std::size_t t = 0; t < dist.size(); ++t) {
    if (dist[t] <= 0.0) continue;
    prefix.push_back(static_cast<TokenId>(t));
    if (t == eos)
      out.terminated.push_back({prefix, mass * dist[t]});
    else
      expand(model, x, max_len, prefix, mass * dist[t], out);
    prefix.pop_back();
  }
}

}  // namespace

Support enumerate_support(const SequenceModel& model, std::span<const TokenId> x,
                          std::size_t max_len, std::uint64_t max_leaves) {
  if (max_len == 0) throw InputError("max_len must be at least 1");
  model.vocab().validate(x);
  const auto leaves = enumeration_leaves(model.vocab().size(), max_len);
  if (leaves > max_leaves)
    throw ResourceError(fmt::format(
        "enumeration of V={} up to length {} needs {} leaves (guard {})",
        model.vocab().size(), max_len, leaves, max_leaves));
  Support out;
  Sequence prefix;
  expand(model, x, max_len, prefix, 1.0, out);
  return out;
}

TemperatureModel::TemperatureModel(ModelPtr base, double temperature)
    : base_(std::move(base)), temperature_(temperature) {
  if (!base_) throw InputError("temperature wrapper needs a base model");
  if (!(temperature_ > 0.0) || !std::isfinite(temperature_))
    throw InputError(fmt::format("temperature must be positive and finite, got {}", temperature_));
}

std::vector<double> TemperatureModel::next_distribution(std::span<const TokenId> prompt,
                                                        std::span<const TokenId> prefix) const {
  auto dist = base_->next_distribution(prompt, prefix);
  if (temperature_ == 1.0) return dist;
  // p^(1/t) in log space so small t does not underflow every entry
  double max_logit = -std::numeric_limits<double>::infinity();
  for (double p : dist)
    if (p > 0.0) max_logit = std::max(max_logit, std::log(p) / temperature_);
  double norm = 0.0;
  for (double& p : dist) {
    p = p > 0.0 ? std::exp(std::log(p) / temperature_ - max_logit) : 0.0;
    norm += p;
  }
  for (double& p : dist) p /= norm;
  return dist;
}

ModelPtr apply_temperature(ModelPtr base, double t) {
  return std::make_shared<TemperatureModel>(std::move(base), t);
}

}  // namespace domcert
