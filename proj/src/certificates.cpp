#include "domcert/certificates.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace domcert {

AtomicCertificate atomic_certificate(LogProb log_g, std::size_t n_y, double k_bits,
                                     std::size_t max_iterations) {
  if (max_iterations < 1) throw InputError("certificate needs T >= 1");
  if (n_y < 1) throw InputError("certificate needs a non-empty response");
  AtomicCertificate ac;
  ac.n_y = n_y;
  ac.log2_g = log_g.bits;
  ac.k_bits = k_bits;
  ac.max_iterations = max_iterations;
  ac.base_bits = k_bits * static_cast<double>(n_y) + log_g.bits;
  ac.log2_t = std::log2(static_cast<double>(max_iterations));
  ac.log2_eps = ac.base_bits + ac.log2_t;
  return ac;
}

AtomicCertificate atomic_certificate(const SequenceModel& g, std::span<const TokenId> y,
                                     double k_bits, std::size_t max_iterations) {
  return atomic_certificate(logprob_marginal(g, y), y.size(), k_bits, max_iterations);
}

std::vector<ScoredResponse> score_marginal(const SequenceModel& g, std::span<const DomainItem> items) {
  std::vector<ScoredResponse> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back({item.id, item.y.size(), logprob_marginal(g, item.y)});
  return out;
}

double DomainCertificate::linear_eps() const { return underflow() ? 0.0 : std::exp2(log2_eps); }

nlohmann::json DomainCertificate::to_json() const {
  return {{"k_bits", k_bits},
          {"T", max_iterations},
          {"log2_eps", log2_eps},
          {"log10_eps", log10_eps()},
          {"eps", linear_eps()},
          {"eps_underflow", underflow()},
          {"witness_id", witness_id},
          {"dataset_fingerprint", fmt::format("{:016x}", fingerprint)},
          {"robust_quantile", robust_quantile}};
}

std::uint64_t dataset_fingerprint(std::span<const ScoredResponse> d_f) {
  std::uint64_t h = fnv1a64(nullptr, 0);
  for (const auto& r : d_f) {
    h = fnv1a64(r.id.data(), r.id.size(), h);
    h = fnv1a64(&r.n_y, sizeof r.n_y, h);
    h = fnv1a64(&r.log_g.bits, sizeof r.log_g.bits, h);
  }
  return h;
}

DomainCertificate domain_certificate(std::span<const ScoredResponse> d_f, double k_bits,
                                     std::size_t max_iterations, double robust_quantile) {
  if (d_f.empty()) throw InputError("domain certificate needs a non-empty out-of-domain set");
  if (!(robust_quantile > 0.0 && robust_quantile <= 1.0))
    throw InputError(fmt::format("robust quantile must be in (0, 1], got {}", robust_quantile));

  std::vector<AtomicCertificate> atomic;
  atomic.reserve(d_f.size());
  for (const auto& r : d_f) atomic.push_back(atomic_certificate(r.log_g, r.n_y, k_bits, max_iterations));

  // descending by bound, ascending by id on ties
  std::vector<std::size_t> order(d_f.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (atomic[a].base_bits != atomic[b].base_bits) return atomic[a].base_bits > atomic[b].base_bits;
    return d_f[a].id < d_f[b].id;
  });
  // robust_quantile = 1 picks the max; q picks the ceil(q n)-th smallest
  const auto n = static_cast<double>(d_f.size());
  const auto rank_from_top = static_cast<std::size_t>(n - std::ceil(robust_quantile * n));
  const std::size_t w = order[std::min(rank_from_top, d_f.size() - 1)];

  DomainCertificate dc;
  dc.base_bits = atomic[w].base_bits;
  dc.log2_t = atomic[w].log2_t;
  dc.log2_eps = atomic[w].log2_eps;
  dc.k_bits = k_bits;
  dc.max_iterations = max_iterations;
  dc.witness_id = d_f[w].id;
  dc.witness_index = w;
  dc.fingerprint = dataset_fingerprint(d_f);
  dc.robust_quantile = robust_quantile;
  return dc;
}

DomainCertificate domain_certificate(const SequenceModel& g, std::span<const DomainItem> d_f,
                                     double k_bits, std::size_t max_iterations,
                                     double robust_quantile) {
  const auto scored = score_marginal(g, d_f);
  return domain_certificate(scored, k_bits, max_iterations, robust_quantile);
}

KForEpsilon solve_k_for_epsilon(std::span<const ScoredResponse> d_f, std::size_t max_iterations,
                                double eps, double k_floor) {
  if (d_f.empty()) throw InputError("solving for k needs a non-empty out-of-domain set");
  if (!(eps > 0.0 && eps <= 1.0)) throw InputError(fmt::format("eps must be in (0, 1], got {}", eps));
  if (max_iterations < 1) throw InputError("solving for k needs T >= 1");
  const double log2_eps = std::log2(eps);
  const double log2_t = std::log2(static_cast<double>(max_iterations));
  KForEpsilon out{std::numeric_limits<double>::infinity(), {}, false};
  for (const auto& r : d_f) {
    if (r.n_y < 1) throw InputError(fmt::format("item '{}' has an empty response", r.id));
    // G(y) = 0 bounds nothing, so that item never binds
    const double k_y = (log2_eps - log2_t - r.log_g.bits) / static_cast<double>(r.n_y);
    if (k_y < out.k_bits || (k_y == out.k_bits && r.id < out.binding_id)) {
      out.k_bits = k_y;
      out.binding_id = r.id;
    }
  }
  out.below_floor = out.k_bits < k_floor;
  return out;
}

KForEpsilon solve_k_for_epsilon(const SequenceModel& g, std::span<const DomainItem> d_f,
                                std::size_t max_iterations, double eps, double k_floor) {
  const auto scored = score_marginal(g, d_f);
  return solve_k_for_epsilon(scored, max_iterations, eps, k_floor);
}

ConstrictionRecord constriction_ratio(LogProb log_l_given_x, const AtomicCertificate& ac) {
  return {bits_to_log10(log_l_given_x.bits - ac.log2_eps), log_l_given_x.bits, ac.log2_eps};
}

double renyi_inf_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InputError("divergence needs aligned supports");
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    best = std::max(best, std::log2(p[i]) - std::log2(q[i]));
  }
  return best;
}

}  // namespace domcert
