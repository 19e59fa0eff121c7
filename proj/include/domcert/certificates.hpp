#pragma once
// Atomic and domain certificates for the VALID meta-model M_{L,G,k,T}:
//
//   M(y|x) <= 2^(k N_y) * T * G(y)   for every prompt x,
//
// kept in log2 space. A domain certificate is the max atomic certificate
// over a finite out-of-domain set.

#include <string>

#include <nlohmann/json.hpp>

#include "domcert/sequence_model.hpp"

namespace domcert {

struct AtomicCertificate {
  double base_bits = 0.0;  // k * N_y + log2 G(y)
  double log2_t = 0.0;     // log2 T
  double log2_eps = 0.0;   // base_bits + log2_t
  std::size_t n_y = 0;
  double log2_g = 0.0;
  double k_bits = 0.0;
  std::size_t max_iterations = 1;
};

AtomicCertificate atomic_certificate(const SequenceModel& g, std::span<const TokenId> y,
                                     double k_bits, std::size_t max_iterations);
AtomicCertificate atomic_certificate(LogProb log_g, std::size_t n_y, double k_bits,
                                     std::size_t max_iterations);

// A response of the out-of-domain set with its guide score.
struct ScoredResponse {
  std::string id;
  std::size_t n_y = 0;
  LogProb log_g;
};

struct DomainItem {
  std::string id;
  Sequence y;
};

std::vector<ScoredResponse> score_marginal(const SequenceModel& g, std::span<const DomainItem> items);

struct DomainCertificate {
  double base_bits = 0.0;
  double log2_t = 0.0;
  double log2_eps = 0.0;
  double k_bits = 0.0;
  std::size_t max_iterations = 1;
  std::string witness_id;
  std::size_t witness_index = 0;
  std::uint64_t fingerprint = 0;
  double robust_quantile = 1.0;

  double log10_eps() const { return bits_to_log10(log2_eps); }
  // 2^log2_eps, or 0 with `underflow` set below 2^-1022.
  double linear_eps() const;
  bool underflow() const { return log2_eps < -1022.0; }
  nlohmann::json to_json() const;
};

// Max (or the `robust_quantile` order statistic) of the atomic certificates;
// ties go to the lexicographically lowest id. Throws InputError on an empty set.
DomainCertificate domain_certificate(std::span<const ScoredResponse> d_f, double k_bits,
                                     std::size_t max_iterations, double robust_quantile = 1.0);
DomainCertificate domain_certificate(const SequenceModel& g, std::span<const DomainItem> d_f,
                                     double k_bits, std::size_t max_iterations,
                                     double robust_quantile = 1.0);

std::uint64_t dataset_fingerprint(std::span<const ScoredResponse> d_f);

struct KForEpsilon {
  double k_bits = 0.0;
  std::string binding_id;     // item whose bound is tight at k
  bool below_floor = false;   // k fell under the caller's floor
};

// Largest k with domain_certificate(..., k, T).log2_eps <= log2 eps:
// min over items of (log2 eps - log2 T - log2 G(y)) / N_y.
KForEpsilon solve_k_for_epsilon(std::span<const ScoredResponse> d_f, std::size_t max_iterations,
                                double eps, double k_floor = -1e300);
KForEpsilon solve_k_for_epsilon(const SequenceModel& g, std::span<const DomainItem> d_f,
                                std::size_t max_iterations, double eps, double k_floor = -1e300);

struct ConstrictionRecord {
  double log10_cr = 0.0;
  double log_l_bits = 0.0;
  double log2_eps = 0.0;
};

// log10 of L(y|x) / eps_y(M). L(y|x) stands in for the adversarial bound of
// L, which makes the ratio a lower bound on the true constriction.
ConstrictionRecord constriction_ratio(LogProb log_l_given_x, const AtomicCertificate& ac);

// max over the support of log2 P - log2 Q; +inf if Q = 0 where P > 0, -inf
// when P has no mass at all. Entries are aligned outcome by outcome.
double renyi_inf_divergence(std::span<const double> p, std::span<const double> q);

}  // namespace domcert
