#pragma once
// Exact and estimated behaviour of the VALID meta-model M, plus the
// evaluation aggregates: FRR/TRR sweeps with Youden's J, constriction
// quantiles, eCDFs and histograms.

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "domcert/sequence_model.hpp"
#include "domcert/valid_sampler.hpp"

namespace domcert {

// sum_{t<T} phi^t, which is (1 - phi^T) / (1 - phi) and T at phi = 1.
double acceptance_multiplier(double phi, std::size_t max_iterations);

// E[tau] = (1 - phi^T) / (1 - phi), and exactly T when phi = 1.
double expected_iterations(double phi, std::size_t max_iterations);

struct ExactResponse {
  Sequence y;
  double l = 0.0;      // L(y|x) from enumeration
  LogProb log_g;       // log2 G(y)
  bool accepted = false;
  double m = 0.0;      // M(y|x)
};

// Full output distribution of M for one prompt, from exhaustive enumeration
// of L(.|x) up to max_len. Truncated draws count as rejections.
struct ExactM {
  double phi = 0.0;          // per-iteration rejection probability
  double abstain = 0.0;      // phi^T
  double multiplier = 1.0;   // acceptance_multiplier(phi, T)
  std::vector<ExactResponse> responses;

  double total_mass() const;  // sum_y M(y|x) + abstain
  const ExactResponse* find(std::span<const TokenId> y) const;
};

ExactM exact_m_distribution(const SequenceModel& l, const SequenceModel& g, double k_bits,
                            std::size_t max_iterations, std::span<const TokenId> x,
                            std::size_t max_len,
                            std::uint64_t max_leaves = kDefaultEnumerationGuard);

struct MLikelihood {
  double m = 0.0;          // M(y|x)
  double l = 0.0;          // L(y|x)
  bool accepted = false;
  double phi = 0.0;
  double abstain = 0.0;    // M(Abstain|x) = phi^T
};

// Throws ResourceError when the response space cannot be enumerated.
// Same, from an enumerated support of L(.|x) and the guide scores of its
// terminated responses (aligned with support.terminated).
ExactM exact_m_from_support(const Support& support, std::span<const LogProb> log_g, double k_bits,
                            std::size_t max_iterations);

MLikelihood likelihood_m_exact(const SequenceModel& l, const SequenceModel& g, double k_bits,
                               std::size_t max_iterations, std::span<const TokenId> x,
                               std::span<const TokenId> y, std::size_t max_len,
                               std::uint64_t max_leaves = kDefaultEnumerationGuard);

enum class CiMethod { Normal, ClopperPearson };

struct RejectionEstimate {
  double phi_hat = 0.0;
  std::size_t n = 0;
  std::size_t rejections = 0;
  double confidence = 0.95;
  double lo = 0.0;
  double hi = 1.0;
  CiMethod method = CiMethod::Normal;
};

// Binomial interval for `rejections` out of `n`; the normal approximation is
// phi_hat +- z_{alpha/2} sqrt(phi_hat (1 - phi_hat) / n), clipped to [0, 1].
RejectionEstimate binomial_interval(std::size_t rejections, std::size_t n, double confidence,
                                    CiMethod method = CiMethod::Normal);

// n independent VALID single-iteration trials from L(.|x); truncation rejects.
RejectionEstimate rejection_prob_mc(const SequenceModel& l, const SequenceModel& g, double k_bits,
                                    std::span<const TokenId> x, std::size_t n, double confidence,
                                    std::size_t max_len, Rng& rng,
                                    CiMethod method = CiMethod::Normal);

struct ProbInterval {
  double lo = 0.0;
  double hi = 0.0;
};

// Interval on M(y|x) from the interval on phi; M is increasing in phi.
// A rejected response gives [0, 0].
ProbInterval likelihood_m_bounds(LogProb log_l, bool accepted, const RejectionEstimate& phi_ci,
                                 std::size_t max_iterations);

// Right-continuous empirical CDF.
class Ecdf {
 public:
  explicit Ecdf(std::vector<double> values);  // throws InputError when empty

  double operator()(double x) const;  // fraction of values <= x
  double quantile(double q) const;    // smallest value v with F(v) >= q
  const std::vector<double>& sorted() const { return sorted_; }
  nlohmann::json to_json() const;     // {"x": [...], "F": [...]} at each distinct value

 private:
  std::vector<double> sorted_;
};

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<std::size_t> counts;
  nlohmann::json to_json() const;
};

// Equal-width bins spanning [min, max] of the values; the last bin is closed.
Histogram make_histogram(std::span<const double> values, std::size_t bins);

struct SweepRow {
  double k = 0.0;
  double frr = 0.0;  // NaN when there are no ID records
  double trr = 0.0;  // NaN when there are no OOD records
  double j = 0.0;
  double cr_p10 = 0.0;  // log10 constriction quantiles over OOD records
  double cr_p50 = 0.0;
  double cr_p90 = 0.0;
};

struct FrrTarget {
  double target_frr = 0.0;
  double k = 0.0;           // smallest k whose FRR is <= target
  double achieved_frr = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<FrrTarget> targets;
  std::size_t best_j_row = 0;
  std::vector<std::string> warnings;
};

inline const std::vector<double> kDefaultFrrTargets = {0.0, 0.01, 0.05, 0.10, 0.20, 0.25, 0.50};

// `points` evenly spaced k values spanning the records' normalized ratios
// widened by `margin` of the span on each side.
std::vector<double> default_k_grid(std::span<const EvalRecord> records, std::size_t points = 256,
                                   double margin = 0.1);

// Ground-truth protocol: an ID record is falsely rejected when its (x, y)
// pair fails the acceptance test at k.
SweepResult frr_trr_sweep(std::span<const EvalRecord> records, std::span<const double> k_grid,
                          std::size_t max_iterations,
                          std::span<const double> frr_targets = kDefaultFrrTargets);

void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

}  // namespace domcert
