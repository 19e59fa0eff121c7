#include "domcert/analysis.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace domcert {

double acceptance_multiplier(double phi, std::size_t max_iterations) {
  if (!(phi >= 0.0 && phi <= 1.0)) throw InputError(fmt::format("phi must be in [0, 1], got {}", phi));
  if (max_iterations < 1) throw InputError("T must be >= 1");
  double sum = 0.0;
  double power = 1.0;
  for (std::size_t t = 0; t < max_iterations; ++t) {
    sum += power;
    power *= phi;
  }
  return sum;
}

double expected_iterations(double phi, std::size_t max_iterations) {
  if (!(phi >= 0.0 && phi <= 1.0)) throw InputError(fmt::format("phi must be in [0, 1], got {}", phi));
  if (max_iterations < 1) throw InputError("T must be >= 1");
  const auto t = static_cast<double>(max_iterations);
  if (phi == 1.0) return t;
  return (1.0 - std::pow(phi, t)) / (1.0 - phi);
}

double ExactM::total_mass() const {
  double total = abstain;
  for (const auto& r : responses) total += r.m;
  return total;
}

const ExactResponse* ExactM::find(std::span<const TokenId> y) const {
  for (const auto& r : responses)
    if (std::equal(r.y.begin(), r.y.end(), y.begin(), y.end())) return &r;
  return nullptr;
}

ExactM exact_m_from_support(const Support& support, std::span<const LogProb> log_g, double k_bits,
                            std::size_t max_iterations) {
  if (log_g.size() != support.terminated.size())
    throw InputError("guide scores must align with the enumerated support");
  ExactM out;
  out.responses.reserve(support.terminated.size());
  double rejected = support.truncated_mass;
  for (std::size_t i = 0; i < support.terminated.size(); ++i) {
    const auto& entry = support.terminated[i];
    ExactResponse r{entry.y, entry.prob, log_g[i], false, 0.0};
    r.accepted = acceptance_test(LogProb::from_prob(r.l), r.log_g, r.y.size(), k_bits);
    if (!r.accepted) rejected += r.l;
    out.responses.push_back(std::move(r));
  }
  out.phi = std::clamp(rejected, 0.0, 1.0);
  out.multiplier = acceptance_multiplier(out.phi, max_iterations);
  out.abstain = std::pow(out.phi, static_cast<double>(max_iterations));
  for (auto& r : out.responses) r.m = r.accepted ? r.l * out.multiplier : 0.0;
  return out;
}

ExactM exact_m_distribution(const SequenceModel& l, const SequenceModel& g, double k_bits,
                            std::size_t max_iterations, std::span<const TokenId> x,
                            std::size_t max_len, std::uint64_t max_leaves) {
  const auto support = enumerate_support(l, x, max_len, max_leaves);
  std::vector<LogProb> log_g;
  log_g.reserve(support.terminated.size());
  for (const auto& entry : support.terminated) log_g.push_back(logprob_marginal(g, entry.y));
  return exact_m_from_support(support, log_g, k_bits, max_iterations);
}

MLikelihood likelihood_m_exact(const SequenceModel& l, const SequenceModel& g, double k_bits,
                               std::size_t max_iterations, std::span<const TokenId> x,
                               std::span<const TokenId> y, std::size_t max_len,
                               std::uint64_t max_leaves) {
  l.vocab().validate(y);
  const auto dist = exact_m_distribution(l, g, k_bits, max_iterations, x, max_len, max_leaves);
  MLikelihood out{0.0, 0.0, false, dist.phi, dist.abstain};
  if (const auto* r = dist.find(y)) {
    out.m = r->m;
    out.l = r->l;
    out.accepted = r->accepted;
  }
  return out;
}

RejectionEstimate binomial_interval(std::size_t rejections, std::size_t n, double confidence,
                                    CiMethod method) {
  if (n < 1) throw InputError("binomial interval needs n >= 1");
  if (rejections > n) throw InputError("more rejections than draws");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw InputError(fmt::format("confidence must be in (0, 1), got {}", confidence));
  RejectionEstimate est;
  est.n = n;
  est.rejections = rejections;
  est.confidence = confidence;
  est.method = method;
  est.phi_hat = static_cast<double>(rejections) / static_cast<double>(n);
  const double alpha = 1.0 - confidence;
  if (method == CiMethod::Normal) {
    const double z = boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
    const double half = z * std::sqrt(est.phi_hat * (1.0 - est.phi_hat) / static_cast<double>(n));
    est.lo = std::max(0.0, est.phi_hat - half);
    est.hi = std::min(1.0, est.phi_hat + half);
  } else {
    const auto x = static_cast<double>(rejections);
    const auto nn = static_cast<double>(n);
    est.lo = rejections == 0 ? 0.0
                             : boost::math::quantile(boost::math::beta_distribution<>(x, nn - x + 1.0),
                                                     alpha / 2.0);
    est.hi = rejections == n ? 1.0
                             : boost::math::quantile(boost::math::beta_distribution<>(x + 1.0, nn - x),
                                                     1.0 - alpha / 2.0);
  }
  return est;
}

RejectionEstimate rejection_prob_mc(const SequenceModel& l, const SequenceModel& g, double k_bits,
                                    std::span<const TokenId> x, std::size_t n, double confidence,
                                    std::size_t max_len, Rng& rng, CiMethod method) {
  if (n < 1) throw InputError("Monte Carlo estimate needs n >= 1");
  std::size_t rejections = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto draw = sample(l, x, max_len, rng);
    const bool accepted =
        !draw.truncated && acceptance_test(logprob_conditional(l, draw.tokens, x),
                                           logprob_marginal(g, draw.tokens), draw.tokens.size(), k_bits);
    if (!accepted) ++rejections;
  }
  return binomial_interval(rejections, n, confidence, method);
}

ProbInterval likelihood_m_bounds(LogProb log_l, bool accepted, const RejectionEstimate& phi_ci,
                                 std::size_t max_iterations) {
  if (!accepted) return {0.0, 0.0};
  const double l = log_l.prob();
  return {l * acceptance_multiplier(phi_ci.lo, max_iterations),
          l * acceptance_multiplier(phi_ci.hi, max_iterations)};
}

Ecdf::Ecdf(std::vector<double> values) : sorted_(std::move(values)) {
  if (sorted_.empty()) throw InputError("eCDF of an empty sample");
  std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::operator()(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double Ecdf::quantile(double q) const {
  if (!(q >= 0.0 && q <= 1.0)) throw InputError(fmt::format("quantile must be in [0, 1], got {}", q));
  const auto n = static_cast<double>(sorted_.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(q * n)));
  return sorted_[std::min(rank, sorted_.size()) - 1];
}

nlohmann::json Ecdf::to_json() const {
  nlohmann::json xs = nlohmann::json::array();
  nlohmann::json fs = nlohmann::json::array();
  const auto n = static_cast<double>(sorted_.size());
  for (std::size_t i = 0; i < sorted_.size(); ++i) {
    if (i + 1 < sorted_.size() && sorted_[i + 1] == sorted_[i]) continue;
    xs.push_back(sorted_[i]);
    fs.push_back(static_cast<double>(i + 1) / n);
  }
  return {{"x", xs}, {"F", fs}, {"n", sorted_.size()}, {"convention", "right-continuous"}};
}

nlohmann::json Histogram::to_json() const { return {{"edges", edges}, {"counts", counts}}; }

Histogram make_histogram(std::span<const double> values, std::size_t bins) {
  if (values.empty()) throw InputError("histogram of an empty sample");
  if (bins < 1) throw InputError("histogram needs at least one bin");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw InputError("histogram values must be finite");
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.counts.assign(bins, 0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges.push_back(lo + width * static_cast<double>(i));
  h.edges.back() = hi;
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

std::vector<double> default_k_grid(std::span<const EvalRecord> records, std::size_t points,
                                   double margin) {
  if (records.empty()) throw InputError("k grid needs at least one record");
  if (points < 2) throw InputError("k grid needs at least two points");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    const double v = r.norm_ratio();
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) throw InputError("no finite normalized ratios to span");
  double span = hi - lo;
  if (span == 0.0) span = 1.0;
  lo -= margin * span;
  hi += margin * span;
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i)
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return grid;
}

SweepResult frr_trr_sweep(std::span<const EvalRecord> records, std::span<const double> k_grid,
                          std::size_t max_iterations, std::span<const double> frr_targets) {
  if (k_grid.empty()) throw InputError("sweep needs a non-empty k grid");
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  SweepResult out;
  std::vector<double> id_ratios;
  std::vector<const EvalRecord*> ood;
  for (const auto& r : records) {
    if (r.label == Label::InDomain)
      id_ratios.push_back(r.norm_ratio());
    else
      ood.push_back(&r);
  }
  if (id_ratios.empty()) out.warnings.emplace_back("no in-domain records: FRR undefined");
  if (ood.empty()) out.warnings.emplace_back("no out-of-domain records: TRR undefined");

  const double log2_t = std::log2(static_cast<double>(max_iterations));
  double best_j = -std::numeric_limits<double>::infinity();
  std::vector<double> cr(ood.size());
  for (std::size_t i = 0; i < k_grid.size(); ++i) {
    const double k = k_grid[i];
    SweepRow row{k, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN};
    if (!id_ratios.empty()) {
      std::size_t rejected = 0;
      for (const auto& r : records)
        if (r.label == Label::InDomain && !acceptance_test(r.log_l, r.log_g, r.n_y, k)) ++rejected;
      row.frr = static_cast<double>(rejected) / static_cast<double>(id_ratios.size());
    }
    if (!ood.empty()) {
      std::size_t rejected = 0;
      for (std::size_t o = 0; o < ood.size(); ++o) {
        const auto& r = *ood[o];
        if (!acceptance_test(r.log_l, r.log_g, r.n_y, k)) ++rejected;
        const double log2_eps = k * static_cast<double>(r.n_y) + r.log_g.bits + log2_t;
        cr[o] = bits_to_log10(r.log_l.bits - log2_eps);
      }
      row.trr = static_cast<double>(rejected) / static_cast<double>(ood.size());
      const Ecdf cr_ecdf(cr);
      row.cr_p10 = cr_ecdf.quantile(0.10);
      row.cr_p50 = cr_ecdf.quantile(0.50);
      row.cr_p90 = cr_ecdf.quantile(0.90);
    }
    row.j = row.trr - row.frr;
    if (row.j > best_j) {
      best_j = row.j;
      out.best_j_row = i;
    }
    out.rows.push_back(row);
  }

  if (!id_ratios.empty()) {
    std::sort(id_ratios.begin(), id_ratios.end());
    const auto n = id_ratios.size();
    for (double target : frr_targets) {
      // FRR(k) = #{r > k} / n <= target  <=>  k >= the (n - floor(target n))-th smallest ratio
      const auto allowed = static_cast<std::size_t>(std::floor(target * static_cast<double>(n)));
      FrrTarget t{target, kNaN, kNaN};
      if (allowed >= n) {
        t.k = -std::numeric_limits<double>::infinity();
        t.achieved_frr = 1.0;
      } else {
        t.k = id_ratios[n - allowed - 1];
        std::size_t rejected = 0;
        for (const auto& r : records)
          if (r.label == Label::InDomain && !acceptance_test(r.log_l, r.log_g, r.n_y, t.k)) ++rejected;
        t.achieved_frr = static_cast<double>(rejected) / static_cast<double>(n);
      }
      out.targets.push_back(t);
    }
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "k,frr,trr,j,cr_p10,cr_p50,cr_p90\n";
  for (const auto& r : sweep.rows)
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.k, r.frr, r.trr,
                       r.j, r.cr_p10, r.cr_p50, r.cr_p90);
}

}  // namespace domcert
