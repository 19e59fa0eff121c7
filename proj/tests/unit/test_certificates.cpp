#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "domcert/analysis.hpp"
#include "domcert/certificates.hpp"
#include "domcert/tabular_model.hpp"
#include "oracles.hpp"

using namespace domcert;

namespace {

std::string fmt_id(std::size_t i) { return "item-" + std::to_string(1000 + i); }

std::vector<ScoredResponse> random_scored(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ScoredResponse> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({fmt_id(i), 1 + rng.below(20), LogProb{-60.0 * rng.uniform()}});
  return out;
}

}  // namespace

TEST_CASE("atomic_certificate") {
  const auto v = toy_vocabulary(3);
  const auto g = TabularModel::random(v, 4, {.prompt_sensitive = false});
  const Sequence y = {0, 2, v.eos()};
  const double log_g = std::log2(oracle::seq_prob(g, y, {}));

  SUBCASE("k = 0, T = 1 reduces to log2 G(y)") {
    CHECK(atomic_certificate(g, y, 0.0, 1).log2_eps == doctest::Approx(log_g).epsilon(1e-13));
  }
  SUBCASE("doubling T adds exactly one bit") {
    for (std::size_t t : {1, 2, 4, 8}) {
      const auto a = atomic_certificate(g, y, 1.5, t);
      const auto b = atomic_certificate(g, y, 1.5, 2 * t);
      CHECK(b.log2_t - a.log2_t == 1.0);
      CHECK(b.log2_eps - a.log2_eps == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(a.base_bits == b.base_bits);
    }
  }
  SUBCASE("closed form") {
    const auto a = atomic_certificate(LogProb{-7.0}, 4, 0.5, 5);
    CHECK(a.log2_eps == doctest::Approx(0.5 * 4 - 7.0 + std::log2(5.0)).epsilon(1e-15));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(atomic_certificate(LogProb{-1.0}, 1, 0.0, 0), InputError);
    CHECK_THROWS_AS(atomic_certificate(LogProb{-1.0}, 0, 0.0, 1), InputError);
  }
  SUBCASE("exact M stays below the bound for every short prompt") {
    const auto l = TabularModel::random(v, 5);
    const auto prompts = oracle::all_prompts(3, 2);
    for (double k : {-1.0, 0.0, 2.0})
      for (std::size_t t : {1, 3})
        for (const auto& x : prompts)
          for (const auto& [yy, p] : oracle::enumerate(l, x, 4).terminated) {
            (void)p;
            const auto m = likelihood_m_exact(l, g, k, t, x, yy, 4);
            CHECK(m.m <= std::exp2(atomic_certificate(g, yy, k, t).log2_eps) * (1 + 1e-12));
          }
  }
}

TEST_CASE("domain_certificate") {
  SUBCASE("singleton equals the atomic certificate") {
    const std::vector<ScoredResponse> d = {{"only", 3, LogProb{-9.0}}};
    const auto dc = domain_certificate(d, 1.0, 2);
    CHECK(dc.log2_eps == atomic_certificate(LogProb{-9.0}, 3, 1.0, 2).log2_eps);
    CHECK(dc.witness_id == "only");
  }
  SUBCASE("100 items: brute-force max of recomputed certificates") {
    const auto d = random_scored(100, 21);
    for (double k : {-2.0, 0.0, 3.0}) {
      const auto dc = domain_certificate(d, k, 5);
      double best = -INFINITY;
      for (const auto& r : d) best = std::max(best, k * r.n_y + std::log2(5.0) + r.log_g.bits);
      CHECK(dc.log2_eps == doctest::Approx(best).epsilon(1e-14));
      CHECK(d[dc.witness_index].id == dc.witness_id);
    }
  }
  SUBCASE("adding an item never lowers the certificate") {
    auto d = random_scored(30, 22);
    double prev = domain_certificate(std::span(d).first(1), 1.0, 1).log2_eps;
    for (std::size_t n = 2; n <= d.size(); ++n) {
      const double cur = domain_certificate(std::span(d).first(n), 1.0, 1).log2_eps;
      CHECK(cur >= prev);
      prev = cur;
    }
  }
  SUBCASE("ties go to the lowest id") {
    const std::vector<ScoredResponse> d = {{"b", 2, LogProb{-4.0}}, {"a", 2, LogProb{-4.0}}};
    CHECK(domain_certificate(d, 0.0, 1).witness_id == "a");
  }
  SUBCASE("scaling in T is exact") {
    const auto d = random_scored(40, 23);
    const auto one = domain_certificate(d, 0.7, 1);
    for (std::size_t t : {2, 3, 5, 7}) {
      const auto dt = domain_certificate(d, 0.7, t);
      CHECK(dt.base_bits == one.base_bits);
      CHECK(dt.log2_t == std::log2(static_cast<double>(t)));
      CHECK(dt.linear_eps() / one.linear_eps() == doctest::Approx(static_cast<double>(t)).epsilon(1e-12));
    }
  }
  SUBCASE("robust quantile picks an order statistic") {
    std::vector<ScoredResponse> d;
    for (int i = 0; i < 10; ++i) d.push_back({fmt_id(i), 1, LogProb{-static_cast<double>(i + 1)}});
    // bounds are -1..-10; the 0.9 quantile is the 9th smallest, -2
    CHECK(domain_certificate(d, 0.0, 1, 0.9).log2_eps == -2.0);
    CHECK(domain_certificate(d, 0.0, 1, 1.0).log2_eps == -1.0);
    CHECK_THROWS_AS(domain_certificate(d, 0.0, 1, 0.0), InputError);
  }
  SUBCASE("underflow is flagged") {
    const std::vector<ScoredResponse> d = {{"x", 10, LogProb{-2000.0}}};
    const auto dc = domain_certificate(d, 0.0, 1);
    CHECK(dc.underflow());
    CHECK(dc.linear_eps() == 0.0);
    CHECK(dc.to_json()["eps_underflow"] == true);
  }
  SUBCASE("empty set") {
    CHECK_THROWS_AS(domain_certificate(std::span<const ScoredResponse>{}, 0.0, 1), InputError);
  }
}

TEST_CASE("solve_k_for_epsilon") {
  SUBCASE("singleton closed form") {
    const std::vector<ScoredResponse> d = {{"y", 4, LogProb{-12.0}}};
    CHECK(solve_k_for_epsilon(d, 1, 1e-5).k_bits == doctest::Approx((std::log2(1e-5) + 12.0) / 4).epsilon(1e-15));
  }
  SUBCASE("round trip and bisection cross-check") {
    const auto d = random_scored(60, 31);
    for (double eps : {1.0, 1e-3, 1e-9, 1e-30})
      for (std::size_t t : {1, 2, 5}) {
        const auto k = solve_k_for_epsilon(d, t, eps);
        CHECK(std::abs(domain_certificate(d, k.k_bits, t).log2_eps - std::log2(eps)) <= 1e-9);
        // independent bisection on the monotone map k -> DC(k)
        double lo = -1e4, hi = 1e4;
        for (int i = 0; i < 200; ++i) {
          const double mid = 0.5 * (lo + hi);
          double best = -INFINITY;
          for (const auto& r : d) best = std::max(best, mid * r.n_y + std::log2(double(t)) + r.log_g.bits);
          (best <= std::log2(eps) ? lo : hi) = mid;
        }
        CHECK(std::abs(k.k_bits - lo) <= 1e-9);
      }
  }
  SUBCASE("floor and errors") {
    const std::vector<ScoredResponse> d = {{"y", 1, LogProb{-1.0}}};
    CHECK(solve_k_for_epsilon(d, 1, 1e-10, -5.0).below_floor);
    CHECK_FALSE(solve_k_for_epsilon(d, 1, 0.5, -5.0).below_floor);
    CHECK_THROWS_AS(solve_k_for_epsilon(d, 1, 0.0), InputError);
    CHECK_THROWS_AS(solve_k_for_epsilon(d, 1, 1.5), InputError);
    CHECK_THROWS_AS(solve_k_for_epsilon(std::span<const ScoredResponse>{}, 1, 0.5), InputError);
  }
}

TEST_CASE("constriction_ratio") {
  const auto ac = atomic_certificate(LogProb{-30.0}, 2, 0.0, 1);
  CHECK(constriction_ratio(LogProb{-30.0}, ac).log10_cr == 0.0);
  CHECK(constriction_ratio(LogProb{-10.0}, ac).log10_cr == doctest::Approx(6.0206).epsilon(1e-4));
}

TEST_CASE("renyi_inf_divergence") {
  const std::vector<double> p = {0.2, 0.3, 0.5};
  CHECK(renyi_inf_divergence(p, p) == 0.0);
  CHECK(renyi_inf_divergence(std::vector<double>{1, 0, 0, 0}, std::vector<double>{0.25, 0.25, 0.25, 0.25}) == 2.0);
  CHECK(std::isinf(renyi_inf_divergence(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0})));
  CHECK_THROWS_AS(renyi_inf_divergence(p, std::vector<double>{1.0}), InputError);

  SUBCASE("a bounded divergence bounds every response") {
    const auto v = toy_vocabulary(3);
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto l = TabularModel::random(v, 100 + s);
      const auto g = TabularModel::random(v, 200 + s, {.prompt_sensitive = false});
      const Sequence x = {1};
      const auto pl = oracle::enumerate(l, x, 4);
      const auto pg = oracle::enumerate(g, {}, 4);
      std::vector<double> a, b;
      for (const auto& [y, p] : pl.terminated) {
        a.push_back(p);
        const auto it = pg.terminated.find(y);
        b.push_back(it == pg.terminated.end() ? 0.0 : it->second);
      }
      const double d = renyi_inf_divergence(a, b);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] <= std::exp2(d) * b[i] * (1 + 1e-12));
    }
  }
}
