#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "domcert/analysis.hpp"
#include "domcert/tabular_model.hpp"
#include "oracles.hpp"

using namespace domcert;

namespace {

EvalRecord rec(std::string id, Label label, double ratio, std::size_t n = 1) {
  return {std::move(id), label, n, LogProb{ratio * static_cast<double>(n) - 10.0}, LogProb{-10.0}, {}};
}

}  // namespace

TEST_CASE("acceptance_multiplier and expected_iterations") {
  CHECK(acceptance_multiplier(0.5, 3) == 1.75);
  CHECK(acceptance_multiplier(0.0, 5) == 1.0);
  CHECK(acceptance_multiplier(1.0, 5) == 5.0);
  CHECK(acceptance_multiplier(0.9, 1) == 1.0);
  CHECK(expected_iterations(1.0, 7) == 7.0);
  CHECK(expected_iterations(0.0, 7) == 1.0);
  CHECK(expected_iterations(0.5, 3) == doctest::Approx(1.75).epsilon(1e-15));
  // sum_{t=1}^{T} t P(tau = t) with the last step absorbing abstention
  for (double phi : {0.1, 0.5, 0.9})
    for (std::size_t t : {1, 2, 5}) {
      double mean = 0.0;
      for (std::size_t i = 1; i < t; ++i) mean += i * std::pow(phi, i - 1.0) * (1 - phi);
      mean += t * std::pow(phi, t - 1.0);
      CHECK(expected_iterations(phi, t) == doctest::Approx(mean).epsilon(1e-12));
    }
  CHECK_THROWS_AS(acceptance_multiplier(1.5, 2), InputError);
  CHECK_THROWS_AS(expected_iterations(0.5, 0), InputError);
}

TEST_CASE("exact M distribution") {
  const auto v = toy_vocabulary(3);
  SUBCASE("mass sums to one and matches the trial recursion") {
    for (std::uint64_t s = 0; s < 8; ++s) {
      const auto l = TabularModel::random(v, 300 + s, {.eos_weight = 2.0});
      const auto g = TabularModel::random(v, 400 + s, {.prompt_sensitive = false});
      const Sequence x = {static_cast<TokenId>(s % 3)};
      const auto support = oracle::enumerate(l, x, 4);
      for (double k : {-1.0, 0.5, 2.0})
        for (std::size_t t : {1, 2, 5}) {
          const auto m = exact_m_distribution(l, g, k, t, x, 4);
          CHECK(m.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
          const auto accepts = [&](const Sequence& y) {
            return acceptance_test(LogProb::from_prob(oracle::seq_prob(l, y, x)),
                                   LogProb::from_prob(oracle::seq_prob(g, y, {})), y.size(), k);
          };
          CHECK(m.abstain == doctest::Approx(oracle::valid_outcome_prob(support, accepts, {}, t)).epsilon(1e-12));
          for (const auto& r : m.responses)
            CHECK(r.m == doctest::Approx(oracle::valid_outcome_prob(support, accepts, r.y, t)).epsilon(1e-12));
        }
    }
  }
  SUBCASE("planted phi = 0.5, T = 3 gives multiplier 1.75") {
    const auto l = oracle::planted_phi_l(0.5);
    const auto g = oracle::planted_phi_g();
    const auto lm = likelihood_m_exact(l, g, 1.0, 3, {}, Sequence{0, v.eos() - 1}, 4);
    // toy_vocabulary(2) has EOS id 2
    CHECK(lm.phi == 0.5);
    CHECK(lm.accepted);
    CHECK(lm.m == doctest::Approx(0.5 * 1.75).epsilon(1e-15));
    const auto rejected = likelihood_m_exact(l, g, 1.0, 3, {}, Sequence{1, 2}, 4);
    CHECK_FALSE(rejected.accepted);
    CHECK(rejected.m == 0.0);
    CHECK(rejected.abstain == 0.125);
  }
  SUBCASE("accepted responses: M >= L, equal iff phi = 0 or T = 1") {
    const auto l = oracle::planted_phi_l(0.3);
    const auto g = oracle::planted_phi_g();
    const Sequence a = {0, 2};
    CHECK(likelihood_m_exact(l, g, 1.0, 1, {}, a, 4).m == likelihood_m_exact(l, g, 1.0, 1, {}, a, 4).l);
    CHECK(likelihood_m_exact(l, g, 1.0, 4, {}, a, 4).m > 0.7);
    CHECK(likelihood_m_exact(l, g, 20.0, 4, {}, a, 4).m == doctest::Approx(0.7).epsilon(1e-15));
  }
  SUBCASE("enumeration guard") {
    const auto l = TabularModel::random(v, 1);
    CHECK_THROWS_AS(exact_m_distribution(l, l, 0.0, 1, {}, 30, 1000), ResourceError);
  }
}

TEST_CASE("binomial_interval") {
  const auto e = binomial_interval(500, 1000, 0.95);
  CHECK(e.phi_hat == 0.5);
  CHECK(e.hi - e.lo == doctest::Approx(2 * 1.959963984540054 * std::sqrt(0.25 / 1000)).epsilon(1e-9));
  const auto zero = binomial_interval(0, 100, 0.95);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi == 0.0);
  const auto cp = binomial_interval(0, 100, 0.95, CiMethod::ClopperPearson);
  CHECK(cp.lo == 0.0);
  CHECK(cp.hi == doctest::Approx(1 - std::pow(0.025, 1.0 / 100)).epsilon(1e-9));
  CHECK(binomial_interval(100, 100, 0.95).hi == 1.0);
  CHECK_THROWS_AS(binomial_interval(5, 0, 0.95), InputError);
  CHECK_THROWS_AS(binomial_interval(5, 4, 0.95), InputError);
  CHECK_THROWS_AS(binomial_interval(1, 4, 1.0), InputError);
}

TEST_CASE("rejection_prob_mc") {
  const auto g = oracle::planted_phi_g();
  SUBCASE("empty acceptance set gives phi-hat 1") {
    const auto l = oracle::planted_phi_l(1.0);
    Rng rng(1);
    const auto e = rejection_prob_mc(l, g, 1.0, {}, 200, 0.95, 4, rng);
    CHECK(e.phi_hat == 1.0);
    CHECK(e.hi == 1.0);
  }
  SUBCASE("estimate is within 3 sigma of the planted phi") {
    const auto l = oracle::planted_phi_l(0.25);
    Rng rng(2);
    const auto e = rejection_prob_mc(l, g, 1.0, {}, 20000, 0.95, 4, rng);
    CHECK(std::abs(e.phi_hat - 0.25) <= 3 * std::sqrt(0.25 * 0.75 / 20000));
  }
}

TEST_CASE("likelihood_m_bounds") {
  const LogProb l = LogProb::from_prob(0.4);
  const auto ci = binomial_interval(300, 1000, 0.95);
  SUBCASE("T = 1 collapses to L") {
    const auto b = likelihood_m_bounds(l, true, ci, 1);
    CHECK(b.lo == doctest::Approx(0.4));
    CHECK(b.hi == doctest::Approx(0.4));
  }
  SUBCASE("point interval gives the exact multiplier") {
    RejectionEstimate p;
    p.lo = p.hi = 0.5;
    const auto b = likelihood_m_bounds(l, true, p, 3);
    CHECK(b.lo == b.hi);
    CHECK(b.lo == doctest::Approx(0.4 * 1.75).epsilon(1e-15));
  }
  SUBCASE("contains exact M when phi is inside the interval") {
    const auto lm = oracle::planted_phi_l(0.3);
    const auto g = oracle::planted_phi_g();
    const auto exact = likelihood_m_exact(lm, g, 1.0, 4, {}, Sequence{0, 2}, 4);
    REQUIRE(ci.lo <= exact.phi);
    REQUIRE(exact.phi <= ci.hi);
    const auto b = likelihood_m_bounds(LogProb::from_prob(exact.l), true, ci, 4);
    CHECK(b.lo <= exact.m);
    CHECK(exact.m <= b.hi);
  }
  SUBCASE("rejected response") {
    const auto b = likelihood_m_bounds(l, false, ci, 4);
    CHECK(b.lo == 0.0);
    CHECK(b.hi == 0.0);
  }
}

TEST_CASE("Ecdf") {
  const Ecdf f({3.0, 1.0, 2.0, 2.0});
  CHECK(f(0.5) == 0.0);
  CHECK(f(1.0) == 0.25);
  CHECK(f(2.0) == 0.75);
  CHECK(f(3.0) == 1.0);
  CHECK(f.quantile(0.5) == 2.0);
  CHECK(f.quantile(1.0) == 3.0);
  CHECK(f.quantile(0.0) == 1.0);
  const auto j = f.to_json();
  CHECK(j["x"].size() == 3);
  CHECK(j["F"][1] == 0.75);
  CHECK_THROWS_AS(Ecdf({}), InputError);

  SUBCASE("quantiles match sorted order statistics") {
    Rng rng(5);
    std::vector<double> v(237);
    for (auto& x : v) x = rng.uniform();
    const Ecdf e(v);
    std::sort(v.begin(), v.end());
    for (double q : {0.01, 0.1, 0.5, 0.9, 0.99}) {
      const auto idx = static_cast<std::size_t>(std::ceil(q * v.size())) - 1;
      CHECK(e.quantile(q) == v[idx]);
      CHECK(e(e.quantile(q)) >= q);
    }
  }
}

TEST_CASE("make_histogram") {
  const std::vector<double> v = {0.0, 0.1, 0.5, 0.9, 1.0};
  const auto h = make_histogram(v, 2);
  CHECK(h.counts == std::vector<std::size_t>{2, 3});
  CHECK(h.edges.front() == 0.0);
  CHECK(h.edges.back() == 1.0);
  const std::vector<double> same = {2.0, 2.0};
  CHECK(make_histogram(same, 3).counts[1] == 2);
  CHECK_THROWS_AS(make_histogram(std::vector<double>{}, 2), InputError);
}

TEST_CASE("frr_trr_sweep") {
  std::vector<EvalRecord> r;
  for (int i = 0; i < 10; ++i) r.push_back(rec("id" + std::to_string(i), Label::InDomain, i * 0.1));
  for (int i = 0; i < 10; ++i) r.push_back(rec("ood" + std::to_string(i), Label::OutOfDomain, 2.0 + i * 0.1, 3));
  const auto grid = default_k_grid(r, 256);
  REQUIRE(grid.size() == 256);
  CHECK(grid.front() < 0.0);
  CHECK(grid.back() > 2.9);
  const auto s = frr_trr_sweep(r, grid, 1);
  for (std::size_t i = 1; i < s.rows.size(); ++i) {
    CHECK(s.rows[i].frr <= s.rows[i - 1].frr);
    CHECK(s.rows[i].trr <= s.rows[i - 1].trr);
    CHECK(s.rows[i].cr_p50 <= s.rows[i - 1].cr_p50);
  }
  CHECK(s.rows.front().frr == 1.0);
  CHECK(s.rows.back().trr == 0.0);
  // separable: some k between 0.9 and 2.0 gives J = 1
  CHECK(s.rows[s.best_j_row].j == 1.0);
  for (const auto& t : s.targets) {
    CHECK(t.achieved_frr <= t.target_frr + 1e-12);
    CHECK(t.achieved_frr > t.target_frr - 0.1);
  }
  CHECK(s.targets[0].k == doctest::Approx(0.9));

  SUBCASE("missing labels warn and produce NaN") {
    std::vector<EvalRecord> only_id(r.begin(), r.begin() + 10);
    const auto w = frr_trr_sweep(only_id, grid, 1);
    CHECK(w.warnings.size() == 1);
    CHECK(std::isnan(w.rows[0].trr));
  }
  SUBCASE("CSV has a header and a row per k") {
    std::stringstream ss;
    write_sweep_csv(ss, s);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(ss, line)) ++lines;
    CHECK(lines == 257);
  }
  SUBCASE("constriction median matches a recomputation") {
    const double k = grid[100];
    std::vector<double> cr;
    for (const auto& e : r)
      if (e.label == Label::OutOfDomain)
        cr.push_back((e.log_l.bits - (k * e.n_y + e.log_g.bits)) * std::log10(2.0));
    std::sort(cr.begin(), cr.end());
    CHECK(s.rows[100].cr_p50 == doctest::Approx(cr[4]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(frr_trr_sweep(r, std::vector<double>{}, 1), InputError);
}
