#include <doctest.h>

#include <cmath>

#include "domcert/adversary.hpp"
#include "domcert/analysis.hpp"
#include "domcert/tabular_model.hpp"
#include "oracles.hpp"

using namespace domcert;

namespace {

// Prompt "t1 t1" makes L emit t0 with probability 0.9; every other prompt
// gives 0.1. The guide assigns 0.01 to t0, so at k = 2 bits (bound 0.16 for
// the two-token response) only the non-trigger prompts accept it.
TabularModel planted_l(const Vocabulary& v) {
  return TabularModel(v, [](std::span<const TokenId> x, std::span<const TokenId> prefix) {
    if (!prefix.empty()) return std::vector<double>{0.0, 0.0, 1.0};
    const bool trigger = x.size() == 2 && x[0] == 1 && x[1] == 1;
    const double p = trigger ? 0.9 : 0.1;
    return std::vector<double>{p, 1.0 - p, 0.0};
  });
}

TabularModel planted_g(const Vocabulary& v) {
  return TabularModel(v, [](std::span<const TokenId>, std::span<const TokenId> prefix) {
    if (!prefix.empty()) return std::vector<double>{0.0, 0.0, 1.0};
    return std::vector<double>{0.01, 0.99, 0.0};
  });
}

}  // namespace

TEST_CASE("enumerate_prompts") {
  const auto v = toy_vocabulary(2);
  const auto p = enumerate_prompts(v, 2);
  CHECK(p.size() == 1 + 2 + 4);
  CHECK(p.front().empty());
  CHECK(std::is_sorted(p.begin(), p.end()));
  CHECK_THROWS_AS(enumerate_prompts(toy_vocabulary(10), 8, 1000), ResourceError);
}

TEST_CASE("find_adversary_l") {
  const auto v = toy_vocabulary(2);
  const auto prompts = enumerate_prompts(v, 2);
  SUBCASE("prompt-independent model ties go to the empty prompt") {
    const auto l = TabularModel::random(v, 3, {.prompt_sensitive = false});
    const auto r = find_adversary_l(l, Sequence{0, 2}, prompts);
    CHECK(r.x.empty());
  }
  SUBCASE("planted trigger is found") {
    const auto l = planted_l(v);
    const auto r = find_adversary_l(l, Sequence{0, 2}, prompts);
    CHECK(r.x == Sequence{1, 1});
    CHECK(r.value == doctest::Approx(0.9));
  }
  SUBCASE("dominates every prompt") {
    const auto l = TabularModel::random(v, 4);
    const Sequence y = {1, 0, 2};
    const auto r = find_adversary_l(l, y, prompts);
    for (const auto& x : prompts) CHECK(oracle::seq_prob(l, y, x) <= r.value * (1 + 1e-12));
  }
  CHECK_THROWS_AS(find_adversary_l(planted_l(v), Sequence{0, 2}, std::span<const Sequence>{}), InputError);
}

TEST_CASE("find_adversary_m") {
  const auto v = toy_vocabulary(2);
  const auto prompts = enumerate_prompts(v, 2);
  const auto l = planted_l(v);
  const auto g = planted_g(v);
  const Sequence y = {0, 2};  // n_y = 2, G(y) = 0.01

  SUBCASE("slack constraint: same prompt and value as the unconstrained attack") {
    const auto m = find_adversary_m(l, g, 10.0, 1, y, prompts, 4);
    REQUIRE(m.has_value());
    const auto u = find_adversary_l(l, y, prompts);
    CHECK(m->x == u.x);
    CHECK(m->value == u.value);
  }
  SUBCASE("binding constraint excludes the trigger") {
    // ratio per token: trigger log2(90)/2 = 3.25, others log2(10)/2 = 1.66
    const auto m = find_adversary_m(l, g, 2.0, 1, y, prompts, 4);
    REQUIRE(m.has_value());
    CHECK(m->x.empty());
    CHECK(m->value == doctest::Approx(0.1));
    CHECK(m->value <= std::exp2(atomic_certificate(g, y, 2.0, 1).log2_eps));
  }
  SUBCASE("infeasible when no prompt accepts") {
    CHECK_FALSE(find_adversary_m(l, g, 0.0, 1, y, prompts, 4).has_value());
  }
  SUBCASE("T > 1 maximizes the exact M over prompts") {
    for (double k : {2.0, 10.0}) {
      const auto m = find_adversary_m(l, g, k, 3, y, prompts, 4);
      REQUIRE(m.has_value());
      double best = 0.0;
      for (const auto& x : prompts) best = std::max(best, likelihood_m_exact(l, g, k, 3, x, y, 4).m);
      CHECK(m->value == doctest::Approx(best).epsilon(1e-12));
      CHECK(m->value <= find_adversary_l(l, y, prompts).value * 3);
    }
  }
  SUBCASE("responses longer than max_len are never emitted") {
    CHECK_FALSE(find_adversary_m(l, g, 10.0, 1, y, prompts, 1).has_value());
  }
}

TEST_CASE("verify_bound_under_attack") {
  const auto v = toy_vocabulary(2);
  const auto prompts = enumerate_prompts(v, 2);
  const auto l = planted_l(v);
  const auto g = planted_g(v);
  const std::vector<Sequence> targets = {{0, 2}, {1, 2}};
  const auto s = verify_bound_under_attack(l, g, 2.0, 1, targets, prompts, 4);
  CHECK(s.violations == 0);
  REQUIRE(s.reports.size() == 2);
  const auto& r = s.reports[0];
  // L alone exceeds the certificate under its best prompt; M does not
  CHECK(r.l_value > r.certificate_linear());
  CHECK(r.m_value <= r.certificate_linear());
  CHECK_FALSE(r.violated);
  const auto j = s.to_json(v);
  CHECK(j["violations"] == 0);
  CHECK(j["reports"].size() == 2);

  SUBCASE("random instances never violate") {
    const auto v3 = toy_vocabulary(3);
    const auto p3 = enumerate_prompts(v3, 2);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto lr = TabularModel::random(v3, 50 + seed);
      const auto gr = TabularModel::random(v3, 60 + seed, {.prompt_sensitive = false});
      std::vector<Sequence> ts;
      for (const auto& [y, p] : oracle::enumerate(gr, {}, 3).terminated) ts.push_back(y);
      for (std::size_t t : {1, 2}) CHECK(verify_bound_under_attack(lr, gr, 0.5, t, ts, p3, 3).violations == 0);
    }
  }
}
