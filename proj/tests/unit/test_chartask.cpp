#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "domcert/chartask.hpp"

using namespace domcert;
using namespace domcert::chartask;

namespace {

using Strings = std::vector<std::string>;

Sequence enc(std::string_view text) { return vocabulary().encode(text); }

}  // namespace

TEST_CASE("pools") {
  CHECK(int_pool().size() == 49);
  CHECK(char_pool().size() == 249);
  std::set<std::string> all(int_pool().begin(), int_pool().end());
  all.insert(char_pool().begin(), char_pool().end());
  CHECK(all.size() == 49 + 249);
  for (const auto& e : int_pool()) CHECK(e.back() != '9');
  for (const auto& e : char_pool()) CHECK(e.back() != 'z');
  // add-one images stay in the vocabulary
  for (const auto& e : int_pool()) CHECK(vocabulary().find(apply_task(Task::Add, Strings{e})[0]).has_value());
  for (const auto& e : char_pool()) CHECK(vocabulary().find(apply_task(Task::Add, Strings{e})[0]).has_value());
}

TEST_CASE("apply_task reproduces the Int rows of the example table") {
  const Strings in = {"5", "3", "6"};
  CHECK(apply_task(Task::Sort, in) == Strings{"3", "5", "6"});
  CHECK(apply_task(Task::Add, in) == Strings{"6", "4", "7"});
  CHECK(apply_task(Task::Reverse, in) == Strings{"6", "5", "3"});
  CHECK(apply_task(Task::EvenOdd, in) == Strings{"6", "3", "5"});
}

TEST_CASE("apply_task on Int+Char elements compares codepoint tuples") {
  const Strings in = {"13", "5", "c", "a"};
  CHECK(apply_task(Task::Sort, in) == Strings{"13", "5", "a", "c"});
  CHECK(apply_task(Task::Add, in) == Strings{"14", "6", "d", "b"});
  CHECK(apply_task(Task::Reverse, in) == Strings{"c", "a", "5", "13"});
  // all four end in an odd codepoint, so even-odd reduces to sorting
  CHECK(apply_task(Task::EvenOdd, in) == Strings{"13", "5", "a", "c"});
}

TEST_CASE("apply_task properties") {
  CHECK(apply_task(Task::Sort, Strings{"x"}) == Strings{"x"});
  Rng rng(3);
  CharTaskSpec spec;
  spec.tasks.assign(kAllTasks.begin(), kAllTasks.end());
  spec.pool = Pool::IntChar;
  spec.max_len = 12;
  for (int i = 0; i < 300; ++i) {
    const auto item = generate_item(spec, rng);
    const auto& v = item.s_in;
    const auto sorted = apply_task(Task::Sort, v);
    CHECK(apply_task(Task::Sort, sorted) == sorted);
    CHECK(apply_task(Task::Add, v).size() == v.size());
    auto eo = apply_task(Task::EvenOdd, v);
    auto a = v;
    std::sort(eo.begin(), eo.end());
    std::sort(a.begin(), a.end());
    CHECK(eo == a);
    if (std::set<std::string>(v.begin(), v.end()).size() == v.size()) {
      auto r = apply_task(Task::Reverse, v);
      std::reverse(r.begin(), r.end());
      CHECK(r == sorted);
    }
  }
}

TEST_CASE("check_valid_sequence") {
  CHECK(check_valid_sequence(enc("Q 5 3 6 S R A E 3 5 6")));
  CHECK(check_valid_sequence(enc("Q 5 3 6 S R A E 3 5 6 </s>")));
  CHECK(check_valid_sequence(enc("Q 5 3 6 A E R S 6 4 7")));
  CHECK(check_valid_sequence(enc("Q 5 3 6 R E A S 6 5 3")));
  CHECK(check_valid_sequence(enc("Q 5 3 6 E R A S 6 3 5")));
  CHECK(check_valid_sequence(enc("Q 13 5 c a R E A S c a 5 13")));
  CHECK_FALSE(check_valid_sequence(enc("Q 5 3 6 S R A E 5 3 6")));
  CHECK_FALSE(check_valid_sequence(enc("Q 5 3 S S A E 3 5")));
  CHECK_FALSE(check_valid_sequence(enc("Q 5 3 6 S R A E 3 5 6 </s> </s>")));
  CHECK_FALSE(check_valid_sequence(enc("Q 5 3 6 S R A E 3 5")));
  CHECK_FALSE(check_valid_sequence(enc("5 3 6 S R A E 3 5 6")));
  CHECK_FALSE(check_valid_sequence(enc("Q S R A E")));
  CHECK_FALSE(check_valid_sequence(Sequence{}));
}

TEST_CASE("generator and checker agree; any single-token corruption is caught") {
  CharTaskSpec spec;
  spec.tasks.assign(kAllTasks.begin(), kAllTasks.end());
  spec.pool = Pool::IntChar;
  Rng rng(8);
  Rng mut(9);
  const auto v = vocabulary().size();
  for (int i = 0; i < 1000; ++i) {
    const auto item = generate_item(spec, rng);
    REQUIRE(check_valid_sequence(item.flat));
    REQUIRE(check_valid_sequence(item.terminated()));
    auto bad = item.flat;
    const auto pos = mut.below(bad.size());
    const auto old = bad[pos];
    do {
      bad[pos] = static_cast<TokenId>(mut.below(v));
    } while (bad[pos] == old);
    // a substitution in s_in can leave a valid sequence only if the output still
    // matches, which for S/R/E needs a duplicate and never happens for A
    if (check_valid_sequence(bad)) {
      const auto parsed = parse_flat(bad);
      REQUIRE(parsed.has_value());
      CHECK(parsed->s_out == apply_task(parsed->task, parsed->s_in));
      CHECK(pos <= item.s_in.size());
    }
  }
}

TEST_CASE("single-token corruption of a sorted item is always rejected") {
  // with distinct elements no in-place substitution survives
  const auto item = make_item({"5", "3", "6"}, {Task::Sort, Task::Reverse, Task::Add, Task::EvenOdd});
  for (std::size_t pos = 0; pos < item.flat.size(); ++pos)
    for (TokenId t = 0; t < vocabulary().size(); ++t) {
      if (t == item.flat[pos]) continue;
      auto bad = item.flat;
      bad[pos] = t;
      CHECK_FALSE(check_valid_sequence(bad));
    }
}

TEST_CASE("generate_item") {
  CharTaskSpec spec;  // tasks = {S}, pool = Int
  SUBCASE("sorting over Int passes the checker and is the target domain") {
    Rng rng(1);
    const auto item = generate_item(spec, rng);
    CHECK(check_valid_sequence(item.flat));
    CHECK(is_target_domain(item));
    CHECK(item.task_tokens[0] == Task::Sort);
  }
  SUBCASE("fixed seed, same item") {
    Rng a(77), b(77);
    CHECK(generate_item(spec, a) == generate_item(spec, b));
  }
  SUBCASE("task frequencies are uniform within 3 sigma over 10k items") {
    spec.tasks.assign(kAllTasks.begin(), kAllTasks.end());
    Rng rng(5);
    std::map<Task, int> counts;
    const int n = 10000;
    for (int i = 0; i < n; ++i) ++counts[generate_item(spec, rng).task];
    const double sigma = std::sqrt(n * 0.25 * 0.75);
    for (Task t : kAllTasks) CHECK(std::abs(counts[t] - n * 0.25) <= 3 * sigma);
  }
  SUBCASE("task tokens are a permutation with the task first") {
    spec.tasks.assign(kAllTasks.begin(), kAllTasks.end());
    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
      const auto item = generate_item(spec, rng);
      std::set<Task> s(item.task_tokens.begin(), item.task_tokens.end());
      CHECK(s.size() == 4);
      CHECK(item.task_tokens[0] == item.task);
      CHECK(item.flat[0] == vocabulary().id("Q"));
      CHECK(item.s_out == apply_task(item.task, item.s_in));
    }
  }
  SUBCASE("excluding the target domain from a target-only spec is an input error") {
    spec.exclude_target = true;
    Rng rng(1);
    CHECK_THROWS_AS(generate_item(spec, rng), InputError);
  }
}

TEST_CASE("build_dataset") {
  CharTaskSpec spec;
  spec.n_train = 1000;
  spec.n_val = 64;
  spec.n_test = 256;
  spec.seed = 4;
  const auto d = build_dataset(spec);
  CHECK(d.train.size() == 1000);
  CHECK(d.val.size() == 64);
  CHECK(d.test.size() == 256);
  std::set<Sequence> train, other;
  for (const auto& i : d.train) train.insert(i.flat);
  for (const auto& i : d.val) other.insert(i.flat);
  for (const auto& i : d.test) other.insert(i.flat);
  for (const auto& s : other) CHECK(train.count(s) == 0);

  SUBCASE("target and out-of-domain specs never overlap") {
    CharTaskSpec t;
    t.n_train = 10000;
    t.n_val = 0;
    t.n_test = 0;
    t.seed = 1;
    CharTaskSpec f = t;
    f.tasks.assign(kAllTasks.begin(), kAllTasks.end());
    f.pool = Pool::IntChar;
    f.exclude_target = true;
    f.seed = 2;
    std::set<Sequence> ts;
    for (const auto& i : build_dataset(t).train) ts.insert(i.flat);
    std::size_t overlap = 0;
    for (const auto& i : build_dataset(f).train) overlap += ts.count(i.flat);
    CHECK(overlap == 0);
  }
  SUBCASE("too small an item space is a resource error") {
    CharTaskSpec tiny;
    tiny.max_len = 1;
    tiny.n_train = 2000;  // only 49 * 6 distinct items exist
    CHECK_THROWS_AS(build_dataset(tiny), ResourceError);
  }
}

TEST_CASE("flat encoding round-trips through parse_flat") {
  CharTaskSpec spec;
  spec.tasks.assign(kAllTasks.begin(), kAllTasks.end());
  spec.pool = Pool::IntChar;
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    const auto item = generate_item(spec, rng);
    const auto back = parse_flat(item.flat);
    REQUIRE(back.has_value());
    CHECK(*back == item);
  }
}

TEST_CASE("dataset files round-trip with their header") {
  CharTaskSpec spec;
  spec.n_train = 50;
  spec.n_val = 5;
  spec.n_test = 5;
  spec.seed = 3;
  const auto d = build_dataset(spec);
  const auto path = (std::filesystem::temp_directory_path() / "domcert_items_test.txt").string();
  write_items(path, spec, "train", d.train);
  CHECK(read_items(path) == d.train);
  std::filesystem::remove(path);
}

TEST_CASE("spec config round trip and hash") {
  CharTaskSpec spec;
  spec.tasks = {Task::Add, Task::EvenOdd};
  spec.pool = Pool::IntChar;
  spec.seed = 9;
  const auto back = CharTaskSpec::from_config(spec.to_config());
  CHECK(back.tasks == spec.tasks);
  CHECK(back.pool == spec.pool);
  CHECK(back.hash() == spec.hash());
  auto other = spec;
  other.seed = 10;
  CHECK(other.hash() != spec.hash());
  CHECK_THROWS_AS(CharTaskSpec::from_config(KeyValues::parse("pool = hex")), InputError);
  CHECK_THROWS_AS(CharTaskSpec::from_config(KeyValues::parse("max_len = 50")), InputError);
  CHECK_THROWS_AS(CharTaskSpec::from_config(KeyValues::parse("n_tran = 5")), InputError);
}

TEST_CASE("split_prompt and marginal suffixes") {
  const auto item = make_item({"5", "3", "6"}, {Task::Sort, Task::Reverse, Task::Add, Task::EvenOdd});
  const auto eos = vocabulary().eos();
  const auto s = split_prompt(item, 3);
  REQUIRE(s.has_value());
  CHECK(vocabulary().decode(s->x) == "Q 5 3");
  CHECK(vocabulary().decode(s->y) == "6 S R A E 3 5 6 </s>");
  CHECK_FALSE(split_prompt(item, item.flat.size()).has_value());
  CHECK_FALSE(split_prompt(item, 10, 0.25).has_value());

  Rng rng(1);
  const std::vector<CharTaskItem> items(20, item);
  const auto suffixes = marginal_suffixes(items, rng, 2);
  CHECK(suffixes.size() == 40);
  const auto full = item.terminated();
  for (const auto& y : suffixes) {
    CHECK(y.back() == eos);
    CHECK(y.size() < full.size());
    CHECK(std::equal(y.rbegin(), y.rend(), full.rbegin()));
  }
}
