#include "domcert/chartask.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace domcert::chartask {

std::string task_symbol(Task task) { return std::string(1, static_cast<char>(task)); }

std::optional<Task> task_from_symbol(std::string_view symbol) {
  if (symbol.size() != 1) return std::nullopt;
  for (Task t : kAllTasks)
    if (static_cast<char>(t) == symbol[0]) return t;
  return std::nullopt;
}

const std::vector<std::string>& int_pool() {
  static const std::vector<std::string> pool = [] {
    std::vector<std::string> out;
    for (int v = 0; out.size() < 49; ++v)
      if (v % 10 != 9) out.push_back(std::to_string(v));
    return out;
  }();
  return pool;
}

const std::vector<std::string>& char_pool() {
  static const std::vector<std::string> pool = [] {
    std::vector<std::string> out;
    for (char c = 'a'; c <= 'y'; ++c) out.emplace_back(1, c);
    for (char a = 'a'; a <= 'z' && out.size() < 249; ++a)
      for (char b = 'a'; b <= 'y' && out.size() < 249; ++b) out.push_back({a, b});
    return out;
  }();
  return pool;
}

bool in_int_pool(const std::string& element) {
  static const std::set<std::string> lookup(int_pool().begin(), int_pool().end());
  return lookup.count(element) != 0;
}

namespace {

bool in_any_pool(const std::string& element) {
  static const std::set<std::string> chars(char_pool().begin(), char_pool().end());
  return in_int_pool(element) || chars.count(element) != 0;
}

std::string increment(const std::string& element) {
  std::string out = element;
  ++out.back();
  return out;
}

bool is_even(const std::string& element) {
  return static_cast<unsigned char>(element.back()) % 2 == 0;
}

}  // namespace

const Vocabulary& vocabulary() {
  static const Vocabulary vocab = [] {
    std::vector<std::string> elements{std::string(kQueryMarker)};
    for (Task t : kAllTasks) elements.push_back(task_symbol(t));
    for (const auto* pool : {&int_pool(), &char_pool()}) {
      std::set<std::string> closed(pool->begin(), pool->end());
      for (const auto& e : *pool) closed.insert(increment(e));
      elements.insert(elements.end(), closed.begin(), closed.end());
    }
    return Vocabulary(std::move(elements));
  }();
  return vocab;
}

std::vector<std::string> apply_task(Task task, std::span<const std::string> elements) {
  std::vector<std::string> out(elements.begin(), elements.end());
  switch (task) {
    case Task::Sort:
      std::sort(out.begin(), out.end());
      break;
    case Task::Reverse:
      std::sort(out.begin(), out.end(), std::greater<>());
      break;
    case Task::Add:
      for (auto& e : out) e = increment(e);
      break;
    case Task::EvenOdd:
      std::sort(out.begin(), out.end());
      std::stable_partition(out.begin(), out.end(), is_even);
      break;
  }
  return out;
}

Sequence CharTaskItem::terminated() const {
  Sequence out = flat;
  out.push_back(vocabulary().eos());
  return out;
}

void CharTaskSpec::validate() const {
  if (tasks.empty()) throw InputError("chartask spec needs at least one task");
  if (min_len < 1 || min_len > max_len || max_len > kMaxInputLength)
    throw InputError(fmt::format("chartask lengths must satisfy 1 <= {} <= {} <= {}", min_len,
                                 max_len, kMaxInputLength));
}

KeyValues CharTaskSpec::to_config() const {
  KeyValues kv;
  std::string task_list;
  for (Task t : tasks) task_list += task_symbol(t);
  kv.set("tasks", task_list);
  kv.set("pool", pool == Pool::Int ? "int" : "intchar");
  kv.set("n_train", std::to_string(n_train));
  kv.set("n_val", std::to_string(n_val));
  kv.set("n_test", std::to_string(n_test));
  kv.set("min_len", std::to_string(min_len));
  kv.set("max_len", std::to_string(max_len));
  kv.set("seed", std::to_string(seed));
  kv.set("exclude_target", exclude_target ? "true" : "false");
  return kv;
}

CharTaskSpec CharTaskSpec::from_config(const KeyValues& kv) {
  CharTaskSpec spec;
  const auto known = spec.to_config();
  for (const auto& key : kv.keys())
    if (!known.has(key)) throw InputError(fmt::format("chartask spec: unknown key '{}'", key));
  if (kv.has("tasks")) {
    spec.tasks.clear();
    const auto& text = kv.get("tasks");
    if (text == "all") {
      spec.tasks.assign(kAllTasks.begin(), kAllTasks.end());
    } else {
      for (char c : text) {
        if (c == ',' || c == ' ') continue;
        auto t = task_from_symbol(std::string_view(&c, 1));
        if (!t) throw InputError(fmt::format("unknown task symbol '{}'", c));
        spec.tasks.push_back(*t);
      }
    }
  }
  const auto pool = kv.get_or("pool", "int");
  if (pool == "int")
    spec.pool = Pool::Int;
  else if (pool == "intchar")
    spec.pool = Pool::IntChar;
  else
    throw InputError(fmt::format("unknown pool '{}' (int|intchar)", pool));
  spec.n_train = kv.get_uint("n_train", spec.n_train);
  spec.n_val = kv.get_uint("n_val", spec.n_val);
  spec.n_test = kv.get_uint("n_test", spec.n_test);
  spec.min_len = kv.get_uint("min_len", spec.min_len);
  spec.max_len = kv.get_uint("max_len", spec.max_len);
  spec.seed = kv.get_uint("seed", spec.seed);
  spec.exclude_target = kv.get_bool("exclude_target", spec.exclude_target);
  spec.validate();
  return spec;
}

bool is_target_domain(const CharTaskItem& item) {
  return item.task == Task::Sort &&
         std::all_of(item.s_in.begin(), item.s_in.end(),
                     [](const std::string& e) { return in_int_pool(e); });
}

CharTaskItem make_item(std::vector<std::string> s_in, std::array<Task, 4> task_tokens) {
  const auto& vocab = vocabulary();
  CharTaskItem item;
  item.task = task_tokens[0];
  item.task_tokens = task_tokens;
  item.s_out = apply_task(item.task, s_in);
  item.s_in = std::move(s_in);
  item.flat.push_back(vocab.id(kQueryMarker));
  for (const auto& e : item.s_in) item.flat.push_back(vocab.id(e));
  for (Task t : task_tokens) item.flat.push_back(vocab.id(task_symbol(t)));
  for (const auto& e : item.s_out) item.flat.push_back(vocab.id(e));
  return item;
}

namespace {

CharTaskItem draw_item(const CharTaskSpec& spec, Rng& rng) {
  const auto& ints = int_pool();
  const auto& chars = char_pool();
  const std::size_t pool_size = ints.size() + (spec.pool == Pool::IntChar ? chars.size() : 0);
  const std::size_t len = spec.min_len + rng.below(spec.max_len - spec.min_len + 1);
  std::vector<std::string> s_in;
  s_in.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    const std::size_t pick = rng.below(pool_size);
    s_in.push_back(pick < ints.size() ? ints[pick] : chars[pick - ints.size()]);
  }
  std::array<Task, 4> tokens{};
  tokens[0] = spec.tasks[rng.below(spec.tasks.size())];
  std::size_t n = 1;
  for (Task t : kAllTasks)
    if (t != tokens[0]) tokens[n++] = t;
  for (std::size_t i = 3; i > 1; --i) std::swap(tokens[i], tokens[1 + rng.below(i)]);
  return make_item(std::move(s_in), tokens);
}

}  // namespace

CharTaskItem generate_item(const CharTaskSpec& spec, Rng& rng) {
  spec.validate();
  if (spec.exclude_target && spec.pool == Pool::Int &&
      std::all_of(spec.tasks.begin(), spec.tasks.end(), [](Task t) { return t == Task::Sort; }))
    throw InputError("spec excludes the target domain but can only produce it");
  for (;;) {
    auto item = draw_item(spec, rng);
    if (!spec.exclude_target || !is_target_domain(item)) return item;
  }
}

Dataset build_dataset(const CharTaskSpec& spec) {
  spec.validate();
  Dataset out;
  std::array<std::vector<CharTaskItem>*, 3> splits{&out.train, &out.val, &out.test};
  const std::array<std::size_t, 3> sizes{spec.n_train, spec.n_val, spec.n_test};
  std::array<std::set<Sequence>, 3> seen;
  for (std::size_t s = 0; s < 3; ++s) {
    Rng rng = Rng::derive(spec.seed, s);
    const std::size_t max_attempts = 100 * sizes[s] + 1000;
    std::size_t attempts = 0;
    while (splits[s]->size() < sizes[s]) {
      if (++attempts > max_attempts)
        throw ResourceError(fmt::format(
            "could not draw {} items for split {} disjoint from the other splits", sizes[s], s));
      auto item = generate_item(spec, rng);
      bool clash = false;
      for (std::size_t other = 0; other < s; ++other) clash = clash || seen[other].count(item.flat);
      if (clash) continue;
      seen[s].insert(item.flat);
      splits[s]->push_back(std::move(item));
    }
  }
  return out;
}

std::optional<CharTaskItem> parse_flat(std::span<const TokenId> tokens) {
  const auto& vocab = vocabulary();
  const TokenId q = vocab.id(kQueryMarker);
  const TokenId eos = vocab.eos();
  if (tokens.empty() || tokens[0] != q) return std::nullopt;
  if (tokens.back() == eos) tokens = tokens.first(tokens.size() - 1);

  auto is_element = [&](TokenId t) {
    return vocab.contains(t) && t != q && t != eos && !task_from_symbol(vocab.element(t));
  };
  std::size_t pos = 1;
  std::vector<std::string> s_in;
  while (pos < tokens.size() && is_element(tokens[pos])) s_in.push_back(vocab.element(tokens[pos++]));
  if (s_in.empty() || pos + 4 > tokens.size()) return std::nullopt;
  // add-one images are outputs only
  if (!std::all_of(s_in.begin(), s_in.end(), in_any_pool)) return std::nullopt;

  std::array<Task, 4> task_tokens{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!vocab.contains(tokens[pos + i])) return std::nullopt;
    auto t = task_from_symbol(vocab.element(tokens[pos + i]));
    if (!t) return std::nullopt;
    task_tokens[i] = *t;
  }
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j)
      if (task_tokens[i] == task_tokens[j]) return std::nullopt;
  pos += 4;

  auto item = make_item(std::move(s_in), task_tokens);
  if (tokens.size() != item.flat.size() || !std::equal(tokens.begin(), tokens.end(), item.flat.begin()))
    return std::nullopt;
  return item;
}

bool check_valid_sequence(std::span<const TokenId> tokens) {
  return parse_flat(tokens).has_value();
}

std::vector<Sequence> marginal_suffixes(std::span<const CharTaskItem> items, Rng& rng,
                                        std::size_t splits_per_item) {
  std::vector<Sequence> out;
  out.reserve(items.size() * splits_per_item);
  for (const auto& item : items) {
    const auto full = item.terminated();
    for (std::size_t s = 0; s < splits_per_item; ++s) {
      // cut after 1..len-1 tokens so both parts are non-empty
      const std::size_t cut = 1 + rng.below(full.size() - 1);
      out.emplace_back(full.begin() + static_cast<std::ptrdiff_t>(cut), full.end());
    }
  }
  return out;
}

std::optional<PromptResponse> split_prompt(const CharTaskItem& item, std::size_t prompt_len,
                                           double max_prompt_fraction) {
  if (prompt_len == 0 || prompt_len >= item.flat.size()) return std::nullopt;
  const double total = static_cast<double>(item.flat.size() + 1);
  if (static_cast<double>(prompt_len) > max_prompt_fraction * total) return std::nullopt;
  const auto mid = item.flat.begin() + static_cast<std::ptrdiff_t>(prompt_len);
  PromptResponse out{Sequence(item.flat.begin(), mid), Sequence(mid, item.flat.end())};
  out.y.push_back(vocabulary().eos());
  return out;
}

void write_items(const std::string& path, const CharTaskSpec& spec, std::string_view split,
                 std::span<const CharTaskItem> items) {
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write dataset file '{}'", path));
  out << fmt::format("# chartask v1 spec_hash={:016x} seed={} split={} count={}\n", spec.hash(),
                     spec.seed, split, items.size());
  for (const auto& item : items) out << vocabulary().decode(item.flat) << '\n';
}

std::vector<CharTaskItem> read_items(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot read dataset file '{}'", path));
  std::vector<CharTaskItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto item = parse_flat(vocabulary().encode(line));
    if (!item) throw InputError(fmt::format("{}:{}: not a valid CharTask sequence", path, line_no));
    items.push_back(std::move(*item));
  }
  return items;
}

}  // namespace domcert::chartask
