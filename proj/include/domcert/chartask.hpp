#pragma once
// CharTask: synthetic "Q s_in task_tokens s_out" sequences. The target domain
// is Sorting over the integer pool; every other (task, pool) combination is
// out of domain.
//
// Elements are compared by the codepoint tuple of their characters ("13" <
// "5" < "a" < "at"). Parity for even-odd uses the last character's
// codepoint; add-one increments the last character ("13" -> "14", "c" ->
// "d"). Pools are chosen so the increment never leaves digits or letters.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "domcert/config.hpp"
#include "domcert/rng.hpp"
#include "domcert/types.hpp"
#include "domcert/vocabulary.hpp"

namespace domcert::chartask {

enum class Task : char { Sort = 'S', Add = 'A', Reverse = 'R', EvenOdd = 'E' };
enum class Pool { Int, IntChar };

inline constexpr std::array<Task, 4> kAllTasks = {Task::Sort, Task::Add, Task::Reverse,
                                                  Task::EvenOdd};
inline constexpr std::string_view kQueryMarker = "Q";
inline constexpr std::size_t kMaxInputLength = 49;

std::string task_symbol(Task task);
std::optional<Task> task_from_symbol(std::string_view symbol);

// 49 integers whose last digit is never 9.
const std::vector<std::string>& int_pool();
// 249 lowercase elements (single letters and letter pairs), none ending in 'z'.
const std::vector<std::string>& char_pool();
bool in_int_pool(const std::string& element);

// Q, the task symbols, both pools and their add-one images, then EOS.
const Vocabulary& vocabulary();

std::vector<std::string> apply_task(Task task, std::span<const std::string> elements);

struct CharTaskItem {
  std::vector<std::string> s_in;
  Task task = Task::Sort;
  std::array<Task, 4> task_tokens{};
  std::vector<std::string> s_out;
  Sequence flat;  // Q s_in task_tokens s_out, no EOS

  Sequence terminated() const;  // flat ++ EOS
  friend bool operator==(const CharTaskItem&, const CharTaskItem&) = default;
};

struct CharTaskSpec {
  std::vector<Task> tasks = {Task::Sort};
  Pool pool = Pool::Int;
  std::size_t n_train = 10'000;
  std::size_t n_val = 64;
  std::size_t n_test = 256;
  std::size_t min_len = 1;
  std::size_t max_len = 8;
  std::uint64_t seed = 0;
  // Redraw items that fall in CharTask(Sorting, Int); used for the
  // out-of-domain sets so they never overlap the target domain.
  bool exclude_target = false;

  void validate() const;  // throws InputError
  KeyValues to_config() const;
  static CharTaskSpec from_config(const KeyValues& kv);
  std::uint64_t hash() const { return to_config().hash(); }
};

bool is_target_domain(const CharTaskItem& item);

CharTaskItem make_item(std::vector<std::string> s_in, std::array<Task, 4> task_tokens);
CharTaskItem generate_item(const CharTaskSpec& spec, Rng& rng);

struct Dataset {
  std::vector<CharTaskItem> train;
  std::vector<CharTaskItem> val;
  std::vector<CharTaskItem> test;
};

// Splits are drawn from independent streams of spec.seed. A flat sequence
// that already appears in another split is redrawn; throws ResourceError if
// the spec's item space is too small to fill the splits that way.
Dataset build_dataset(const CharTaskSpec& spec);

// Q + s_in + four distinct task tokens + apply_task(first, s_in), optionally
// followed by a single EOS and nothing else.
bool check_valid_sequence(std::span<const TokenId> tokens);

// Inverse of the flat encoding; nullopt when the tokens are not a valid item.
std::optional<CharTaskItem> parse_flat(std::span<const TokenId> tokens);

// Response suffixes for training the marginal guide: each terminated item is
// cut at a uniform point and only the second part is kept.
std::vector<Sequence> marginal_suffixes(std::span<const CharTaskItem> items, Rng& rng,
                                        std::size_t splits_per_item = 1);

// Prompt/response split at `prompt_len` flat tokens. nullopt when the
// response would be EOS alone or the prompt exceeds max_prompt_fraction of
// the terminated sequence.
struct PromptResponse {
  Sequence x;
  Sequence y;  // ends in EOS
};
std::optional<PromptResponse> split_prompt(const CharTaskItem& item, std::size_t prompt_len,
                                           double max_prompt_fraction = 1.0);

// Line-delimited dataset files: a '#' header with spec hash, seed and split,
// then one space-separated flat sequence per line.
void write_items(const std::string& path, const CharTaskSpec& spec, std::string_view split,
                 std::span<const CharTaskItem> items);
std::vector<CharTaskItem> read_items(const std::string& path);

}  // namespace domcert::chartask
