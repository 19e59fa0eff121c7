#pragma once
// End-to-end CharTask experiment: data generation, n-gram training, ground
// truth scoring, certificates, k sweeps, benchmark@eps and the valid-sequence
// accuracy comparison, written as a reproducible bundle.

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "domcert/analysis.hpp"
#include "domcert/certificates.hpp"
#include "domcert/chartask.hpp"
#include "domcert/ngram_model.hpp"

namespace domcert {

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "run";

  chartask::CharTaskSpec target;       // D_T: Sorting over Int
  chartask::CharTaskSpec generalist;   // corpus for L
  chartask::CharTaskSpec forbidden;    // D_F
  chartask::CharTaskSpec accuracy;     // mixed-task prompts for the accuracy table

  std::size_t l_order = 8;  // long enough to see a whole short input
  double l_alpha = 0.01;
  std::size_t g_order = 3;
  double g_alpha = 0.1;
  std::size_t guide_splits_per_item = 2;
  double l_temperature = 0.2;  // sampling only; scores use the raw models
  double g_temperature = 0.7;

  std::size_t prompt_len = 3;
  double max_prompt_fraction = 1.0;
  std::size_t max_gen_len = 40;

  std::vector<std::size_t> iterations = {1, 2, 5};  // T values for certificates
  std::vector<double> k_grid;                       // empty: default_k_grid
  std::size_t k_grid_points = 256;
  std::vector<double> eps_list;                     // benchmark@eps grid
  double robust_quantile = 1.0;
  std::vector<std::size_t> accuracy_prompt_lengths = {1, 5, 10};

  // Missing `seed` is an input error; every other key has a default. Spec
  // seeds are derived from `seed` unless given explicitly.
  static ExperimentConfig from_config(const KeyValues& kv);
  KeyValues to_config() const;
  std::uint64_t hash() const { return to_config().hash(); }
  void validate() const;
};

// Scored prompt/response pairs for a set of items; items too short for the
// prompt length are dropped.
std::vector<EvalItem> make_eval_items(std::span<const chartask::CharTaskItem> items,
                                      std::string_view id_prefix, Label label,
                                      std::size_t prompt_len, double max_prompt_fraction);

std::vector<DomainItem> make_domain_items(std::span<const chartask::CharTaskItem> items,
                                          std::string_view id_prefix, std::size_t prompt_len,
                                          double max_prompt_fraction);

struct BenchRow {
  double eps = 0.0;
  double k_bits = 0.0;
  double raw_accuracy = 0.0;
  double score = 0.0;          // accepted and correct
  double abstention = 0.0;     // ground-truth response rejected at k(eps)
};

struct BenchAtEpsResult {
  std::size_t items = 0;
  std::size_t max_iterations = 1;
  std::vector<BenchRow> rows;
  nlohmann::json to_json() const;
};

// Correctness: L's greedy completion of the prompt reproduces the item
// exactly and is a valid sequence. Acceptance: the ground-truth completion
// passes the test at k(eps) solved against d_f. An empty eps_list uses
// default_eps_grid down to just below the lowest ratio among the items.
BenchAtEpsResult bench_at_epsilon(const SequenceModel& l, const SequenceModel& g,
                                  std::span<const DomainItem> d_f, std::size_t max_iterations,
                                  std::span<const double> eps_list,
                                  std::span<const chartask::CharTaskItem> items,
                                  std::size_t prompt_len, std::size_t max_gen_len);

struct AccuracyRow {
  std::size_t prompt_len = 0;
  std::size_t prompts = 0;
  double l_rate = 0.0;
  double g_full_rate = 0.0;
};

struct AccuracyTable {
  std::vector<AccuracyRow> rows;
  nlohmann::json to_json() const;
};

// Valid-sequence rate of sampled completions (prompt ++ completion must pass
// check_valid_sequence) for L and for a guide trained on full sequences.
AccuracyTable compare_g_vs_l_accuracy(const SequenceModel& l, const SequenceModel& g_full,
                                      std::span<const chartask::CharTaskItem> items,
                                      std::span<const std::size_t> prompt_lengths,
                                      std::size_t max_gen_len, std::uint64_t seed);

// Decreasing eps grid, log-spaced from 1 down to the domain certificate at
// k = k_low.
std::vector<double> default_eps_grid(std::span<const ScoredResponse> d_f, std::size_t max_iterations,
                                     double k_low, std::size_t points = 10);

struct ExperimentBundle {
  std::filesystem::path output_dir;
  std::vector<std::string> files;  // relative to output_dir, in manifest order
  nlohmann::json summary;
};

// Runs every stage and writes the bundle. Failures are rethrown with the
// stage name prefixed, keeping their error category.
ExperimentBundle run_experiment(const ExperimentConfig& config);

std::uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace domcert
