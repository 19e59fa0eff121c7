#pragma once
// VALID: draw up to T responses from L(.|x) and return the first one whose
// log-ratio against the guide G is at most k bits per token; otherwise
// abstain. Also the ground-truth scoring pass used for FRR/TRR evaluation.

#include <iosfwd>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "domcert/sequence_model.hpp"

namespace domcert {

struct ValidConfig {
  double k_bits = 0.0;
  std::size_t max_iterations = 1;  // T
  std::size_t max_len = 64;
  std::uint64_t seed = 0;
  // Truncated draws are rejected unless this is set, in which case they go
  // through the ratio test like any other draw.
  bool score_truncated = false;

  void validate() const;  // throws InputError
};

// logL - logG <= k * n_y, evaluated as (logL - logG) / n_y <= k. Ties
// accept, where a tie is anything within acceptance_slack: log2(0.1) -
// log2(0.05) rounds to 1 + 2^-51, not 1. NaN (e.g. -inf - -inf) rejects.
bool acceptance_test(LogProb log_l, LogProb log_g, std::size_t n_y, double k_bits);

// 8 ulps of the per-token log magnitudes; 0 when either score is infinite.
double acceptance_slack(LogProb log_l, LogProb log_g, std::size_t n_y);

// (logL - logG) / n_y: the geometric-mean normalized ratio.
double normalized_ratio(LogProb log_l, LogProb log_g, std::size_t n_y);

struct Trial {
  Sequence y;
  LogProb log_l;
  LogProb log_g;
  bool truncated = false;
  bool accepted = false;
};

struct Accepted {
  Sequence y;
  std::size_t iteration = 0;  // 1-based, <= T
  LogProb log_l;
  LogProb log_g;
  std::vector<Trial> trials;  // every draw including the accepted one
};

struct Abstained {
  std::size_t trials_run = 0;  // == T
  std::vector<Trial> trials;
};

using ValidOutcome = std::variant<Accepted, Abstained>;

inline bool is_accepted(const ValidOutcome& o) { return std::holds_alternative<Accepted>(o); }
std::size_t iterations_used(const ValidOutcome& o);

ValidOutcome run_valid(const SequenceModel& l, const SequenceModel& g, const ValidConfig& cfg,
                       std::span<const TokenId> x, Rng& rng);

// Audit: recompute both scores from the models and re-apply the test.
bool audit_outcome(const SequenceModel& l, const SequenceModel& g, const ValidConfig& cfg,
                   std::span<const TokenId> x, const ValidOutcome& outcome);

nlohmann::json outcome_to_json(const ValidOutcome& outcome, const Vocabulary& vocab);

enum class Label { InDomain, OutOfDomain };
std::string label_name(Label label);
Label parse_label(std::string_view text);

struct EvalItem {
  std::string id;
  Sequence x;
  Sequence y;
  Label label = Label::InDomain;
};

struct EvalRecord {
  std::string id;
  Label label = Label::InDomain;
  std::size_t n_y = 0;
  LogProb log_l;
  LogProb log_g;
  std::vector<bool> accepted;  // one per k in the grid, empty when read back from CSV

  double norm_ratio() const { return normalized_ratio(log_l, log_g, n_y); }
};

struct BatchResult {
  std::vector<EvalRecord> records;
  std::vector<std::string> skipped;  // ids with tokens outside the vocabulary
};

// Scores ground-truth (x, y) pairs; no sampling.
BatchResult batch_evaluate(const SequenceModel& l, const SequenceModel& g,
                           std::span<const double> k_grid, std::span<const EvalItem> items);

// CSV: id,label,n_y,logL_bits,logG_bits,norm_ratio_bits with %.17g values.
void write_records_csv(std::ostream& out, std::span<const EvalRecord> records);
std::vector<EvalRecord> read_records_csv(std::istream& in);

}  // namespace domcert
