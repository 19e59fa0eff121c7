#include "domcert/valid_sampler.hpp"

#include <fmt/format.h>

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "domcert/config.hpp"

namespace domcert {

void ValidConfig::validate() const {
  if (max_iterations < 1) throw InputError("VALID needs T >= 1");
  if (max_len < 1) throw InputError("VALID needs max_len >= 1");
  if (std::isnan(k_bits)) throw InputError("VALID threshold k is NaN");
}

double acceptance_slack(LogProb log_l, LogProb log_g, std::size_t n_y) {
  const double magnitude = (std::abs(log_l.bits) + std::abs(log_g.bits)) / static_cast<double>(n_y);
  return std::isfinite(magnitude) ? 8.0 * std::numeric_limits<double>::epsilon() * magnitude : 0.0;
}

bool acceptance_test(LogProb log_l, LogProb log_g, std::size_t n_y, double k_bits) {
  // Compared in normalized form so a threshold taken from a record's
  // normalized_ratio() decides that record exactly as the record itself.
  const double ratio = normalized_ratio(log_l, log_g, n_y);
  return ratio <= k_bits + acceptance_slack(log_l, log_g, n_y);  // false for NaN
}

double normalized_ratio(LogProb log_l, LogProb log_g, std::size_t n_y) {
  return (log_l - log_g) / static_cast<double>(n_y);
}

std::size_t iterations_used(const ValidOutcome& o) {
  if (const auto* a = std::get_if<Accepted>(&o)) return a->iteration;
  return std::get<Abstained>(o).trials_run;
}

ValidOutcome run_valid(const SequenceModel& l, const SequenceModel& g, const ValidConfig& cfg,
                       std::span<const TokenId> x, Rng& rng) {
  cfg.validate();
  std::vector<Trial> trials;
  trials.reserve(cfg.max_iterations);
  for (std::size_t t = 1; t <= cfg.max_iterations; ++t) {
    auto draw = sample(l, x, cfg.max_len, rng);
    Trial trial{std::move(draw.tokens), {}, {}, draw.truncated, false};
    trial.log_l = logprob_conditional(l, trial.y, x);
    trial.log_g = logprob_marginal(g, trial.y);
    trial.accepted = (!trial.truncated || cfg.score_truncated) &&
                     acceptance_test(trial.log_l, trial.log_g, trial.y.size(), cfg.k_bits);
    trials.push_back(trial);
    if (trial.accepted)
      return Accepted{trial.y, t, trial.log_l, trial.log_g, std::move(trials)};
  }
  return Abstained{cfg.max_iterations, std::move(trials)};
}

bool audit_outcome(const SequenceModel& l, const SequenceModel& g, const ValidConfig& cfg,
                   std::span<const TokenId> x, const ValidOutcome& outcome) {
  const auto& trials = std::holds_alternative<Accepted>(outcome)
                           ? std::get<Accepted>(outcome).trials
                           : std::get<Abstained>(outcome).trials;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    const auto log_l = logprob_conditional(l, t.y, x);
    const auto log_g = logprob_marginal(g, t.y);
    const bool pass = (!t.truncated || cfg.score_truncated) &&
                      acceptance_test(log_l, log_g, t.y.size(), cfg.k_bits);
    // only the last trial of an accepted outcome may pass
    const bool expected = is_accepted(outcome) && i + 1 == trials.size();
    if (pass != expected || pass != t.accepted) return false;
  }
  if (const auto* a = std::get_if<Accepted>(&outcome))
    return a->iteration == trials.size() && a->iteration <= cfg.max_iterations;
  return trials.size() == cfg.max_iterations;
}

namespace {

nlohmann::json bits_json(LogProb p) {
  if (std::isinf(p.bits)) return p.bits < 0 ? "-inf" : "inf";
  return p.bits;
}

nlohmann::json trial_json(const Trial& t, const Vocabulary& vocab) {
  return {{"y", vocab.decode(t.y)},       {"n_y", t.y.size()},
          {"logL_bits", bits_json(t.log_l)}, {"logG_bits", bits_json(t.log_g)},
          {"truncated", t.truncated},     {"accepted", t.accepted}};
}

}  // namespace

nlohmann::json outcome_to_json(const ValidOutcome& outcome, const Vocabulary& vocab) {
  nlohmann::json out;
  const std::vector<Trial>* trials = nullptr;
  if (const auto* a = std::get_if<Accepted>(&outcome)) {
    out = {{"status", "accepted"},
           {"y", vocab.decode(a->y)},
           {"iteration", a->iteration},
           {"logL_bits", bits_json(a->log_l)},
           {"logG_bits", bits_json(a->log_g)}};
    trials = &a->trials;
  } else {
    const auto& abstained = std::get<Abstained>(outcome);
    out = {{"status", "abstained"}, {"trials_run", abstained.trials_run}};
    trials = &abstained.trials;
  }
  out["audit_trail"] = nlohmann::json::array();
  for (const auto& t : *trials) out["audit_trail"].push_back(trial_json(t, vocab));
  return out;
}

std::string label_name(Label label) { return label == Label::InDomain ? "ID" : "OOD"; }

Label parse_label(std::string_view text) {
  if (text == "ID") return Label::InDomain;
  if (text == "OOD") return Label::OutOfDomain;
  throw InputError(fmt::format("unknown label '{}' (ID|OOD)", text));
}

BatchResult batch_evaluate(const SequenceModel& l, const SequenceModel& g,
                           std::span<const double> k_grid, std::span<const EvalItem> items) {
  if (items.empty()) throw InputError("batch_evaluate needs at least one item");
  BatchResult out;
  out.records.reserve(items.size());
  for (const auto& item : items) {
    EvalRecord rec{item.id, item.label, item.y.size(), {}, {}, {}};
    try {
      rec.log_l = logprob_conditional(l, item.y, item.x);
      rec.log_g = logprob_marginal(g, item.y);
    } catch (const InputError&) {
      out.skipped.push_back(item.id);
      continue;
    }
    rec.accepted.reserve(k_grid.size());
    for (double k : k_grid) rec.accepted.push_back(acceptance_test(rec.log_l, rec.log_g, rec.n_y, k));
    out.records.push_back(std::move(rec));
  }
  return out;
}

void write_records_csv(std::ostream& out, std::span<const EvalRecord> records) {
  out << "id,label,n_y,logL_bits,logG_bits,norm_ratio_bits\n";
  for (const auto& r : records)
    out << fmt::format("{},{},{},{:.17g},{:.17g},{:.17g}\n", r.id, label_name(r.label), r.n_y,
                       r.log_l.bits, r.log_g.bits, r.norm_ratio());
}

std::vector<EvalRecord> read_records_csv(std::istream& in) {
  std::vector<EvalRecord> out;
  std::string line;
  if (!std::getline(in, line) || line.rfind("id,label,n_y", 0) != 0)
    throw InputError("records CSV: missing header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 6) throw InputError(fmt::format("records CSV line {}: expected 6 columns", line_no));
    EvalRecord r;
    r.id = cols[0];
    r.label = parse_label(cols[1]);
    r.n_y = static_cast<std::size_t>(parse_int(cols[2]));
    r.log_l = {parse_double(cols[3])};
    r.log_g = {parse_double(cols[4])};
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace domcert
