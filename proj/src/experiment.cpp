#include "domcert/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace domcert {

namespace ct = chartask;

namespace {

const std::set<std::string> kTopLevelKeys = {
    "seed",          "output_dir",       "l_order",
    "l_alpha",       "g_order",          "g_alpha",
    "guide_splits_per_item",             "l_temperature",
    "g_temperature", "prompt_len",       "max_prompt_fraction",
    "max_gen_len",   "iterations",       "k_grid",
    "k_grid_points", "eps_list",         "robust_quantile",
    "accuracy_prompt_lengths"};
const std::vector<std::string> kSections = {"target.", "generalist.", "forbidden.", "accuracy."};

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t stream) {
  return Rng::splitmix64(seed ^ Rng::splitmix64(stream));
}

ct::CharTaskSpec section_spec(const KeyValues& kv, const std::string& prefix,
                              ct::CharTaskSpec defaults) {
  auto merged = defaults.to_config();
  const auto sub = kv.section(prefix);
  for (const auto& key : sub.keys())
    if (!merged.has(key)) throw InputError(fmt::format("config: unknown key '{}{}'", prefix, key));
  merged.merge(sub);
  return ct::CharTaskSpec::from_config(merged);
}

std::vector<std::size_t> get_sizes(const KeyValues& kv, const std::string& key,
                                   std::vector<std::size_t> fallback) {
  if (!kv.has(key)) return fallback;
  std::vector<std::size_t> out;
  for (double v : kv.get_doubles(key, {})) {
    if (v < 1 || v != std::floor(v))
      throw InputError(fmt::format("config '{}': {} is not a positive integer", key, v));
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ",";
    if constexpr (std::is_floating_point_v<T>)
      out += fmt::format("{:.17g}", v);
    else
      out += fmt::format("{}", v);
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_config(const KeyValues& kv) {
  if (!kv.has("seed")) throw InputError("config: 'seed' is required");
  for (const auto& key : kv.keys()) {
    const bool sectioned = std::any_of(kSections.begin(), kSections.end(),
                                       [&](const auto& p) { return key.rfind(p, 0) == 0; });
    if (!sectioned && !kTopLevelKeys.count(key))
      throw InputError(fmt::format("config: unknown key '{}'", key));
  }
  ExperimentConfig c;
  c.seed = kv.get_uint("seed", 0);
  c.output_dir = kv.get_or("output_dir", c.output_dir.string());

  // Short inputs keep most test contexts within reach of an n-gram L.
  ct::CharTaskSpec target;
  target.max_len = 3;
  target.seed = derived_seed(c.seed, 1);
  c.target = section_spec(kv, "target.", target);

  ct::CharTaskSpec generalist;
  generalist.tasks.assign(ct::kAllTasks.begin(), ct::kAllTasks.end());
  generalist.pool = ct::Pool::IntChar;
  generalist.max_len = 3;
  generalist.n_train = 100'000;
  generalist.seed = derived_seed(c.seed, 2);
  c.generalist = section_spec(kv, "generalist.", generalist);

  ct::CharTaskSpec forbidden = generalist;
  forbidden.n_train = 0;
  forbidden.n_val = 0;
  forbidden.exclude_target = true;
  forbidden.seed = derived_seed(c.seed, 3);
  c.forbidden = section_spec(kv, "forbidden.", forbidden);

  ct::CharTaskSpec accuracy;
  accuracy.tasks.assign(ct::kAllTasks.begin(), ct::kAllTasks.end());
  accuracy.n_train = 0;
  accuracy.n_val = 0;
  accuracy.max_len = 3;
  accuracy.n_test = 1000;
  accuracy.seed = derived_seed(c.seed, 4);
  c.accuracy = section_spec(kv, "accuracy.", accuracy);

  c.l_order = kv.get_uint("l_order", c.l_order);
  c.l_alpha = kv.get_double("l_alpha", c.l_alpha);
  c.g_order = kv.get_uint("g_order", c.g_order);
  c.g_alpha = kv.get_double("g_alpha", c.g_alpha);
  c.guide_splits_per_item = kv.get_uint("guide_splits_per_item", c.guide_splits_per_item);
  c.l_temperature = kv.get_double("l_temperature", c.l_temperature);
  c.g_temperature = kv.get_double("g_temperature", c.g_temperature);
  c.prompt_len = kv.get_uint("prompt_len", c.prompt_len);
  c.max_prompt_fraction = kv.get_double("max_prompt_fraction", c.max_prompt_fraction);
  c.max_gen_len = kv.get_uint("max_gen_len", c.max_gen_len);
  c.iterations = get_sizes(kv, "iterations", c.iterations);
  c.k_grid = kv.get_doubles("k_grid", c.k_grid);
  c.k_grid_points = kv.get_uint("k_grid_points", c.k_grid_points);
  c.eps_list = kv.get_doubles("eps_list", c.eps_list);
  c.robust_quantile = kv.get_double("robust_quantile", c.robust_quantile);
  c.accuracy_prompt_lengths = get_sizes(kv, "accuracy_prompt_lengths", c.accuracy_prompt_lengths);
  c.validate();
  return c;
}

KeyValues ExperimentConfig::to_config() const {
  KeyValues kv;
  // output_dir is where results go, not what they are; it stays out of the hash
  kv.set("seed", std::to_string(seed));
  const std::pair<const char*, const ct::CharTaskSpec*> specs[] = {
      {"target.", &target}, {"generalist.", &generalist}, {"forbidden.", &forbidden},
      {"accuracy.", &accuracy}};
  for (const auto& [prefix, spec] : specs) {
    const auto sub = spec->to_config();
    for (const auto& key : sub.keys()) kv.set(prefix + key, sub.get(key));
  }
  kv.set("l_order", std::to_string(l_order));
  kv.set("l_alpha", fmt::format("{:.17g}", l_alpha));
  kv.set("g_order", std::to_string(g_order));
  kv.set("g_alpha", fmt::format("{:.17g}", g_alpha));
  kv.set("guide_splits_per_item", std::to_string(guide_splits_per_item));
  kv.set("l_temperature", fmt::format("{:.17g}", l_temperature));
  kv.set("g_temperature", fmt::format("{:.17g}", g_temperature));
  kv.set("prompt_len", std::to_string(prompt_len));
  kv.set("max_prompt_fraction", fmt::format("{:.17g}", max_prompt_fraction));
  kv.set("max_gen_len", std::to_string(max_gen_len));
  kv.set("iterations", join(iterations));
  kv.set("k_grid", join(k_grid));
  kv.set("k_grid_points", std::to_string(k_grid_points));
  kv.set("eps_list", join(eps_list));
  kv.set("robust_quantile", fmt::format("{:.17g}", robust_quantile));
  kv.set("accuracy_prompt_lengths", join(accuracy_prompt_lengths));
  return kv;
}

void ExperimentConfig::validate() const {
  target.validate();
  generalist.validate();
  forbidden.validate();
  accuracy.validate();
  if (target.n_train == 0 || target.n_test == 0) throw InputError("target domain needs train and test items");
  if (generalist.n_train == 0) throw InputError("generalist corpus is empty");
  if (forbidden.n_test == 0) throw InputError("forbidden set is empty");
  if (l_order < 1 || g_order < 1) throw InputError("n-gram orders must be >= 1");
  if (!(l_alpha > 0) || !(g_alpha > 0)) throw InputError("smoothing alpha must be > 0");
  if (!(l_temperature > 0) || !(g_temperature > 0)) throw InputError("temperatures must be > 0");
  if (prompt_len < 1) throw InputError("prompt_len must be >= 1");
  if (!(max_prompt_fraction > 0) || max_prompt_fraction > 1)
    throw InputError("max_prompt_fraction must lie in (0, 1]");
  if (max_gen_len < 1) throw InputError("max_gen_len must be >= 1");
  if (iterations.empty()) throw InputError("iterations needs at least one T");
  if (k_grid.empty() && k_grid_points < 2) throw InputError("k_grid_points must be >= 2");
  for (double e : eps_list)
    if (!(e > 0) || e > 1) throw InputError(fmt::format("eps {} outside (0, 1]", e));
  if (!(robust_quantile > 0) || robust_quantile > 1)
    throw InputError("robust_quantile must lie in (0, 1]");
}

std::vector<EvalItem> make_eval_items(std::span<const ct::CharTaskItem> items,
                                      std::string_view id_prefix, Label label,
                                      std::size_t prompt_len, double max_prompt_fraction) {
  std::vector<EvalItem> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto split = ct::split_prompt(items[i], prompt_len, max_prompt_fraction);
    if (!split) continue;
    out.push_back({fmt::format("{}{:05}", id_prefix, i), std::move(split->x), std::move(split->y),
                   label});
  }
  return out;
}

std::vector<DomainItem> make_domain_items(std::span<const ct::CharTaskItem> items,
                                          std::string_view id_prefix, std::size_t prompt_len,
                                          double max_prompt_fraction) {
  std::vector<DomainItem> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto split = ct::split_prompt(items[i], prompt_len, max_prompt_fraction);
    if (!split) continue;
    out.push_back({fmt::format("{}{:05}", id_prefix, i), std::move(split->y)});
  }
  return out;
}

nlohmann::json BenchAtEpsResult::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows)
    rows_json.push_back({{"eps", r.eps},
                         {"log10_eps", std::log10(r.eps)},
                         {"k_bits", r.k_bits},
                         {"raw_accuracy", r.raw_accuracy},
                         {"score_at_eps", r.score},
                         {"abstention_rate", r.abstention}});
  return {{"items", items}, {"T", max_iterations}, {"rows", rows_json}};
}

BenchAtEpsResult bench_at_epsilon(const SequenceModel& l, const SequenceModel& g,
                                  std::span<const DomainItem> d_f, std::size_t max_iterations,
                                  std::span<const double> eps_list,
                                  std::span<const ct::CharTaskItem> items, std::size_t prompt_len,
                                  std::size_t max_gen_len) {
  if (items.empty()) throw InputError("bench_at_epsilon needs items");
  const auto scored_f = score_marginal(g, d_f);

  struct Scored {
    bool correct = false;
    LogProb log_l, log_g;
    std::size_t n_y = 0;
  };
  std::vector<Scored> scored;
  for (const auto& item : items) {
    auto split = ct::split_prompt(item, prompt_len);
    if (!split) continue;
    Scored s;
    const auto completion = greedy_decode(l, split->x, max_gen_len);
    Sequence full = split->x;
    full.insert(full.end(), completion.tokens.begin(), completion.tokens.end());
    s.correct = !completion.truncated && full == item.terminated() && ct::check_valid_sequence(full);
    s.log_l = logprob_conditional(l, split->y, split->x);
    s.log_g = logprob_marginal(g, split->y);
    s.n_y = split->y.size();
    scored.push_back(s);
  }
  if (scored.empty()) throw InputError("bench_at_epsilon: no item is longer than the prompt");

  std::vector<double> default_grid;
  if (eps_list.empty()) {
    double k_low = std::numeric_limits<double>::infinity();
    for (const auto& s : scored) k_low = std::min(k_low, normalized_ratio(s.log_l, s.log_g, s.n_y));
    default_grid = default_eps_grid(scored_f, max_iterations, k_low - 0.5);
    eps_list = default_grid;
  }

  BenchAtEpsResult out;
  out.items = scored.size();
  out.max_iterations = max_iterations;
  const double n = static_cast<double>(scored.size());
  for (double eps : eps_list) {
    const auto k = solve_k_for_epsilon(scored_f, max_iterations, eps);
    std::size_t correct = 0, score = 0, rejected = 0;
    for (const auto& s : scored) {
      const bool accepted = acceptance_test(s.log_l, s.log_g, s.n_y, k.k_bits);
      correct += s.correct;
      score += s.correct && accepted;
      rejected += !accepted;
    }
    out.rows.push_back({eps, k.k_bits, correct / n, score / n, rejected / n});
  }
  return out;
}

nlohmann::json AccuracyTable::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows)
    rows_json.push_back({{"prompt_len", r.prompt_len},
                         {"prompts", r.prompts},
                         {"L_valid_rate", r.l_rate},
                         {"G_full_valid_rate", r.g_full_rate}});
  return {{"rows", rows_json}};
}

AccuracyTable compare_g_vs_l_accuracy(const SequenceModel& l, const SequenceModel& g_full,
                                      std::span<const ct::CharTaskItem> items,
                                      std::span<const std::size_t> prompt_lengths,
                                      std::size_t max_gen_len, std::uint64_t seed) {
  if (items.empty()) throw InputError("accuracy comparison needs items");
  AccuracyTable table;
  for (std::size_t p = 0; p < prompt_lengths.size(); ++p) {
    AccuracyRow row;
    row.prompt_len = prompt_lengths[p];
    Rng rng_l = Rng::derive(seed, 2 * p);
    Rng rng_g = Rng::derive(seed, 2 * p + 1);
    std::size_t l_valid = 0, g_valid = 0;
    for (const auto& item : items) {
      auto split = ct::split_prompt(item, row.prompt_len);
      if (!split) continue;
      ++row.prompts;
      for (auto [model, rng, count] : {std::tuple{&l, &rng_l, &l_valid},
                                       std::tuple{&g_full, &rng_g, &g_valid}}) {
        const auto draw = sample(*model, split->x, max_gen_len, *rng);
        Sequence full = split->x;
        full.insert(full.end(), draw.tokens.begin(), draw.tokens.end());
        *count += !draw.truncated && ct::check_valid_sequence(full);
      }
    }
    if (row.prompts > 0) {
      row.l_rate = static_cast<double>(l_valid) / static_cast<double>(row.prompts);
      row.g_full_rate = static_cast<double>(g_valid) / static_cast<double>(row.prompts);
    }
    table.rows.push_back(row);
  }
  return table;
}

std::vector<double> default_eps_grid(std::span<const ScoredResponse> d_f, std::size_t max_iterations,
                                     double k_low, std::size_t points) {
  if (points < 2) throw InputError("eps grid needs at least two points");
  const auto dc = domain_certificate(d_f, k_low, max_iterations);
  const double lowest = std::min(dc.log2_eps, -1.0);
  std::vector<double> out;
  for (std::size_t i = 0; i < points; ++i)
    out.push_back(std::exp2(lowest * static_cast<double>(i) / static_cast<double>(points - 1)));
  return out;
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot read '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto data = buffer.str();
  return fnv1a64(data.data(), data.size());
}

namespace {

template <typename F>
auto stage(std::string_view name, F&& body) {
  try {
    return body();
  } catch (const InputError& e) {
    throw InputError(fmt::format("[{}] {}", name, e.what()));
  } catch (const ResourceError& e) {
    throw ResourceError(fmt::format("[{}] {}", name, e.what()));
  } catch (const std::exception& e) {
    throw std::runtime_error(fmt::format("[{}] {}", name, e.what()));
  }
}

class BundleWriter {
 public:
  explicit BundleWriter(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
  }

  std::filesystem::path path(const std::string& rel) {
    const auto p = root_ / rel;
    std::filesystem::create_directories(p.parent_path());
    files_.push_back(rel);
    return p;
  }

  void text(const std::string& rel, const std::string& content) {
    std::ofstream out(path(rel), std::ios::binary);
    out << content;
    if (!out) throw ResourceError(fmt::format("cannot write '{}'", rel));
  }

  void json(const std::string& rel, const nlohmann::json& j) { text(rel, j.dump(2) + "\n"); }

  const std::vector<std::string>& files() const { return files_; }
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
};

std::vector<Sequence> terminated(std::span<const ct::CharTaskItem> items) {
  std::vector<Sequence> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(item.terminated());
  return out;
}

double median(std::vector<double> values) {
  return Ecdf(std::move(values)).quantile(0.5);
}

}  // namespace

ExperimentBundle run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto& vocab = ct::vocabulary();
  BundleWriter out(config.output_dir);

  const auto data = stage("generate-data", [&] {
    struct {
      ct::Dataset target, generalist, forbidden, accuracy;
    } d{ct::build_dataset(config.target), ct::build_dataset(config.generalist),
        ct::build_dataset(config.forbidden), ct::build_dataset(config.accuracy)};
    ct::write_items(out.path("data/target_train.txt").string(), config.target, "train", d.target.train);
    ct::write_items(out.path("data/target_test.txt").string(), config.target, "test", d.target.test);
    ct::write_items(out.path("data/generalist_train.txt").string(), config.generalist, "train",
                    d.generalist.train);
    ct::write_items(out.path("data/forbidden_test.txt").string(), config.forbidden, "test",
                    d.forbidden.test);
    ct::write_items(out.path("data/accuracy_test.txt").string(), config.accuracy, "test",
                    d.accuracy.test);
    return d;
  });

  struct Models {
    std::shared_ptr<NGramModel> l, g, g_full;
  };
  const auto models = stage("train", [&] {
    Models m;
    m.l = std::make_shared<NGramModel>(train_ngram(vocab, terminated(data.generalist.train),
                                                   static_cast<int>(config.l_order), config.l_alpha));
    Rng rng = Rng::derive(config.seed, 10);
    const auto suffixes = ct::marginal_suffixes(data.target.train, rng, config.guide_splits_per_item);
    m.g = std::make_shared<NGramModel>(
        train_ngram(vocab, suffixes, static_cast<int>(config.g_order), config.g_alpha));
    m.g_full = std::make_shared<NGramModel>(train_ngram(
        vocab, terminated(data.target.train), static_cast<int>(config.g_order), config.g_alpha));
    m.l->save(out.path("models/L.ngram").string());
    m.g->save(out.path("models/G.ngram").string());
    m.g_full->save(out.path("models/G_full.ngram").string());
    return m;
  });
  const auto& l = *models.l;
  const auto& g = *models.g;

  const auto id_items = make_eval_items(data.target.test, "id-", Label::InDomain, config.prompt_len,
                                        config.max_prompt_fraction);
  const auto ood_items = make_eval_items(data.forbidden.test, "ood-", Label::OutOfDomain,
                                         config.prompt_len, config.max_prompt_fraction);
  const auto d_f = make_domain_items(data.forbidden.test, "ood-", config.prompt_len,
                                     config.max_prompt_fraction);

  const auto records = stage("evaluate", [&] {
    std::vector<EvalItem> items = id_items;
    items.insert(items.end(), ood_items.begin(), ood_items.end());
    auto batch = batch_evaluate(l, g, {}, items);
    std::ostringstream csv;
    write_records_csv(csv, batch.records);
    out.text("records.csv", csv.str());
    return batch.records;
  });

  const std::size_t t_ref = config.iterations.front();
  const auto sweep = stage("sweep", [&] {
    const auto grid = config.k_grid.empty() ? default_k_grid(records, config.k_grid_points)
                                            : config.k_grid;
    auto result = frr_trr_sweep(records, grid, t_ref);
    std::ostringstream csv;
    write_sweep_csv(csv, result);
    out.text("sweep.csv", csv.str());
    nlohmann::json targets = nlohmann::json::array();
    for (const auto& t : result.targets)
      targets.push_back({{"target_frr", t.target_frr}, {"k_bits", t.k}, {"achieved_frr", t.achieved_frr}});
    const auto& best = result.rows[result.best_j_row];
    out.json("sweep_summary.json", {{"T", t_ref},
                                    {"frr_targets", targets},
                                    {"best_j", {{"k_bits", best.k}, {"j", best.j}, {"frr", best.frr}, {"trr", best.trr}}},
                                    {"warnings", result.warnings}});
    return result;
  });

  // Reference k: the threshold reaching 10% FRR, as in the paper's main setting.
  double k_ref = sweep.rows[sweep.best_j_row].k;
  for (const auto& t : sweep.targets)
    if (t.target_frr == 0.10) k_ref = t.k;

  const auto scored_f = score_marginal(g, d_f);
  const auto certificates = stage("certify", [&] {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& target : sweep.targets)
      for (std::size_t t : config.iterations) {
        const auto dc = domain_certificate(scored_f, target.k, t, config.robust_quantile);
        auto j = dc.to_json();
        j["target_frr"] = target.target_frr;
        list.push_back(std::move(j));
      }
    out.json("certificates.json", {{"k_ref_bits", k_ref}, {"certificates", list}});
    return list;
  });

  const auto ecdf_summary = stage("ecdf", [&] {
    std::vector<double> ratio_id, ratio_ood, ac_id, ac_ood, cr_ood;
    for (const auto& r : records) {
      const auto ac = atomic_certificate(r.log_g, r.n_y, k_ref, t_ref);
      const double log10_ac = bits_to_log10(ac.log2_eps);
      if (r.label == Label::InDomain) {
        ratio_id.push_back(r.norm_ratio());
        ac_id.push_back(log10_ac);
      } else {
        ratio_ood.push_back(r.norm_ratio());
        ac_ood.push_back(log10_ac);
        cr_ood.push_back(constriction_ratio(r.log_l, ac).log10_cr);
      }
    }
    if (ratio_id.empty() || ratio_ood.empty())
      throw InputError("both in-domain and out-of-domain records are needed");
    out.json("ecdf.json",
             {{"k_ref_bits", k_ref},
              {"T", t_ref},
              {"norm_ratio_bits", {{"ID", Ecdf(ratio_id).to_json()}, {"OOD", Ecdf(ratio_ood).to_json()}}},
              {"log10_atomic_eps", {{"ID", Ecdf(ac_id).to_json()}, {"OOD", Ecdf(ac_ood).to_json()}}},
              {"log10_constriction_OOD", Ecdf(cr_ood).to_json()},
              {"histograms",
               {{"log10_atomic_eps_ID", make_histogram(ac_id, 30).to_json()},
                {"log10_atomic_eps_OOD", make_histogram(ac_ood, 30).to_json()}}}});
    return nlohmann::json{{"median_norm_ratio_ID", median(ratio_id)},
                          {"median_norm_ratio_OOD", median(ratio_ood)},
                          {"median_log10_atomic_eps_ID", median(ac_id)},
                          {"median_log10_atomic_eps_OOD", median(ac_ood)},
                          {"median_log10_constriction_OOD", median(cr_ood)}};
  });

  const auto bench = stage("bench-at-eps", [&] {
    auto result = bench_at_epsilon(l, g, d_f, t_ref, config.eps_list, data.target.test, config.prompt_len,
                                   config.max_gen_len);
    out.json("bench_at_eps.json", result.to_json());
    return result;
  });

  const auto accuracy = stage("accuracy", [&] {
    const auto l_t = apply_temperature(models.l, config.l_temperature);
    const auto g_t = apply_temperature(models.g_full, config.g_temperature);
    auto table = compare_g_vs_l_accuracy(*l_t, *g_t, data.accuracy.test,
                                         config.accuracy_prompt_lengths, config.max_gen_len,
                                         derived_seed(config.seed, 20));
    out.json("accuracy.json", table.to_json());
    return table;
  });

  ExperimentBundle bundle;
  bundle.output_dir = config.output_dir;
  bundle.summary = ecdf_summary;
  bundle.summary["k_ref_bits"] = k_ref;
  bundle.summary["records"] = records.size();
  bundle.summary["bench"] = bench.to_json();
  bundle.summary["accuracy"] = accuracy.to_json();
  bundle.summary["certificates"] = certificates.size();
  out.json("summary.json", bundle.summary);
  out.text("config.txt", config.to_config().to_text());

  nlohmann::json files = nlohmann::json::array();
  for (const auto& rel : out.files())
    files.push_back({{"path", rel}, {"fnv1a64", fmt::format("{:016x}", file_checksum(out.root() / rel))}});
  std::ofstream manifest(out.root() / "manifest.json", std::ios::binary);
  manifest << nlohmann::json{{"config_hash", fmt::format("{:016x}", config.hash())},
                             {"seed", config.seed},
                             {"files", files}}
                  .dump(2)
           << "\n";
  if (!manifest) throw ResourceError("cannot write manifest.json");
  bundle.files = out.files();
  bundle.files.push_back("manifest.json");
  return bundle;
}

}  // namespace domcert
