// domcert: command-line driver for CharTask certification experiments.
//
// Exit codes: 0 success, 1 internal error, 2 input error, 3 resource limit,
// 4 certificate violated under attack.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>

#include "domcert/adversary.hpp"
#include "domcert/experiment.hpp"
#include "domcert/tabular_model.hpp"

namespace {

using namespace domcert;
namespace ct = domcert::chartask;

constexpr int kExitInput = 2;
constexpr int kExitResource = 3;
constexpr int kExitViolation = 4;

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw ResourceError(fmt::format("cannot write '{}'", path));
}

std::vector<ct::CharTaskItem> read_all(const std::vector<std::string>& paths) {
  std::vector<ct::CharTaskItem> out;
  for (const auto& p : paths) {
    auto items = ct::read_items(p);
    out.insert(out.end(), std::make_move_iterator(items.begin()), std::make_move_iterator(items.end()));
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  for (const auto& s : split_list(text)) out.push_back(parse_double(s));
  return out;
}

std::shared_ptr<NGramModel> load_model(const std::string& path) {
  auto m = std::make_shared<NGramModel>(NGramModel::load(path));
  if (!(m->vocab() == ct::vocabulary()))
    throw InputError(fmt::format("model '{}' was not trained on the CharTask vocabulary", path));
  return m;
}

// ---- generate-data ----
struct GenerateArgs {
  std::string spec;
  std::uint64_t seed = 0;
  std::string out = ".";
};

void cmd_generate(const GenerateArgs& a) {
  auto kv = a.spec.empty() ? KeyValues{} : KeyValues::load(a.spec);
  kv.set("seed", std::to_string(a.seed));
  const auto spec = ct::CharTaskSpec::from_config(kv);
  const auto data = ct::build_dataset(spec);
  std::filesystem::create_directories(a.out);
  const std::pair<const char*, const std::vector<ct::CharTaskItem>*> splits[] = {
      {"train", &data.train}, {"val", &data.val}, {"test", &data.test}};
  for (const auto& [name, items] : splits) {
    const auto path = std::filesystem::path(a.out) / fmt::format("{}.txt", name);
    ct::write_items(path.string(), spec, name, *items);
    std::cout << fmt::format("{}: {} items -> {}\n", name, items->size(), path.string());
  }
}

// ---- train ----
struct TrainArgs {
  std::vector<std::string> data;
  std::string mode = "full";
  int order = 3;
  double alpha = 0.1;
  std::size_t splits_per_item = 2;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void cmd_train(const TrainArgs& a) {
  const auto items = read_all(a.data);
  std::vector<Sequence> corpus;
  if (a.mode == "full") {
    for (const auto& item : items) corpus.push_back(item.terminated());
  } else if (a.mode == "marginal") {
    if (!a.seed) throw InputError("train --mode marginal samples cut points and needs --seed");
    Rng rng(*a.seed);
    corpus = ct::marginal_suffixes(items, rng, a.splits_per_item);
  } else {
    throw InputError(fmt::format("unknown --mode '{}' (full|marginal)", a.mode));
  }
  const auto model = train_ngram(ct::vocabulary(), corpus, a.order, a.alpha);
  model.save(a.out);
  std::cout << fmt::format("trained order-{} model on {} sequences ({} contexts) -> {}\n", a.order,
                           corpus.size(), model.num_contexts(), a.out);
}

// ---- evaluate ----
struct EvaluateArgs {
  std::string l, g;
  std::vector<std::string> id, ood;
  std::size_t prompt_len = 3;
  double max_prompt_fraction = 1.0;
  std::string out;
};

void cmd_evaluate(const EvaluateArgs& a) {
  const auto l = load_model(a.l);
  const auto g = load_model(a.g);
  auto items = make_eval_items(read_all(a.id), "id-", Label::InDomain, a.prompt_len,
                               a.max_prompt_fraction);
  const auto ood = make_eval_items(read_all(a.ood), "ood-", Label::OutOfDomain, a.prompt_len,
                                   a.max_prompt_fraction);
  items.insert(items.end(), ood.begin(), ood.end());
  const auto batch = batch_evaluate(*l, *g, {}, items);
  std::ostringstream csv;
  write_records_csv(csv, batch.records);
  write_output(a.out, csv.str());
  std::cerr << fmt::format("{} records, {} skipped\n", batch.records.size(), batch.skipped.size());
}

// ---- certify ----
struct CertifyArgs {
  std::string g;
  std::vector<std::string> data;
  std::size_t prompt_len = 3;
  double max_prompt_fraction = 1.0;
  std::optional<double> k;
  std::optional<double> eps;
  std::size_t t = 1;
  double quantile = 1.0;
  std::string out;
};

void cmd_certify(const CertifyArgs& a) {
  if (a.k.has_value() == a.eps.has_value()) throw InputError("certify needs exactly one of --k or --eps");
  const auto g = load_model(a.g);
  const auto d_f = make_domain_items(read_all(a.data), "ood-", a.prompt_len, a.max_prompt_fraction);
  const auto scored = score_marginal(*g, d_f);
  nlohmann::json j;
  double k = 0.0;
  if (a.eps) {
    const auto solved = solve_k_for_epsilon(scored, a.t, *a.eps);
    k = solved.k_bits;
    j["solved_for_eps"] = *a.eps;
    j["binding_id"] = solved.binding_id;
  } else {
    k = *a.k;
  }
  const auto dc = domain_certificate(scored, k, a.t, a.quantile);
  j["certificate"] = dc.to_json();
  write_output(a.out, j.dump(2) + "\n");
}

// ---- sweep ----
struct SweepArgs {
  std::string records;
  std::size_t t = 1;
  std::size_t points = 256;
  std::string out;
};

void cmd_sweep(const SweepArgs& a) {
  std::ifstream in(a.records);
  if (!in) throw InputError(fmt::format("cannot read '{}'", a.records));
  const auto records = read_records_csv(in);
  const auto grid = default_k_grid(records, a.points);
  const auto result = frr_trr_sweep(records, grid, a.t);
  std::ostringstream csv;
  write_sweep_csv(csv, result);
  write_output(a.out, csv.str());
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& t : result.targets)
    std::cerr << fmt::format("FRR <= {:.2f}: k = {:.6g} bits (achieved {:.4f})\n", t.target_frr, t.k,
                             t.achieved_frr);
  const auto& best = result.rows[result.best_j_row];
  std::cerr << fmt::format("best J = {:.4f} at k = {:.6g}\n", best.j, best.k);
}

// ---- attack ----
struct AttackArgs {
  bool toy = false;
  std::optional<std::uint64_t> seed;
  std::size_t elements = 3;
  std::size_t max_len = 3;
  std::string l, g;
  std::vector<std::string> targets;
  std::size_t target_prompt_len = 3;
  std::size_t prompt_len = 3;
  double k = 0.0;
  std::size_t t = 1;
  std::uint64_t max_prompts = kDefaultPromptGuard;
  std::string out;
};

int cmd_attack(const AttackArgs& a) {
  std::shared_ptr<const SequenceModel> l, g;
  std::vector<Sequence> targets;
  std::size_t max_len = a.max_len;
  if (a.toy) {
    if (!a.seed) throw InputError("attack --toy builds random models and needs --seed");
    const auto vocab = toy_vocabulary(a.elements);
    l = std::make_shared<TabularModel>(TabularModel::random(vocab, *a.seed));
    g = std::make_shared<TabularModel>(
        TabularModel::random(vocab, *a.seed + 1, {.prompt_sensitive = false}));
    for (auto body : enumerate_prompts(vocab, a.max_len - 1, a.max_prompts)) {
      body.push_back(vocab.eos());
      targets.push_back(std::move(body));
    }
  } else {
    if (a.l.empty() || a.g.empty() || a.targets.empty())
      throw InputError("attack needs --toy or all of --L, --G and --targets");
    l = load_model(a.l);
    g = load_model(a.g);
    for (const auto& d : make_domain_items(read_all(a.targets), "t-", a.target_prompt_len, 1.0))
      targets.push_back(d.y);
    for (const auto& y : targets) max_len = std::max(max_len, y.size());
  }
  const auto prompts = enumerate_prompts(l->vocab(), a.prompt_len, a.max_prompts);
  const auto summary = verify_bound_under_attack(*l, *g, a.k, a.t, targets, prompts, max_len);
  write_output(a.out, summary.to_json(l->vocab()).dump(2) + "\n");
  std::cerr << fmt::format("{} targets x {} prompts: {} violations\n", targets.size(), prompts.size(),
                           summary.violations);
  return summary.violations == 0 ? 0 : kExitViolation;
}

// ---- bench-at-eps ----
struct BenchArgs {
  std::string l, g;
  std::vector<std::string> forbidden, items;
  std::size_t t = 1;
  std::string eps;
  std::size_t prompt_len = 3;
  std::size_t max_gen_len = 40;
  std::string out;
};

void cmd_bench(const BenchArgs& a) {
  const auto l = load_model(a.l);
  const auto g = load_model(a.g);
  const auto d_f = make_domain_items(read_all(a.forbidden), "ood-", a.prompt_len, 1.0);
  const auto eps = parse_doubles(a.eps);
  const auto result =
      bench_at_epsilon(*l, *g, d_f, a.t, eps, read_all(a.items), a.prompt_len, a.max_gen_len);
  write_output(a.out, result.to_json().dump(2) + "\n");
}

// ---- valid ----
struct ValidArgs {
  std::string l, g, prompt;
  double k = 0.0;
  std::size_t t = 1;
  std::size_t max_len = 40;
  double temperature = 1.0;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void cmd_valid(const ValidArgs& a) {
  if (!a.seed) throw InputError("valid samples from L and needs --seed");
  const auto l = apply_temperature(load_model(a.l), a.temperature);
  const auto g = load_model(a.g);
  const auto x = ct::vocabulary().encode(a.prompt);
  ValidConfig cfg{a.k, a.t, a.max_len, *a.seed, false};
  Rng rng(*a.seed);
  const auto outcome = run_valid(*l, *g, cfg, x, rng);
  write_output(a.out, outcome_to_json(outcome, ct::vocabulary()).dump(2) + "\n");
}

// ---- report ----
struct ReportArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void cmd_report(const ReportArgs& a) {
  auto kv = KeyValues::load(a.config);
  if (a.seed) kv.set("seed", std::to_string(*a.seed));
  if (!a.out.empty()) kv.set("output_dir", a.out);
  const auto config = ExperimentConfig::from_config(kv);
  const auto bundle = run_experiment(config);
  std::cout << bundle.summary.dump(2) << "\n";
  std::cerr << fmt::format("{} files written to {}\n", bundle.files.size(), bundle.output_dir.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certify out-of-domain generation of a generalist model guided by a domain model"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate-data", "Generate CharTask train/val/test splits");
  c_gen->add_option("--spec", gen.spec, "CharTask spec file (key = value)");
  c_gen->add_option("--seed", gen.seed, "Random seed")->required();
  c_gen->add_option("--out", gen.out, "Output directory");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train an n-gram model on CharTask files");
  c_train->add_option("--data", train.data, "Dataset files")->required();
  c_train->add_option("--mode", train.mode, "full: whole sequences; marginal: response suffixes");
  c_train->add_option("--order", train.order, "n-gram order");
  c_train->add_option("--alpha", train.alpha, "Additive smoothing");
  c_train->add_option("--splits-per-item", train.splits_per_item, "Suffixes per item (marginal)");
  c_train->add_option("--seed", train.seed, "Random seed (marginal mode)");
  c_train->add_option("--out", train.out, "Model file")->required();

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Score ground-truth completions under L and G");
  c_ev->add_option("--L", ev.l, "Generalist model")->required();
  c_ev->add_option("--G", ev.g, "Guide model")->required();
  c_ev->add_option("--id", ev.id, "In-domain dataset files")->required();
  c_ev->add_option("--ood", ev.ood, "Out-of-domain dataset files")->required();
  c_ev->add_option("--prompt-len", ev.prompt_len, "Prompt length in tokens");
  c_ev->add_option("--max-prompt-fraction", ev.max_prompt_fraction, "Drop items whose prompt is longer");
  c_ev->add_option("--out", ev.out, "Records CSV (default stdout)");

  CertifyArgs cert;
  auto* c_cert = app.add_subcommand("certify", "Domain certificate over an out-of-domain set");
  c_cert->add_option("--G", cert.g, "Guide model")->required();
  c_cert->add_option("--data", cert.data, "Out-of-domain dataset files")->required();
  c_cert->add_option("--prompt-len", cert.prompt_len, "Prompt length in tokens");
  c_cert->add_option("--max-prompt-fraction", cert.max_prompt_fraction, "Drop items whose prompt is longer");
  c_cert->add_option("--k", cert.k, "Threshold in bits per token");
  c_cert->add_option("--eps", cert.eps, "Solve k for this certificate instead");
  c_cert->add_option("--T", cert.t, "Maximum VALID iterations");
  c_cert->add_option("--quantile", cert.quantile, "Robust max quantile");
  c_cert->add_option("--out", cert.out, "Certificate JSON (default stdout)");

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "FRR/TRR sweep over k from a records CSV");
  c_sw->add_option("--records", sw.records, "Records CSV")->required();
  c_sw->add_option("--T", sw.t, "Maximum VALID iterations");
  c_sw->add_option("--points", sw.points, "Grid size");
  c_sw->add_option("--out", sw.out, "Sweep CSV (default stdout)");

  AttackArgs at;
  auto* c_at = app.add_subcommand("attack", "Exhaustive prompt search against the certificate");
  c_at->add_flag("--toy", at.toy, "Random enumerable models");
  c_at->add_option("--seed", at.seed, "Random seed (toy models)");
  c_at->add_option("--elements", at.elements, "Toy vocabulary size without EOS");
  c_at->add_option("--max-len", at.max_len, "Longest response considered");
  c_at->add_option("--L", at.l, "Generalist model");
  c_at->add_option("--G", at.g, "Guide model");
  c_at->add_option("--targets", at.targets, "Dataset files whose completions are the targets");
  c_at->add_option("--target-prompt-len", at.target_prompt_len, "Prompt length used to cut targets");
  c_at->add_option("--prompt-len", at.prompt_len, "Longest adversarial prompt");
  c_at->add_option("--k", at.k, "Threshold in bits per token");
  c_at->add_option("--T", at.t, "Maximum VALID iterations");
  c_at->add_option("--max-prompts", at.max_prompts, "Search-size guard");
  c_at->add_option("--out", at.out, "Report JSON (default stdout)");

  BenchArgs be;
  auto* c_be = app.add_subcommand("bench-at-eps", "Accepted-and-correct rate at certified eps");
  c_be->add_option("--L", be.l, "Generalist model")->required();
  c_be->add_option("--G", be.g, "Guide model")->required();
  c_be->add_option("--forbidden", be.forbidden, "Out-of-domain dataset files")->required();
  c_be->add_option("--items", be.items, "Benchmark dataset files")->required();
  c_be->add_option("--T", be.t, "Maximum VALID iterations");
  c_be->add_option("--eps", be.eps, "Comma-separated eps values (default: 10-point grid reaching full rejection)");
  c_be->add_option("--prompt-len", be.prompt_len, "Prompt length in tokens");
  c_be->add_option("--max-gen-len", be.max_gen_len, "Longest greedy completion");
  c_be->add_option("--out", be.out, "Result JSON (default stdout)");

  ValidArgs va;
  auto* c_va = app.add_subcommand("valid", "Run VALID on one prompt and print the audit trail");
  c_va->add_option("--L", va.l, "Generalist model")->required();
  c_va->add_option("--G", va.g, "Guide model")->required();
  c_va->add_option("--prompt", va.prompt, "Space-separated prompt elements")->required();
  c_va->add_option("--k", va.k, "Threshold in bits per token");
  c_va->add_option("--T", va.t, "Maximum iterations");
  c_va->add_option("--max-len", va.max_len, "Longest sampled response");
  c_va->add_option("--temperature", va.temperature, "Sampling temperature for L");
  c_va->add_option("--seed", va.seed, "Random seed");
  c_va->add_option("--out", va.out, "Outcome JSON (default stdout)");

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Run the full experiment from a config file");
  c_rep->add_option("--config", rep.config, "Experiment config file")->required();
  c_rep->add_option("--seed", rep.seed, "Random seed (overrides the config)")->required();
  c_rep->add_option("--out", rep.out, "Output directory (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*c_gen) cmd_generate(gen);
    if (*c_train) cmd_train(train);
    if (*c_ev) cmd_evaluate(ev);
    if (*c_cert) cmd_certify(cert);
    if (*c_sw) cmd_sweep(sw);
    if (*c_at) return cmd_attack(at);
    if (*c_be) cmd_bench(be);
    if (*c_va) cmd_valid(va);
    if (*c_rep) cmd_report(rep);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return kExitResource;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
