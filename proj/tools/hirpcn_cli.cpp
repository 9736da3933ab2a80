// Command-line front end: gen-taxonomy, gen-corpus, build-graph, train,
// predict, evaluate, grad-check.
//
// Exit codes: 0 ok, 1 I/O, 2 usage or config, 3 data incoherence,
// 4 numeric failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hirpcn/ad/checkpoint.hpp"
#include "hirpcn/corpus.hpp"
#include "hirpcn/error.hpp"
#include "hirpcn/gradcheck.hpp"
#include "hirpcn/idgraph.hpp"
#include "hirpcn/model.hpp"
#include "hirpcn/prediction_io.hpp"
#include "hirpcn/seed.hpp"
#include "hirpcn/taxonomy.hpp"
#include "hirpcn/trainer.hpp"

namespace fs = std::filesystem;
using namespace hirpcn;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kIo = 1, kUsage = 2, kData = 3, kNumeric = 4 };

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::Io: return kIo;
    case ErrorCode::ConfigInvalid: return kUsage;
    case ErrorCode::NonFiniteLoss: return kNumeric;
    default: return kData;
  }
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const ojson& j) { write_file_atomic(path, j.dump(2) + "\n"); }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Records how an output was produced, written beside it.
struct Manifest {
  std::string subcommand;
  ojson config = ojson::object();
  ojson inputs = ojson::object();
  ojson outputs = ojson::object();
  std::uint64_t seed = 0;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const fs::path& path) const {
    ojson j;
    j["subcommand"] = subcommand;
    j["tool_version"] = kVersion;
    j["seed"] = seed;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(path, j);
  }
};

fs::path manifest_path(const fs::path& out) {
  fs::path p = out;
  p += ".manifest.json";
  return p;
}

// ---------------------------------------------------------------------------

struct GenTaxonomyArgs {
  std::string letters = "A,B";
  int branching = 3;
  int depth = 4;
  std::string out;
};

int run_gen_taxonomy(const GenTaxonomyArgs& a) {
  Manifest m{"gen-taxonomy"};
  const auto letters = split_list(a.letters);
  const auto t = make_fixture_taxonomy(letters, a.branching, a.depth);
  write_json(a.out, taxonomy_to_json(t));
  m.config = {{"letters", a.letters}, {"branching", a.branching}, {"depth", a.depth}};
  m.outputs["taxonomy"] = a.out;
  m.write(manifest_path(a.out));
  std::cout << "disciplines " << t.discipline_count() << " depth " << t.depth() << "\n";
  return kOk;
}

struct GenCorpusArgs {
  std::string taxonomy, out;
  CorpusConfig cfg;
};

int run_gen_corpus(const GenCorpusArgs& a) {
  Manifest m{"gen-corpus"};
  const auto t = load_taxonomy_file(a.taxonomy);
  a.cfg.validate();
  const auto corpus = generate_corpus(t, a.cfg);
  write_corpus(a.out, corpus);
  std::size_t inter = 0;
  for (const auto& p : corpus) {
    std::set<char> letters;
    for (const auto& c : p.labels) letters.insert(c.front());
    if (letters.size() >= 2) ++inter;
  }
  m.seed = a.cfg.seed;
  m.config = {{"size", a.cfg.size},
              {"vocab_per_discipline", a.cfg.vocab_per_discipline},
              {"shared_topic_rate", a.cfg.shared_topic_rate},
              {"interdisciplinary_rate", a.cfg.interdisciplinary_rate},
              {"doc_len", a.cfg.doc_len},
              {"depth_weights", a.cfg.depth_weights}};
  m.inputs["taxonomy"] = a.taxonomy;
  m.outputs["corpus"] = a.out;
  m.write(manifest_path(a.out));
  std::cout << "proposals " << corpus.size() << " interdisciplinary " << inter << "\n";
  return kOk;
}

struct BuildGraphArgs {
  std::string corpus, taxonomy, out;
  double alpha = 0.1, beta = 0.1;
};

int run_build_graph(const BuildGraphArgs& a) {
  Manifest m{"build-graph"};
  const auto t = load_taxonomy_file(a.taxonomy);
  const auto corpus = read_corpus(a.corpus);
  const auto stats = collect_topic_stats(corpus, t);
  const InterGraph g = stats.empty() ? InterGraph(t.size(), a.alpha, a.beta, {})
                                     : build_graph(stats, a.alpha, a.beta);
  write_json(a.out, graph_to_json(g, t));
  m.config = {{"alpha", a.alpha}, {"beta", a.beta}};
  m.inputs = {{"corpus", a.corpus}, {"taxonomy", a.taxonomy}};
  m.outputs["graph"] = a.out;
  m.write(manifest_path(a.out));
  std::cout << "nodes " << t.discipline_count() << " edges " << g.edges().size() << "\n";
  return kOk;
}

struct TrainArgs {
  std::string corpus, taxonomy, graph, model_config, train_config, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  double alpha = 0.1, beta = 0.1;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  Manifest m{"train"};
  const fs::path dir = a.out_dir;
  fs::create_directories(dir);
  const auto t = load_taxonomy_file(a.taxonomy);
  const auto corpus = read_corpus(a.corpus);
  ModelConfig mcfg = a.model_config.empty() ? ModelConfig{} : model_config_from_json(read_json(a.model_config));
  TrainConfig tcfg = a.train_config.empty() ? TrainConfig{} : train_config_from_json(read_json(a.train_config));
  if (a.seed) tcfg.seed = *a.seed;
  if (a.epochs) tcfg.epochs = *a.epochs;
  tcfg.validate();

  const Split split = stratified_split(corpus, tcfg.val_fraction, tcfg.seed);
  std::vector<Proposal> train_p, val_p;
  for (auto i : split.train) train_p.push_back(corpus[i]);
  for (auto i : split.val) val_p.push_back(corpus[i]);
  const Vocabulary vocab = Vocabulary::build(train_p);
  mcfg.vocab_size = vocab.size();
  mcfg.init_seed = derive_seed(tcfg.seed, "init");
  mcfg.validate();

  // Without --graph the graph comes from the training split only.
  InterGraph graph = !a.graph.empty() ? load_graph_file(a.graph, t)
                                      : build_graph(collect_topic_stats(train_p, t), a.alpha, a.beta);

  write_json(dir / "model_config.json", model_config_to_json(mcfg));
  write_json(dir / "train_config.json", train_config_to_json(tcfg));
  write_json(dir / "vocab.json", vocab.to_json());
  write_json(dir / "taxonomy.json", taxonomy_to_json(t));
  write_json(dir / "graph.json", graph_to_json(graph, t));
  write_corpus(dir / "train.jsonl", train_p);
  write_corpus(dir / "val.jsonl", val_p);

  HirpcnModel model(mcfg, t, graph);
  const auto train_x = make_examples(train_p, vocab, t, mcfg.doc_len);
  const auto val_x = make_examples(val_p, vocab, t, mcfg.doc_len);
  std::function<void(const std::string&)> progress;
  if (!a.quiet) progress = [](const std::string& s) { std::cerr << s << "\n"; };
  const TrainLog log = train(model, train_x, val_x, tcfg, dir, progress);

  m.seed = tcfg.seed;
  m.config["model"] = model_config_to_json(mcfg);
  m.config["train"] = train_config_to_json(tcfg);
  m.inputs = {{"corpus", a.corpus}, {"taxonomy", a.taxonomy}, {"graph", a.graph}};
  m.outputs = {{"run_dir", a.out_dir}, {"checkpoints", log.checkpoints}};
  m.config["train_wall_seconds"] = log.wall_seconds;
  m.write(dir / "manifest.json");

  std::cout << "steps " << log.steps.size() << " evals " << log.evals.size();
  if (log.best_eval) {
    const auto& b = log.evals[*log.best_eval];
    std::cout << " best_epoch " << b.epoch << " best_micro_f1 " << b.micro_f1;
  }
  std::cout << " wall_seconds " << log.wall_seconds << "\n";
  return kOk;
}

struct PredictArgs {
  std::string ckpt, input, out, given, run_dir;
  std::optional<int> given_levels;
  std::optional<double> threshold;
  bool no_filter = false;
  bool dump_attention = false;
};

int run_predict(const PredictArgs& a) {
  Manifest m{"predict"};
  const fs::path dir = a.run_dir.empty() ? fs::path(a.ckpt).parent_path() : fs::path(a.run_dir);
  const auto t = load_taxonomy_file(dir / "taxonomy.json");
  const auto mcfg = model_config_from_json(read_json(dir / "model_config.json"));
  const auto vocab = Vocabulary::from_json(read_json(dir / "vocab.json"));
  const auto graph = load_graph_file(dir / "graph.json", t);
  HirpcnModel model(mcfg, t, graph);
  model.params().restore(ad::load_checkpoint(a.ckpt));

  // Parse --given before touching the inputs so a bad prefix fails fast.
  std::optional<TopicPath> given;
  if (!a.given.empty()) given = parse_given(a.given, t);

  const auto corpus = read_corpus(a.input);
  const auto examples = make_examples(corpus, vocab, t, mcfg.doc_len);
  PredictOptions base;
  base.threshold = a.threshold;
  base.coherence_filter = !a.no_filter;
  base.trace = a.dump_attention;
  base.given = given;

  std::vector<Prediction> preds;
  if (a.given_levels) {
    // Each proposal conditions on its own truth labels up to this level.
    preds.resize(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
      PredictOptions opt = base;
      TopicPath prefix = examples[i].truth;
      const auto keep = static_cast<std::size_t>(std::min(*a.given_levels, prefix.effective_depth())) + 1;
      prefix.levels.resize(keep);
      for (auto& set : prefix.levels) set.stop = false;
      while (prefix.levels.size() > 1 && prefix.levels.back().labels.empty()) prefix.levels.pop_back();
      opt.given = prefix;
      preds[i] = model.predict(examples[i].tokens, opt);
    }
  } else {
    preds = predict_all(model, examples, base);
  }
  std::string out;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out += prediction_to_json(corpus[i].id, preds[i], t, a.dump_attention).dump() + '\n';
  }
  write_file_atomic(a.out, out);

  m.config = {{"threshold", a.threshold.value_or(mcfg.threshold)},
              {"coherence_filter", !a.no_filter},
              {"dump_attention", a.dump_attention},
              {"given", a.given}};
  if (a.given_levels) m.config["given_levels"] = *a.given_levels;
  m.inputs = {{"ckpt", a.ckpt}, {"input", a.input}, {"run_dir", dir.string()}};
  m.outputs["predictions"] = a.out;
  m.write(manifest_path(a.out));
  std::cout << "predictions " << preds.size() << "\n";
  return kOk;
}

struct EvaluateArgs {
  std::string preds, truth, taxonomy, out, csv;
};

int run_evaluate(const EvaluateArgs& a) {
  Manifest m{"evaluate"};
  const auto t = load_taxonomy_file(a.taxonomy);
  const auto preds = read_predictions(a.preds, t);
  const auto truth = read_corpus(a.truth);
  const auto report = evaluate_predictions(preds, truth, t);
  write_json(a.out, report.json);
  fs::path csv = a.csv.empty() ? fs::path(a.out).replace_extension(".csv") : fs::path(a.csv);
  write_file_atomic(csv, report.csv);
  m.inputs = {{"preds", a.preds}, {"truth", a.truth}, {"taxonomy", a.taxonomy}};
  m.outputs = {{"report", a.out}, {"csv", csv.string()}};
  m.write(manifest_path(a.out));
  std::cout << "micro_f1 " << report.f1.micro_f1 << " macro_f1 " << report.f1.macro_f1 << "\n";
  return kOk;
}

struct GradCheckArgs {
  std::string model_config;
  GradCheckConfig cfg;
};

int run_grad_check(GradCheckArgs a) {
  if (!a.model_config.empty()) a.cfg.model = model_config_from_json(read_json(a.model_config));
  const auto r = grad_check(a.cfg);
  std::cout << (r.pass ? "PASS" : "FAIL") << " sampled " << r.entries.size() << " groups";
  for (const auto& g : r.groups) std::cout << ' ' << g;
  std::cout << " worst_rel_err " << r.max_rel_error << " worst_param " << r.worst.param << '['
            << r.worst.index << "] analytic " << r.worst.analytic << " numeric " << r.worst.numeric
            << " seconds " << r.seconds << "\n";
  return r.pass ? kOk : kNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical interdisciplinary discipline classifier"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenTaxonomyArgs gt;
  auto* c_gt = app.add_subcommand("gen-taxonomy", "Write a regular synthetic taxonomy");
  c_gt->add_option("--letters", gt.letters, "Comma-separated level-1 letters");
  c_gt->add_option("--branching", gt.branching)->check(CLI::Range(1, 99));
  c_gt->add_option("--depth", gt.depth)->check(CLI::Range(1, 8));
  c_gt->add_option("--out", gt.out)->required();

  GenCorpusArgs gc;
  auto* c_gc = app.add_subcommand("gen-corpus", "Generate a synthetic proposal corpus");
  c_gc->add_option("--taxonomy", gc.taxonomy)->required();
  c_gc->add_option("--out", gc.out)->required();
  c_gc->add_option("--seed", gc.cfg.seed);
  c_gc->add_option("--size", gc.cfg.size);
  c_gc->add_option("--interdisciplinary-rate", gc.cfg.interdisciplinary_rate);
  c_gc->add_option("--shared-topic-rate", gc.cfg.shared_topic_rate);
  c_gc->add_option("--vocab-per-discipline", gc.cfg.vocab_per_discipline);
  c_gc->add_option("--doc-len", gc.cfg.doc_len);

  BuildGraphArgs bg;
  auto* c_bg = app.add_subcommand("build-graph", "Build the interdisciplinary graph");
  c_bg->add_option("--corpus", bg.corpus)->required();
  c_bg->add_option("--taxonomy", bg.taxonomy)->required();
  c_bg->add_option("--alpha", bg.alpha);
  c_bg->add_option("--beta", bg.beta);
  c_bg->add_option("--out", bg.out)->required();

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train a model into a run directory");
  c_tr->add_option("--corpus", tr.corpus)->required();
  c_tr->add_option("--taxonomy", tr.taxonomy)->required();
  c_tr->add_option("--graph", tr.graph, "Graph JSON; built from the training split when omitted");
  c_tr->add_option("--model-config", tr.model_config);
  c_tr->add_option("--train-config", tr.train_config);
  c_tr->add_option("--out-dir", tr.out_dir)->required();
  c_tr->add_option("--seed", tr.seed);
  c_tr->add_option("--epochs", tr.epochs);
  c_tr->add_option("--alpha", tr.alpha);
  c_tr->add_option("--beta", tr.beta);
  c_tr->add_flag("--quiet", tr.quiet);

  PredictArgs pr;
  auto* c_pr = app.add_subcommand("predict", "Predict topic paths");
  c_pr->add_option("--ckpt", pr.ckpt)->required();
  c_pr->add_option("--input", pr.input)->required();
  c_pr->add_option("--out", pr.out)->required();
  c_pr->add_option("--run-dir", pr.run_dir, "Directory with configs; defaults to the checkpoint's");
  auto* o_given = c_pr->add_option("--given", pr.given, "Comma-separated codes forming a coherent prefix");
  c_pr->add_option("--given-levels", pr.given_levels, "Condition each proposal on its own labels up to this level")
      ->excludes(o_given);
  c_pr->add_option("--threshold", pr.threshold)->check(CLI::Range(0.0, 1.0));
  c_pr->add_flag("--no-coherence-filter", pr.no_filter);
  c_pr->add_flag("--dump-attention", pr.dump_attention);

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Score predictions against truth labels");
  c_ev->add_option("--preds", ev.preds)->required();
  c_ev->add_option("--truth", ev.truth)->required();
  c_ev->add_option("--taxonomy", ev.taxonomy)->required();
  c_ev->add_option("--out", ev.out)->required();
  c_ev->add_option("--csv", ev.csv, "Per-sample audit CSV; defaults beside --out");

  GradCheckArgs gk;
  auto* c_gk = app.add_subcommand("grad-check", "Finite-difference gradient check of the full model");
  c_gk->add_option("--model-config", gk.model_config);
  c_gk->add_option("--seed", gk.cfg.seed);
  c_gk->add_option("--samples", gk.cfg.samples);
  c_gk->add_option("--tolerance", gk.cfg.tolerance);
  c_gk->add_option("--floor", gk.cfg.floor);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*c_gt) return run_gen_taxonomy(gt);
    if (*c_gc) return run_gen_corpus(gc);
    if (*c_bg) return run_build_graph(bg);
    if (*c_tr) return run_train(tr);
    if (*c_pr) return run_predict(pr);
    if (*c_ev) return run_evaluate(ev);
    if (*c_gk) return run_grad_check(gk);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
