#include <filesystem>
#include <set>

#include <doctest.h>

#include "hirpcn/ad/checkpoint.hpp"
#include "hirpcn/gradcheck.hpp"
#include "hirpcn/trainer.hpp"
#include "test_util.hpp"

using namespace hirpcn;
using testutil::fixture_taxonomy;

TEST_CASE("warm-up schedule") {
  TrainConfig c;
  c.lr = 1e-3;
  c.warmup_steps = 100;
  CHECK(c.lr_at(1) == doctest::Approx(1e-5));
  CHECK(c.lr_at(50) == doctest::Approx(5e-4));
  CHECK(c.lr_at(100) == 1e-3);
  CHECK(c.lr_at(5000) == 1e-3);
  c.warmup_steps = 0;
  CHECK(c.lr_at(1) == 1e-3);
}

TEST_CASE("train config JSON") {
  TrainConfig c;
  c.batch_size = 4;
  c.embedding_lr_scale = 3.0;
  const auto back = train_config_from_json(train_config_to_json(c));
  CHECK(back.batch_size == 4);
  CHECK(back.embedding_lr_scale == 3.0);
  CHECK(train_config_from_json(nlohmann::json::object()).epochs == 200);
  CHECK_ERROR(train_config_from_json(nlohmann::json{{"lrr", 1}}), ErrorCode::ConfigInvalid);
  CHECK_ERROR(train_config_from_json(nlohmann::json{{"lr", "fast"}}), ErrorCode::ConfigInvalid);
  CHECK_ERROR(train_config_from_json(nlohmann::json{{"batch_size", 0}}), ErrorCode::ConfigInvalid);
  CHECK_ERROR(train_config_from_json(nlohmann::json{{"lr", 0.0}}), ErrorCode::ConfigInvalid);
  CHECK_ERROR(train_config_from_json(nlohmann::json::array()), ErrorCode::ConfigInvalid);
}

TEST_CASE("stratified split") {
  const auto t = fixture_taxonomy();
  const auto corpus = generate_corpus(t, CorpusConfig{});
  const auto s = stratified_split(corpus, 0.2, 3);
  CHECK(s.train.size() + s.val.size() == corpus.size());
  CHECK(s.val.size() == 100);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  CHECK(all.size() == corpus.size());

  std::size_t inter_val = 0;
  for (auto i : s.val) {
    std::set<char> letters;
    for (const auto& c : corpus[i].labels) letters.insert(c.front());
    inter_val += letters.size() == 2;
  }
  CHECK(inter_val == 30);  // 20% of the 150 interdisciplinary proposals

  const auto again = stratified_split(corpus, 0.2, 3);
  CHECK(again.val == s.val);
  CHECK(stratified_split(corpus, 0.2, 4).val != s.val);
}

TEST_CASE("make_examples encodes every proposal") {
  const auto t = fixture_taxonomy();
  const auto corpus = generate_corpus(t, CorpusConfig{.size = 10});
  const auto vocab = Vocabulary::build(corpus);
  const auto ex = make_examples(corpus, vocab, t, 16);
  REQUIRE(ex.size() == 10);
  for (std::size_t i = 0; i < ex.size(); ++i) {
    CHECK(ex[i].id == corpus[i].id);
    CHECK(ex[i].truth == encode_topic_path(corpus[i].labels, t));
    CHECK(ex[i].tokens.tokens[0].size() == 16);
  }
}

TEST_CASE("tiny training run is deterministic and keeps the best snapshot") {
  const auto t = fixture_taxonomy();
  const auto corpus = generate_corpus(t, CorpusConfig{.size = 24});
  const auto vocab = Vocabulary::build(corpus);
  const auto graph = build_graph(collect_topic_stats(corpus, t), 0.1, 0.1);
  ModelConfig mc;
  mc.h = 8;
  mc.heads = 2;
  mc.doc_len = 8;
  mc.ff_dim = 8;
  mc.vocab_size = vocab.size();
  const auto ex = make_examples(corpus, vocab, t, mc.doc_len);
  const std::span<const Example> all(ex);
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 4;
  tc.warmup_steps = 2;

  auto run = [&](const std::optional<std::filesystem::path>& dir) {
    auto model = std::make_unique<HirpcnModel>(mc, t, graph);
    auto log = train(*model, all.first(18), all.subspan(18), tc, dir);
    return std::make_pair(std::move(model), log);
  };
  const auto dir = std::filesystem::temp_directory_path() / "hirpcn_tests" / "run";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  auto [m1, l1] = run(dir);
  auto [m2, l2] = run(std::nullopt);
  CHECK(l1.to_jsonl() == l2.to_jsonl());
  CHECK(l1.steps.size() == 15);  // 3 epochs x ceil(18 / 4)
  CHECK(l1.evals.size() == 3);
  REQUIRE(l1.best_eval.has_value());
  CHECK(l1.evals[*l1.best_eval].best);
  for (const auto& [name, p] : m1->params()) CHECK(p.value == m2->params().get(name).value);

  // The model holds the best snapshot, which is also what best.ckpt stores.
  const auto best = ad::load_checkpoint(dir / "best.ckpt");
  for (const auto& [name, value] : best) CHECK(value == m1->params().get(name).value);
  CHECK(std::filesystem::exists(dir / "last.ckpt"));
  CHECK(std::filesystem::exists(dir / "train_log.jsonl"));

  const auto f1 = evaluate_during_training(*m1, all.subspan(18));
  CHECK(f1.micro_f1 == l1.evals[*l1.best_eval].micro_f1);
  CHECK_ERROR(evaluate_during_training(*m1, all.first(0)), ErrorCode::EmptyEvalSet);

  const auto preds = predict_all(*m1, all.first(5), PredictOptions{});
  CHECK(preds.size() == 5);
  CHECK(preds[0].path == m1->predict(ex[0].tokens).path);
}

TEST_CASE("relative error") {
  CHECK(relative_error(1.0, 1.0, 1e-3) == 0.0);
  CHECK(relative_error(2.0, 1.0, 1e-3) == doctest::Approx(0.5));
  CHECK(relative_error(1e-9, 0.0, 1e-3) == doctest::Approx(1e-6));
}

TEST_CASE("gradient check on a small model covers every group") {
  GradCheckConfig cfg;
  cfg.model.h = 8;
  cfg.model.heads = 2;
  cfg.model.doc_len = 6;
  cfg.model.ff_dim = 8;
  cfg.samples = 60;
  const auto r = grad_check(cfg);
  CHECK(r.pass);
  CHECK(r.max_rel_error <= cfg.tolerance);
  const std::set<std::string> groups(r.groups.begin(), r.groups.end());
  CHECK(groups == std::set<std::string>{"embedding", "sie", "ike", "if", "lp"});
}
