#include "hirpcn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "hirpcn/ad/adam.hpp"
#include "hirpcn/ad/checkpoint.hpp"
#include "hirpcn/error.hpp"
#include "hirpcn/seed.hpp"

namespace hirpcn {

void TrainConfig::validate() const {
  auto bad = [](const std::string& why) { throw Error(ErrorCode::ConfigInvalid, why); };
  if (!(lr > 0.0) || !std::isfinite(lr)) bad("lr must be a finite positive number");
  if (!(weight_decay >= 0.0)) bad("weight_decay must be non-negative");
  if (batch_size < 1) bad("batch_size must be at least 1");
  if (eval_every < 1) bad("eval_every must be at least 1");
  if (!(clamp > 0.0 && clamp < 0.5)) bad("clamp must be in (0, 0.5)");
  if (!(grad_clip >= 0.0)) bad("grad_clip must be non-negative");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) bad("val_fraction must be in (0, 1)");
  if (!(embedding_lr_scale > 0.0) || !std::isfinite(embedding_lr_scale)) bad("embedding_lr_scale must be positive");
}

double TrainConfig::lr_at(std::size_t step) const {
  if (warmup_steps == 0 || step >= warmup_steps) return lr;
  return lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
}

nlohmann::ordered_json train_config_to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["lr"] = c.lr;
  j["weight_decay"] = c.weight_decay;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["warmup_steps"] = c.warmup_steps;
  j["eval_every"] = c.eval_every;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["clamp"] = c.clamp;
  j["grad_clip"] = c.grad_clip;
  j["val_fraction"] = c.val_fraction;
  j["embedding_lr_scale"] = c.embedding_lr_scale;
  j["target_micro_f1"] = c.target_micro_f1;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, "train config must be a JSON object");
  TrainConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "lr") c.lr = v.get<double>();
      else if (key == "weight_decay") c.weight_decay = v.get<double>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "warmup_steps") c.warmup_steps = v.get<std::size_t>();
      else if (key == "eval_every") c.eval_every = v.get<std::size_t>();
      else if (key == "patience") c.patience = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "clamp") c.clamp = v.get<double>();
      else if (key == "grad_clip") c.grad_clip = v.get<double>();
      else if (key == "val_fraction") c.val_fraction = v.get<double>();
      else if (key == "embedding_lr_scale") c.embedding_lr_scale = v.get<double>();
      else if (key == "target_micro_f1") c.target_micro_f1 = v.get<double>();
      else throw Error(ErrorCode::ConfigInvalid, "unknown train config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<Example> make_examples(std::span<const Proposal> corpus, const Vocabulary& vocab,
                                   const DisciplineTaxonomy& t, std::size_t doc_len) {
  std::vector<Example> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus) {
    out.push_back({p.id, tokenize(p, vocab, doc_len), encode_topic_path(p.labels, t)});
  }
  return out;
}

Split stratified_split(std::span<const Proposal> corpus, double val_fraction, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::set<char> letters;
    for (const auto& code : corpus[i].labels) {
      if (!code.empty()) letters.insert(code.front());
    }
    strata[std::string(letters.begin(), letters.end())].push_back(i);
  }
  std::mt19937_64 rng(derive_seed(seed, "split"));
  Split s;
  for (auto& [key, members] : strata) {
    // Fisher-Yates with raw engine output keeps the split portable.
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng() % i]);
    const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(members.size()) * val_fraction));
    s.val.insert(s.val.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
    s.train.insert(s.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  return s;
}

std::string TrainLog::to_jsonl() const {
  std::string out;
  std::size_t e = 0;
  auto emit_eval = [&](const EvalRecord& r) {
    nlohmann::ordered_json j;
    j["type"] = "eval";
    j["epoch"] = r.epoch;
    j["step"] = r.step;
    j["micro_f1"] = r.micro_f1;
    j["macro_f1"] = r.macro_f1;
    j["level_micro_f1"] = r.level_micro;
    j["level_macro_f1"] = r.level_macro;
    j["best"] = r.best;
    out += j.dump() + '\n';
  };
  for (const auto& s : steps) {
    while (e < evals.size() && evals[e].step < s.step) emit_eval(evals[e++]);
    nlohmann::ordered_json j;
    j["type"] = "step";
    j["step"] = s.step;
    j["epoch"] = s.epoch;
    j["loss"] = s.loss;
    j["lr"] = s.lr;
    out += j.dump() + '\n';
  }
  while (e < evals.size()) emit_eval(evals[e++]);
  return out;
}

std::vector<Prediction> predict_all(const HirpcnModel& model, std::span<const Example> examples,
                                    const PredictOptions& opt) {
  std::vector<Prediction> out(examples.size());
  std::vector<std::string> errors(examples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < examples.size(); ++i) {
    try {
      out[i] = model.predict(examples[i].tokens, opt);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) throw Error(ErrorCode::IncoherentGiven, examples[i].id + ": " + errors[i]);
  }
  return out;
}

F1Report evaluate_during_training(const HirpcnModel& model, std::span<const Example> val) {
  if (val.empty()) throw Error(ErrorCode::EmptyEvalSet, "validation set is empty");
  const auto preds = predict_all(model, val, PredictOptions{});
  std::vector<TopicPath> pred_paths, truths;
  for (std::size_t i = 0; i < val.size(); ++i) {
    pred_paths.push_back(preds[i].path);
    truths.push_back(val[i].truth);
  }
  return f1_report(pred_paths, truths, model.taxonomy());
}

TrainLog train(HirpcnModel& model, std::span<const Example> train_set, std::span<const Example> val_set,
               const TrainConfig& cfg, const std::optional<std::filesystem::path>& run_dir,
               const std::function<void(const std::string&)>& progress) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  TrainLog log;
  auto& params = model.params();
  params.zero_grad();

  ad::AdamConfig acfg;
  acfg.weight_decay = cfg.weight_decay;
  acfg.lr_scale["embedding."] = cfg.embedding_lr_scale;
  ad::Adam adam(acfg);
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  std::mt19937_64 dropout_rng(derive_seed(cfg.seed, "dropout"));
  const ad::DropoutCtx drop{model.config().dropout, true, &dropout_rng};

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::map<std::string, ad::Matrix> best = params.snapshot();
  double best_micro = -1.0;
  std::size_t stale = 0;
  std::size_t step = 0;
  auto write_log = [&] {
    if (run_dir) write_file_atomic(*run_dir / "train_log.jsonl", log.to_jsonl());
  };

  for (std::size_t epoch = 1; epoch <= cfg.epochs && !train_set.empty(); ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng() % i]);
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), b + cfg.batch_size);
      double loss_sum = 0.0;
      for (std::size_t i = b; i < end; ++i) {
        const Example& ex = train_set[order[i]];
        ad::Tape tape;
        ad::Binder bind(tape);
        ad::Var loss = model.forward_train(bind, ex.tokens, ex.truth, drop);
        loss_sum += loss.value()[0];
        tape.backward(loss);
      }
      ++step;
      const double n = static_cast<double>(end - b);
      const double mean_loss = loss_sum / n;
      if (!std::isfinite(mean_loss)) {
        throw Error(ErrorCode::NonFiniteLoss, "step " + std::to_string(step) + " loss " + std::to_string(mean_loss));
      }
      for (auto& [_, p] : params) {
        for (auto& g : p.grad.values()) g /= n;
      }
      if (cfg.grad_clip > 0.0) ad::clip_grad_norm(params, cfg.grad_clip);
      const double lr = cfg.lr_at(step);
      adam.step(params, lr);
      log.steps.push_back({step, epoch, mean_loss, lr});
    }

    if (epoch % cfg.eval_every != 0 && epoch != cfg.epochs) continue;
    const F1Report f1 = evaluate_during_training(model, val_set);
    EvalRecord rec{epoch, step, f1.micro_f1, f1.macro_f1, f1.level_micro, f1.level_macro, false};
    if (f1.micro_f1 > best_micro) {
      best_micro = f1.micro_f1;
      best = params.snapshot();
      rec.best = true;
      stale = 0;
      log.best_eval = log.evals.size();
      if (run_dir) {
        ad::save_checkpoint(*run_dir / "best.ckpt", best);
        log.checkpoints.push_back((*run_dir / "best.ckpt").string());
      }
    } else {
      ++stale;
    }
    log.evals.push_back(rec);
    write_log();
    if (progress) {
      std::ostringstream msg;
      msg << "epoch " << epoch << " step " << step << " loss " << log.steps.back().loss << " val micro-F1 "
          << f1.micro_f1 << " macro-F1 " << f1.macro_f1 << " levels";
      for (double v : f1.level_micro) msg << ' ' << v;
      progress(msg.str());
    }
    if (f1.micro_f1 >= cfg.target_micro_f1) break;
    if (stale > 0 && stale >= cfg.patience) break;
  }

  if (run_dir) {
    ad::save_checkpoint(*run_dir / "last.ckpt", params.snapshot());
    log.checkpoints.push_back((*run_dir / "last.ckpt").string());
    if (!log.best_eval) {
      ad::save_checkpoint(*run_dir / "best.ckpt", best);
      log.checkpoints.push_back((*run_dir / "best.ckpt").string());
    }
    write_log();
  }
  params.restore(best);
  log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return log;
}

}  // namespace hirpcn
