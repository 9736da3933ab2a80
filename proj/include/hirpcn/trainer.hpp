#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hirpcn/corpus.hpp"
#include "hirpcn/metrics.hpp"
#include "hirpcn/model.hpp"

namespace hirpcn {

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-7;
  std::size_t batch_size = 16;
  std::size_t epochs = 200;
  std::size_t warmup_steps = 100;
  std::size_t eval_every = 1;  // epochs
  std::size_t patience = 10;   // non-improving evaluations before stopping
  std::uint64_t seed = 1;
  double clamp = 1e-12;
  double grad_clip = 0.0;  // global L2 norm; 0 disables clipping
  double val_fraction = 0.2;
  /// Multiplier on lr for the word embedding table. Each word row only
  /// gets gradient from the few samples that contain it, so it moves far
  /// slower than the shared weights at the common rate.
  double embedding_lr_scale = 30.0;
  /// Stop as soon as validation micro-F1 reaches this value; > 1 disables.
  double target_micro_f1 = 2.0;

  /// Throws ConfigInvalid.
  void validate() const;
  /// Warm-up scaled learning rate for 1-based step s.
  double lr_at(std::size_t step) const;
};

nlohmann::ordered_json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// One teacher-forced example.
struct Example {
  std::string id;
  TokenizedProposal tokens;
  TopicPath truth;
};

std::vector<Example> make_examples(std::span<const Proposal> corpus, const Vocabulary& vocab,
                                   const DisciplineTaxonomy& t, std::size_t doc_len);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Deterministic split stratified by each proposal's set of level-1 letters:
/// every stratum sends round(n * val_fraction) shuffled members to val.
Split stratified_split(std::span<const Proposal> corpus, double val_fraction, std::uint64_t seed);

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct EvalRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> level_micro;
  std::vector<double> level_macro;
  bool best = false;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;
  std::vector<std::string> checkpoints;  // paths written, in order
  std::optional<std::size_t> best_eval;  // index into evals
  double wall_seconds = 0.0;             // kept out of the JSONL lines

  /// One JSON object per line: step records and eval records interleaved in
  /// the order they happened. Bitwise reproducible for a fixed seed.
  std::string to_jsonl() const;
};

/// Runs inference on every example (coherence filter on) and scores the
/// predicted paths. Parameters are not touched. Throws EmptyEvalSet.
F1Report evaluate_during_training(const HirpcnModel& model, std::span<const Example> val);

/// Predicts every example in order; safe to parallelise internally.
std::vector<Prediction> predict_all(const HirpcnModel& model, std::span<const Example> examples,
                                    const PredictOptions& opt);

/// Mini-batch Adam over teacher-forced losses. Batch loss is the mean of
/// per-sample losses. After each evaluation that improves validation
/// micro-F1 the parameters are kept as the best snapshot; on return the
/// model holds that snapshot. With run_dir set, best.ckpt, last.ckpt and
/// train_log.jsonl are written there. Throws NonFiniteLoss.
TrainLog train(HirpcnModel& model, std::span<const Example> train_set, std::span<const Example> val_set,
               const TrainConfig& cfg, const std::optional<std::filesystem::path>& run_dir = std::nullopt,
               const std::function<void(const std::string&)>& progress = {});

}  // namespace hirpcn
