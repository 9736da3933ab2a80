#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hirpcn/ad/nn.hpp"
#include "hirpcn/corpus.hpp"
#include "hirpcn/idgraph.hpp"
#include "hirpcn/taxonomy.hpp"

namespace hirpcn {

enum class AttentionScale {
  Heads,   // divide logits by sqrt(head count)
  KeyDim,  // divide by sqrt(per-head key width), which is h here
};

struct ModelConfig {
  std::size_t h = 32;
  std::size_t n_e = 2;  // SIE blocks
  std::size_t n_d = 2;  // IF blocks
  std::size_t n_g = 1;  // GCN hops and layers
  std::size_t heads = 4;
  std::size_t doc_len = 32;
  std::size_t vocab_size = 0;
  std::size_t ff_dim = 64;  // inner width of every two-layer feed-forward net
  double dropout = 0.2;
  double threshold = 0.5;
  AttentionScale attention_scale = AttentionScale::Heads;
  std::uint64_t init_seed = 1;

  /// Throws ConfigInvalid.
  void validate() const;
  double attention_divisor() const;
};

nlohmann::ordered_json model_config_to_json(const ModelConfig& c);
/// Missing keys keep their defaults; unknown keys or bad values throw
/// ConfigInvalid.
ModelConfig model_config_from_json(const nlohmann::json& j);

/// One level-wise decision.
struct StepOutput {
  int level = 0;
  std::vector<double> probs;  // |C_k| + 1, index 0 is stop
  LabelSet selected;
  /// Per IF block, per head: history self-attention (k x k) and
  /// cross-attention from history rows to document rows (k x |T|).
  std::vector<std::vector<ad::Matrix>> self_attention;
  std::vector<std::vector<ad::Matrix>> cross_attention;
};

struct Prediction {
  TopicPath path;
  std::vector<StepOutput> steps;
  /// Per SIE block, per head: attention among the |T| document rows.
  std::vector<std::vector<ad::Matrix>> document_attention;
};

struct PredictOptions {
  std::optional<double> threshold;  // defaults to the model config's
  bool coherence_filter = true;
  bool trace = false;
  /// Coherent prefix [{root}, L_1, ..., L_j] without stop markers.
  std::optional<TopicPath> given;
};

/// Parses comma-separated codes into a given prefix. Codes are grouped by
/// level; levels must be contiguous from 1 and each code's parent must be
/// given. Throws UnknownCode or IncoherentGiven naming the code.
TopicPath parse_given(std::string_view list, const DisciplineTaxonomy& t);

class HirpcnModel {
 public:
  /// The taxonomy and graph must outlive the model.
  HirpcnModel(const ModelConfig& cfg, const DisciplineTaxonomy& t, const InterGraph& g);

  HirpcnModel(const HirpcnModel&) = delete;
  HirpcnModel& operator=(const HirpcnModel&) = delete;

  const ModelConfig& config() const noexcept { return cfg_; }
  const DisciplineTaxonomy& taxonomy() const noexcept { return *tax_; }
  const InterGraph& graph() const noexcept { return *graph_; }
  ad::ParamStore& params() noexcept { return params_; }
  const ad::ParamStore& params() const noexcept { return params_; }

  /// Parameter names by group: embedding, sie, ike, if, lp.
  std::map<std::string, std::vector<std::string>> parameter_groups() const;

  // Forward pieces. All record on bind's tape.

  /// |T| x h document matrix D.
  ad::Var sie_forward(ad::Binder& bind, const TokenizedProposal& tp, const ad::DropoutCtx& drop,
                      std::vector<std::vector<ad::Matrix>>* trace = nullptr);
  /// 1 x h summary of one history set at level `level`.
  ad::Var ike_row(ad::Binder& bind, const LabelSet& set, int level);
  /// k x h matrix E_{<k} for history [L_0 .. L_{k-1}]. Throws
  /// IncoherentHistory or UnknownDiscipline.
  ad::Var ike_forward(ad::Binder& bind, std::span<const LabelSet> history);
  /// k x h fused state S_k.
  ad::Var if_forward(ad::Binder& bind, ad::Var e, ad::Var d, const ad::DropoutCtx& drop,
                     StepOutput* trace = nullptr);
  /// 1 x (|C_k| + 1) sigmoid probabilities. Throws LevelOutOfRange.
  ad::Var lp_forward(ad::Binder& bind, ad::Var s, int level);

  /// 0/1 target vector Y_k of a truth set at level k.
  ad::Matrix level_targets(const LabelSet& truth, int level) const;
  /// -L_k: binary cross-entropy between y_k and Y_k. Throws LengthMismatch.
  static ad::Var level_loss(ad::Var probs, const ad::Matrix& targets);

  /// Teacher-forced total loss over every level of the truth path.
  ad::Var forward_train(ad::Binder& bind, const TokenizedProposal& tp, const TopicPath& truth,
                        const ad::DropoutCtx& drop);

  /// Level-wise inference. Safe to call concurrently: parameters are only
  /// read. Throws IncoherentGiven.
  Prediction predict(const TokenizedProposal& tp, const PredictOptions& opt = {}) const;

  /// Slot of a level-k discipline in the level-k output (stop is slot 0).
  std::size_t slot_of(DisciplineId id) const;

 private:
  struct SieLayer {
    ad::TransformerBlock word;
    ad::Linear fuse;
    ad::TransformerBlock doc;
  };
  struct IfLayer {
    ad::AttentionParams self_attn, cross_attn;
    ad::LayerNormParams ln1, ln2, ln3;
    ad::FeedForward ff;
  };
  struct LpHead {
    ad::Linear fc1, fc2;
  };

  ModelConfig cfg_;
  const DisciplineTaxonomy* tax_;
  const InterGraph* graph_;
  ad::ParamStore params_;

  ad::Parameter* word_embed_ = nullptr;
  ad::Parameter* type_embed_ = nullptr;
  ad::Parameter* node_embed_ = nullptr;
  std::vector<SieLayer> sie_;
  ad::GcnParams gcn_;
  std::vector<IfLayer> if_;
  std::vector<LpHead> lp_;  // index k - 1

  ad::Matrix sie_pe_;
};

}  // namespace hirpcn
