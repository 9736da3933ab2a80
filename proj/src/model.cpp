#include "hirpcn/model.hpp"

#include <algorithm>
#include <cmath>

#include "hirpcn/error.hpp"

namespace hirpcn {

using ad::Binder;
using ad::DropoutCtx;
using ad::Matrix;
using ad::Tape;
using ad::Var;

void ModelConfig::validate() const {
  auto bad = [](const std::string& why) { throw Error(ErrorCode::ConfigInvalid, why); };
  if (h == 0 || h % 2 != 0) bad("h must be a positive even number");
  if (n_e == 0 || n_d == 0 || n_g == 0) bad("n_e, n_d and n_g must be at least 1");
  if (heads == 0) bad("heads must be at least 1");
  if (doc_len < 1) bad("doc_len must be at least 1");
  if (vocab_size <= static_cast<std::size_t>(Vocabulary::kFirstWord) - 1) bad("vocab_size too small");
  if (ff_dim == 0) bad("ff_dim must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must be in [0, 1)");
  if (!(threshold > 0.0 && threshold < 1.0)) bad("threshold must be in (0, 1)");
}

double ModelConfig::attention_divisor() const {
  return std::sqrt(static_cast<double>(attention_scale == AttentionScale::Heads ? heads : h));
}

nlohmann::ordered_json model_config_to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["h"] = c.h;
  j["n_e"] = c.n_e;
  j["n_d"] = c.n_d;
  j["n_g"] = c.n_g;
  j["heads"] = c.heads;
  j["doc_len"] = c.doc_len;
  j["vocab_size"] = c.vocab_size;
  j["ff_dim"] = c.ff_dim;
  j["dropout"] = c.dropout;
  j["threshold"] = c.threshold;
  j["attention_scale"] = c.attention_scale == AttentionScale::Heads ? "heads" : "key_dim";
  j["init_seed"] = c.init_seed;
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, "model config must be a JSON object");
  ModelConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "h") c.h = v.get<std::size_t>();
      else if (key == "n_e") c.n_e = v.get<std::size_t>();
      else if (key == "n_d") c.n_d = v.get<std::size_t>();
      else if (key == "n_g") c.n_g = v.get<std::size_t>();
      else if (key == "heads") c.heads = v.get<std::size_t>();
      else if (key == "doc_len") c.doc_len = v.get<std::size_t>();
      else if (key == "vocab_size") c.vocab_size = v.get<std::size_t>();
      else if (key == "ff_dim") c.ff_dim = v.get<std::size_t>();
      else if (key == "dropout") c.dropout = v.get<double>();
      else if (key == "threshold") c.threshold = v.get<double>();
      else if (key == "init_seed") c.init_seed = v.get<std::uint64_t>();
      else if (key == "attention_scale") {
        const auto s = v.get<std::string>();
        if (s == "heads") c.attention_scale = AttentionScale::Heads;
        else if (s == "key_dim") c.attention_scale = AttentionScale::KeyDim;
        else throw Error(ErrorCode::ConfigInvalid, "attention_scale must be 'heads' or 'key_dim'");
      } else {
        throw Error(ErrorCode::ConfigInvalid, "unknown model config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("model config: ") + e.what());
  }
  return c;
}

TopicPath parse_given(std::string_view list, const DisciplineTaxonomy& t) {
  TopicPath p;
  p.levels.push_back(LabelSet{{kRootId}, false});
  std::vector<DisciplineId> ids;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = std::min(list.find(',', pos), list.size());
    std::string code(list.substr(pos, comma - pos));
    code.erase(0, code.find_first_not_of(" \t"));
    code.erase(code.find_last_not_of(" \t") + 1);
    if (!code.empty()) ids.push_back(t.id_of(code));
    pos = comma + 1;
  }
  int depth = 0;
  for (DisciplineId id : ids) depth = std::max(depth, t.at(id).level);
  p.levels.resize(static_cast<std::size_t>(depth) + 1);
  for (DisciplineId id : ids) p.levels[static_cast<std::size_t>(t.at(id).level)].labels.insert(id);
  for (int k = 1; k <= depth; ++k) {
    const auto& set = p.levels[static_cast<std::size_t>(k)].labels;
    if (set.empty()) {
      throw Error(ErrorCode::IncoherentGiven, "no level-" + std::to_string(k) + " code given");
    }
    for (DisciplineId id : set) {
      if (!p.levels[static_cast<std::size_t>(k) - 1].labels.contains(*t.at(id).parent_id)) {
        throw Error(ErrorCode::IncoherentGiven, t.at(id).code);
      }
    }
  }
  return p;
}

HirpcnModel::HirpcnModel(const ModelConfig& cfg, const DisciplineTaxonomy& t, const InterGraph& g)
    : cfg_(cfg), tax_(&t), graph_(&g), params_(cfg.init_seed) {
  cfg_.validate();
  if (g.node_count() != t.size()) {
    throw Error(ErrorCode::ConfigInvalid, "graph node count does not match the taxonomy");
  }
  const std::size_t h = cfg_.h;
  const double emb = 1.0;
  word_embed_ = &params_.create_uniform("embedding.word", cfg_.vocab_size, h, emb);
  type_embed_ = &params_.create_uniform("sie.type", kDocTypeCount, h, emb);
  for (std::size_t l = 0; l < cfg_.n_e; ++l) {
    const std::string p = "sie." + std::to_string(l);
    SieLayer layer;
    layer.word = ad::make_transformer_block(params_, p + ".word", h, cfg_.heads, cfg_.ff_dim);
    layer.fuse = ad::make_linear(params_, p + ".fuse", cfg_.doc_len * h, h);
    // Every position starts from the same h x h block, so the fuse begins
    // as a projected sum over positions and training specialises it.
    Matrix& w = layer.fuse.weight->value;
    for (std::size_t j = 1; j < cfg_.doc_len; ++j)
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < h; ++c) w(j * h + r, c) = w(r, c);
    layer.doc = ad::make_transformer_block(params_, p + ".doc", h, cfg_.heads, cfg_.ff_dim);
    sie_.push_back(std::move(layer));
  }
  node_embed_ = &params_.create_uniform("ike.node", t.size(), h, emb);
  gcn_ = ad::make_gcn(params_, "ike.gcn", h, cfg_.n_g);
  for (std::size_t l = 0; l < cfg_.n_d; ++l) {
    const std::string p = "if." + std::to_string(l);
    IfLayer layer;
    layer.self_attn = ad::make_attention(params_, p + ".self", h, cfg_.heads);
    layer.cross_attn = ad::make_attention(params_, p + ".cross", h, cfg_.heads);
    layer.ln1 = ad::make_layer_norm(params_, p + ".ln1", h);
    layer.ln2 = ad::make_layer_norm(params_, p + ".ln2", h);
    layer.ln3 = ad::make_layer_norm(params_, p + ".ln3", h);
    layer.ff = ad::make_feed_forward(params_, p + ".ff", h, cfg_.ff_dim);
    if_.push_back(std::move(layer));
  }
  for (int k = 1; k <= t.depth(); ++k) {
    const std::string p = "lp." + std::to_string(k);
    LpHead head;
    head.fc1 = ad::make_linear(params_, p + ".fc1", h, h);
    head.fc2 = ad::make_linear(params_, p + ".fc2", h, t.level(k).size() + 1);
    lp_.push_back(head);
  }

  const Matrix pe = ad::positional_encoding(cfg_.doc_len, h);
  sie_pe_ = Matrix(kDocTypeCount * cfg_.doc_len, h);
  for (std::size_t d = 0; d < kDocTypeCount; ++d) {
    std::copy(pe.values().begin(), pe.values().end(), sie_pe_.data() + d * pe.size());
  }
}

std::map<std::string, std::vector<std::string>> HirpcnModel::parameter_groups() const {
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& [name, _] : params_) groups[name.substr(0, name.find('.'))].push_back(name);
  return groups;
}

std::size_t HirpcnModel::slot_of(DisciplineId id) const {
  return static_cast<std::size_t>(tax_->index_in_level(id)) + 1;
}

Var HirpcnModel::sie_forward(Binder& bind, const TokenizedProposal& tp, const DropoutCtx& drop,
                             std::vector<std::vector<Matrix>>* trace) {
  if (tp.doc_len != cfg_.doc_len) {
    throw Error(ErrorCode::ShapeMismatch, "proposal padded to " + std::to_string(tp.doc_len) +
                                              ", model expects " + std::to_string(cfg_.doc_len));
  }
  std::vector<std::int32_t> ids;
  ids.reserve(kDocTypeCount * cfg_.doc_len);
  for (const auto& doc : tp.tokens) {
    for (std::int32_t id : doc) {
      ids.push_back(id >= 0 && static_cast<std::size_t>(id) < cfg_.vocab_size ? id : Vocabulary::kUnk);
    }
  }
  Tape& tape = bind.tape();
  Var words = ad::add(ad::gather_rows(bind(*word_embed_), ids), tape.constant(sie_pe_));
  Var docs = bind(*type_embed_);
  // Each document's rows attend only to that document's non-pad prefix
  // (pads are trailing; the type token is always present).
  std::vector<ad::Segment> segments;
  for (std::size_t d = 0; d < kDocTypeCount; ++d) {
    const auto& doc = tp.tokens[d];
    std::size_t len = doc.size();
    while (len > 1 && doc[len - 1] == Vocabulary::kPad) --len;
    segments.push_back({d * cfg_.doc_len, cfg_.doc_len, d * cfg_.doc_len, len});
  }
  ad::AttentionOptions word_opt;
  word_opt.divisor = cfg_.attention_divisor();
  word_opt.segments = segments;
  for (const auto& layer : sie_) {
    words = ad::transformer_block(bind, layer.word, words, word_opt, drop);
    // Row-major reshape flattens each document's |d| x h block into one row.
    Var fused = ad::add(ad::linear(bind, layer.fuse, ad::reshape(words, kDocTypeCount, cfg_.doc_len * cfg_.h)),
                        docs);
    ad::AttentionOptions doc_opt;
    doc_opt.divisor = cfg_.attention_divisor();
    std::vector<Matrix> heads;
    if (trace) doc_opt.trace = &heads;
    docs = ad::transformer_block(bind, layer.doc, fused, doc_opt, drop);
    if (trace) trace->push_back(std::move(heads));
  }
  return docs;
}

Var HirpcnModel::ike_row(Binder& bind, const LabelSet& set, int level) {
  if (level == 0) {
    if (set.labels != std::set<DisciplineId>{kRootId}) {
      throw Error(ErrorCode::IncoherentHistory, "L_0 must be {root}");
    }
    const std::int32_t root = kRootId;
    return ad::gather_rows(bind(*node_embed_), std::span(&root, 1));
  }
  if (set.labels.empty()) {
    throw Error(ErrorCode::IncoherentHistory, "empty history set at level " + std::to_string(level));
  }
  for (DisciplineId id : set.labels) {
    if (!graph_->has_node(id)) {
      throw Error(ErrorCode::UnknownDiscipline, "discipline id " + std::to_string(id));
    }
    if (tax_->at(id).level != level) {
      throw Error(ErrorCode::IncoherentHistory,
                  "'" + tax_->at(id).code + "' is not a level-" + std::to_string(level) + " discipline");
    }
  }
  const std::vector<DisciplineId> centrals(set.labels.begin(), set.labels.end());
  const auto nb = sample_neighborhood(*graph_, centrals, static_cast<int>(cfg_.n_g));
  const std::size_t n = nb.size();
  std::vector<std::int32_t> members(nb.members.begin(), nb.members.end());
  std::vector<std::int32_t> central_pos;
  for (DisciplineId c : nb.centrals) {
    central_pos.push_back(static_cast<std::int32_t>(
        std::lower_bound(nb.members.begin(), nb.members.end(), c) - nb.members.begin()));
  }
  Tape& tape = bind.tape();
  Var adj = tape.constant(ad::gcn_normalize(Matrix(n, n, nb.adjacency)));
  Var out = ad::gcn_forward(bind, gcn_, adj, ad::gather_rows(bind(*node_embed_), members));
  return ad::mean_rows(ad::gather_rows(out, central_pos));
}

Var HirpcnModel::ike_forward(Binder& bind, std::span<const LabelSet> history) {
  if (history.empty()) throw Error(ErrorCode::IncoherentHistory, "empty history");
  std::vector<Var> rows;
  for (std::size_t i = 0; i < history.size(); ++i) {
    rows.push_back(ike_row(bind, history[i], static_cast<int>(i)));
  }
  return rows.size() == 1 ? rows.front() : ad::concat_rows(rows);
}

Var HirpcnModel::if_forward(Binder& bind, Var e, Var d, const DropoutCtx& drop, StepOutput* trace) {
  Tape& tape = bind.tape();
  Var s = ad::add(e, tape.constant(ad::positional_encoding(e.rows(), cfg_.h)));
  for (const auto& layer : if_) {
    ad::AttentionOptions self_opt, cross_opt;
    self_opt.divisor = cross_opt.divisor = cfg_.attention_divisor();
    std::vector<Matrix> self_w, cross_w;
    if (trace) {
      self_opt.trace = &self_w;
      cross_opt.trace = &cross_w;
    }
    Var shat = ad::layer_norm(
        bind, layer.ln1, ad::add(s, drop.apply(ad::multi_head_attention(bind, layer.self_attn, s, s, s, self_opt))));
    Var z = ad::layer_norm(
        bind, layer.ln2, ad::add(shat, drop.apply(ad::multi_head_attention(bind, layer.cross_attn, shat, d, d, cross_opt))));
    s = ad::layer_norm(bind, layer.ln3, ad::add(z, drop.apply(ad::feed_forward(bind, layer.ff, z))));
    if (trace) {
      trace->self_attention.push_back(std::move(self_w));
      trace->cross_attention.push_back(std::move(cross_w));
    }
  }
  return s;
}

Var HirpcnModel::lp_forward(Binder& bind, Var s, int level) {
  if (level < 1 || level > tax_->depth()) {
    throw Error(ErrorCode::LevelOutOfRange, "level " + std::to_string(level) + " outside 1.." +
                                                std::to_string(tax_->depth()));
  }
  const auto& head = lp_[static_cast<std::size_t>(level) - 1];
  Var pooled = ad::mean_rows(s);
  return ad::sigmoid(ad::linear(bind, head.fc2, ad::relu(ad::linear(bind, head.fc1, pooled))));
}

Matrix HirpcnModel::level_targets(const LabelSet& truth, int level) const {
  if (level < 1 || level > tax_->depth()) {
    throw Error(ErrorCode::LevelOutOfRange, "level " + std::to_string(level));
  }
  Matrix y(1, tax_->level(level).size() + 1);
  if (truth.stop) y[0] = 1.0;
  for (DisciplineId id : truth.labels) {
    if (tax_->at(id).level != level) {
      throw Error(ErrorCode::LevelOutOfRange, "'" + tax_->at(id).code + "' is not at level " + std::to_string(level));
    }
    y[slot_of(id)] = 1.0;
  }
  return y;
}

Var HirpcnModel::level_loss(Var probs, const Matrix& targets) {
  return ad::binary_cross_entropy(probs, targets, 1e-12);
}

Var HirpcnModel::forward_train(Binder& bind, const TokenizedProposal& tp, const TopicPath& truth,
                               const DropoutCtx& drop) {
  const int ha = truth.effective_depth();
  if (ha < 1) throw Error(ErrorCode::IncoherentHistory, "truth path has no levels");
  if (ha > tax_->depth()) throw Error(ErrorCode::LevelOutOfRange, "truth path deeper than the taxonomy");
  Var d = sie_forward(bind, tp, drop);
  // History rows are shared by every step; step k sees the first k of them.
  std::vector<Var> rows;
  for (int i = 0; i < ha; ++i) rows.push_back(ike_row(bind, truth.levels[static_cast<std::size_t>(i)], i));
  std::vector<Var> losses;
  for (int k = 1; k <= ha; ++k) {
    Var e = k == 1 ? rows.front() : ad::concat_rows(std::span<const Var>(rows.data(), static_cast<std::size_t>(k)));
    Var y = lp_forward(bind, if_forward(bind, e, d, drop), k);
    losses.push_back(level_loss(y, level_targets(truth.levels[static_cast<std::size_t>(k)], k)));
  }
  Var total = losses.front();
  for (std::size_t i = 1; i < losses.size(); ++i) total = ad::add(total, losses[i]);
  return total;
}

Prediction HirpcnModel::predict(const TokenizedProposal& tp, const PredictOptions& opt) const {
  // Inference only reads parameter values; the grad-disabled tape never
  // writes through these pointers.
  auto& self = const_cast<HirpcnModel&>(*this);
  const double thr = opt.threshold.value_or(cfg_.threshold);
  const int depth = tax_->depth();

  Prediction out;
  TopicPath& path = out.path;
  if (opt.given) {
    if (auto why = path_incoherence(*opt.given, *tax_)) throw Error(ErrorCode::IncoherentGiven, *why);
    for (std::size_t k = 1; k < opt.given->levels.size(); ++k) {
      if (opt.given->levels[k].labels.empty() || opt.given->levels[k].stop) {
        throw Error(ErrorCode::IncoherentGiven, "given level " + std::to_string(k) + " must hold codes only");
      }
    }
    path = *opt.given;
  } else {
    path.levels.push_back(LabelSet{{kRootId}, false});
  }
  if (path.effective_depth() >= depth) {
    path.levels.back().stop = true;
    return out;
  }

  ad::Tape tape(false);
  Binder bind(tape);
  const DropoutCtx drop;
  Var d = self.sie_forward(bind, tp, drop, opt.trace ? &out.document_attention : nullptr);
  std::vector<Var> rows;
  for (int i = 0; i <= path.effective_depth(); ++i) {
    rows.push_back(self.ike_row(bind, path.levels[static_cast<std::size_t>(i)], i));
  }
  for (int k = path.effective_depth() + 1; k <= depth; ++k) {
    StepOutput step;
    step.level = k;
    Var e = rows.size() == 1 ? rows.front() : ad::concat_rows(rows);
    Var y = self.lp_forward(bind, self.if_forward(bind, e, d, drop, opt.trace ? &step : nullptr), k);
    step.probs = y.value().values();
    const auto& prev = path.levels.back().labels;
    const auto level_ids = tax_->level(k);
    for (std::size_t i = 0; i < level_ids.size(); ++i) {
      if (step.probs[i + 1] < thr) continue;
      const DisciplineId id = level_ids[i];
      if (opt.coherence_filter && !prev.contains(*tax_->at(id).parent_id)) continue;
      step.selected.labels.insert(id);
    }
    step.selected.stop = step.probs[0] >= thr;
    LabelSet set = step.selected;
    const bool last = set.stop || set.labels.empty() || k == depth;
    if (last) set.stop = true;
    path.levels.push_back(set);
    if (!opt.trace) {
      step.self_attention.clear();
      step.cross_attention.clear();
    }
    out.steps.push_back(std::move(step));
    if (last) break;
    rows.push_back(self.ike_row(bind, path.levels.back(), k));
  }
  return out;
}

}  // namespace hirpcn
