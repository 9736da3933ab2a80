#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hirpcn/ad/ops.hpp"
#include "hirpcn/ad/param_store.hpp"
#include "hirpcn/ad/tape.hpp"

namespace hirpcn::ad {

/// Binds parameters to one tape, creating each leaf at most once so a
/// parameter used many times accumulates into a single gradient buffer.
class Binder {
 public:
  explicit Binder(Tape& tape) : tape_(tape) {}

  Tape& tape() noexcept { return tape_; }
  Var operator()(Parameter& p);

 private:
  Tape& tape_;
  std::map<const Parameter*, Var> leaves_;
};

struct Linear {
  Parameter* weight = nullptr;  // in x out
  Parameter* bias = nullptr;    // 1 x out, may be null
};

/// uniform(+-1/sqrt(in)) weight, zero bias.
Linear make_linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
                   bool bias = true);
Var linear(Binder& bind, const Linear& l, Var x);

struct LayerNormParams {
  Parameter* gain = nullptr;
  Parameter* bias = nullptr;
};

LayerNormParams make_layer_norm(ParamStore& store, const std::string& name, std::size_t h);
Var layer_norm(Binder& bind, const LayerNormParams& ln, Var x);

/// Every head owns full h x h projections. They are stored side by side, so
/// wq/wk/wv are h x (heads*h) and wo is (heads*h) x h.
struct AttentionParams {
  Parameter* wq = nullptr;
  Parameter* wk = nullptr;
  Parameter* wv = nullptr;
  Parameter* wo = nullptr;
  std::size_t heads = 1;
  std::size_t h = 0;
};

AttentionParams make_attention(ParamStore& store, const std::string& name, std::size_t h,
                               std::size_t heads);

/// Contiguous query rows [q_begin, q_begin + q_count) attend only to key rows
/// [k_begin, k_begin + k_count).
struct Segment {
  std::size_t q_begin, q_count, k_begin, k_count;
};

struct AttentionOptions {
  double divisor = 1.0;                  // logits are QK^T / divisor
  std::span<const Segment> segments;    // empty: one segment over everything
  std::vector<Matrix>* trace = nullptr;  // receives per-head weights when set
};

/// Scaled dot-product attention for all heads at once over projected inputs
/// qp (s_q x heads*dh), kp and vp (s_k x heads*dh). Output s_q x heads*dh.
Var attention_core(Var qp, Var kp, Var vp, std::size_t heads, const AttentionOptions& opt);

/// Concat(head_1..head_d) W^O with head_i = Attention(Q W_i^Q, K W_i^K, V W_i^V).
Var multi_head_attention(Binder& bind, const AttentionParams& p, Var q, Var k, Var v,
                         const AttentionOptions& opt);

struct FeedForward {
  Linear l1, l2;
};

FeedForward make_feed_forward(ParamStore& store, const std::string& name, std::size_t h,
                              std::size_t ff);
Var feed_forward(Binder& bind, const FeedForward& f, Var x);

/// Dropout placement and randomness handed to blocks.
struct DropoutCtx {
  double rate = 0.0;
  bool train = false;
  std::mt19937_64* rng = nullptr;

  Var apply(Var x) const;
};

struct TransformerBlock {
  AttentionParams attn;
  LayerNormParams ln1, ln2;
  FeedForward ff;
};

TransformerBlock make_transformer_block(ParamStore& store, const std::string& name, std::size_t h,
                                        std::size_t heads, std::size_t ff);
/// Z = LN(X + MHA(X,X,X)); out = LN(Z + FFN(Z)).
Var transformer_block(Binder& bind, const TransformerBlock& b, Var x, const AttentionOptions& opt,
                      const DropoutCtx& drop);

struct GcnParams {
  std::vector<Parameter*> layers;  // h x h each
};

GcnParams make_gcn(ParamStore& store, const std::string& name, std::size_t h, std::size_t layers);

/// D^-1/2 (A + I) D^-1/2 with D the row sums of A + I. `adj` is n x n.
Matrix gcn_normalize(const Matrix& adj);

/// H^(l+1) = ReLU(W~ H^(l) W^(l)) for each layer in order. `norm_adj` is the
/// output of gcn_normalize.
Var gcn_forward(Binder& bind, const GcnParams& p, Var norm_adj, Var h0);

/// PE[pos, 2i] = sin(pos / 10000^(2i/h)), PE[pos, 2i+1] = cos(same).
/// Throws OddDim for odd h.
Matrix positional_encoding(std::size_t s, std::size_t h);

}  // namespace hirpcn::ad
