#include "hirpcn/ad/nn.hpp"

#include <cmath>
#include <memory>

#include "hirpcn/ad/kernels.hpp"
#include "hirpcn/error.hpp"

namespace hirpcn::ad {

Var Binder::operator()(Parameter& p) {
  const auto it = leaves_.find(&p);
  if (it != leaves_.end()) return it->second;
  const Var v = tape_.parameter(p);
  leaves_.emplace(&p, v);
  return v;
}

Linear make_linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
                   bool bias) {
  Linear l;
  l.weight = &store.create_uniform(name + ".w", in, out, 1.0 / std::sqrt(static_cast<double>(in)));
  if (bias) l.bias = &store.create_constant(name + ".b", 1, out, 0.0);
  return l;
}

Var linear(Binder& bind, const Linear& l, Var x) {
  Var y = matmul(x, bind(*l.weight));
  return l.bias ? add_row(y, bind(*l.bias)) : y;
}

LayerNormParams make_layer_norm(ParamStore& store, const std::string& name, std::size_t h) {
  return {&store.create_constant(name + ".gain", 1, h, 1.0),
          &store.create_constant(name + ".bias", 1, h, 0.0)};
}

Var layer_norm(Binder& bind, const LayerNormParams& ln, Var x) {
  return layer_norm(x, bind(*ln.gain), bind(*ln.bias));
}

AttentionParams make_attention(ParamStore& store, const std::string& name, std::size_t h,
                               std::size_t heads) {
  if (heads == 0) throw Error(ErrorCode::ConfigInvalid, "attention needs at least one head");
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(h));
  const double out_bound = 1.0 / std::sqrt(static_cast<double>(h * heads));
  AttentionParams p;
  p.wq = &store.create_uniform(name + ".wq", h, heads * h, in_bound);
  p.wk = &store.create_uniform(name + ".wk", h, heads * h, in_bound);
  p.wv = &store.create_uniform(name + ".wv", h, heads * h, in_bound);
  p.wo = &store.create_uniform(name + ".wo", heads * h, h, out_bound);
  p.heads = heads;
  p.h = h;
  return p;
}

namespace {

struct AttnState {
  std::vector<Segment> segments;
  std::vector<Matrix> probs;  // [segment * heads + head], q_count x k_count
  std::size_t heads, dh;
  double divisor;
};

}  // namespace

Var attention_core(Var qp, Var kp, Var vp, std::size_t heads, const AttentionOptions& opt) {
  const Matrix& Q = qp.value();
  const Matrix& K = kp.value();
  const Matrix& V = vp.value();
  require_shape(Q.cols() == K.cols(), "attention q/k", Q, K);
  require_shape(K.rows() == V.rows() && K.cols() == V.cols(), "attention k/v", K, V);
  if (K.rows() == 0) throw Error(ErrorCode::ShapeMismatch, "attention over zero keys");
  if (heads == 0 || Q.cols() % heads != 0) {
    throw Error(ErrorCode::ShapeMismatch, "width " + std::to_string(Q.cols()) + " not divisible by " +
                                              std::to_string(heads) + " heads");
  }
  auto st = std::make_shared<AttnState>();
  st->heads = heads;
  st->dh = Q.cols() / heads;
  st->divisor = opt.divisor;
  if (opt.segments.empty()) {
    st->segments.push_back({0, Q.rows(), 0, K.rows()});
  } else {
    st->segments.assign(opt.segments.begin(), opt.segments.end());
  }
  for (const auto& s : st->segments) {
    if (s.q_begin + s.q_count > Q.rows() || s.k_begin + s.k_count > K.rows() || s.k_count == 0) {
      throw Error(ErrorCode::ShapeMismatch, "attention segment out of range");
    }
  }

  const std::size_t dh = st->dh, width = Q.cols();
  const double inv = 1.0 / opt.divisor;
  Matrix out(Q.rows(), width);
  st->probs.reserve(st->segments.size() * heads);
  for (const auto& s : st->segments) {
    for (std::size_t hd = 0; hd < heads; ++hd) {
      const std::size_t off = hd * dh;
      Matrix logits(s.q_count, s.k_count);
      for (std::size_t i = 0; i < s.q_count; ++i) {
        const double* q = Q.data() + (s.q_begin + i) * width + off;
        for (std::size_t j = 0; j < s.k_count; ++j) {
          const double* k = K.data() + (s.k_begin + j) * width + off;
          double acc = 0.0;
          for (std::size_t c = 0; c < dh; ++c) acc += q[c] * k[c];
          logits(i, j) = acc * inv;
        }
      }
      Matrix p(s.q_count, s.k_count);
      kernels::softmax_rows(logits, p);
      for (std::size_t i = 0; i < s.q_count; ++i) {
        double* o = out.data() + (s.q_begin + i) * width + off;
        for (std::size_t j = 0; j < s.k_count; ++j) {
          const double w = p(i, j);
          const double* v = V.data() + (s.k_begin + j) * width + off;
          for (std::size_t c = 0; c < dh; ++c) o[c] += w * v[c];
        }
      }
      st->probs.push_back(std::move(p));
    }
  }
  if (opt.trace) {
    // One matrix per head; with several segments the rows are stacked in
    // segment order and columns cover each segment's own keys.
    if (st->segments.size() == 1) {
      for (std::size_t hd = 0; hd < heads; ++hd) opt.trace->push_back(st->probs[hd]);
    } else {
      for (std::size_t hd = 0; hd < heads; ++hd) {
        std::vector<double> rows;
        std::size_t total = 0, cols = st->segments.front().k_count;
        for (std::size_t s = 0; s < st->segments.size(); ++s) {
          const Matrix& p = st->probs[s * heads + hd];
          if (p.cols() != cols) cols = 0;
          rows.insert(rows.end(), p.values().begin(), p.values().end());
          total += p.rows();
        }
        if (cols) opt.trace->push_back(Matrix(total, cols, std::move(rows)));
      }
    }
  }

  Tape& t = *qp.tape;
  return t.record(std::move(out), {qp, kp, vp}, [qp, kp, vp, st](Tape& t, std::uint32_t self) {
    const Matrix& G = t.grad(self);
    const Matrix& Q = t.value(qp.id);
    const Matrix& K = t.value(kp.id);
    const Matrix& V = t.value(vp.id);
    const bool need_q = t.requires_grad(qp.id);
    const bool need_k = t.requires_grad(kp.id);
    const bool need_v = t.requires_grad(vp.id);
    Matrix* gq = need_q ? &t.grad(qp.id) : nullptr;
    Matrix* gk = need_k ? &t.grad(kp.id) : nullptr;
    Matrix* gv = need_v ? &t.grad(vp.id) : nullptr;
    const std::size_t dh = st->dh, width = Q.cols(), heads = st->heads;
    const double inv = 1.0 / st->divisor;
    for (std::size_t si = 0; si < st->segments.size(); ++si) {
      const Segment& s = st->segments[si];
      for (std::size_t hd = 0; hd < heads; ++hd) {
        const Matrix& P = st->probs[si * heads + hd];
        const std::size_t off = hd * dh;
        Matrix dlogits(s.q_count, s.k_count);
        for (std::size_t i = 0; i < s.q_count; ++i) {
          const double* g = G.data() + (s.q_begin + i) * width + off;
          double dot = 0.0;
          for (std::size_t j = 0; j < s.k_count; ++j) {
            const double* v = V.data() + (s.k_begin + j) * width + off;
            double dp = 0.0;
            for (std::size_t c = 0; c < dh; ++c) dp += g[c] * v[c];
            dlogits(i, j) = dp;
            dot += dp * P(i, j);
            if (gv) {
              double* dv = gv->data() + (s.k_begin + j) * width + off;
              const double w = P(i, j);
              for (std::size_t c = 0; c < dh; ++c) dv[c] += w * g[c];
            }
          }
          for (std::size_t j = 0; j < s.k_count; ++j) {
            dlogits(i, j) = P(i, j) * (dlogits(i, j) - dot) * inv;
          }
        }
        for (std::size_t i = 0; i < s.q_count; ++i) {
          const double* q = Q.data() + (s.q_begin + i) * width + off;
          double* dq = gq ? gq->data() + (s.q_begin + i) * width + off : nullptr;
          for (std::size_t j = 0; j < s.k_count; ++j) {
            const double ds = dlogits(i, j);
            const double* k = K.data() + (s.k_begin + j) * width + off;
            if (dq) {
              for (std::size_t c = 0; c < dh; ++c) dq[c] += ds * k[c];
            }
            if (gk) {
              double* dk = gk->data() + (s.k_begin + j) * width + off;
              for (std::size_t c = 0; c < dh; ++c) dk[c] += ds * q[c];
            }
          }
        }
      }
    }
  });
}

Var multi_head_attention(Binder& bind, const AttentionParams& p, Var q, Var k, Var v,
                         const AttentionOptions& opt) {
  Var qp = matmul(q, bind(*p.wq));
  Var kp = matmul(k, bind(*p.wk));
  Var vp = matmul(v, bind(*p.wv));
  return matmul(attention_core(qp, kp, vp, p.heads, opt), bind(*p.wo));
}

FeedForward make_feed_forward(ParamStore& store, const std::string& name, std::size_t h,
                              std::size_t ff) {
  return {make_linear(store, name + ".fc1", h, ff), make_linear(store, name + ".fc2", ff, h)};
}

Var feed_forward(Binder& bind, const FeedForward& f, Var x) {
  return linear(bind, f.l2, relu(linear(bind, f.l1, x)));
}

Var DropoutCtx::apply(Var x) const {
  if (!train || rate <= 0.0) return x;
  return dropout(x, rate, train, *rng);
}

TransformerBlock make_transformer_block(ParamStore& store, const std::string& name, std::size_t h,
                                        std::size_t heads, std::size_t ff) {
  TransformerBlock b;
  b.attn = make_attention(store, name + ".attn", h, heads);
  b.ln1 = make_layer_norm(store, name + ".ln1", h);
  b.ln2 = make_layer_norm(store, name + ".ln2", h);
  b.ff = make_feed_forward(store, name + ".ff", h, ff);
  return b;
}

Var transformer_block(Binder& bind, const TransformerBlock& b, Var x, const AttentionOptions& opt,
                      const DropoutCtx& drop) {
  Var z = layer_norm(bind, b.ln1, add(x, drop.apply(multi_head_attention(bind, b.attn, x, x, x, opt))));
  return layer_norm(bind, b.ln2, add(z, drop.apply(feed_forward(bind, b.ff, z))));
}

GcnParams make_gcn(ParamStore& store, const std::string& name, std::size_t h, std::size_t layers) {
  GcnParams p;
  const double bound = 1.0 / std::sqrt(static_cast<double>(h));
  for (std::size_t l = 0; l < layers; ++l) {
    p.layers.push_back(&store.create_uniform(name + ".w" + std::to_string(l), h, h, bound));
  }
  return p;
}

Matrix gcn_normalize(const Matrix& adj) {
  if (adj.rows() != adj.cols()) throw Error(ErrorCode::ShapeMismatch, "adjacency " + shape_string(adj));
  const std::size_t n = adj.rows();
  Matrix w = adj;
  for (std::size_t i = 0; i < n; ++i) w(i, i) += 1.0;
  std::vector<double> dinv(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += w(i, j);
    dinv[i] = 1.0 / std::sqrt(s);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) w(i, j) *= dinv[i] * dinv[j];
  }
  return w;
}

Var gcn_forward(Binder& bind, const GcnParams& p, Var norm_adj, Var h0) {
  require_shape(norm_adj.rows() == h0.rows(), "gcn", norm_adj.value(), h0.value());
  Var hcur = h0;
  for (Parameter* w : p.layers) hcur = relu(matmul(matmul(norm_adj, hcur), bind(*w)));
  return hcur;
}

Matrix positional_encoding(std::size_t s, std::size_t h) {
  if (h % 2 != 0) throw Error(ErrorCode::OddDim, "positional encoding width " + std::to_string(h));
  Matrix pe(s, h);
  for (std::size_t pos = 0; pos < s; ++pos) {
    for (std::size_t i = 0; i < h / 2; ++i) {
      const double angle = static_cast<double>(pos) /
                           std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(h));
      pe(pos, 2 * i) = std::sin(angle);
      pe(pos, 2 * i + 1) = std::cos(angle);
    }
  }
  return pe;
}

}  // namespace hirpcn::ad
