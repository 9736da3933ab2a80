#include "hirpcn/ad/ops.hpp"

#include <algorithm>
#include <cmath>

#include "hirpcn/ad/kernels.hpp"
#include "hirpcn/error.hpp"

namespace hirpcn::ad {

namespace {

Tape& tape_of(Var a) {
  if (!a.tape) throw Error(ErrorCode::NotRecorded, "variable is not bound to a tape");
  return *a.tape;
}

Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape) throw Error(ErrorCode::NotRecorded, "operands live on different tapes");
  return tape_of(a);
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  require_shape(A.cols() == B.rows(), "matmul", A, B);
  Matrix C(A.rows(), B.cols());
  kernels::gemm_nn(A, B, C);
  return t.record(std::move(C), {a, b}, [a, b](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(a.id)) kernels::gemm_nt(g, t.value(b.id), t.grad(a.id));
    if (t.requires_grad(b.id)) kernels::gemm_tn(t.value(a.id), g, t.grad(b.id));
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  require_shape(A.cols() == B.cols(), "matmul_nt", A, B);
  Matrix C(A.rows(), B.rows());
  kernels::gemm_nt(A, B, C);
  return t.record(std::move(C), {a, b}, [a, b](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(a.id)) kernels::gemm_nn(g, t.value(b.id), t.grad(a.id));
    if (t.requires_grad(b.id)) kernels::gemm_tn(g, t.value(a.id), t.grad(b.id));
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_shape(a.value().same_shape(b.value()), "add", a.value(), b.value());
  Matrix C = a.value();
  C += b.value();
  return t.record(std::move(C), {a, b}, [a, b](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    t.accumulate(a.id, g);
    t.accumulate(b.id, g);
  });
}

Var add_row(Var x, Var bias) {
  Tape& t = tape_of(x, bias);
  const Matrix& X = x.value();
  const Matrix& B = bias.value();
  require_shape(B.rows() == 1 && B.cols() == X.cols(), "add_row", X, B);
  Matrix C = X;
  for (std::size_t r = 0; r < C.rows(); ++r) {
    for (std::size_t c = 0; c < C.cols(); ++c) C(r, c) += B[c];
  }
  return t.record(std::move(C), {x, bias}, [x, bias](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    t.accumulate(x.id, g);
    if (t.requires_grad(bias.id)) {
      Matrix& gb = t.grad(bias.id);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
      }
    }
  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  Matrix C = a.value();
  for (auto& v : C.values()) v *= s;
  return t.record(std::move(C), {a}, [a, s](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return t.record(Matrix(1, 1, total), {a}, [a](Tape& t, std::uint32_t self) {
    const double g = t.grad(self)[0];
    Matrix& ga = t.grad(a.id);
    for (auto& v : ga.values()) v += g;
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCode::ShapeMismatch, "concat_rows of nothing");
  Tape& t = tape_of(parts.front());
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    tape_of(parts.front(), p);
    require_shape(p.cols() == cols, "concat_rows", parts.front().value(), p.value());
    rows += p.rows();
  }
  Matrix C(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    std::copy(p.value().values().begin(), p.value().values().end(), C.data() + offset);
    offset += p.value().size();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(std::move(C), inputs, [inputs](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    std::size_t offset = 0;
    for (const Var& p : inputs) {
      const std::size_t n = t.value(p.id).size();
      if (t.requires_grad(p.id)) {
        Matrix& gp = t.grad(p.id);
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[offset + i];
      }
      offset += n;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCode::ShapeMismatch, "concat_cols of nothing");
  Tape& t = tape_of(parts.front());
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    tape_of(parts.front(), p);
    require_shape(p.rows() == rows, "concat_cols", parts.front().value(), p.value());
    cols += p.cols();
  }
  Matrix C(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(v.row(r).begin(), v.row(r).end(), C.data() + r * cols + offset);
    }
    offset += v.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(std::move(C), inputs, [inputs, cols](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    std::size_t offset = 0;
    for (const Var& p : inputs) {
      const std::size_t pc = t.value(p.id).cols();
      if (t.requires_grad(p.id)) {
        Matrix& gp = t.grad(p.id);
        for (std::size_t r = 0; r < gp.rows(); ++r) {
          for (std::size_t c = 0; c < pc; ++c) gp(r, c) += g[r * cols + offset + c];
        }
      }
      offset += pc;
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  Tape& t = tape_of(a);
  const Matrix& A = a.value();
  if (begin + count > A.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "slice_rows [" + std::to_string(begin) + ", +" +
                                              std::to_string(count) + ") of " + shape_string(A));
  }
  Matrix C(count, A.cols());
  std::copy(A.data() + begin * A.cols(), A.data() + (begin + count) * A.cols(), C.data());
  return t.record(std::move(C), {a}, [a, begin](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a.id);
    const std::size_t off = begin * ga.cols();
    for (std::size_t i = 0; i < g.size(); ++i) ga[off + i] += g[i];
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  Tape& t = tape_of(a);
  const Matrix& A = a.value();
  if (begin + count > A.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "slice_cols [" + std::to_string(begin) + ", +" +
                                              std::to_string(count) + ") of " + shape_string(A));
  }
  Matrix C(A.rows(), count);
  for (std::size_t r = 0; r < A.rows(); ++r) {
    std::copy(A.data() + r * A.cols() + begin, A.data() + r * A.cols() + begin + count,
              C.data() + r * count);
  }
  return t.record(std::move(C), {a}, [a, begin, count](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a.id);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < count; ++c) ga(r, begin + c) += g(r, c);
    }
  });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  Tape& t = tape_of(a);
  const Matrix& A = a.value();
  if (rows * cols != A.size()) {
    throw Error(ErrorCode::ShapeMismatch, "reshape " + shape_string(A) + " to [" +
                                              std::to_string(rows) + "x" + std::to_string(cols) + "]");
  }
  Matrix C(rows, cols, A.values());
  return t.record(std::move(C), {a}, [a](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var gather_rows(Var table, std::span<const std::int32_t> rows) {
  Tape& t = tape_of(table);
  const Matrix& T = table.value();
  Matrix C(rows.size(), T.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || static_cast<std::size_t>(rows[i]) >= T.rows()) {
      throw Error(ErrorCode::ShapeMismatch,
                  "gather row " + std::to_string(rows[i]) + " of " + shape_string(T));
    }
    const auto src = T.row(static_cast<std::size_t>(rows[i]));
    std::copy(src.begin(), src.end(), C.row(i).begin());
  }
  std::vector<std::int32_t> idx(rows.begin(), rows.end());
  return t.record(std::move(C), {table}, [table, idx = std::move(idx)](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix& gt = t.grad(table.id);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto dst = gt.row(static_cast<std::size_t>(idx[i]));
      const auto src = g.row(i);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
  });
}

Var mean_rows(Var a) {
  Tape& t = tape_of(a);
  const Matrix& A = a.value();
  if (A.rows() == 0) throw Error(ErrorCode::ShapeMismatch, "mean over zero rows");
  Matrix C(1, A.cols());
  for (std::size_t r = 0; r < A.rows(); ++r) {
    for (std::size_t c = 0; c < A.cols(); ++c) C[c] += A(r, c);
  }
  const double inv = 1.0 / static_cast<double>(A.rows());
  for (auto& v : C.values()) v *= inv;
  return t.record(std::move(C), {a}, [a, inv](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a.id);
    for (std::size_t r = 0; r < ga.rows(); ++r) {
      for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g[c] * inv;
    }
  });
}

Var relu(Var a) {
  Tape& t = tape_of(a);
  Matrix C = a.value();
  for (auto& v : C.values()) v = v > 0.0 ? v : 0.0;
  return t.record(std::move(C), {a}, [a](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& x = t.value(a.id);
    Matrix& ga = t.grad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > 0.0) ga[i] += g[i];
    }
  });
}

Var sigmoid(Var a) {
  Tape& t = tape_of(a);
  Matrix C = a.value();
  for (auto& v : C.values()) {
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return t.record(std::move(C), {a}, [a](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    Matrix& ga = t.grad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var softmax_rows(Var a) {
  Tape& t = tape_of(a);
  const Matrix& A = a.value();
  if (A.cols() == 0) throw Error(ErrorCode::ShapeMismatch, "softmax over zero columns");
  Matrix C(A.rows(), A.cols());
  kernels::softmax_rows(A, C);
  return t.record(std::move(C), {a}, [a](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    Matrix& ga = t.grad(a.id);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) ga(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Tape& t = tape_of(x, gain);
  tape_of(x, bias);
  const Matrix& X = x.value();
  const std::size_t rows = X.rows(), cols = X.cols();
  require_shape(gain.rows() == 1 && gain.cols() == cols, "layer_norm gain", X, gain.value());
  require_shape(bias.rows() == 1 && bias.cols() == cols, "layer_norm bias", X, bias.value());
  const Matrix& G = gain.value();
  const Matrix& B = bias.value();

  Matrix xhat(rows, cols);
  std::vector<double> rstd(rows);
  Matrix Y(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mean += X(r, c);
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (X(r, c) - mean) * (X(r, c) - mean);
    var /= static_cast<double>(cols);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      xhat(r, c) = (X(r, c) - mean) * rstd[r];
      Y(r, c) = G[c] * xhat(r, c) + B[c];
    }
  }
  return t.record(std::move(Y), {x, gain, bias},
                  [x, gain, bias, xhat = std::move(xhat), rstd = std::move(rstd)](Tape& t,
                                                                                 std::uint32_t self) {
                    const Matrix& g = t.grad(self);
                    const Matrix& G = t.value(gain.id);
                    const std::size_t rows = g.rows(), cols = g.cols();
                    if (t.requires_grad(gain.id) || t.requires_grad(bias.id)) {
                      Matrix& gg = t.grad(gain.id);
                      Matrix& gb = t.grad(bias.id);
                      for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t c = 0; c < cols; ++c) {
                          gg[c] += g(r, c) * xhat(r, c);
                          gb[c] += g(r, c);
                        }
                      }
                    }
                    if (t.requires_grad(x.id)) {
                      Matrix& gx = t.grad(x.id);
                      const double n = static_cast<double>(cols);
                      for (std::size_t r = 0; r < rows; ++r) {
                        double mean_d = 0.0, mean_dx = 0.0;
                        for (std::size_t c = 0; c < cols; ++c) {
                          const double d = g(r, c) * G[c];
                          mean_d += d;
                          mean_dx += d * xhat(r, c);
                        }
                        mean_d /= n;
                        mean_dx /= n;
                        for (std::size_t c = 0; c < cols; ++c) {
                          const double d = g(r, c) * G[c];
                          gx(r, c) += rstd[r] * (d - mean_d - xhat(r, c) * mean_dx);
                        }
                      }
                    }
                  });
}

Var dropout(Var x, double rate, bool train, std::mt19937_64& rng) {
  if (!train || rate <= 0.0) return x;
  Tape& t = tape_of(x);
  if (rate >= 1.0) throw Error(ErrorCode::ConfigInvalid, "dropout rate must be below 1");
  const double keep = 1.0 - rate;
  Matrix mask(x.rows(), x.cols());
  for (auto& m : mask.values()) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m = u < keep ? 1.0 / keep : 0.0;
  }
  Matrix C = x.value();
  for (std::size_t i = 0; i < C.size(); ++i) C[i] *= mask[i];
  return t.record(std::move(C), {x}, [x, mask = std::move(mask)](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix& gx = t.grad(x.id);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

Var binary_cross_entropy(Var probs, const Matrix& targets, double clamp) {
  Tape& t = tape_of(probs);
  const Matrix& P = probs.value();
  if (!P.same_shape(targets)) {
    throw Error(ErrorCode::LengthMismatch,
                "probabilities " + shape_string(P) + " vs targets " + shape_string(targets));
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double p = std::max(P[i], clamp);
    const double q = std::max(1.0 - P[i], clamp);
    loss -= targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(q);
  }
  return t.record(Matrix(1, 1, loss), {probs}, [probs, targets, clamp](Tape& t, std::uint32_t self) {
    const double g = t.grad(self)[0];
    const Matrix& P = t.value(probs.id);
    Matrix& gp = t.grad(probs.id);
    for (std::size_t i = 0; i < P.size(); ++i) {
      double d = 0.0;
      if (P[i] > clamp) d -= targets[i] / P[i];
      if (1.0 - P[i] > clamp) d += (1.0 - targets[i]) / (1.0 - P[i]);
      gp[i] += g * d;
    }
  });
}

}  // namespace hirpcn::ad
