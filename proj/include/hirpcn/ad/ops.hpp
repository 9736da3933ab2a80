#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "hirpcn/ad/tape.hpp"

// Differentiable primitives. Every op checks shapes (ShapeMismatch names both
// operands) and records a backward closure when an input requires grad.

namespace hirpcn::ad {

Var matmul(Var a, Var b);     // A B
Var matmul_nt(Var a, Var b);  // A B^T
Var add(Var a, Var b);
/// x + bias with a 1 x n bias broadcast over rows.
Var add_row(Var x, Var bias);
Var scale(Var a, double s);
Var sum(Var a);  // 1 x 1

Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var reshape(Var a, std::size_t rows, std::size_t cols);
inline Var flatten(Var a) { return reshape(a, 1, a.value().size()); }
/// Rows of `table` selected by index (embedding lookup).
Var gather_rows(Var table, std::span<const std::int32_t> rows);
/// 1 x cols mean over rows.
Var mean_rows(Var a);

Var relu(Var a);
Var sigmoid(Var a);
Var softmax_rows(Var a);
/// Row-wise normalisation with learnable 1 x n gain and bias.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
/// Inverted dropout; identity when !train or rate == 0.
Var dropout(Var x, double rate, bool train, std::mt19937_64& rng);

/// -sum_i [t_i log p_i + (1 - t_i) log (1 - p_i)] with probabilities clamped
/// to [clamp, 1 - clamp] inside the logs. `targets` must match p's shape.
Var binary_cross_entropy(Var probs, const Matrix& targets, double clamp = 1e-12);

}  // namespace hirpcn::ad
