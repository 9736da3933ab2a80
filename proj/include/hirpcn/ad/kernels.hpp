#pragma once

#include "hirpcn/ad/matrix.hpp"

// Dense kernels. The `kernels` namespace holds the OpenMP-parallel versions
// used by the engine; `ref` holds plain serial loops kept as the test oracle
// and benchmark baseline. All gemm variants accumulate into C.
//
// Each output row is produced by exactly one thread with a fixed summation
// order, so results do not depend on the thread count.

namespace hirpcn::ad::kernels {

/// Work (m * n * k) below which kernels stay serial.
inline constexpr std::size_t kParallelThreshold = 1u << 15;

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);  // C += A B
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);  // C += A B^T
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);  // C += A^T B

void softmax_rows(const Matrix& x, Matrix& y);

}  // namespace hirpcn::ad::kernels

namespace hirpcn::ad::ref {

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);

void softmax_rows(const Matrix& x, Matrix& y);

}  // namespace hirpcn::ad::ref
