#include "hirpcn/ad/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "hirpcn/error.hpp"

namespace hirpcn::ad {

namespace kernels {

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  require_shape(a.cols() == b.rows(), "matmul", a, b);
  require_shape(c.rows() == a.rows() && c.cols() == b.cols(), "matmul output", c, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  const double* A = a.data();
  const double* B = b.data();
  double* C = c.data();
#pragma omp parallel for schedule(static) if (m * n * k > kParallelThreshold)
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = C + i * n;
    const double* arow = A + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  require_shape(a.cols() == b.cols(), "matmul_nt", a, b);
  require_shape(c.rows() == a.rows() && c.cols() == b.rows(), "matmul_nt output", c, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  const double* A = a.data();
  const double* B = b.data();
  double* C = c.data();
#pragma omp parallel for schedule(static) if (m * n * k > kParallelThreshold)
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = A + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = B + j * k;
      // Four independent partial sums let the compiler vectorize.
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        s0 += arow[p] * brow[p];
        s1 += arow[p + 1] * brow[p + 1];
        s2 += arow[p + 2] * brow[p + 2];
        s3 += arow[p + 3] * brow[p + 3];
      }
      for (; p < k; ++p) s0 += arow[p] * brow[p];
      C[i * n + j] += (s0 + s1) + (s2 + s3);
    }
  }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  require_shape(a.rows() == b.rows(), "matmul_tn", a, b);
  require_shape(c.rows() == a.cols() && c.cols() == b.cols(), "matmul_tn output", c, b);
  const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  const double* A = a.data();
  const double* B = b.data();
  double* C = c.data();
#pragma omp parallel for schedule(static) if (m * n * k > kParallelThreshold)
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = C + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[p * m + i];
      const double* brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void softmax_rows(const Matrix& x, Matrix& y) {
  require_shape(x.same_shape(y), "softmax", x, y);
  const std::size_t rows = x.rows(), cols = x.cols();
#pragma omp parallel for schedule(static) if (rows * cols > kParallelThreshold)
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data() + r * cols;
    double* out = y.data() + r * cols;
    double mx = in[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, in[j]);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      out[j] = std::exp(in[j] - mx);
      total += out[j];
    }
    const double inv = 1.0 / total;
    for (std::size_t j = 0; j < cols; ++j) out[j] *= inv;
  }
}

}  // namespace kernels
}  // namespace hirpcn::ad
