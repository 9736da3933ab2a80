#include <cmath>

#include "hirpcn/ad/kernels.hpp"

namespace hirpcn::ad::ref {

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  require_shape(a.cols() == b.rows(), "ref::matmul", a, b);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
      c(i, j) += s;
    }
  }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  require_shape(a.cols() == b.cols(), "ref::matmul_nt", a, b);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(j, p);
      c(i, j) += s;
    }
  }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  require_shape(a.rows() == b.rows(), "ref::matmul_tn", a, b);
  for (std::size_t i = 0; i < a.cols(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.rows(); ++p) s += a(p, i) * b(p, j);
      c(i, j) += s;
    }
  }
}

void softmax_rows(const Matrix& x, Matrix& y) {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mx = x(r, 0);
    for (std::size_t j = 1; j < x.cols(); ++j) mx = std::fmax(mx, x(r, j));
    double total = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) total += std::exp(x(r, j) - mx);
    for (std::size_t j = 0; j < x.cols(); ++j) y(r, j) = std::exp(x(r, j) - mx) / total;
  }
}

}  // namespace hirpcn::ad::ref
