#include "bads/kernels.hpp"

#include <fmt/format.h>

#ifdef BADS_HAVE_OPENMP
#include <omp.h>
#endif

namespace bads::kernels {
namespace {

void require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    throw ShapeError(fmt::format("{}: incompatible shapes {}x{} and {}x{}", op, a.rows(), a.cols(),
                                 b.rows(), b.cols()));
  }
}

}  // namespace

int max_threads() {
#ifdef BADS_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul", a, b);
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn", a, b);
  Matrix c(a.cols(), b.cols());
  for (std::size_t p = 0; p < a.cols(); ++p) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < a.rows(); ++i) acc += a(i, p) * b(i, j);
      c(p, j) = acc;
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt", a, b);
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(j, k);
      c(i, j) = acc;
    }
  }
  return c;
}

void add_row_vector(Matrix& m, const Matrix& row) {
  require(row.rows() == 1 && row.cols() == m.cols(), "add_row_vector", m, row);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) += row(0, j);
  }
}

Matrix column_sums(const Matrix& m) {
  Matrix out(1, m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) acc += m(i, j);
    out(0, j) = acc;
  }
  return out;
}

}  // namespace serial

namespace parallel {

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul", a, b);
  const std::size_t n = a.rows(), inner = a.cols(), m = b.cols();
  Matrix c(n, m);
  const bool big = n * inner * m >= kParallelThreshold;
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static) if (big)
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = pc + i * m;
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = pa[i * inner + k];
      const double* brow = pb + k * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn", a, b);
  const std::size_t n = a.rows(), ka = a.cols(), m = b.cols();
  Matrix c(ka, m);
  const bool big = n * ka * m >= kParallelThreshold;
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static) if (big)
  for (std::size_t p = 0; p < ka; ++p) {
    double* crow = pc + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double aip = pa[i * ka + p];
      const double* brow = pb + i * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt", a, b);
  const std::size_t n = a.rows(), inner = a.cols(), m = b.rows();
  Matrix c(n, m);
  const bool big = n * inner * m >= kParallelThreshold;
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static) if (big)
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = pa + i * inner;
    for (std::size_t j = 0; j < m; ++j) {
      const double* brow = pb + j * inner;
      double acc = 0.0;
      for (std::size_t k = 0; k < inner; ++k) acc += arow[k] * brow[k];
      pc[i * m + j] = acc;
    }
  }
  return c;
}

void add_row_vector(Matrix& m, const Matrix& row) {
  require(row.rows() == 1 && row.cols() == m.cols(), "add_row_vector", m, row);
  const std::size_t n = m.rows(), w = m.cols();
  double* pm = m.data();
  const double* pr = row.data();
#pragma omp parallel for schedule(static) if (n * w >= kParallelThreshold)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < w; ++j) pm[i * w + j] += pr[j];
  }
}

Matrix column_sums(const Matrix& m) {
  const std::size_t n = m.rows(), w = m.cols();
  Matrix out(1, w);
  const double* pm = m.data();
  double* po = out.data();
#pragma omp parallel for schedule(static) if (n * w >= kParallelThreshold)
  for (std::size_t j = 0; j < w; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += pm[i * w + j];
    po[j] = acc;
  }
  return out;
}

}  // namespace parallel
}  // namespace bads::kernels
