#pragma once

#include "bads/matrix.hpp"

// Dense kernels behind the network's forward and backward passes.
//
// `serial` is the textbook reference. `parallel` splits output rows across
// OpenMP threads and reorders loops for locality, but every output element is
// accumulated over the reduction index in the same increasing order, so both
// variants produce bit-identical results. Tests hold them to that.
namespace bads::kernels {

namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);     // a * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
void add_row_vector(Matrix& m, const Matrix& row);
Matrix column_sums(const Matrix& m);
}  // namespace serial

namespace parallel {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
void add_row_vector(Matrix& m, const Matrix& row);
Matrix column_sums(const Matrix& m);
}  // namespace parallel

// Below this many multiply-adds the parallel kernels stay on one thread.
inline constexpr std::size_t kParallelThreshold = 1 << 15;

int max_threads();

}  // namespace bads::kernels
