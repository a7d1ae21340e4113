#pragma once

#include <cstddef>
#include <vector>

#include "concord/backend.hpp"
#include "concord/matrix.hpp"

namespace concord::kernels {

// Serial reference implementations. Kept plain (no pragmas) and used as the
// oracle in tests and as the fallback when OpenMP is unavailable.
namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_at_b(const Matrix& a, const Matrix& b);  // A^T * B
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);  // A * B^T
// Raw trust scores from flattened per-agent prediction blocks.
// values: agents x (samples*classes); row_weights: agents x samples or empty.
// out(i,j) = (1/samples) * sum_s w_i[s] * cos(block_i[s], block_j[s]).
Matrix cosine_scores(const Matrix& values, std::size_t samples, std::size_t classes,
                     const Matrix& row_weights);
Matrix pairwise_sqdist(const Matrix& values);  // out(i,j) = ||row_i - row_j||^2
void tanh_rows(Matrix& m);
void softmax_rows(Matrix& m);
void add_bias_rows(Matrix& m, const std::vector<double>& bias);
std::vector<double> col_sums(const Matrix& m);
}  // namespace serial

// OpenMP variants; bit-identical to the serial reference (each output
// element keeps its fixed accumulation order).
namespace par {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);
Matrix cosine_scores(const Matrix& values, std::size_t samples, std::size_t classes,
                     const Matrix& row_weights);
Matrix pairwise_sqdist(const Matrix& values);
void tanh_rows(Matrix& m);
void softmax_rows(Matrix& m);
void add_bias_rows(Matrix& m, const std::vector<double>& bias);
std::vector<double> col_sums(const Matrix& m);
}  // namespace par

Matrix matmul(const Matrix& a, const Matrix& b, Backend be = default_backend());
Matrix matmul_at_b(const Matrix& a, const Matrix& b, Backend be = default_backend());
Matrix matmul_a_bt(const Matrix& a, const Matrix& b, Backend be = default_backend());
Matrix cosine_scores(const Matrix& values, std::size_t samples, std::size_t classes,
                     const Matrix& row_weights, Backend be = default_backend());
Matrix pairwise_sqdist(const Matrix& values, Backend be = default_backend());
void tanh_rows(Matrix& m, Backend be = default_backend());
void softmax_rows(Matrix& m, Backend be = default_backend());
void add_bias_rows(Matrix& m, const std::vector<double>& bias,
                   Backend be = default_backend());
std::vector<double> col_sums(const Matrix& m, Backend be = default_backend());

}  // namespace concord::kernels
