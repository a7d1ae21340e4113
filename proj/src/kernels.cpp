#include "concord/kernels.hpp"

#include <cmath>

#include "concord/errors.hpp"

namespace concord::kernels {

namespace {

// Per-output-row bodies shared by the serial and OpenMP variants. Each
// output element is written by exactly one call and accumulated in a fixed
// order, which is what makes the two backends bit-identical.

void matmul_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
    double* out_row = out.row(i);
    const double* a_row = a.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
        const double aik = a_row[k];
        const double* b_row = b.row(k);
        for (std::size_t j = 0; j < b.cols; ++j) out_row[j] += aik * b_row[j];
    }
}

void matmul_at_b_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
    double* out_row = out.row(i);
    for (std::size_t n = 0; n < a.rows; ++n) {
        const double ani = a(n, i);
        const double* b_row = b.row(n);
        for (std::size_t j = 0; j < b.cols; ++j) out_row[j] += ani * b_row[j];
    }
}

void matmul_a_bt_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
    double* out_row = out.row(i);
    const double* a_row = a.row(i);
    for (std::size_t j = 0; j < b.rows; ++j) {
        const double* b_row = b.row(j);
        double acc = 0.0;
        for (std::size_t k = 0; k < a.cols; ++k) acc += a_row[k] * b_row[k];
        out_row[j] = acc;
    }
}

void norms_row(const Matrix& values, std::size_t samples, std::size_t classes,
               Matrix& norms, std::size_t i) {
    const double* v = values.row(i);
    for (std::size_t s = 0; s < samples; ++s) {
        const double* p = v + s * classes;
        double acc = 0.0;
        for (std::size_t c = 0; c < classes; ++c) acc += p[c] * p[c];
        norms(i, s) = std::sqrt(acc);
    }
}

void cosine_row(const Matrix& values, std::size_t samples, std::size_t classes,
                const Matrix& row_weights, const Matrix& norms, Matrix& out,
                std::size_t i) {
    const double* vi = values.row(i);
    const bool weighted = row_weights.rows != 0;
    for (std::size_t j = 0; j < values.rows; ++j) {
        const double* vj = values.row(j);
        double acc = 0.0;
        for (std::size_t s = 0; s < samples; ++s) {
            const double* pi = vi + s * classes;
            const double* pj = vj + s * classes;
            double dot = 0.0;
            for (std::size_t c = 0; c < classes; ++c) dot += pi[c] * pj[c];
            double cosv = dot / (norms(i, s) * norms(j, s));
            if (weighted) cosv *= row_weights(i, s);
            acc += cosv;
        }
        out(i, j) = acc / static_cast<double>(samples);
    }
}

void sqdist_row(const Matrix& values, Matrix& out, std::size_t i) {
    const double* vi = values.row(i);
    for (std::size_t j = 0; j < values.rows; ++j) {
        const double* vj = values.row(j);
        double acc = 0.0;
        for (std::size_t k = 0; k < values.cols; ++k) {
            const double d = vi[k] - vj[k];
            acc += d * d;
        }
        out(i, j) = acc;
    }
}

void tanh_row(Matrix& m, std::size_t i) {
    double* r = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) r[j] = std::tanh(r[j]);
}

void softmax_row(Matrix& m, std::size_t i) {
    double* r = m.row(i);
    double hi = r[0];
    for (std::size_t j = 1; j < m.cols; ++j) hi = std::max(hi, r[j]);
    double total = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) {
        r[j] = std::exp(r[j] - hi);
        total += r[j];
    }
    for (std::size_t j = 0; j < m.cols; ++j) r[j] /= total;
}

void add_bias_row(Matrix& m, const std::vector<double>& bias, std::size_t i) {
    double* r = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) r[j] += bias[j];
}

double col_sum_one(const Matrix& m, std::size_t j) {
    double acc = 0.0;
    for (std::size_t n = 0; n < m.rows; ++n) acc += m(n, j);
    return acc;
}

void check_matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw InvalidInputError("matmul: inner dimension mismatch");
}

void check_at_b(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw InvalidInputError("matmul_at_b: row count mismatch");
}

void check_a_bt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw InvalidInputError("matmul_a_bt: column count mismatch");
}

void check_cosine(const Matrix& values, std::size_t samples, std::size_t classes,
                  const Matrix& row_weights) {
    if (values.cols != samples * classes)
        throw InvalidInputError("cosine_scores: values shape mismatch");
    if (row_weights.rows != 0 &&
        (row_weights.rows != values.rows || row_weights.cols != samples))
        throw InvalidInputError("cosine_scores: weight shape mismatch");
}

}  // namespace

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_matmul(a, b);
    Matrix out(a.rows, b.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) matmul_row(a, b, out, i);
    return out;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    check_at_b(a, b);
    Matrix out(a.cols, b.cols, 0.0);
    for (std::size_t i = 0; i < a.cols; ++i) matmul_at_b_row(a, b, out, i);
    return out;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    check_a_bt(a, b);
    Matrix out(a.rows, b.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) matmul_a_bt_row(a, b, out, i);
    return out;
}

Matrix cosine_scores(const Matrix& values, std::size_t samples, std::size_t classes,
                     const Matrix& row_weights) {
    check_cosine(values, samples, classes, row_weights);
    Matrix norms(values.rows, samples);
    for (std::size_t i = 0; i < values.rows; ++i)
        norms_row(values, samples, classes, norms, i);
    Matrix out(values.rows, values.rows);
    for (std::size_t i = 0; i < values.rows; ++i)
        cosine_row(values, samples, classes, row_weights, norms, out, i);
    return out;
}

Matrix pairwise_sqdist(const Matrix& values) {
    Matrix out(values.rows, values.rows);
    for (std::size_t i = 0; i < values.rows; ++i) sqdist_row(values, out, i);
    return out;
}

void tanh_rows(Matrix& m) {
    for (std::size_t i = 0; i < m.rows; ++i) tanh_row(m, i);
}

void softmax_rows(Matrix& m) {
    for (std::size_t i = 0; i < m.rows; ++i) softmax_row(m, i);
}

void add_bias_rows(Matrix& m, const std::vector<double>& bias) {
    if (bias.size() != m.cols) throw InvalidInputError("add_bias_rows: size mismatch");
    for (std::size_t i = 0; i < m.rows; ++i) add_bias_row(m, bias, i);
}

std::vector<double> col_sums(const Matrix& m) {
    std::vector<double> out(m.cols);
    for (std::size_t j = 0; j < m.cols; ++j) out[j] = col_sum_one(m, j);
    return out;
}

}  // namespace serial

namespace par {

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_matmul(a, b);
    Matrix out(a.rows, b.cols, 0.0);
    const long n = static_cast<long>(a.rows);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) matmul_row(a, b, out, static_cast<std::size_t>(i));
    return out;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    check_at_b(a, b);
    Matrix out(a.cols, b.cols, 0.0);
    const long n = static_cast<long>(a.cols);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) matmul_at_b_row(a, b, out, static_cast<std::size_t>(i));
    return out;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    check_a_bt(a, b);
    Matrix out(a.rows, b.rows, 0.0);
    const long n = static_cast<long>(a.rows);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) matmul_a_bt_row(a, b, out, static_cast<std::size_t>(i));
    return out;
}

Matrix cosine_scores(const Matrix& values, std::size_t samples, std::size_t classes,
                     const Matrix& row_weights) {
    check_cosine(values, samples, classes, row_weights);
    Matrix norms(values.rows, samples);
    const long n = static_cast<long>(values.rows);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i)
        norms_row(values, samples, classes, norms, static_cast<std::size_t>(i));
    Matrix out(values.rows, values.rows);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i)
        cosine_row(values, samples, classes, row_weights, norms, out,
                   static_cast<std::size_t>(i));
    return out;
}

Matrix pairwise_sqdist(const Matrix& values) {
    Matrix out(values.rows, values.rows);
    const long n = static_cast<long>(values.rows);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) sqdist_row(values, out, static_cast<std::size_t>(i));
    return out;
}

void tanh_rows(Matrix& m) {
    const long n = static_cast<long>(m.rows);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) tanh_row(m, static_cast<std::size_t>(i));
}

void softmax_rows(Matrix& m) {
    const long n = static_cast<long>(m.rows);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) softmax_row(m, static_cast<std::size_t>(i));
}

void add_bias_rows(Matrix& m, const std::vector<double>& bias) {
    if (bias.size() != m.cols) throw InvalidInputError("add_bias_rows: size mismatch");
    const long n = static_cast<long>(m.rows);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) add_bias_row(m, bias, static_cast<std::size_t>(i));
}

std::vector<double> col_sums(const Matrix& m) {
    std::vector<double> out(m.cols);
    const long n = static_cast<long>(m.cols);
#pragma omp parallel for schedule(static)
    for (long j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] =
        col_sum_one(m, static_cast<std::size_t>(j));
    return out;
}

}  // namespace par

Matrix matmul(const Matrix& a, const Matrix& b, Backend be) {
    return be == Backend::parallel ? par::matmul(a, b) : serial::matmul(a, b);
}
Matrix matmul_at_b(const Matrix& a, const Matrix& b, Backend be) {
    return be == Backend::parallel ? par::matmul_at_b(a, b) : serial::matmul_at_b(a, b);
}
Matrix matmul_a_bt(const Matrix& a, const Matrix& b, Backend be) {
    return be == Backend::parallel ? par::matmul_a_bt(a, b) : serial::matmul_a_bt(a, b);
}
Matrix cosine_scores(const Matrix& values, std::size_t samples, std::size_t classes,
                     const Matrix& row_weights, Backend be) {
    return be == Backend::parallel
               ? par::cosine_scores(values, samples, classes, row_weights)
               : serial::cosine_scores(values, samples, classes, row_weights);
}
Matrix pairwise_sqdist(const Matrix& values, Backend be) {
    return be == Backend::parallel ? par::pairwise_sqdist(values)
                                   : serial::pairwise_sqdist(values);
}
void tanh_rows(Matrix& m, Backend be) {
    be == Backend::parallel ? par::tanh_rows(m) : serial::tanh_rows(m);
}
void softmax_rows(Matrix& m, Backend be) {
    be == Backend::parallel ? par::softmax_rows(m) : serial::softmax_rows(m);
}
void add_bias_rows(Matrix& m, const std::vector<double>& bias, Backend be) {
    be == Backend::parallel ? par::add_bias_rows(m, bias) : serial::add_bias_rows(m, bias);
}
std::vector<double> col_sums(const Matrix& m, Backend be) {
    return be == Backend::parallel ? par::col_sums(m) : serial::col_sums(m);
}

}  // namespace concord::kernels
