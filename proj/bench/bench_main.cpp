// Timing comparison between the serial reference kernels and the OpenMP
// variants. Sizes are inflated well past the toy experiments so the
// parallel region has something to chew on.

#include <chrono>
#include <cstdio>
#include <functional>

#include "concord/backend.hpp"
#include "concord/kernels.hpp"
#include "concord/rng.hpp"
#include "concord/trust.hpp"

using namespace concord;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (auto& v : m.data) v = rng.uniform(-1.0, 1.0);
    return m;
}

Matrix random_prob_rows(std::size_t agents, std::size_t samples, std::size_t classes,
                        Rng& rng) {
    Matrix m(agents, samples * classes);
    for (std::size_t i = 0; i < agents; ++i)
        for (std::size_t s = 0; s < samples; ++s) {
            double sum = 0.0;
            double* p = m.row(i) + s * classes;
            for (std::size_t c = 0; c < classes; ++c) {
                p[c] = 0.05 + rng.next_double();
                sum += p[c];
            }
            for (std::size_t c = 0; c < classes; ++c) p[c] /= sum;
        }
    return m;
}

double time_ms(const std::function<void()>& fn, int reps) {
    using clock = std::chrono::steady_clock;
    fn();  // warm up
    const auto t0 = clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const auto t1 = clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-28s serial %9.2f ms   openmp %9.2f ms   speedup %.2fx\n", name,
                serial_ms, parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
    std::printf("threads available: %d\n", max_threads());
    Rng rng(7);

    {
        const Matrix a = random_matrix(384, 384, rng);
        const Matrix b = random_matrix(384, 384, rng);
        Matrix sink;
        const double s = time_ms([&] { sink = kernels::serial::matmul(a, b); }, 5);
        const double p = time_ms([&] { sink = kernels::par::matmul(a, b); }, 5);
        report("matmul 384x384", s, p);
    }
    {
        const std::size_t agents = 16;
        const std::size_t samples = 6000;
        const std::size_t classes = 10;
        const Matrix values = random_prob_rows(agents, samples, classes, rng);
        Matrix weights(agents, samples, 1.0);
        Matrix sink;
        const double s = time_ms(
            [&] { sink = kernels::serial::cosine_scores(values, samples, classes, weights); },
            5);
        const double p = time_ms(
            [&] { sink = kernels::par::cosine_scores(values, samples, classes, weights); },
            5);
        report("trust scores 16x6000x10", s, p);
    }
    {
        const Matrix w = random_matrix(512, 2048, rng);
        const Matrix x = random_matrix(512, 2048, rng);
        Matrix sink;
        const double s = time_ms([&] { sink = kernels::serial::matmul_at_b(w, x); }, 5);
        const double p = time_ms([&] { sink = kernels::par::matmul_at_b(w, x); }, 5);
        report("gradient gemm 2048x2048", s, p);
    }
    {
        Matrix logits = random_matrix(200000, 16, rng);
        const double s = time_ms(
            [&] {
                Matrix m = logits;
                kernels::serial::softmax_rows(m);
            },
            5);
        const double p = time_ms(
            [&] {
                Matrix m = logits;
                kernels::par::softmax_rows(m);
            },
            5);
        report("softmax 200k rows", s, p);
    }
    return 0;
}
