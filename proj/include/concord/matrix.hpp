#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace concord {

// Dense row-major matrix of doubles. Agent counts are small (cross-silo),
// so no sparse machinery anywhere in this project.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }

    bool operator==(const Matrix&) const = default;

    static Matrix identity(std::size_t n);
    static Matrix filled(std::size_t r, std::size_t c, double v) { return Matrix(r, c, v); }
};

Matrix transpose(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& m);

// Shortest decimal form that round-trips the double exactly ("%.17g").
std::string format_double(double v);

// CSV layout: one matrix row per line, comma-separated, full precision.
void write_matrix_csv(std::ostream& os, const Matrix& m);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(std::istream& is);
Matrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace concord
