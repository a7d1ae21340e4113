#include "concord/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "concord/errors.hpp"
#include "concord/kernels.hpp"

namespace concord {

namespace {

void validate_stochastic(const Matrix& m, double tol) {
    if (m.rows != m.cols) throw InvalidInputError("stochastic matrix must be square");
    if (m.rows < 2) throw InvalidInputError("stochastic matrix needs dimension >= 2");
    for (std::size_t i = 0; i < m.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            const double v = m(i, j);
            if (!(v >= 0.0))
                throw InvalidInputError("stochastic matrix entry (" + std::to_string(i) +
                                        "," + std::to_string(j) + ") is negative or NaN");
            sum += v;
        }
        if (std::fabs(sum - 1.0) > tol)
            throw InvalidInputError("stochastic matrix row " + std::to_string(i) +
                                    " sums to " + format_double(sum));
    }
}

}  // namespace

StochasticMatrix::StochasticMatrix(Matrix m, double row_sum_tol) : m_(std::move(m)) {
    validate_stochastic(m_, row_sum_tol);
}

bool StochasticMatrix::positive() const {
    return std::all_of(m_.data.begin(), m_.data.end(), [](double v) { return v > 0.0; });
}

double StochasticMatrix::column_sum(std::size_t j) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < m_.rows; ++i) sum += m_(i, j);
    return sum;
}

StochasticMatrix StochasticMatrix::uniform(std::size_t n) {
    return StochasticMatrix(Matrix(n, n, 1.0 / static_cast<double>(n)));
}

StochasticMatrix StochasticMatrix::identity(std::size_t n) {
    return StochasticMatrix(Matrix::identity(n));
}

StationaryDistribution::StationaryDistribution(std::vector<double> weights, double tol)
    : w_(std::move(weights)) {
    double sum = 0.0;
    for (double v : w_) {
        if (!(v >= 0.0))
            throw InvalidInputError("stationary distribution has a negative entry");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > tol)
        throw InvalidInputError("stationary distribution sums to " + format_double(sum));
}

SimilarityMatrix::SimilarityMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows != m_.cols) throw InvalidInputError("similarity matrix must be square");
    for (std::size_t i = 0; i < m_.rows; ++i) {
        double row_max = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m_.cols; ++j) {
            if (!(m_(i, j) >= 0.0))
                throw InvalidInputError("similarity entries must be nonnegative");
            row_max = std::max(row_max, m_(i, j));
        }
        if (m_(i, i) < row_max)
            throw InvalidInputError("similarity matrix is not self-confident at row " +
                                    std::to_string(i));
    }
}

StochasticMatrix SimilarityMatrix::row_normalized() const {
    Matrix out = m_;
    for (std::size_t i = 0; i < out.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < out.cols; ++j) sum += out(i, j);
        if (sum <= 0.0)
            throw InvalidInputError("similarity matrix row " + std::to_string(i) +
                                    " is all zero");
        for (std::size_t j = 0; j < out.cols; ++j) out(i, j) /= sum;
    }
    return StochasticMatrix(std::move(out));
}

double row_difference_delta(const Matrix& m) {
    if (m.rows < 2) throw InvalidInputError("row_difference_delta needs >= 2 rows");
    double worst = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) {
        double lo = m(0, j);
        double hi = m(0, j);
        for (std::size_t i = 1; i < m.rows; ++i) {
            lo = std::min(lo, m(i, j));
            hi = std::max(hi, m(i, j));
        }
        worst = std::max(worst, hi - lo);
    }
    return worst;
}

double row_difference_delta(const StochasticMatrix& w) {
    return row_difference_delta(w.mat());
}

double scrambling_coefficient(const StochasticMatrix& w) {
    const Matrix& m = w.mat();
    double min_overlap = std::numeric_limits<double>::infinity();
    for (std::size_t i1 = 0; i1 < m.rows; ++i1) {
        for (std::size_t i2 = i1 + 1; i2 < m.rows; ++i2) {
            double overlap = 0.0;
            for (std::size_t j = 0; j < m.cols; ++j)
                overlap += std::min(m(i1, j), m(i2, j));
            min_overlap = std::min(min_overlap, overlap);
        }
    }
    return 1.0 - min_overlap;
}

bool is_irreducible(const StochasticMatrix& w) {
    const Matrix& m = w.mat();
    const std::size_t n = m.rows;
    std::vector<char> seen(n);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < n; ++start) {
        std::fill(seen.begin(), seen.end(), 0);
        stack.assign(1, start);
        seen[start] = 1;
        std::size_t reached = 1;
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            for (std::size_t j = 0; j < n; ++j) {
                if (m(v, j) > 0.0 && !seen[j]) {
                    seen[j] = 1;
                    ++reached;
                    stack.push_back(j);
                }
            }
        }
        if (reached != n) return false;
    }
    return true;
}

bool is_aperiodic(const StochasticMatrix& w) {
    for (std::size_t i = 0; i < w.size(); ++i)
        if (!(w(i, i) > 0.0)) return false;
    return true;
}

bool is_sia(const StochasticMatrix& w) {
    // Row-stochasticity already holds by construction.
    return is_irreducible(w) && is_aperiodic(w);
}

StochasticMatrix chain_product(std::span<const StochasticMatrix> ws, Backend be) {
    if (ws.empty()) throw InvalidInputError("chain_product: empty sequence");
    const std::size_t n = ws.front().size();
    for (const auto& w : ws)
        if (w.size() != n) throw InvalidInputError("chain_product: dimension mismatch");
    Matrix acc = ws.front().mat();
    for (std::size_t k = 1; k < ws.size(); ++k)
        acc = kernels::matmul(ws[k].mat(), acc, be);
    return StochasticMatrix(std::move(acc), kRowSumTolProduct);
}

StationaryDistribution stationary_distribution(const StochasticMatrix& w, double tol,
                                               long max_iter) {
    if (!is_sia(w))
        throw InvalidInputError("stationary_distribution requires an SIA matrix");
    const Matrix& m = w.mat();
    const std::size_t n = m.rows;
    std::vector<double> pi(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);
    double residual = std::numeric_limits<double>::infinity();
    for (long iter = 0; iter < max_iter; ++iter) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += pi[i] * m(i, j);
            next[j] = acc;
        }
        double total = 0.0;
        for (double v : next) total += v;
        for (auto& v : next) v /= total;
        residual = 0.0;
        for (std::size_t j = 0; j < n; ++j) residual += std::fabs(next[j] - pi[j]);
        pi = next;
        if (residual <= tol) return StationaryDistribution(pi);
    }
    throw ConvergenceError("stationary_distribution: no convergence after " +
                               std::to_string(max_iter) + " iterations (residual " +
                               format_double(residual) + ")",
                           pi, residual);
}

StochasticMatrix metropolis_from_stationary(const StochasticMatrix& phi,
                                            const StationaryDistribution& pi) {
    const std::size_t n = phi.size();
    if (pi.size() != n)
        throw InvalidInputError("metropolis: dimension mismatch between phi and pi");
    for (std::size_t i = 0; i < n; ++i)
        if (!(pi[i] > 0.0))
            throw InvalidInputError("metropolis: pi must be strictly positive");

    Matrix p(n, n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        double off_sum = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
            if (y == x) continue;
            const double fwd = phi(x, y);
            const double bwd = phi(y, x);
            if (fwd == 0.0) {
                if (bwd != 0.0)
                    throw InvalidInputError(
                        "metropolis: phi(x,y)=0 with phi(y,x)!=0 leaves the "
                        "acceptance ratio undefined");
                continue;
            }
            const double ratio = (pi[y] * bwd) / (pi[x] * fwd);
            p(x, y) = fwd * std::min(1.0, ratio);
            off_sum += p(x, y);
        }
        double diag = 1.0 - off_sum;
        if (diag < 0.0 && diag > -1e-12) diag = 0.0;  // rounding guard
        p(x, x) = diag;
    }
    return StochasticMatrix(std::move(p));
}

bool check_single_lowquality_conditions(const StochasticMatrix& w, std::size_t b) {
    const std::size_t n = w.size();
    if (b >= n) throw InvalidInputError("check_single_lowquality: index out of range");
    // (1) every other row has its minimum at column b
    for (std::size_t j = 0; j < n; ++j) {
        if (j == b) continue;
        for (std::size_t i = 0; i < n; ++i)
            if (w(j, b) > w(j, i)) return false;
    }
    // (2) column b has the strictly smallest column sum
    const double sum_b = w.column_sum(b);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == b) continue;
        if (!(sum_b < w.column_sum(i))) return false;
    }
    return true;
}

bool check_multi_lowquality_conditions(const StochasticMatrix& w,
                                       const std::vector<std::size_t>& regular,
                                       const std::vector<std::size_t>& lowq) {
    const std::size_t n = w.size();
    if (regular.empty() || lowq.empty())
        throw InvalidInputError("check_multi_lowquality: both index sets must be non-empty");
    std::vector<int> tag(n, -1);
    for (std::size_t r : regular) {
        if (r >= n || tag[r] != -1)
            throw InvalidInputError("check_multi_lowquality: bad regular index set");
        tag[r] = 0;
    }
    for (std::size_t b : lowq) {
        if (b >= n || tag[b] != -1)
            throw InvalidInputError("check_multi_lowquality: index sets overlap or repeat");
        tag[b] = 1;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (tag[i] == -1)
            throw InvalidInputError("check_multi_lowquality: index sets must cover [0,N)");

    // (1) strict separation of column sums
    double min_regular = std::numeric_limits<double>::infinity();
    for (std::size_t r : regular) min_regular = std::min(min_regular, w.column_sum(r));
    double max_lowq = -std::numeric_limits<double>::infinity();
    for (std::size_t b : lowq) max_lowq = std::max(max_lowq, w.column_sum(b));
    if (!(min_regular > max_lowq)) return false;

    // (2) regular-row trust gap beats the low-quality node's self-confidence gap
    for (std::size_t r : regular) {
        for (std::size_t b : lowq) {
            double gap = 0.0;
            for (std::size_t nn : regular) gap += w(nn, r) - w(nn, b);
            if (!(gap > w(b, b) - w(b, r))) return false;
        }
    }

    // (3) everyone (except b itself) trusts regular nodes at least as much
    for (std::size_t r : regular)
        for (std::size_t b : lowq)
            for (std::size_t nn = 0; nn < n; ++nn) {
                if (nn == b) continue;
                if (w(nn, r) < w(nn, b)) return false;
            }
    return true;
}

bool confidence_weighting_check(std::span<const double> a, std::span<const double> b,
                                std::size_t bad, double c1, double c2) {
    if (!(c1 > 1.0) || !(c2 > 0.0 && c2 < 1.0))
        throw WeightRangeError("confidence_weighting_check: need c1 > 1 and 0 < c2 < 1");
    if (a.size() != b.size() || a.empty())
        throw InvalidInputError("confidence_weighting_check: size mismatch");
    if (bad >= a.size())
        throw InvalidInputError("confidence_weighting_check: bad index out of range");
    double sum_a = 0.0;
    double sum_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a[i] > 0.0) || !(b[i] > 0.0))
            throw InvalidInputError("confidence_weighting_check: vectors must be positive");
        sum_a += a[i];
        sum_b += b[i];
    }
    if (!(a[bad] / sum_a < b[bad] / sum_b))
        throw RatioPreconditionError(
            "confidence_weighting_check: requires a[bad]/sum(a) < b[bad]/sum(b)");
    double weighted_sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) weighted_sum += c1 * a[i] + c2 * b[i];
    const double lhs = (c1 * a[bad] + c2 * b[bad]) / weighted_sum;
    const double rhs = (a[bad] + b[bad]) / (sum_a + sum_b);
    return lhs < rhs;
}

}  // namespace concord
