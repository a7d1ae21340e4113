#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "concord/backend.hpp"
#include "concord/matrix.hpp"

namespace concord {

inline constexpr double kRowSumTolConstruct = 1e-9;
inline constexpr double kRowSumTolProduct = 1e-8;
inline constexpr double kStationaryTol = 1e-10;
inline constexpr long kStationaryMaxIter = 100000;

// Square row-stochastic matrix: entries >= 0, every row sums to 1 within
// tolerance, N >= 2. Validated on construction.
class StochasticMatrix {
public:
    explicit StochasticMatrix(Matrix m, double row_sum_tol = kRowSumTolConstruct);

    const Matrix& mat() const { return m_; }
    std::size_t size() const { return m_.rows; }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

    bool positive() const;  // every entry strictly > 0
    double column_sum(std::size_t j) const;

    static StochasticMatrix uniform(std::size_t n);
    static StochasticMatrix identity(std::size_t n);

private:
    Matrix m_;
};

// Probability vector: entries >= 0 summing to 1 within tolerance.
class StationaryDistribution {
public:
    explicit StationaryDistribution(std::vector<double> weights, double tol = 1e-9);
    const std::vector<double>& weights() const { return w_; }
    std::size_t size() const { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }

private:
    std::vector<double> w_;
};

// Pre-normalization pairwise alignment scores: nonnegative, square, and
// self-confident (each diagonal entry is the maximum of its row).
class SimilarityMatrix {
public:
    explicit SimilarityMatrix(Matrix m);
    const Matrix& mat() const { return m_; }
    StochasticMatrix row_normalized() const;

private:
    Matrix m_;
};

// Max over columns of the largest spread between any two rows; 0 iff all
// rows are identical. The Matrix overload accepts non-square stacks of
// prediction rows (at least 2 rows).
double row_difference_delta(const Matrix& m);
double row_difference_delta(const StochasticMatrix& w);

// 1 - min over row pairs of their overlap sum_j min(w_{i1,j}, w_{i2,j});
// < 1 iff the matrix is scrambling. Contraction factor for row differences.
double scrambling_coefficient(const StochasticMatrix& w);

// Strong connectivity of the directed graph with an edge (i,j) iff w_ij > 0.
bool is_irreducible(const StochasticMatrix& w);

// Self-loop test: every diagonal entry > 0. Intentionally stricter than
// gcd-of-cycle-lengths aperiodicity; a matrix can be aperiodic in the
// general sense and still fail this check.
bool is_aperiodic(const StochasticMatrix& w);

// Stochastic + irreducible + aperiodic.
bool is_sia(const StochasticMatrix& w);

// Product of a chronologically ordered sequence [W(1), ..., W(t)], applied
// as W(t) * W(t-1) * ... * W(1). Result validated at the product tolerance.
StochasticMatrix chain_product(std::span<const StochasticMatrix> ws,
                               Backend be = default_backend());

// Left fixed point pi = pi * W by power iteration from the uniform vector,
// convergence measured in L1. Requires is_sia(w).
StationaryDistribution stationary_distribution(const StochasticMatrix& w,
                                               double tol = kStationaryTol,
                                               long max_iter = kStationaryMaxIter);

// Metropolis construction: off-diagonal p(x,y) = phi(x,y) * min(1, r) with
// r = pi(y)/pi(x) * phi(y,x)/phi(x,y) (the ratio correction is what makes
// non-symmetric phi work); diagonal absorbs the remainder. The result has
// stationary distribution pi and p(x,x) >= phi(x,x).
StochasticMatrix metropolis_from_stationary(const StochasticMatrix& phi,
                                            const StationaryDistribution& pi);

// Single low-quality node b: (1) every other row has its minimum at column
// b, and (2) column b has the strictly smallest column sum.
bool check_single_lowquality_conditions(const StochasticMatrix& w, std::size_t b);

// Multiple low-quality nodes; `regular` and `lowq` must partition [0, N).
// (1) min regular column sum > max low-quality column sum (strict);
// (2) sum_{n in regular}(w_nr - w_nb) > w_bb - w_br for all r, b (strict);
// (3) w_nr >= w_nb for all r, b and all n != b (non-strict).
bool check_multi_lowquality_conditions(const StochasticMatrix& w,
                                       const std::vector<std::size_t>& regular,
                                       const std::vector<std::size_t>& lowq);

// Confidence down-weighting inequality: with c1 > 1 > c2 > 0 and
// a[bad]/sum(a) < b[bad]/sum(b), verifies
//   (c1*a[bad] + c2*b[bad]) / sum(c1*a + c2*b) < (a[bad] + b[bad]) / sum(a + b).
// Always true when the preconditions hold.
bool confidence_weighting_check(std::span<const double> a, std::span<const double> b,
                                std::size_t bad, double c1, double c2);

}  // namespace concord
