#include "concord/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "concord/errors.hpp"

namespace concord {

namespace {

std::string matrix_dump(const Matrix& m) {
    std::ostringstream os;
    write_matrix_csv(os, m);
    return os.str();
}

Matrix dirichlet_rows(std::size_t n, const std::vector<double>& alpha, Rng& rng) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> row = rng.dirichlet(alpha);
        std::copy(row.begin(), row.end(), m.row(i));
    }
    return m;
}

}  // namespace

StochasticMatrix random_positive_stochastic(std::size_t n, Rng& rng) {
    return StochasticMatrix(dirichlet_rows(n, std::vector<double>(n, 1.0), rng));
}

StochasticMatrix random_permutation_matrix(std::size_t n, Rng& rng) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, perm[i]) = 1.0;
    return StochasticMatrix(std::move(m));
}

StationaryDistribution random_positive_distribution(std::size_t n, Rng& rng) {
    std::vector<double> w(n);
    double sum = 0.0;
    for (auto& v : w) {
        v = rng.uniform(0.05, 1.0);
        sum += v;
    }
    for (auto& v : w) v /= sum;
    return StationaryDistribution(std::move(w));
}

StochasticMatrix random_self_confident_doubly_stochastic(std::size_t n, Rng& rng) {
    // convex mix of random permutation matrices, symmetrized, then blended
    // with the identity until the diagonal dominates every row
    Matrix mix(n, n, 0.0);
    const int parts = 4;
    const std::vector<double> coeff = rng.dirichlet_symmetric(1.0, parts);
    for (int p = 0; p < parts; ++p) {
        const StochasticMatrix perm = random_permutation_matrix(n, rng);
        for (std::size_t k = 0; k < mix.data.size(); ++k)
            mix.data[k] += coeff[static_cast<std::size_t>(p)] * perm.mat().data[k];
    }
    Matrix sym(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) sym(i, j) = 0.5 * (mix(i, j) + mix(j, i));
    const double theta = rng.uniform(0.55, 0.9);
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out(i, j) = (1.0 - theta) * sym(i, j) + (i == j ? theta : 0.0);
    return StochasticMatrix(std::move(out));
}

StochasticMatrix random_self_confident_stochastic(std::size_t n, Rng& rng) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double row_max = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            m(i, j) = rng.uniform(0.05, 1.0);
            if (i != j) row_max = std::max(row_max, m(i, j));
        }
        m(i, i) = row_max * (1.0 + rng.uniform(0.05, 0.5));
    }
    return SimilarityMatrix(std::move(m)).row_normalized();
}

StochasticMatrix random_single_lowq_matrix(std::size_t n, std::size_t b, Rng& rng,
                                           int max_attempts) {
    std::vector<double> alpha(n, 2.5);
    alpha[b] = 0.5;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        StochasticMatrix w(dirichlet_rows(n, alpha, rng));
        if (check_single_lowquality_conditions(w, b)) return w;
    }
    throw GenerationError("random_single_lowq_matrix: no hit in " +
                          std::to_string(max_attempts) + " attempts");
}

StochasticMatrix random_multi_lowq_matrix(std::size_t n,
                                          const std::vector<std::size_t>& regular,
                                          const std::vector<std::size_t>& lowq, Rng& rng,
                                          int max_attempts) {
    std::vector<char> is_lowq(n, 0);
    for (std::size_t b : lowq) is_lowq.at(b) = 1;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Matrix m(n, n);
        for (std::size_t row = 0; row < n; ++row) {
            std::vector<double> alpha(n);
            for (std::size_t col = 0; col < n; ++col)
                alpha[col] = (is_lowq[col] && col != row) ? 0.35 : 3.0;
            const std::vector<double> drawn = rng.dirichlet(alpha);
            std::copy(drawn.begin(), drawn.end(), m.row(row));
        }
        StochasticMatrix w(std::move(m));
        if (check_multi_lowquality_conditions(w, regular, lowq)) return w;
    }
    throw GenerationError("random_multi_lowq_matrix: no hit in " +
                          std::to_string(max_attempts) + " attempts");
}

namespace {

SuiteResult suite_scrambling_lemma(int trials, std::uint64_t seed) {
    SuiteResult result;
    result.name = "scrambling_lemma";
    Rng rng(seed);
    for (int t = 0; t < trials; ++t) {
        const std::size_t n = 2 + rng.next_below(7);   // [2, 8]
        const std::size_t len = 1 + rng.next_below(10);  // [1, 10]
        std::vector<StochasticMatrix> chain;
        double coeff_product = 1.0;
        for (std::size_t k = 0; k < len; ++k) {
            chain.push_back(random_positive_stochastic(n, rng));
            coeff_product *= scrambling_coefficient(chain.back());
        }
        const StochasticMatrix product = chain_product(chain);
        ++result.trials;
        if (!(row_difference_delta(product) <= coeff_product + 1e-12)) {
            ++result.failures;
            for (const auto& w : chain)
                result.counterexamples.push_back(matrix_dump(w.mat()));
        }
    }
    return result;
}

SuiteResult suite_metropolis(int trials, std::uint64_t seed) {
    SuiteResult result;
    result.name = "metropolis";
    Rng rng(seed);

    // golden instance: the 4-state chain with pi = [0.3, 0.3, 0.3, 0.1]
    {
        Matrix phi(4, 4);
        const double v[16] = {1.0 / 3, 1.0 / 4, 1.0 / 4, 1.0 / 6, 1.0 / 4, 1.0 / 3,
                              1.0 / 4, 1.0 / 6, 1.0 / 4, 1.0 / 4, 1.0 / 3, 1.0 / 6,
                              1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 2};
        std::copy(std::begin(v), std::end(v), phi.data.begin());
        const double e[16] = {4.0 / 9,  1.0 / 4, 1.0 / 4, 1.0 / 18, 1.0 / 4, 4.0 / 9,
                              1.0 / 4,  1.0 / 18, 1.0 / 4, 1.0 / 4, 4.0 / 9, 1.0 / 18,
                              1.0 / 6,  1.0 / 6, 1.0 / 6, 1.0 / 2};
        Matrix expected(4, 4);
        std::copy(std::begin(e), std::end(e), expected.data.begin());
        const StationaryDistribution pi({0.3, 0.3, 0.3, 0.1});
        ++result.trials;
        const StochasticMatrix p =
            metropolis_from_stationary(StochasticMatrix(phi), pi);
        bool ok = max_abs_diff(p.mat(), expected) <= 1e-12;
        const StationaryDistribution found = stationary_distribution(p, 1e-12, 200000);
        for (std::size_t i = 0; i < 4; ++i)
            ok = ok && std::fabs(found[i] - pi[i]) <= 1e-8;
        if (!ok) {
            ++result.failures;
            result.counterexamples.push_back(matrix_dump(p.mat()));
        }
    }

    for (int t = 1; t < trials; ++t) {
        const std::size_t n = 2 + rng.next_below(7);
        const StochasticMatrix phi = (t % 2 == 0)
                                         ? random_self_confident_doubly_stochastic(n, rng)
                                         : random_self_confident_stochastic(n, rng);
        const StationaryDistribution pi = random_positive_distribution(n, rng);
        ++result.trials;
        const StochasticMatrix p = metropolis_from_stationary(phi, pi);
        bool ok = true;
        for (std::size_t x = 0; x < n; ++x)
            ok = ok && p(x, x) >= phi(x, x) - 1e-12;
        // pi must be the left fixed point
        for (std::size_t j = 0; j < n && ok; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += pi[i] * p(i, j);
            ok = std::fabs(acc - pi[j]) <= 1e-8;
        }
        // slow-mixing instances need the tighter tolerance: a step residual
        // of r leaves the iterate within r/(1-|lambda2|) of the fixed point
        const StationaryDistribution found = stationary_distribution(p, 1e-12, 200000);
        for (std::size_t i = 0; i < n && ok; ++i)
            ok = std::fabs(found[i] - pi[i]) <= 1e-8;
        if (!ok) {
            ++result.failures;
            result.counterexamples.push_back(matrix_dump(phi.mat()));
        }
    }
    return result;
}

SuiteResult suite_prop_single(int trials, std::uint64_t seed) {
    SuiteResult result;
    result.name = "prop_single";
    Rng rng(seed);
    for (int t = 0; t < trials; ++t) {
        const std::size_t n = 3 + rng.next_below(4);  // [3, 6]
        const std::size_t b = rng.next_below(n);
        const StochasticMatrix a = random_single_lowq_matrix(n, b, rng);
        const StochasticMatrix w = random_single_lowq_matrix(n, b, rng);
        const std::vector<StochasticMatrix> pair{a, w};
        const StochasticMatrix product = chain_product(pair);
        ++result.trials;
        if (!check_single_lowquality_conditions(product, b)) {
            ++result.failures;
            result.counterexamples.push_back(matrix_dump(a.mat()));
            result.counterexamples.push_back(matrix_dump(w.mat()));
        }
    }
    return result;
}

SuiteResult suite_prop_multi(int trials, std::uint64_t seed) {
    SuiteResult result;
    result.name = "prop_multi";
    Rng rng(seed);
    for (int t = 0; t < trials; ++t) {
        const std::size_t n = 4 + rng.next_below(3);        // [4, 6]
        const std::size_t n_lowq = 2 + rng.next_below(2);   // 2 or 3
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        std::vector<std::size_t> lowq(order.begin(), order.begin() + n_lowq);
        std::vector<std::size_t> regular(order.begin() + n_lowq, order.end());
        std::sort(lowq.begin(), lowq.end());
        std::sort(regular.begin(), regular.end());
        const StochasticMatrix a = random_multi_lowq_matrix(n, regular, lowq, rng);
        const StochasticMatrix w = random_multi_lowq_matrix(n, regular, lowq, rng);
        const std::vector<StochasticMatrix> pair{a, w};
        const StochasticMatrix product = chain_product(pair);
        ++result.trials;
        if (!check_multi_lowquality_conditions(product, regular, lowq)) {
            ++result.failures;
            result.counterexamples.push_back(matrix_dump(a.mat()));
            result.counterexamples.push_back(matrix_dump(w.mat()));
        }
    }
    return result;
}

SuiteResult suite_confidence_ineq(int trials, std::uint64_t seed) {
    SuiteResult result;
    result.name = "confidence_ineq";
    Rng rng(seed);
    for (int t = 0; t < trials; ++t) {
        const std::size_t n = 2 + rng.next_below(7);
        std::vector<double> a(n);
        std::vector<double> b(n);
        std::size_t bad = 0;
        for (;;) {
            for (auto& v : a) v = rng.uniform(0.01, 1.0);
            for (auto& v : b) v = rng.uniform(0.01, 1.0);
            bad = rng.next_below(n);
            const double sum_a = std::accumulate(a.begin(), a.end(), 0.0);
            const double sum_b = std::accumulate(b.begin(), b.end(), 0.0);
            if (a[bad] / sum_a < b[bad] / sum_b) break;
            if (b[bad] / sum_b < a[bad] / sum_a) {
                std::swap(a, b);
                break;
            }
        }
        const double c1 = rng.uniform(1.0 + 1e-6, 10.0);
        const double c2 = rng.uniform(1e-6, 1.0 - 1e-6);
        ++result.trials;
        if (!confidence_weighting_check(a, b, bad, c1, c2)) {
            ++result.failures;
            Matrix dump(2, n);
            std::copy(a.begin(), a.end(), dump.row(0));
            std::copy(b.begin(), b.end(), dump.row(1));
            result.counterexamples.push_back(matrix_dump(dump));
        }
    }
    return result;
}

SuiteResult suite_sia(int trials, std::uint64_t seed) {
    SuiteResult result;
    result.name = "sia";
    Rng rng(seed);
    for (int t = 0; t < trials; ++t) {
        const std::size_t n = 2 + rng.next_below(7);
        const std::size_t len = 1 + rng.next_below(10);
        std::vector<StochasticMatrix> chain;
        for (std::size_t k = 0; k < len; ++k)
            chain.push_back(random_positive_stochastic(n, rng));
        const StochasticMatrix product = chain_product(chain);
        ++result.trials;
        if (!is_sia(product)) {
            ++result.failures;
            result.counterexamples.push_back(matrix_dump(product.mat()));
        }
    }
    return result;
}

}  // namespace

std::vector<std::string> verify_suite_names() {
    return {"scrambling_lemma", "metropolis", "prop_single",
            "prop_multi",       "confidence_ineq", "sia"};
}

SuiteResult run_verify_suite(const std::string& name, int trials, std::uint64_t seed) {
    if (trials < 1) throw InvalidInputError("verify: trials must be >= 1");
    if (name == "scrambling_lemma") return suite_scrambling_lemma(trials, seed);
    if (name == "metropolis") return suite_metropolis(trials, seed);
    if (name == "prop_single") return suite_prop_single(trials, seed);
    if (name == "prop_multi") return suite_prop_multi(trials, seed);
    if (name == "confidence_ineq") return suite_confidence_ineq(trials, seed);
    if (name == "sia") return suite_sia(trials, seed);
    throw InvalidInputError("verify: unknown suite '" + name + "'");
}

std::vector<SuiteResult> run_all_suites(int trials, std::uint64_t seed) {
    std::vector<SuiteResult> results;
    for (const std::string& name : verify_suite_names())
        results.push_back(run_verify_suite(name, trials, seed));
    return results;
}

}  // namespace concord
