#include <doctest.h>

#include <cmath>
#include <vector>

#include "concord/errors.hpp"
#include "concord/rng.hpp"
#include "concord/trust.hpp"

using namespace concord;

namespace {

// N agents that each emit one fixed probability row on every sample.
PredictionSet constant_rows(const std::vector<std::vector<double>>& rows,
                            std::size_t samples) {
    const std::size_t classes = rows.front().size();
    Matrix values(rows.size(), samples * classes);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t s = 0; s < samples; ++s)
            for (std::size_t c = 0; c < classes; ++c)
                values(i, s * classes + c) = rows[i][c];
    return PredictionSet::classification(std::move(values), samples, classes);
}

PredictionSet random_softmax_preds(std::size_t agents, std::size_t samples,
                                   std::size_t classes, Rng& rng) {
    Matrix values(agents, samples * classes);
    for (std::size_t i = 0; i < agents; ++i)
        for (std::size_t s = 0; s < samples; ++s) {
            double* p = values.row(i) + s * classes;
            double sum = 0.0;
            for (std::size_t c = 0; c < classes; ++c) {
                p[c] = std::exp(rng.uniform(-2.0, 2.0));
                sum += p[c];
            }
            for (std::size_t c = 0; c < classes; ++c) p[c] /= sum;
        }
    return PredictionSet::classification(std::move(values), samples, classes);
}

}  // namespace

TEST_CASE("shannon entropy") {
    CHECK(shannon_entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}, 1e-3) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(shannon_entropy(std::vector<double>{1.0, 0.0, 0.0}, 1e-3) == 1e-3);
    CHECK(shannon_entropy(std::vector<double>{0.5, 0.5}, 1e-3) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(shannon_entropy(std::vector<double>{1.2, -0.2}, 1e-3),
                    InvalidInputError);
    CHECK_THROWS_AS(shannon_entropy(std::vector<double>{0.5, 0.5}, 0.0),
                    InvalidInputError);
}

TEST_CASE("pairwise cosine") {
    const PredictionSet same =
        constant_rows({{0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}}, 7);
    CHECK(pairwise_cosine(same, 0, 1) == doctest::Approx(1.0).epsilon(1e-12));

    const PredictionSet orthogonal =
        constant_rows({{1.0, 0.0}, {0.0, 1.0}}, 4);
    CHECK(pairwise_cosine(orthogonal, 0, 1) == 0.0);

    const PredictionSet mixed =
        constant_rows({{0.25, 0.25, 0.25, 0.25}, {1.0, 0.0, 0.0, 0.0}}, 3);
    CHECK(pairwise_cosine(mixed, 0, 1) == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(pairwise_cosine(same, 0, 5), InvalidInputError);
}

TEST_CASE("classification trust: identical predictions give the uniform matrix") {
    Rng rng(3);
    std::vector<double> row{0.1, 0.2, 0.3, 0.4};
    const PredictionSet preds = constant_rows({row, row, row}, 5);
    for (bool weighted : {false, true}) {
        TrustScheme scheme;
        scheme.confidence_weighted = weighted;
        const TrustMatrix w = trust_matrix_classification(preds, scheme);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                CHECK(std::fabs(w.matrix(i, j) - 1.0 / 3) <= 1e-12);
    }
}

TEST_CASE("classification trust: one-hot vs uniform agent") {
    const PredictionSet preds =
        constant_rows({{1.0, 0.0, 0.0, 0.0}, {0.25, 0.25, 0.25, 0.25}}, 6);
    TrustScheme scheme;
    scheme.confidence_weighted = false;
    const TrustMatrix w = trust_matrix_classification(preds, scheme);
    CHECK(w.matrix(0, 0) == doctest::Approx(2.0 / 3).epsilon(1e-12));
    CHECK(w.matrix(0, 1) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(w.matrix(1, 0) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(w.matrix(1, 1) == doctest::Approx(2.0 / 3).epsilon(1e-12));
}

TEST_CASE("confidence weighting lowers trust toward a disagreeing agent") {
    // agent 0 is confident on the first half of the shared set and
    // max-entropy on the second half; the disagreeing agent aligns worse
    // inside the confident region than outside it.
    const std::vector<double> confident{0.97, 0.01, 0.01, 0.01};
    const std::vector<double> uniform{0.25, 0.25, 0.25, 0.25};
    const std::vector<double> peer{0.9, 0.04, 0.03, 0.03};
    const std::vector<double> disagree{0.01, 0.97, 0.01, 0.01};
    const std::vector<double> hedge{0.22, 0.30, 0.24, 0.24};

    const std::size_t half = 8;
    const std::size_t classes = 4;
    Matrix values(3, 2 * half * classes);
    auto put = [&](std::size_t agent, std::size_t s, const std::vector<double>& p) {
        for (std::size_t c = 0; c < classes; ++c) values(agent, s * classes + c) = p[c];
    };
    for (std::size_t s = 0; s < half; ++s) {
        put(0, s, confident);
        put(1, s, peer);
        put(2, s, disagree);
    }
    for (std::size_t s = half; s < 2 * half; ++s) {
        put(0, s, uniform);
        put(1, s, uniform);
        put(2, s, hedge);
    }
    const PredictionSet preds =
        PredictionSet::classification(std::move(values), 2 * half, classes);

    // region sums of agent 0's cosines, computed directly
    std::vector<double> inside(3, 0.0);
    std::vector<double> outside(3, 0.0);
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t s = 0; s < 2 * half; ++s) {
            const auto a = preds.sample(0, s);
            const auto b = preds.sample(j, s);
            double dot = 0.0;
            double na = 0.0;
            double nb = 0.0;
            for (std::size_t c = 0; c < classes; ++c) {
                dot += a[c] * b[c];
                na += a[c] * a[c];
                nb += b[c] * b[c];
            }
            (s < half ? inside[j] : outside[j]) +=
                dot / (std::sqrt(na) * std::sqrt(nb));
        }

    const double c1 = 1.0 / shannon_entropy(confident, 1e-3);
    const double c2 = 1.0 / shannon_entropy(uniform, 1e-3);
    REQUIRE(c1 > 1.0);
    REQUIRE(c2 > 0.0);
    REQUIRE(c2 < 1.0);
    REQUIRE(inside[2] / (inside[0] + inside[1] + inside[2]) <
            outside[2] / (outside[0] + outside[1] + outside[2]));
    CHECK(confidence_weighting_check(inside, outside, 2, c1, c2));

    TrustScheme weighted;
    weighted.confidence_weighted = true;
    TrustScheme unweighted;
    unweighted.confidence_weighted = false;
    const TrustMatrix w = trust_matrix_classification(preds, weighted);
    const TrustMatrix phi = trust_matrix_classification(preds, unweighted);
    CHECK(w.matrix(0, 2) < phi.matrix(0, 2));
}

TEST_CASE("regression trust closed forms") {
    // identical prediction vectors: uniform matrix
    Matrix same(3, 6);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t s = 0; s < 6; ++s) same(i, s) = 0.3 * s;
    const TrustMatrix uniform =
        trust_matrix_regression(PredictionSet::regression(same));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(std::fabs(uniform.matrix(i, j) - 1.0 / 3) <= 1e-12);

    // two agents: s = exp(-1/2) since sigma equals the only distance
    Matrix two(2, 4);
    for (std::size_t s = 0; s < 4; ++s) {
        two(0, s) = 1.0 + s;
        two(1, s) = 1.0 + s + 0.7;
    }
    const TrustMatrix pair = trust_matrix_regression(PredictionSet::regression(two));
    const double s = std::exp(-0.5);
    CHECK(pair.matrix(0, 0) == doctest::Approx(1.0 / (1.0 + s)).epsilon(1e-12));
    CHECK(pair.matrix(0, 1) == doctest::Approx(s / (1.0 + s)).epsilon(1e-12));

    // two close agents and one far outlier: the outlier gets the lowest
    // trust in both other rows
    Matrix three(3, 5);
    for (std::size_t s2 = 0; s2 < 5; ++s2) {
        three(0, s2) = 1.0;
        three(1, s2) = 1.01;
        three(2, s2) = 9.0;
    }
    const TrustMatrix far = trust_matrix_regression(PredictionSet::regression(three));
    CHECK(far.matrix(0, 2) < far.matrix(0, 0));
    CHECK(far.matrix(0, 2) < far.matrix(0, 1));
    CHECK(far.matrix(1, 2) < far.matrix(1, 0));
    CHECK(far.matrix(1, 2) < far.matrix(1, 1));

    CHECK_THROWS_AS(PredictionSet::regression(Matrix(2, 0)), InvalidInputError);
}

TEST_CASE("naive trust") {
    const TrustMatrix w3 = naive_trust(3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(w3.matrix(i, j) == 1.0 / 3);
    CHECK(naive_trust(2).matrix(0, 0) == 0.5);
    const TrustMatrix w10 = naive_trust(10);
    for (std::size_t i = 0; i < 10; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 10; ++j) {
            CHECK(w10.matrix(i, j) == 0.1);
            sum += w10.matrix(i, j);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(naive_trust(1), InvalidInputError);
}

TEST_CASE("resolve_trust scheme semantics") {
    Rng rng(9);
    const PredictionSet preds_a = random_softmax_preds(3, 6, 4, rng);
    const PredictionSet preds_b = random_softmax_preds(3, 6, 4, rng);
    TrustScheme naive{TrustVariant::naive, false, 1e-3};
    TrustScheme dynamic{TrustVariant::dynamic, true, 1e-3};
    TrustScheme static_s{TrustVariant::static_scheme, true, 1e-3};

    const TrustMatrix n = resolve_trust(naive, 4, 1, preds_a, std::nullopt);
    CHECK(n.matrix(0, 0) == doctest::Approx(1.0 / 3).epsilon(1e-12));

    // warmup rounds resolve to naive regardless of scheme
    const TrustMatrix warm = resolve_trust(dynamic, 2, 6, preds_a, std::nullopt);
    CHECK(warm.scheme.variant == TrustVariant::naive);

    const TrustMatrix d1 = resolve_trust(dynamic, 6, 6, preds_a, std::nullopt);
    const TrustMatrix d2 = resolve_trust(dynamic, 7, 6, preds_b, std::nullopt);
    CHECK(max_abs_diff(d1.matrix.mat(), d2.matrix.mat()) > 1e-6);

    const TrustMatrix first = resolve_trust(static_s, 6, 6, preds_a, std::nullopt);
    const TrustMatrix later = resolve_trust(static_s, 7, 6, preds_b, first);
    CHECK(later.matrix.mat() == first.matrix.mat());
    CHECK(later.round == first.round);
    CHECK_THROWS_AS(resolve_trust(static_s, 7, 6, preds_b, std::nullopt), StateError);
}

TEST_CASE("trust outputs are positive row-stochastic matrices") {
    Rng rng(15);
    for (int trial = 0; trial < 10; ++trial) {
        const PredictionSet preds = random_softmax_preds(4, 9, 3, rng);
        TrustScheme scheme;
        scheme.confidence_weighted = trial % 2 == 0;
        const TrustMatrix w = trust_matrix_classification(preds, scheme);
        CHECK(w.matrix.positive());

        Matrix reg(4, 9);
        for (auto& v : reg.data) v = rng.uniform(-3.0, 3.0);
        const TrustMatrix wr = trust_matrix_regression(PredictionSet::regression(reg));
        CHECK(wr.matrix.positive());
    }
}

TEST_CASE("row scaling of one agent's confidence weights cancels") {
    Rng rng(21);
    const PredictionSet preds = random_softmax_preds(4, 8, 3, rng);
    Matrix weights = entropy_weights(preds, 1e-3);
    Matrix scaled = weights;
    for (std::size_t s = 0; s < scaled.cols; ++s) scaled(1, s) *= 37.5;

    const Matrix base = classification_trust_scores(preds, weights);
    const Matrix bumped = classification_trust_scores(preds, scaled);
    auto normalize_row = [](const Matrix& m, std::size_t i) {
        std::vector<double> row(m.cols);
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) sum += m(i, j);
        for (std::size_t j = 0; j < m.cols; ++j) row[j] = m(i, j) / sum;
        return row;
    };
    const auto row_base = normalize_row(base, 1);
    const auto row_bumped = normalize_row(bumped, 1);
    for (std::size_t j = 0; j < row_base.size(); ++j)
        CHECK(row_base[j] == doctest::Approx(row_bumped[j]).epsilon(1e-12));
}

TEST_CASE("unweighted cosine core is symmetric, weighted is not") {
    Rng rng(27);
    const PredictionSet preds = random_softmax_preds(5, 7, 4, rng);
    const Matrix core = classification_trust_scores(preds, Matrix());
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) CHECK(core(i, j) == core(j, i));

    const Matrix weighted =
        classification_trust_scores(preds, entropy_weights(preds, 1e-3));
    double asym = 0.0;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            asym = std::max(asym, std::fabs(weighted(i, j) - weighted(j, i)));
    CHECK(asym > 1e-9);
}

TEST_CASE("permuting agents permutes trust rows and columns") {
    Rng rng(33);
    const PredictionSet preds = random_softmax_preds(4, 6, 3, rng);
    const std::vector<std::size_t> perm{2, 0, 3, 1};

    Matrix permuted_values(4, preds.values.cols);
    for (std::size_t i = 0; i < 4; ++i)
        std::copy_n(preds.values.row(perm[i]), preds.values.cols,
                    permuted_values.row(i));
    const PredictionSet permuted =
        PredictionSet::classification(std::move(permuted_values), 6, 3);

    TrustScheme scheme;
    const TrustMatrix w = trust_matrix_classification(preds, scheme);
    const TrustMatrix wp = trust_matrix_classification(permuted, scheme);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(wp.matrix(i, j) ==
                  doctest::Approx(w.matrix(perm[i], perm[j])).epsilon(1e-12));
}
