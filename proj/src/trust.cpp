#include "concord/trust.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "concord/errors.hpp"
#include "concord/kernels.hpp"

namespace concord {

namespace {

void validate_prediction_rows(const Matrix& values, std::size_t samples,
                              std::size_t classes) {
    for (std::size_t i = 0; i < values.rows; ++i) {
        for (std::size_t s = 0; s < samples; ++s) {
            const double* p = values.row(i) + s * classes;
            double sum = 0.0;
            for (std::size_t c = 0; c < classes; ++c) {
                if (!(p[c] >= 0.0))
                    throw InvalidInputError("prediction set: negative probability at agent " +
                                            std::to_string(i));
                sum += p[c];
            }
            if (std::fabs(sum - 1.0) > 1e-6)
                throw InvalidInputError("prediction set: probability row of agent " +
                                        std::to_string(i) + " sums to " +
                                        format_double(sum));
        }
    }
}

Matrix normalize_rows_positive(Matrix scores, long round, const char* what) {
    for (std::size_t i = 0; i < scores.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < scores.cols; ++j) sum += scores(i, j);
        if (!(sum > 0.0))
            throw NumericalError(std::string(what) + ": non-positive row sum at round " +
                                 std::to_string(round));
        for (std::size_t j = 0; j < scores.cols; ++j) scores(i, j) /= sum;
    }
    return scores;
}

}  // namespace

PredictionSet PredictionSet::regression(Matrix values) {
    if (values.rows == 0 || values.cols == 0)
        throw InvalidInputError("prediction set: empty values");
    if (!all_finite(values))
        throw InvalidInputError("prediction set: non-finite prediction");
    PredictionSet p;
    p.kind = TaskKind::regression;
    p.agents = values.rows;
    p.samples = values.cols;
    p.classes = 1;
    p.values = std::move(values);
    return p;
}

PredictionSet PredictionSet::classification(Matrix values, std::size_t samples,
                                            std::size_t classes) {
    if (classes < 2) throw InvalidInputError("prediction set: need >= 2 classes");
    if (values.cols != samples * classes)
        throw InvalidInputError("prediction set: values shape mismatch");
    validate_prediction_rows(values, samples, classes);
    PredictionSet p;
    p.kind = TaskKind::classification;
    p.agents = values.rows;
    p.samples = samples;
    p.classes = classes;
    p.values = std::move(values);
    return p;
}

Matrix PredictionSet::agent_block(std::size_t agent) const {
    Matrix block(samples, classes);
    for (std::size_t s = 0; s < samples; ++s)
        for (std::size_t c = 0; c < classes; ++c)
            block(s, c) = values(agent, s * classes + c);
    return block;
}

TrustMatrix::TrustMatrix(StochasticMatrix m, long round_index, TrustScheme s)
    : matrix(std::move(m)), round(round_index), scheme(s) {
    if (!matrix.positive())
        throw InvalidInputError("trust matrix must be strictly positive");
}

double shannon_entropy(std::span<const double> p, double floor) {
    if (!(floor > 0.0)) throw InvalidInputError("shannon_entropy: floor must be > 0");
    double sum = 0.0;
    double h = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw InvalidInputError("shannon_entropy: negative entry");
        sum += v;
        if (v > 0.0) h -= v * std::log(v);
    }
    if (std::fabs(sum - 1.0) > 1e-6)
        throw InvalidInputError("shannon_entropy: probabilities sum to " +
                                format_double(sum));
    return std::max(h, floor);
}

double pairwise_cosine(const PredictionSet& preds, std::size_t i, std::size_t j) {
    if (i >= preds.agents || j >= preds.agents)
        throw InvalidInputError("pairwise_cosine: agent index out of range");
    double acc = 0.0;
    for (std::size_t s = 0; s < preds.samples; ++s) {
        const auto pi = preds.sample(i, s);
        const auto pj = preds.sample(j, s);
        double dot = 0.0;
        double ni = 0.0;
        double nj = 0.0;
        for (std::size_t c = 0; c < preds.classes; ++c) {
            dot += pi[c] * pj[c];
            ni += pi[c] * pi[c];
            nj += pj[c] * pj[c];
        }
        if (ni == 0.0 || nj == 0.0)
            throw InvalidInputError("pairwise_cosine: zero-norm prediction row");
        acc += dot / (std::sqrt(ni) * std::sqrt(nj));
    }
    return acc / static_cast<double>(preds.samples);
}

Matrix entropy_weights(const PredictionSet& preds, double floor) {
    Matrix w(preds.agents, preds.samples);
    for (std::size_t i = 0; i < preds.agents; ++i)
        for (std::size_t s = 0; s < preds.samples; ++s)
            w(i, s) = 1.0 / shannon_entropy(preds.sample(i, s), floor);
    return w;
}

Matrix classification_trust_scores(const PredictionSet& preds,
                                   const Matrix& row_weights, Backend be) {
    for (std::size_t i = 0; i < preds.agents; ++i)
        for (std::size_t s = 0; s < preds.samples; ++s) {
            const auto p = preds.sample(i, s);
            double norm = 0.0;
            for (double v : p) norm += v * v;
            if (norm == 0.0)
                throw InvalidInputError("trust scores: zero-norm prediction row");
        }
    return kernels::cosine_scores(preds.values, preds.samples, preds.classes,
                                  row_weights, be);
}

TrustMatrix trust_matrix_classification(const PredictionSet& preds,
                                        const TrustScheme& scheme, long round,
                                        Backend be) {
    if (preds.agents < 2)
        throw InvalidInputError("trust_matrix_classification: need >= 2 agents");
    if (preds.kind != TaskKind::classification)
        throw InvalidInputError("trust_matrix_classification: wrong prediction kind");
    Matrix weights;  // empty = unweighted
    if (scheme.confidence_weighted)
        weights = entropy_weights(preds, scheme.entropy_floor);
    Matrix scores = classification_trust_scores(preds, weights, be);
    Matrix w = normalize_rows_positive(std::move(scores), round,
                                       "trust_matrix_classification");
    return TrustMatrix(StochasticMatrix(std::move(w)), round, scheme);
}

TrustMatrix trust_matrix_regression(const PredictionSet& preds, long round, Backend be) {
    if (preds.agents < 2)
        throw InvalidInputError("trust_matrix_regression: need >= 2 agents");
    if (preds.samples == 0)
        throw InvalidInputError("trust_matrix_regression: empty sample set");
    const Matrix d2 = kernels::pairwise_sqdist(preds.values, be);

    // Bandwidth: median nonzero pairwise distance, floored at 1e-9.
    std::vector<double> dists;
    for (std::size_t i = 0; i < preds.agents; ++i)
        for (std::size_t j = i + 1; j < preds.agents; ++j)
            if (d2(i, j) > 0.0) dists.push_back(std::sqrt(d2(i, j)));
    double sigma = 1e-9;
    if (!dists.empty()) {
        std::sort(dists.begin(), dists.end());
        const std::size_t m = dists.size();
        const double median =
            m % 2 ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
        sigma = std::max(median, 1e-9);
    }

    Matrix s(preds.agents, preds.agents);
    for (std::size_t i = 0; i < preds.agents; ++i)
        for (std::size_t j = 0; j < preds.agents; ++j)
            s(i, j) = std::exp(-d2(i, j) / (2.0 * sigma * sigma));
    TrustScheme scheme;
    scheme.variant = TrustVariant::dynamic;
    scheme.confidence_weighted = false;
    Matrix w = normalize_rows_positive(std::move(s), round, "trust_matrix_regression");
    return TrustMatrix(StochasticMatrix(std::move(w)), round, scheme);
}

TrustMatrix naive_trust(std::size_t n, long round) {
    if (n < 2) throw InvalidInputError("naive_trust: need n >= 2");
    TrustScheme scheme;
    scheme.variant = TrustVariant::naive;
    scheme.confidence_weighted = false;
    return TrustMatrix(StochasticMatrix::uniform(n), round, scheme);
}

TrustMatrix resolve_trust(const TrustScheme& scheme, long round,
                          long first_collab_round, const PredictionSet& preds,
                          const std::optional<TrustMatrix>& cache, Backend be) {
    if (round < first_collab_round) return naive_trust(preds.agents, round);
    const auto compute = [&]() {
        TrustMatrix t = preds.kind == TaskKind::classification
                            ? trust_matrix_classification(preds, scheme, round, be)
                            : trust_matrix_regression(preds, round, be);
        t.scheme = scheme;
        return t;
    };
    switch (scheme.variant) {
        case TrustVariant::naive: {
            TrustMatrix t = naive_trust(preds.agents, round);
            t.scheme = scheme;
            return t;
        }
        case TrustVariant::dynamic:
            return compute();
        case TrustVariant::static_scheme:
            if (round == first_collab_round) return compute();
            if (!cache)
                throw StateError("resolve_trust: static trust past round " +
                                 std::to_string(first_collab_round) +
                                 " requires the cached matrix");
            return *cache;
    }
    throw InvalidInputError("resolve_trust: unknown scheme variant");
}

}  // namespace concord
