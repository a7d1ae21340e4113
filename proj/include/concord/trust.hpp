#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "concord/backend.hpp"
#include "concord/matrix.hpp"
#include "concord/stochastic.hpp"

namespace concord {

enum class TaskKind { regression, classification };

// Stacked per-agent predictions on the shared set. Row i of `values` holds
// agent i's predictions, sample-major: classification flattens each
// probability row to `classes` consecutive entries, regression uses one
// scalar per sample.
struct PredictionSet {
    TaskKind kind = TaskKind::regression;
    std::size_t agents = 0;
    std::size_t samples = 0;
    std::size_t classes = 1;
    Matrix values;

    static PredictionSet regression(Matrix values);
    static PredictionSet classification(Matrix values, std::size_t samples,
                                        std::size_t classes);

    std::span<const double> sample(std::size_t agent, std::size_t s) const {
        return {values.row(agent) + s * classes, classes};
    }
    // Agent's predictions reshaped to samples x classes.
    Matrix agent_block(std::size_t agent) const;
};

enum class TrustVariant { naive, static_scheme, dynamic };

struct TrustScheme {
    TrustVariant variant = TrustVariant::dynamic;
    bool confidence_weighted = true;
    double entropy_floor = 1e-3;  // natural-log units
    bool operator==(const TrustScheme&) const = default;
};

// Row-stochastic and strictly positive trust weights for one round.
struct TrustMatrix {
    TrustMatrix(StochasticMatrix m, long round_index, TrustScheme s);
    StochasticMatrix matrix;
    long round;
    TrustScheme scheme;
};

// -sum p_k ln p_k with 0 ln 0 = 0, clamped below at `floor`. Natural log;
// the base only rescales trust rows and row normalization cancels it.
double shannon_entropy(std::span<const double> p, double floor);

// Mean over samples of the cosine similarity between two agents'
// per-sample prediction vectors.
double pairwise_cosine(const PredictionSet& preds, std::size_t i, std::size_t j);

// Per-sample confidence weights 1 / max(H(f_i(x)), floor), agents x samples.
Matrix entropy_weights(const PredictionSet& preds, double floor);

// Pre-normalization score matrix; pass an empty weight matrix for the
// unweighted cosine core. Exposed for the row-scaling and symmetry tests.
Matrix classification_trust_scores(const PredictionSet& preds,
                                   const Matrix& row_weights,
                                   Backend be = default_backend());

TrustMatrix trust_matrix_classification(const PredictionSet& preds,
                                        const TrustScheme& scheme, long round = 0,
                                        Backend be = default_backend());

// RBF kernel on prediction-vector distance with the bandwidth set to the
// median nonzero pairwise distance (floor 1e-9). Positive, self-confident,
// smooth down-weighting of outliers.
TrustMatrix trust_matrix_regression(const PredictionSet& preds, long round = 0,
                                    Backend be = default_backend());

// Uniform 1/n weights (soft majority voting).
TrustMatrix naive_trust(std::size_t n, long round = 0);

// Scheme dispatch. Warmup rounds (round < first_collab_round) resolve to
// naive trust; static computes once at first_collab_round and requires the
// cached matrix afterwards; dynamic recomputes every round.
TrustMatrix resolve_trust(const TrustScheme& scheme, long round,
                          long first_collab_round, const PredictionSet& preds,
                          const std::optional<TrustMatrix>& cache,
                          Backend be = default_backend());

}  // namespace concord
