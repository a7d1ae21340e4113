#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "concord/backend.hpp"
#include "concord/datagen.hpp"
#include "concord/models.hpp"
#include "concord/stochastic.hpp"
#include "concord/trust.hpp"

namespace concord {

struct PolyAgentConfig {
    RegressionAgentSpec data;
    int degree = 4;
    bool operator==(const PolyAgentConfig&) const = default;
};

struct SimulationConfig {
    TaskKind task = TaskKind::regression;
    int rounds = 20;         // total rounds T, warmup included
    int warmup_rounds = 0;   // naive trust and lambda = 0 while t <= warmup
    double lambda = 1.0;
    TrustScheme scheme;
    double consensus_threshold = 1e-2;
    std::uint64_t master_seed = 1;

    // regression task
    std::vector<PolyAgentConfig> poly_agents;
    double grid_lo = -4.0;
    double grid_hi = 4.0;
    int grid_n = 50;

    // classification task
    ClassificationSpec cls;
    std::vector<double> flip_fractions;
    std::vector<int> mlp_layers{2, 5, 10, 4};
    TrainConfig train;
    int init_epochs = 40;

    bool operator==(const SimulationConfig&) const = default;
};

std::size_t agent_count(const SimulationConfig& config);
void validate_config(const SimulationConfig& config);

struct AgentState {
    bool is_mlp = false;
    PolynomialModel poly;
    MlpModel mlp;
    LabeledRegression reg_data;
    LabeledClassification cls_data;
};

struct SimulatorState {
    std::vector<AgentState> agents;
    std::vector<double> shared_grid;   // regression inputs
    std::vector<double> shared_truth;  // noiseless targets on the grid
    Matrix shared_x;                   // classification inputs
    std::vector<int> shared_labels;    // evaluation-only labels
    std::optional<TrustMatrix> static_cache;
};

struct EvalMetrics {
    double mse = 0.0;
    double accuracy = 0.0;
    double balanced_accuracy = 0.0;
    bool operator==(const EvalMetrics&) const = default;
};

struct RoundRecord {
    int round;
    TrustMatrix trust;
    PredictionSet predictions;   // broadcast by the previous round's models
    PredictionSet pseudo_labels;
    double disagreement;
    std::vector<EvalMetrics> agent_metrics;  // the updated models, on the shared set
};

struct History {
    SimulationConfig config;
    std::vector<RoundRecord> records;
    std::optional<int> consensus_time;
};

// Generates every agent's data from its spec and fits locally (lambda = 0);
// all streams derive from the master seed.
SimulatorState initialize_agents(const SimulationConfig& config,
                                 Backend be = default_backend());

PredictionSet collect_predictions(const SimulatorState& state,
                                  Backend be = default_backend());

// psi_i = sum_j w_ij * predictions_j. Accepts any row-stochastic matrix so
// tests can use degenerate (non-positive) mixing weights.
PredictionSet form_pseudo_labels(const StochasticMatrix& trust,
                                 const PredictionSet& preds,
                                 Backend be = default_backend());

// Max over agent pairs of the RMS difference (regression) or of the mean
// total-variation distance between probability rows (classification).
double max_pairwise_disagreement(const PredictionSet& preds);

// One barrier round: broadcast round t-1 predictions, resolve trust, form
// pseudo-labels, run every agent's collaborative update.
RoundRecord run_round(SimulatorState& state, const SimulationConfig& config, int t,
                      Backend be = default_backend());

History run_simulation(const SimulationConfig& config, Backend be = default_backend());

// Same, but also hands back the final agent states (for charting the final
// models).
History run_simulation(const SimulationConfig& config, SimulatorState* final_state,
                       Backend be = default_backend());

// Pure matrix evolution of the prediction stack, no model fitting. Returns
// the full trajectory [psi(0), psi(1), ..., psi(T)].
std::vector<PredictionSet> idealized_markov_evolution(
    const PredictionSet& initial, std::span<const StochasticMatrix> trust_sequence,
    Backend be = default_backend());

EvalMetrics evaluate_regression(std::span<const double> predictions,
                                std::span<const double> truth);
EvalMetrics evaluate_classification(const Matrix& probs, std::span<const int> labels);

}  // namespace concord
