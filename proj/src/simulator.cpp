#include "concord/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "concord/errors.hpp"
#include "concord/kernels.hpp"
#include "concord/rng.hpp"

namespace concord {

namespace {

// Stream purposes for seed derivation from the master seed.
constexpr std::uint64_t kSeedRegressionData = 0x01;
constexpr std::uint64_t kSeedClassificationData = 0x02;
constexpr std::uint64_t kSeedLabelFlip = 0x03;
constexpr std::uint64_t kSeedModelInit = 0x04;
constexpr std::uint64_t kSeedInitTrain = 0x05;
constexpr std::uint64_t kSeedRoundTrain = 0x06;

std::uint64_t round_train_seed(std::uint64_t master, std::size_t agent, int round) {
    return mix_seed(mix_seed(master, kSeedRoundTrain, agent),
                    static_cast<std::uint64_t>(round), 0);
}

}  // namespace

std::size_t agent_count(const SimulationConfig& config) {
    return config.task == TaskKind::regression ? config.poly_agents.size()
                                               : config.cls.client_mixtures.size();
}

void validate_config(const SimulationConfig& config) {
    if (config.rounds < 1) throw InvalidInputError("config: rounds must be >= 1");
    if (config.warmup_rounds < 0 || config.warmup_rounds >= config.rounds)
        throw InvalidInputError("config: need 0 <= warmup_rounds < rounds");
    if (!(config.lambda >= 0.0)) throw InvalidInputError("config: lambda must be >= 0");
    if (!(config.consensus_threshold > 0.0))
        throw InvalidInputError("config: consensus threshold must be > 0");
    if (!(config.scheme.entropy_floor > 0.0))
        throw InvalidInputError("config: entropy floor must be > 0");
    const std::size_t n = agent_count(config);
    if (n < 2) throw InvalidInputError("config: need at least 2 agents");

    if (config.task == TaskKind::regression) {
        if (!(config.grid_lo < config.grid_hi) || config.grid_n < 2)
            throw InvalidInputError("config: bad shared grid");
        for (const auto& a : config.poly_agents) {
            if (a.degree < 0) throw InvalidInputError("config: polynomial degree < 0");
            if (a.data.n < 1 || !(a.data.x_std > 0.0) || !(a.data.noise_std >= 0.0))
                throw InvalidInputError("config: bad regression agent spec");
        }
    } else {
        const std::size_t classes = config.cls.class_means.size();
        if (classes < 2) throw InvalidInputError("config: need >= 2 classes");
        if (config.flip_fractions.size() != n)
            throw InvalidInputError("config: flip_fractions must have one entry per agent");
        for (double f : config.flip_fractions)
            if (!(f >= 0.0 && f <= 1.0))
                throw InvalidInputError("config: flip fraction out of [0,1]");
        if (config.mlp_layers.size() < 2)
            throw InvalidInputError("config: mlp needs input and output layers");
        if (config.mlp_layers.front() != 2)
            throw InvalidInputError("config: mlp input width must match 2-d features");
        if (config.mlp_layers.back() != static_cast<int>(classes))
            throw InvalidInputError("config: mlp output width must match class count");
        if (config.init_epochs < 1)
            throw InvalidInputError("config: init_epochs must be >= 1");
        if (!(config.train.learning_rate > 0.0) || config.train.local_epochs < 1 ||
            config.train.batch_size_local < 1 || config.train.batch_size_shared < 1)
            throw InvalidInputError("config: bad training parameters");
    }
}

SimulatorState initialize_agents(const SimulationConfig& config, Backend be) {
    validate_config(config);
    SimulatorState state;
    const std::size_t n = agent_count(config);

    if (config.task == TaskKind::regression) {
        state.shared_grid = gen_shared_grid(config.grid_lo, config.grid_hi, config.grid_n);
        state.shared_truth.resize(state.shared_grid.size());
        for (std::size_t i = 0; i < state.shared_grid.size(); ++i)
            state.shared_truth[i] = cubic_truth_eval(state.shared_grid[i]);
        for (std::size_t i = 0; i < n; ++i) {
            AgentState agent;
            agent.is_mlp = false;
            agent.reg_data = gen_cubic_regression(
                config.poly_agents[i].data,
                mix_seed(config.master_seed, kSeedRegressionData, i));
            try {
                agent.poly = poly_local_fit(agent.reg_data.x, agent.reg_data.y,
                                            config.poly_agents[i].degree);
            } catch (const NumericalError& e) {
                throw NumericalError("agent " + std::to_string(i) +
                                     " initial fit failed: " + e.what());
            }
            state.agents.push_back(std::move(agent));
        }
        return state;
    }

    ClassificationData data = gen_gaussian_classes(
        config.cls, mix_seed(config.master_seed, kSeedClassificationData, 0));
    state.shared_x = std::move(data.shared_x);
    state.shared_labels = std::move(data.shared_y);
    const int classes = static_cast<int>(config.cls.class_means.size());
    for (std::size_t i = 0; i < n; ++i) {
        AgentState agent;
        agent.is_mlp = true;
        agent.cls_data = std::move(data.clients[i]);
        agent.cls_data.y = flip_labels(
            agent.cls_data.y,
            {config.flip_fractions[i], mix_seed(config.master_seed, kSeedLabelFlip, i)},
            classes);
        Rng init_rng(mix_seed(config.master_seed, kSeedModelInit, i));
        agent.mlp = mlp_init(config.mlp_layers, init_rng);
        TrainConfig tc = config.train;
        tc.lambda = 0.0;
        tc.local_epochs = config.init_epochs;
        tc.seed = mix_seed(config.master_seed, kSeedInitTrain, i);
        try {
            agent.mlp = mlp_local_fit(std::move(agent.mlp), agent.cls_data.x,
                                      agent.cls_data.y, tc, be);
        } catch (const NumericalError& e) {
            throw NumericalError("agent " + std::to_string(i) +
                                 " initial fit failed: " + e.what(), e.epoch);
        }
        state.agents.push_back(std::move(agent));
    }
    return state;
}

PredictionSet collect_predictions(const SimulatorState& state, Backend be) {
    if (state.agents.empty()) throw InvalidInputError("collect_predictions: no agents");
    const std::size_t n = state.agents.size();
    if (!state.agents.front().is_mlp) {
        const std::size_t n_s = state.shared_grid.size();
        Matrix values(n, n_s);
        for (std::size_t i = 0; i < n; ++i) {
            const std::vector<double> pred =
                poly_predict(state.agents[i].poly, state.shared_grid);
            std::copy(pred.begin(), pred.end(), values.row(i));
        }
        return PredictionSet::regression(std::move(values));
    }
    const std::size_t n_s = state.shared_x.rows;
    const std::size_t classes = state.agents.front().mlp.layer_sizes.back();
    Matrix values(n, n_s * classes);
    for (std::size_t i = 0; i < n; ++i) {
        const Matrix probs = mlp_forward(state.agents[i].mlp, state.shared_x, be);
        std::copy(probs.data.begin(), probs.data.end(), values.row(i));
    }
    return PredictionSet::classification(std::move(values), n_s, classes);
}

PredictionSet form_pseudo_labels(const StochasticMatrix& trust,
                                 const PredictionSet& preds, Backend be) {
    if (trust.size() != preds.agents)
        throw InvalidInputError("form_pseudo_labels: trust/prediction size mismatch");
    Matrix mixed = kernels::matmul(trust.mat(), preds.values, be);
    return preds.kind == TaskKind::classification
               ? PredictionSet::classification(std::move(mixed), preds.samples,
                                               preds.classes)
               : PredictionSet::regression(std::move(mixed));
}

double max_pairwise_disagreement(const PredictionSet& preds) {
    if (preds.agents < 2)
        throw InvalidInputError("disagreement: need at least 2 agents");
    double worst = 0.0;
    for (std::size_t i = 0; i < preds.agents; ++i) {
        for (std::size_t j = i + 1; j < preds.agents; ++j) {
            const double* a = preds.values.row(i);
            const double* b = preds.values.row(j);
            double acc = 0.0;
            if (preds.kind == TaskKind::regression) {
                for (std::size_t s = 0; s < preds.samples; ++s) {
                    const double d = a[s] - b[s];
                    acc += d * d;
                }
                worst = std::max(worst, std::sqrt(acc / static_cast<double>(preds.samples)));
            } else {
                for (std::size_t k = 0; k < preds.values.cols; ++k)
                    acc += std::fabs(a[k] - b[k]);
                worst = std::max(worst, 0.5 * acc / static_cast<double>(preds.samples));
            }
        }
    }
    return worst;
}

RoundRecord run_round(SimulatorState& state, const SimulationConfig& config, int t,
                      Backend be) {
    if (t < 1) throw InvalidInputError("run_round: rounds start at 1");
    if (state.agents.empty()) throw InvalidInputError("run_round: uninitialized state");

    PredictionSet preds = collect_predictions(state, be);
    const double disagreement = max_pairwise_disagreement(preds);
    const bool warmup = t <= config.warmup_rounds;
    const long first_collab = config.warmup_rounds + 1;

    TrustMatrix trust = warmup ? naive_trust(preds.agents, t)
                               : resolve_trust(config.scheme, t, first_collab, preds,
                                               state.static_cache, be);
    if (!warmup && config.scheme.variant == TrustVariant::static_scheme &&
        !state.static_cache)
        state.static_cache = trust;

    PredictionSet pseudo = form_pseudo_labels(trust.matrix, preds, be);
    const double lambda_eff = warmup ? 0.0 : config.lambda;

    for (std::size_t i = 0; i < state.agents.size(); ++i) {
        AgentState& agent = state.agents[i];
        try {
            if (!agent.is_mlp) {
                const std::span<const double> psi{pseudo.values.row(i), pseudo.samples};
                agent.poly = poly_fit_collaborative(agent.reg_data.x, agent.reg_data.y,
                                                    state.shared_grid, psi,
                                                    config.poly_agents[i].degree,
                                                    lambda_eff);
            } else {
                TrainConfig tc = config.train;
                tc.lambda = lambda_eff;
                tc.seed = round_train_seed(config.master_seed, i, t);
                agent.mlp = mlp_train_collaborative(std::move(agent.mlp), agent.cls_data.x,
                                                    agent.cls_data.y, state.shared_x,
                                                    pseudo.agent_block(i), tc, be);
            }
        } catch (const NumericalError& e) {
            throw NumericalError("round " + std::to_string(t) + ", agent " +
                                 std::to_string(i) + ": " + e.what(), e.epoch);
        }
    }

    std::vector<EvalMetrics> metrics;
    for (const AgentState& agent : state.agents) {
        if (!agent.is_mlp)
            metrics.push_back(evaluate_regression(
                poly_predict(agent.poly, state.shared_grid), state.shared_truth));
        else
            metrics.push_back(evaluate_classification(
                mlp_forward(agent.mlp, state.shared_x, be), state.shared_labels));
    }

    return RoundRecord{t,           std::move(trust),  std::move(preds),
                       std::move(pseudo), disagreement, std::move(metrics)};
}

History run_simulation(const SimulationConfig& config, Backend be) {
    return run_simulation(config, nullptr, be);
}

History run_simulation(const SimulationConfig& config, SimulatorState* final_state,
                       Backend be) {
    validate_config(config);
    SimulatorState state = initialize_agents(config, be);
    History history;
    history.config = config;
    for (int t = 1; t <= config.rounds; ++t) {
        history.records.push_back(run_round(state, config, t, be));
        if (!history.consensus_time &&
            history.records.back().disagreement < config.consensus_threshold)
            history.consensus_time = t;
    }
    if (final_state) *final_state = std::move(state);
    return history;
}

std::vector<PredictionSet> idealized_markov_evolution(
    const PredictionSet& initial, std::span<const StochasticMatrix> trust_sequence,
    Backend be) {
    std::vector<PredictionSet> trajectory;
    trajectory.push_back(initial);
    for (const StochasticMatrix& w : trust_sequence)
        trajectory.push_back(form_pseudo_labels(w, trajectory.back(), be));
    return trajectory;
}

EvalMetrics evaluate_regression(std::span<const double> predictions,
                                std::span<const double> truth) {
    if (predictions.empty() || predictions.size() != truth.size())
        throw InvalidInputError("evaluate_regression: empty or mismatched inputs");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - truth[i];
        acc += d * d;
    }
    EvalMetrics m;
    m.mse = acc / static_cast<double>(predictions.size());
    return m;
}

EvalMetrics evaluate_classification(const Matrix& probs, std::span<const int> labels) {
    if (probs.rows == 0 || probs.rows != labels.size())
        throw InvalidInputError("evaluate_classification: empty or mismatched inputs");
    const std::size_t classes = probs.cols;
    std::vector<long> per_class_total(classes, 0);
    std::vector<long> per_class_hit(classes, 0);
    long hits = 0;
    for (std::size_t i = 0; i < probs.rows; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw InvalidInputError("evaluate_classification: label out of range");
        std::size_t arg = 0;
        for (std::size_t c = 1; c < classes; ++c)
            if (probs(i, c) > probs(i, arg)) arg = c;
        ++per_class_total[static_cast<std::size_t>(y)];
        if (arg == static_cast<std::size_t>(y)) {
            ++hits;
            ++per_class_hit[static_cast<std::size_t>(y)];
        }
    }
    EvalMetrics m;
    m.accuracy = static_cast<double>(hits) / static_cast<double>(probs.rows);
    // balanced accuracy: mean recall over the classes present in the set
    double recall_sum = 0.0;
    int present = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        if (per_class_total[c] == 0) continue;
        recall_sum += static_cast<double>(per_class_hit[c]) /
                      static_cast<double>(per_class_total[c]);
        ++present;
    }
    m.balanced_accuracy = present ? recall_sum / present : 0.0;
    return m;
}

}  // namespace concord
