#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "concord/backend.hpp"
#include "concord/matrix.hpp"
#include "concord/rng.hpp"

namespace concord {

// ---------------------------------------------------------------- polynomial

// Coefficients stored highest degree first, size degree + 1.
struct PolynomialModel {
    int degree = 0;
    std::vector<double> coefficients;
};

double poly_eval(const PolynomialModel& model, double x);
std::vector<double> poly_predict(const PolynomialModel& model,
                                 std::span<const double> xs);

// Powers of x, highest first: [x^d, ..., x, 1].
std::vector<double> vandermonde_row(double x, int degree);

// Gaussian elimination with partial pivoting; throws NumericalError when
// the system is singular.
std::vector<double> solve_linear(Matrix m, std::vector<double> rhs);

// Adds scale * (V^T V, V^T y) for the design rows of xs into (m, rhs).
void accumulate_normal_system(std::span<const double> xs, std::span<const double> ys,
                              double scale, int degree, Matrix& m,
                              std::vector<double>& rhs);

// Exact minimizer of  mean((f(lx)-ly)^2) + lambda * mean((f(sx)-pseudo)^2)
// through the stacked normal equations; singular systems get a ridge
// fallback (1e-10 on the diagonal) before giving up.
PolynomialModel poly_fit_collaborative(std::span<const double> local_x,
                                       std::span<const double> local_y,
                                       std::span<const double> shared_x,
                                       std::span<const double> pseudo, int degree,
                                       double lambda);

PolynomialModel poly_local_fit(std::span<const double> local_x,
                               std::span<const double> local_y, int degree);

// ----------------------------------------------------------------------- mlp

// Feed-forward softmax classifier; tanh on hidden layers.
struct MlpModel {
    std::vector<int> layer_sizes;             // input, hidden..., output
    std::vector<Matrix> weights;              // weights[l]: sizes[l+1] x sizes[l]
    std::vector<std::vector<double>> biases;  // biases[l]: sizes[l+1]
};

// Per-layer uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
MlpModel mlp_init(std::vector<int> layer_sizes, Rng& rng);

// Rows of the result are class-probability vectors.
Matrix mlp_forward(const MlpModel& model, const Matrix& inputs,
                   Backend be = default_backend());

struct MlpGradients {
    std::vector<Matrix> dw;
    std::vector<std::vector<double>> db;
};

struct TrainConfig {
    double lambda = 0.0;
    double learning_rate = 0.05;
    int local_epochs = 1;
    int batch_size_local = 64;
    int batch_size_shared = 256;
    std::uint64_t seed = 0;
    bool operator==(const TrainConfig&) const = default;
};

// Mean cross-entropy of the model on explicit batches; labels for the hard
// variant, soft target rows for the distillation variant. Computed through
// log-sum-exp on the output logits.
double mlp_cross_entropy(const MlpModel& model, const Matrix& x,
                         std::span<const int> labels, Backend be = default_backend());
double mlp_cross_entropy_soft(const MlpModel& model, const Matrix& x,
                              const Matrix& targets, Backend be = default_backend());

// Combined objective mean CE(local) + lambda * mean CE(shared vs pseudo) and
// its exact gradient via backpropagation. Either term may be disabled by an
// empty batch (local) or lambda = 0 (shared).
double mlp_combined_loss(const MlpModel& model, const Matrix& local_x,
                         std::span<const int> local_y, const Matrix& shared_x,
                         const Matrix& pseudo, double lambda,
                         Backend be = default_backend());
MlpGradients mlp_combined_gradient(const MlpModel& model, const Matrix& local_x,
                                   std::span<const int> local_y, const Matrix& shared_x,
                                   const Matrix& pseudo, double lambda,
                                   Backend be = default_backend());

// Minibatch gradient descent on the combined objective. Deterministic for a
// fixed config.seed: shuffling and the shared-batch cursor derive from one
// stream. Throws NumericalError (with the epoch index) if the loss leaves
// the finite range.
MlpModel mlp_train_collaborative(MlpModel model, const Matrix& local_x,
                                 const std::vector<int>& local_y,
                                 const Matrix& shared_x, const Matrix& pseudo,
                                 const TrainConfig& config,
                                 Backend be = default_backend());

MlpModel mlp_local_fit(MlpModel model, const Matrix& local_x,
                       const std::vector<int>& local_y, const TrainConfig& config,
                       Backend be = default_backend());

// ------------------------------------------------------------- serialization

// Flat text format: a one-line header with the layer sizes (or degree),
// then whitespace-separated parameters at full precision.
void save_poly_text(std::ostream& os, const PolynomialModel& model);
PolynomialModel load_poly_text(std::istream& is);
void save_mlp_text(std::ostream& os, const MlpModel& model);
MlpModel load_mlp_text(std::istream& is);

}  // namespace concord
