#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "concord/matrix.hpp"
#include "concord/models.hpp"

namespace concord {

// The cubic used by all regression toys: f(x) = 0.5x^3 + 0.3x^2 - 5x + 4.
PolynomialModel cubic_truth();
double cubic_truth_eval(double x);

struct RegressionAgentSpec {
    double x_mean = 0.0;
    double x_std = 1.0;
    int n = 50;
    double noise_std = 1.0;
    bool operator==(const RegressionAgentSpec&) const = default;
};

struct LabeledRegression {
    std::vector<double> x;
    std::vector<double> y;
};

// x ~ N(x_mean, x_std^2), y = f(x) + N(0, noise_std^2); one interleaved
// stream per call, deterministic in the seed.
LabeledRegression gen_cubic_regression(const RegressionAgentSpec& spec,
                                       std::uint64_t seed);

// n equally spaced points, endpoints included.
std::vector<double> gen_shared_grid(double lo, double hi, int n);

struct ClassificationSpec {
    std::vector<std::array<double, 2>> class_means;
    std::vector<std::vector<double>> client_mixtures;  // one weight row per client
    int n_per_client = 200;
    int shared_per_class = 50;
    bool operator==(const ClassificationSpec&) const = default;
};

struct LabeledClassification {
    Matrix x;  // n x 2
    std::vector<int> y;
};

struct ClassificationData {
    std::vector<LabeledClassification> clients;
    Matrix shared_x;             // equal draws per class, class-major order
    std::vector<int> shared_y;   // kept for evaluation only
};

// Per-client draws from that client's class mixture with unit-covariance
// Gaussians around the class means; the shared set takes shared_per_class
// samples from every class.
ClassificationData gen_gaussian_classes(const ClassificationSpec& spec,
                                        std::uint64_t seed);

struct CorruptionSpec {
    double flip_fraction = 0.0;
    std::uint64_t seed = 0;
};

// Reassigns a uniformly random different label on a seeded random subset of
// floor(fraction * n) positions; the input vector is left untouched.
std::vector<int> flip_labels(const std::vector<int>& labels, const CorruptionSpec& spec,
                             int num_classes);

// Splits by class with Dirichlet(alpha) proportions across clients; the
// client sets are disjoint and cover the input exactly.
std::vector<LabeledClassification> dirichlet_partition(const LabeledClassification& data,
                                                       int n_clients, double alpha,
                                                       std::uint64_t seed);

// CSV: feature columns then the label column; unlabeled sets omit the label.
void write_labeled_regression_csv(const std::filesystem::path& path,
                                  const LabeledRegression& data);
void write_labeled_classification_csv(const std::filesystem::path& path,
                                      const LabeledClassification& data);
void write_unlabeled_csv(const std::filesystem::path& path, const Matrix& x);
void write_unlabeled_csv(const std::filesystem::path& path,
                         const std::vector<double>& x);

}  // namespace concord
