#include "concord/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "concord/errors.hpp"
#include "concord/rng.hpp"

namespace concord {

PolynomialModel cubic_truth() { return PolynomialModel{3, {0.5, 0.3, -5.0, 4.0}}; }

double cubic_truth_eval(double x) { return ((0.5 * x + 0.3) * x - 5.0) * x + 4.0; }

LabeledRegression gen_cubic_regression(const RegressionAgentSpec& spec,
                                       std::uint64_t seed) {
    if (spec.n < 1) throw InvalidInputError("gen_cubic_regression: n must be >= 1");
    if (!(spec.x_std > 0.0))
        throw InvalidInputError("gen_cubic_regression: x_std must be > 0");
    if (!(spec.noise_std >= 0.0))
        throw InvalidInputError("gen_cubic_regression: noise_std must be >= 0");
    Rng rng(seed);
    LabeledRegression out;
    out.x.resize(static_cast<std::size_t>(spec.n));
    out.y.resize(static_cast<std::size_t>(spec.n));
    for (int i = 0; i < spec.n; ++i) {
        const double x = rng.normal(spec.x_mean, spec.x_std);
        out.x[static_cast<std::size_t>(i)] = x;
        out.y[static_cast<std::size_t>(i)] =
            cubic_truth_eval(x) + (spec.noise_std > 0.0 ? rng.normal(0.0, spec.noise_std) : 0.0);
    }
    return out;
}

std::vector<double> gen_shared_grid(double lo, double hi, int n) {
    if (!(lo < hi)) throw InvalidInputError("gen_shared_grid: lo must be < hi");
    if (n < 2) throw InvalidInputError("gen_shared_grid: n must be >= 2");
    std::vector<double> grid(static_cast<std::size_t>(n));
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (int i = 0; i < n; ++i) grid[static_cast<std::size_t>(i)] = lo + step * i;
    grid.back() = hi;  // exact endpoint
    return grid;
}

namespace {

int draw_class(const std::vector<double>& mixture, Rng& rng) {
    const double u = rng.next_double();
    double cum = 0.0;
    for (std::size_t c = 0; c < mixture.size(); ++c) {
        cum += mixture[c];
        if (u < cum) return static_cast<int>(c);
    }
    return static_cast<int>(mixture.size()) - 1;
}

void validate_cls_spec(const ClassificationSpec& spec) {
    const std::size_t classes = spec.class_means.size();
    if (classes < 2) throw InvalidInputError("classification spec: need >= 2 classes");
    if (spec.client_mixtures.empty())
        throw InvalidInputError("classification spec: no clients");
    for (const auto& mix : spec.client_mixtures) {
        if (mix.size() != classes)
            throw InvalidInputError("classification spec: mixture width mismatch");
        double sum = 0.0;
        for (double v : mix) {
            if (!(v >= 0.0))
                throw InvalidInputError("classification spec: negative mixture weight");
            sum += v;
        }
        if (std::fabs(sum - 1.0) > 1e-9)
            throw InvalidInputError("classification spec: mixture weights must sum to 1");
    }
    if (spec.n_per_client < 1 || spec.shared_per_class < 1)
        throw InvalidInputError("classification spec: sample counts must be >= 1");
}

}  // namespace

ClassificationData gen_gaussian_classes(const ClassificationSpec& spec,
                                        std::uint64_t seed) {
    validate_cls_spec(spec);
    const std::size_t classes = spec.class_means.size();
    ClassificationData out;

    for (std::size_t c = 0; c < spec.client_mixtures.size(); ++c) {
        Rng rng(mix_seed(seed, 0x11, c));
        LabeledClassification client;
        client.x = Matrix(static_cast<std::size_t>(spec.n_per_client), 2);
        client.y.resize(static_cast<std::size_t>(spec.n_per_client));
        for (int i = 0; i < spec.n_per_client; ++i) {
            const int label = draw_class(spec.client_mixtures[c], rng);
            client.x(static_cast<std::size_t>(i), 0) =
                spec.class_means[static_cast<std::size_t>(label)][0] + rng.normal();
            client.x(static_cast<std::size_t>(i), 1) =
                spec.class_means[static_cast<std::size_t>(label)][1] + rng.normal();
            client.y[static_cast<std::size_t>(i)] = label;
        }
        out.clients.push_back(std::move(client));
    }

    Rng rng(mix_seed(seed, 0x22, 0));
    const std::size_t shared_n = classes * static_cast<std::size_t>(spec.shared_per_class);
    out.shared_x = Matrix(shared_n, 2);
    out.shared_y.resize(shared_n);
    std::size_t row = 0;
    for (std::size_t label = 0; label < classes; ++label) {
        for (int i = 0; i < spec.shared_per_class; ++i, ++row) {
            out.shared_x(row, 0) = spec.class_means[label][0] + rng.normal();
            out.shared_x(row, 1) = spec.class_means[label][1] + rng.normal();
            out.shared_y[row] = static_cast<int>(label);
        }
    }
    return out;
}

std::vector<int> flip_labels(const std::vector<int>& labels, const CorruptionSpec& spec,
                             int num_classes) {
    if (num_classes < 2) throw InvalidInputError("flip_labels: need >= 2 classes");
    if (!(spec.flip_fraction >= 0.0 && spec.flip_fraction <= 1.0))
        throw InvalidInputError("flip_labels: fraction must be in [0,1]");
    for (int y : labels)
        if (y < 0 || y >= num_classes)
            throw InvalidInputError("flip_labels: label out of range");

    std::vector<int> out = labels;
    const std::size_t n = labels.size();
    const auto k = static_cast<std::size_t>(std::floor(spec.flip_fraction *
                                                       static_cast<double>(n)));
    if (k == 0) return out;

    Rng rng(spec.seed);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    // partial Fisher-Yates: the first k entries form the flipped subset
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
        std::swap(idx[i], idx[j]);
    }
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t pos = idx[i];
        const int r = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(num_classes - 1)));
        out[pos] = r + (r >= out[pos] ? 1 : 0);
    }
    return out;
}

std::vector<LabeledClassification> dirichlet_partition(const LabeledClassification& data,
                                                       int n_clients, double alpha,
                                                       std::uint64_t seed) {
    if (n_clients < 2) throw InvalidInputError("dirichlet_partition: need >= 2 clients");
    if (!(alpha > 0.0)) throw InvalidInputError("dirichlet_partition: alpha must be > 0");
    if (data.x.rows != data.y.size())
        throw InvalidInputError("dirichlet_partition: x/y length mismatch");

    int num_classes = 0;
    for (int y : data.y) {
        if (y < 0) throw InvalidInputError("dirichlet_partition: negative label");
        num_classes = std::max(num_classes, y + 1);
    }

    Rng rng(seed);
    std::vector<std::vector<std::size_t>> assigned(static_cast<std::size_t>(n_clients));
    for (int c = 0; c < num_classes; ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < data.y.size(); ++i)
            if (data.y[i] == c) idx.push_back(i);
        if (idx.empty()) continue;
        rng.shuffle(idx);
        const std::vector<double> props =
            rng.dirichlet_symmetric(alpha, static_cast<std::size_t>(n_clients));
        const auto m = static_cast<double>(idx.size());
        std::size_t prev = 0;
        double cum = 0.0;
        for (int client = 0; client < n_clients; ++client) {
            cum += props[static_cast<std::size_t>(client)];
            std::size_t hi = client + 1 == n_clients
                                 ? idx.size()
                                 : static_cast<std::size_t>(std::floor(cum * m));
            hi = std::min(hi, idx.size());
            for (std::size_t p = prev; p < hi; ++p)
                assigned[static_cast<std::size_t>(client)].push_back(idx[p]);
            prev = hi;
        }
    }

    std::vector<LabeledClassification> out(static_cast<std::size_t>(n_clients));
    for (std::size_t client = 0; client < out.size(); ++client) {
        auto& rows = assigned[client];
        std::sort(rows.begin(), rows.end());
        out[client].x = Matrix(rows.size(), data.x.cols);
        out[client].y.resize(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            std::copy_n(data.x.row(rows[r]), data.x.cols, out[client].x.row(r));
            out[client].y[r] = data.y[rows[r]];
        }
    }
    return out;
}

void write_labeled_regression_csv(const std::filesystem::path& path,
                                  const LabeledRegression& data) {
    std::ofstream f(path);
    if (!f) throw InvalidInputError("cannot open for writing: " + path.string());
    for (std::size_t i = 0; i < data.x.size(); ++i)
        f << format_double(data.x[i]) << ',' << format_double(data.y[i]) << '\n';
}

void write_labeled_classification_csv(const std::filesystem::path& path,
                                      const LabeledClassification& data) {
    std::ofstream f(path);
    if (!f) throw InvalidInputError("cannot open for writing: " + path.string());
    for (std::size_t i = 0; i < data.x.rows; ++i) {
        for (std::size_t j = 0; j < data.x.cols; ++j)
            f << format_double(data.x(i, j)) << ',';
        f << data.y[i] << '\n';
    }
}

void write_unlabeled_csv(const std::filesystem::path& path, const Matrix& x) {
    write_matrix_csv(path, x);
}

void write_unlabeled_csv(const std::filesystem::path& path,
                         const std::vector<double>& x) {
    Matrix m(x.size(), 1);
    m.data = x;
    write_matrix_csv(path, m);
}

}  // namespace concord
