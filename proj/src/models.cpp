#include "concord/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <istream>
#include <string>

#include "concord/errors.hpp"
#include "concord/kernels.hpp"

namespace concord {

// ---------------------------------------------------------------- polynomial

double poly_eval(const PolynomialModel& model, double x) {
    double acc = 0.0;
    for (double c : model.coefficients) acc = acc * x + c;
    return acc;
}

std::vector<double> poly_predict(const PolynomialModel& model,
                                 std::span<const double> xs) {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = poly_eval(model, xs[i]);
    return out;
}

std::vector<double> vandermonde_row(double x, int degree) {
    std::vector<double> row(static_cast<std::size_t>(degree) + 1);
    double p = 1.0;
    for (int k = degree; k >= 0; --k) {
        row[static_cast<std::size_t>(k)] = p;
        p *= x;
    }
    return row;
}

std::vector<double> solve_linear(Matrix m, std::vector<double> rhs) {
    const std::size_t n = m.rows;
    if (m.cols != n || rhs.size() != n)
        throw InvalidInputError("solve_linear: shape mismatch");
    double scale = 0.0;
    for (double v : m.data) scale = std::max(scale, std::fabs(v));
    if (!(scale > 0.0) || !all_finite(m))
        throw NumericalError("solve_linear: degenerate system");
    const double tiny = 1e-13 * scale;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(m(r, col)) > std::fabs(m(pivot, col))) pivot = r;
        if (std::fabs(m(pivot, col)) <= tiny)
            throw NumericalError("solve_linear: singular system");
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(col, j), m(pivot, j));
            std::swap(rhs[col], rhs[pivot]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = m(r, col) / m(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) m(r, j) -= f * m(col, j);
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ri = n; ri-- > 0;) {
        double acc = rhs[ri];
        for (std::size_t j = ri + 1; j < n; ++j) acc -= m(ri, j) * x[j];
        x[ri] = acc / m(ri, ri);
    }
    return x;
}

void accumulate_normal_system(std::span<const double> xs, std::span<const double> ys,
                              double scale, int degree, Matrix& m,
                              std::vector<double>& rhs) {
    const std::size_t p = static_cast<std::size_t>(degree) + 1;
    if (m.rows != p || m.cols != p || rhs.size() != p)
        throw InvalidInputError("accumulate_normal_system: shape mismatch");
    if (xs.size() != ys.size())
        throw InvalidInputError("accumulate_normal_system: x/y length mismatch");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::vector<double> row = vandermonde_row(xs[i], degree);
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = 0; b < p; ++b) m(a, b) += scale * row[a] * row[b];
            rhs[a] += scale * row[a] * ys[i];
        }
    }
}

PolynomialModel poly_fit_collaborative(std::span<const double> local_x,
                                       std::span<const double> local_y,
                                       std::span<const double> shared_x,
                                       std::span<const double> pseudo, int degree,
                                       double lambda) {
    if (degree < 0) throw InvalidInputError("poly_fit: degree must be >= 0");
    if (!(lambda >= 0.0)) throw InvalidInputError("poly_fit: lambda must be >= 0");
    if (local_x.empty()) throw InvalidInputError("poly_fit: empty local data");
    if (local_x.size() != local_y.size())
        throw InvalidInputError("poly_fit: local x/y length mismatch");
    if (lambda > 0.0) {
        if (shared_x.empty())
            throw InvalidInputError("poly_fit: lambda > 0 needs shared points");
        if (shared_x.size() != pseudo.size())
            throw InvalidInputError("poly_fit: shared x/pseudo length mismatch");
    }

    const std::size_t p = static_cast<std::size_t>(degree) + 1;
    Matrix m(p, p, 0.0);
    std::vector<double> rhs(p, 0.0);
    accumulate_normal_system(local_x, local_y, 1.0 / static_cast<double>(local_x.size()),
                             degree, m, rhs);
    if (lambda > 0.0)
        accumulate_normal_system(shared_x, pseudo,
                                 lambda / static_cast<double>(shared_x.size()), degree,
                                 m, rhs);

    PolynomialModel model;
    model.degree = degree;
    try {
        model.coefficients = solve_linear(m, rhs);
    } catch (const NumericalError&) {
        // ridge fallback for degenerate designs (e.g. duplicated x values)
        for (std::size_t d = 0; d < p; ++d) m(d, d) += 1e-10;
        model.coefficients = solve_linear(std::move(m), std::move(rhs));
    }
    return model;
}

PolynomialModel poly_local_fit(std::span<const double> local_x,
                               std::span<const double> local_y, int degree) {
    return poly_fit_collaborative(local_x, local_y, {}, {}, degree, 0.0);
}

// ----------------------------------------------------------------------- mlp

namespace {

void check_layer_shapes(const MlpModel& model) {
    const std::size_t layers = model.layer_sizes.size();
    if (layers < 2) throw InvalidInputError("mlp: need at least input and output layers");
    if (model.weights.size() != layers - 1 || model.biases.size() != layers - 1)
        throw InvalidInputError("mlp: weight/bias count mismatch");
    for (std::size_t l = 0; l + 1 < layers; ++l) {
        const auto in = static_cast<std::size_t>(model.layer_sizes[l]);
        const auto out = static_cast<std::size_t>(model.layer_sizes[l + 1]);
        if (model.weights[l].rows != out || model.weights[l].cols != in ||
            model.biases[l].size() != out)
            throw InvalidInputError("mlp: layer " + std::to_string(l) + " shape mismatch");
    }
}

struct ForwardPass {
    std::vector<Matrix> activations;  // a0 = input, then post-tanh hiddens
    Matrix logits;                    // pre-softmax output
    Matrix probs;
};

ForwardPass forward_pass(const MlpModel& model, const Matrix& inputs, Backend be) {
    check_layer_shapes(model);
    if (inputs.cols != static_cast<std::size_t>(model.layer_sizes.front()))
        throw InvalidInputError("mlp_forward: input width mismatch");
    ForwardPass fp;
    fp.activations.push_back(inputs);
    const std::size_t num_layers = model.weights.size();
    for (std::size_t l = 0; l < num_layers; ++l) {
        Matrix z = kernels::matmul_a_bt(fp.activations.back(), model.weights[l], be);
        kernels::add_bias_rows(z, model.biases[l], be);
        if (l + 1 < num_layers) {
            kernels::tanh_rows(z, be);
            fp.activations.push_back(std::move(z));
        } else {
            fp.logits = z;
            kernels::softmax_rows(z, be);
            fp.probs = std::move(z);
        }
    }
    return fp;
}

double row_logsumexp(const double* z, std::size_t n) {
    double hi = z[0];
    for (std::size_t j = 1; j < n; ++j) hi = std::max(hi, z[j]);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += std::exp(z[j] - hi);
    return hi + std::log(acc);
}

double ce_from_logits_hard(const Matrix& logits, std::span<const int> labels) {
    double total = 0.0;
    for (std::size_t n = 0; n < logits.rows; ++n) {
        const int y = labels[n];
        if (y < 0 || static_cast<std::size_t>(y) >= logits.cols)
            throw InvalidInputError("cross entropy: label out of range");
        total += row_logsumexp(logits.row(n), logits.cols) - logits(n, y);
    }
    return total / static_cast<double>(logits.rows);
}

double ce_from_logits_soft(const Matrix& logits, const Matrix& targets) {
    if (targets.rows != logits.rows || targets.cols != logits.cols)
        throw InvalidInputError("cross entropy: target shape mismatch");
    double total = 0.0;
    for (std::size_t n = 0; n < logits.rows; ++n) {
        double dot = 0.0;
        for (std::size_t c = 0; c < logits.cols; ++c)
            dot += targets(n, c) * logits(n, c);
        total += row_logsumexp(logits.row(n), logits.cols) - dot;
    }
    return total / static_cast<double>(logits.rows);
}

MlpGradients zero_gradients(const MlpModel& model) {
    MlpGradients g;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        g.dw.emplace_back(model.weights[l].rows, model.weights[l].cols, 0.0);
        g.db.emplace_back(model.biases[l].size(), 0.0);
    }
    return g;
}

// Backprop of mean CE through the net; dZ at the output is (P - Q)/n.
// Q comes either from hard labels or soft target rows.
void accumulate_term_gradient(const MlpModel& model, const ForwardPass& fp,
                              std::span<const int> labels, const Matrix* soft,
                              double scale, MlpGradients& grads, Backend be) {
    const std::size_t n = fp.probs.rows;
    Matrix dz = fp.probs;
    const double f = scale / static_cast<double>(n);
    if (soft) {
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < dz.cols; ++c)
                dz(r, c) = (dz(r, c) - (*soft)(r, c)) * f;
    } else {
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < dz.cols; ++c) dz(r, c) *= f;
            dz(r, static_cast<std::size_t>(labels[r])) -= f;
        }
    }
    for (std::size_t l = model.weights.size(); l-- > 0;) {
        const Matrix& a_prev = fp.activations[l];
        Matrix dw = kernels::matmul_at_b(dz, a_prev, be);
        std::vector<double> db = kernels::col_sums(dz, be);
        for (std::size_t k = 0; k < dw.data.size(); ++k) grads.dw[l].data[k] += dw.data[k];
        for (std::size_t k = 0; k < db.size(); ++k) grads.db[l][k] += db[k];
        if (l == 0) break;
        Matrix da = kernels::matmul(dz, model.weights[l], be);
        const Matrix& a = fp.activations[l];  // tanh output of layer l
        for (std::size_t k = 0; k < da.data.size(); ++k)
            da.data[k] *= 1.0 - a.data[k] * a.data[k];
        dz = std::move(da);
    }
}

}  // namespace

MlpModel mlp_init(std::vector<int> layer_sizes, Rng& rng) {
    if (layer_sizes.size() < 2)
        throw InvalidInputError("mlp_init: need at least input and output sizes");
    for (int s : layer_sizes)
        if (s < 1) throw InvalidInputError("mlp_init: layer sizes must be positive");
    MlpModel model;
    model.layer_sizes = std::move(layer_sizes);
    for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
        const auto in = static_cast<std::size_t>(model.layer_sizes[l]);
        const auto out = static_cast<std::size_t>(model.layer_sizes[l + 1]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        Matrix w(out, in);
        for (auto& v : w.data) v = rng.uniform(-bound, bound);
        std::vector<double> b(out);
        for (auto& v : b) v = rng.uniform(-bound, bound);
        model.weights.push_back(std::move(w));
        model.biases.push_back(std::move(b));
    }
    return model;
}

Matrix mlp_forward(const MlpModel& model, const Matrix& inputs, Backend be) {
    return forward_pass(model, inputs, be).probs;
}

double mlp_cross_entropy(const MlpModel& model, const Matrix& x,
                         std::span<const int> labels, Backend be) {
    if (x.rows == 0) throw InvalidInputError("mlp_cross_entropy: empty batch");
    if (labels.size() != x.rows)
        throw InvalidInputError("mlp_cross_entropy: label count mismatch");
    return ce_from_logits_hard(forward_pass(model, x, be).logits, labels);
}

double mlp_cross_entropy_soft(const MlpModel& model, const Matrix& x,
                              const Matrix& targets, Backend be) {
    if (x.rows == 0) throw InvalidInputError("mlp_cross_entropy_soft: empty batch");
    return ce_from_logits_soft(forward_pass(model, x, be).logits, targets);
}

double mlp_combined_loss(const MlpModel& model, const Matrix& local_x,
                         std::span<const int> local_y, const Matrix& shared_x,
                         const Matrix& pseudo, double lambda, Backend be) {
    double loss = 0.0;
    if (local_x.rows > 0) loss += mlp_cross_entropy(model, local_x, local_y, be);
    if (lambda > 0.0 && shared_x.rows > 0)
        loss += lambda * mlp_cross_entropy_soft(model, shared_x, pseudo, be);
    return loss;
}

MlpGradients mlp_combined_gradient(const MlpModel& model, const Matrix& local_x,
                                   std::span<const int> local_y, const Matrix& shared_x,
                                   const Matrix& pseudo, double lambda, Backend be) {
    MlpGradients grads = zero_gradients(model);
    if (local_x.rows > 0) {
        if (local_y.size() != local_x.rows)
            throw InvalidInputError("mlp_combined_gradient: label count mismatch");
        const ForwardPass fp = forward_pass(model, local_x, be);
        accumulate_term_gradient(model, fp, local_y, nullptr, 1.0, grads, be);
    }
    if (lambda > 0.0 && shared_x.rows > 0) {
        const ForwardPass fp = forward_pass(model, shared_x, be);
        accumulate_term_gradient(model, fp, {}, &pseudo, lambda, grads, be);
    }
    return grads;
}

MlpModel mlp_train_collaborative(MlpModel model, const Matrix& local_x,
                                 const std::vector<int>& local_y,
                                 const Matrix& shared_x, const Matrix& pseudo,
                                 const TrainConfig& config, Backend be) {
    if (!(config.lambda >= 0.0)) throw InvalidInputError("train: lambda must be >= 0");
    if (!(config.learning_rate > 0.0))
        throw InvalidInputError("train: learning rate must be > 0");
    if (config.local_epochs < 1) throw InvalidInputError("train: epochs must be >= 1");
    if (config.batch_size_local < 1 || config.batch_size_shared < 1)
        throw InvalidInputError("train: batch sizes must be >= 1");
    if (local_x.rows == 0) throw InvalidInputError("train: empty local data");
    if (local_y.size() != local_x.rows)
        throw InvalidInputError("train: label count mismatch");
    const bool use_shared = config.lambda > 0.0 && shared_x.rows > 0;

    Rng rng(config.seed);
    std::vector<std::size_t> local_idx(local_x.rows);
    std::iota(local_idx.begin(), local_idx.end(), 0);
    std::vector<std::size_t> shared_idx(use_shared ? shared_x.rows : 0);
    std::iota(shared_idx.begin(), shared_idx.end(), 0);

    const std::size_t bs_local =
        std::min<std::size_t>(config.batch_size_local, local_x.rows);
    const std::size_t bs_shared =
        use_shared ? std::min<std::size_t>(config.batch_size_shared, shared_x.rows) : 0;

    for (int epoch = 0; epoch < config.local_epochs; ++epoch) {
        rng.shuffle(local_idx);
        if (use_shared) rng.shuffle(shared_idx);
        std::size_t shared_pos = 0;
        for (std::size_t start = 0; start < local_x.rows; start += bs_local) {
            const std::size_t count = std::min(bs_local, local_x.rows - start);
            Matrix bx(count, local_x.cols);
            std::vector<int> by(count);
            for (std::size_t r = 0; r < count; ++r) {
                const std::size_t src = local_idx[start + r];
                std::copy_n(local_x.row(src), local_x.cols, bx.row(r));
                by[r] = local_y[src];
            }
            Matrix sx;
            Matrix st;
            if (use_shared) {
                sx = Matrix(bs_shared, shared_x.cols);
                st = Matrix(bs_shared, pseudo.cols);
                for (std::size_t r = 0; r < bs_shared; ++r) {
                    const std::size_t src = shared_idx[shared_pos];
                    shared_pos = (shared_pos + 1) % shared_idx.size();
                    std::copy_n(shared_x.row(src), shared_x.cols, sx.row(r));
                    std::copy_n(pseudo.row(src), pseudo.cols, st.row(r));
                }
            }
            const double loss =
                mlp_combined_loss(model, bx, by, sx, st, config.lambda, be);
            if (!std::isfinite(loss))
                throw NumericalError("train: non-finite loss", epoch);
            const MlpGradients grads =
                mlp_combined_gradient(model, bx, by, sx, st, config.lambda, be);
            for (std::size_t l = 0; l < model.weights.size(); ++l) {
                for (std::size_t k = 0; k < model.weights[l].data.size(); ++k)
                    model.weights[l].data[k] -= config.learning_rate * grads.dw[l].data[k];
                for (std::size_t k = 0; k < model.biases[l].size(); ++k)
                    model.biases[l][k] -= config.learning_rate * grads.db[l][k];
            }
        }
    }
    return model;
}

MlpModel mlp_local_fit(MlpModel model, const Matrix& local_x,
                       const std::vector<int>& local_y, const TrainConfig& config,
                       Backend be) {
    TrainConfig local = config;
    local.lambda = 0.0;
    return mlp_train_collaborative(std::move(model), local_x, local_y, Matrix(), Matrix(),
                                   local, be);
}

// ------------------------------------------------------------- serialization

void save_poly_text(std::ostream& os, const PolynomialModel& model) {
    os << "poly " << model.degree << "\n";
    for (std::size_t i = 0; i < model.coefficients.size(); ++i) {
        if (i) os << ' ';
        os << format_double(model.coefficients[i]);
    }
    os << "\n";
}

PolynomialModel load_poly_text(std::istream& is) {
    std::string tag;
    PolynomialModel model;
    if (!(is >> tag >> model.degree) || tag != "poly")
        throw InvalidInputError("model text: expected 'poly <degree>' header");
    model.coefficients.resize(static_cast<std::size_t>(model.degree) + 1);
    for (auto& c : model.coefficients)
        if (!(is >> c)) throw InvalidInputError("model text: truncated coefficients");
    return model;
}

void save_mlp_text(std::ostream& os, const MlpModel& model) {
    os << "mlp " << model.layer_sizes.size();
    for (int s : model.layer_sizes) os << ' ' << s;
    os << "\n";
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        for (double v : model.weights[l].data) os << format_double(v) << ' ';
        for (double v : model.biases[l]) os << format_double(v) << ' ';
    }
    os << "\n";
}

MlpModel load_mlp_text(std::istream& is) {
    std::string tag;
    std::size_t layers = 0;
    if (!(is >> tag >> layers) || tag != "mlp" || layers < 2)
        throw InvalidInputError("model text: expected 'mlp <count> <sizes...>' header");
    std::vector<int> sizes(layers);
    for (auto& s : sizes)
        if (!(is >> s)) throw InvalidInputError("model text: truncated layer sizes");
    MlpModel model;
    model.layer_sizes = sizes;
    for (std::size_t l = 0; l + 1 < layers; ++l) {
        const auto in = static_cast<std::size_t>(sizes[l]);
        const auto out = static_cast<std::size_t>(sizes[l + 1]);
        Matrix w(out, in);
        for (auto& v : w.data)
            if (!(is >> v)) throw InvalidInputError("model text: truncated weights");
        std::vector<double> b(out);
        for (auto& v : b)
            if (!(is >> v)) throw InvalidInputError("model text: truncated biases");
        model.weights.push_back(std::move(w));
        model.biases.push_back(std::move(b));
    }
    return model;
}

}  // namespace concord
