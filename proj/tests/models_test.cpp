#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "concord/datagen.hpp"
#include "concord/errors.hpp"
#include "concord/models.hpp"
#include "concord/rng.hpp"

using namespace concord;

namespace {

// relative disagreement with a floor so near-zero gradients do not blow up
double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max(std::fabs(a) + std::fabs(b), 1e-4);
}

struct GradCheckSetup {
    MlpModel model;
    Matrix local_x;
    std::vector<int> local_y;
    Matrix shared_x;
    Matrix pseudo;
};

GradCheckSetup random_grad_setup(Rng& rng, std::size_t n_local, std::size_t n_shared) {
    GradCheckSetup s;
    s.model = mlp_init({3, 4, 3}, rng);
    s.local_x = Matrix(n_local, 3);
    for (auto& v : s.local_x.data) v = rng.uniform(-1.5, 1.5);
    s.local_y.resize(n_local);
    for (auto& y : s.local_y) y = static_cast<int>(rng.next_below(3));
    s.shared_x = Matrix(n_shared, 3);
    for (auto& v : s.shared_x.data) v = rng.uniform(-1.5, 1.5);
    s.pseudo = Matrix(n_shared, 3);
    for (std::size_t i = 0; i < n_shared; ++i) {
        double sum = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            s.pseudo(i, c) = 0.05 + rng.next_double();
            sum += s.pseudo(i, c);
        }
        for (std::size_t c = 0; c < 3; ++c) s.pseudo(i, c) /= sum;
    }
    return s;
}

// max relative error between analytic and central-difference gradients
double max_gradient_error(const GradCheckSetup& s, double lambda, bool use_local,
                          bool use_shared) {
    static const Matrix empty;
    const Matrix& local_x = use_local ? s.local_x : empty;
    const Matrix& shared_x = use_shared ? s.shared_x : empty;
    const std::vector<int> local_y = use_local ? s.local_y : std::vector<int>{};

    const double h = 1e-5;
    const MlpGradients grads = mlp_combined_gradient(s.model, local_x, local_y,
                                                     shared_x, s.pseudo, lambda);
    double worst = 0.0;
    MlpModel probe = s.model;
    for (std::size_t l = 0; l < probe.weights.size(); ++l) {
        for (std::size_t k = 0; k < probe.weights[l].data.size(); ++k) {
            const double keep = probe.weights[l].data[k];
            probe.weights[l].data[k] = keep + h;
            const double up = mlp_combined_loss(probe, local_x, local_y, shared_x,
                                                s.pseudo, lambda);
            probe.weights[l].data[k] = keep - h;
            const double down = mlp_combined_loss(probe, local_x, local_y, shared_x,
                                                  s.pseudo, lambda);
            probe.weights[l].data[k] = keep;
            worst = std::max(worst, rel_err(grads.dw[l].data[k], (up - down) / (2 * h)));
        }
        for (std::size_t k = 0; k < probe.biases[l].size(); ++k) {
            const double keep = probe.biases[l][k];
            probe.biases[l][k] = keep + h;
            const double up = mlp_combined_loss(probe, local_x, local_y, shared_x,
                                                s.pseudo, lambda);
            probe.biases[l][k] = keep - h;
            const double down = mlp_combined_loss(probe, local_x, local_y, shared_x,
                                                  s.pseudo, lambda);
            probe.biases[l][k] = keep;
            worst = std::max(worst, rel_err(grads.db[l][k], (up - down) / (2 * h)));
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("polynomial evaluation") {
    const PolynomialModel zero{3, {0.0, 0.0, 0.0, 0.0}};
    for (double v : poly_predict(zero, std::vector<double>{-1.0, 0.0, 2.0}))
        CHECK(v == 0.0);

    const PolynomialModel cubic{3, {0.5, 0.3, -5.0, 4.0}};
    CHECK(poly_eval(cubic, 0.0) == 4.0);
    CHECK(poly_eval(cubic, 2.0) == doctest::Approx(-0.8).epsilon(1e-12));
}

TEST_CASE("noiseless cubic is recovered exactly at lambda 0") {
    const std::vector<double> xs{-2.0, -1.0, 0.0, 1.0, 2.0};
    std::vector<double> ys;
    for (double x : xs) ys.push_back(cubic_truth_eval(x));
    const PolynomialModel fit = poly_local_fit(xs, ys, 3);
    const std::vector<double> expected{0.5, 0.3, -5.0, 4.0};
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(std::fabs(fit.coefficients[i] - expected[i]) < 1e-8);
}

TEST_CASE("large lambda pins the fit to the pseudo-labels") {
    // local data comes from a different line; the shared term dominates
    const std::vector<double> lx{-1.0, 0.5, 2.0};
    const std::vector<double> ly{-1.0, 0.5, 2.0};  // y = x
    const std::vector<double> sx{-3.0, -1.5, 0.0, 1.0, 2.5, 3.5};
    std::vector<double> pseudo;
    for (double x : sx) pseudo.push_back(cubic_truth_eval(x));
    const PolynomialModel fit = poly_fit_collaborative(lx, ly, sx, pseudo, 3, 1e6);
    const std::vector<double> expected{0.5, 0.3, -5.0, 4.0};
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(std::fabs(fit.coefficients[i] - expected[i]) < 1e-3);
}

TEST_CASE("compatible local and shared targets recover the shared minimizer") {
    const std::vector<double> lx{-2.0, -0.5, 0.0, 1.5, 2.0};
    std::vector<double> ly;
    for (double x : lx) ly.push_back(cubic_truth_eval(x));
    const std::vector<double> sx{-1.0, 0.25, 1.0, 3.0};
    std::vector<double> pseudo;
    for (double x : sx) pseudo.push_back(cubic_truth_eval(x));
    const PolynomialModel fit = poly_fit_collaborative(lx, ly, sx, pseudo, 3, 1.0);
    const std::vector<double> expected{0.5, 0.3, -5.0, 4.0};
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(std::fabs(fit.coefficients[i] - expected[i]) < 1e-8);
}

TEST_CASE("over-parameterized interpolation reaches zero training error") {
    const std::vector<double> xs{-2.0, -1.0, 0.3, 1.1, 2.4};
    std::vector<double> ys;
    for (double x : xs) ys.push_back(cubic_truth_eval(x));
    const PolynomialModel fit = poly_local_fit(xs, ys, 4);
    const std::vector<double> pred = poly_predict(fit, xs);
    for (std::size_t i = 0; i < xs.size(); ++i)
        CHECK(std::fabs(pred[i] - ys[i]) < 1e-8);
}

TEST_CASE("degenerate duplicated-x designs survive via the ridge fallback") {
    const std::vector<double> xs(5, 1.5);
    const std::vector<double> ys{2.0, 2.1, 1.9, 2.05, 1.95};
    const PolynomialModel fit = poly_local_fit(xs, ys, 4);
    const double mean = (2.0 + 2.1 + 1.9 + 2.05 + 1.95) / 5.0;
    CHECK(std::fabs(poly_eval(fit, 1.5) - mean) < 1e-5);

    const std::vector<double> bad{std::nan("")};
    CHECK_THROWS_AS(poly_local_fit(bad, std::vector<double>{1.0}, 2), NumericalError);
}

TEST_CASE("fit satisfies first-order optimality of the combined objective") {
    Rng rng(71);
    std::vector<double> lx(12);
    std::vector<double> ly(12);
    for (std::size_t i = 0; i < lx.size(); ++i) {
        lx[i] = rng.uniform(-2.0, 2.0);
        ly[i] = cubic_truth_eval(lx[i]) + rng.normal();
    }
    std::vector<double> sx(9);
    std::vector<double> ps(9);
    for (std::size_t i = 0; i < sx.size(); ++i) {
        sx[i] = rng.uniform(-3.0, 3.0);
        ps[i] = cubic_truth_eval(sx[i]) + 0.3 * rng.normal();
    }
    const double lambda = 0.7;
    const int degree = 3;
    const PolynomialModel fit = poly_fit_collaborative(lx, ly, sx, ps, degree, lambda);

    // gradient of mean((A theta - y)^2) + lambda mean((B theta - psi)^2)
    std::vector<double> grad(4, 0.0);
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const std::vector<double> row = vandermonde_row(lx[i], degree);
        const double r = poly_eval(fit, lx[i]) - ly[i];
        for (std::size_t k = 0; k < grad.size(); ++k)
            grad[k] += 2.0 * r * row[k] / static_cast<double>(lx.size());
    }
    for (std::size_t i = 0; i < sx.size(); ++i) {
        const std::vector<double> row = vandermonde_row(sx[i], degree);
        const double r = poly_eval(fit, sx[i]) - ps[i];
        for (std::size_t k = 0; k < grad.size(); ++k)
            grad[k] += 2.0 * lambda * r * row[k] / static_cast<double>(sx.size());
    }
    double norm = 0.0;
    for (double g : grad) norm += g * g;
    CHECK(std::sqrt(norm) < 1e-6);
}

TEST_CASE("doubling lambda while halving the shared weight is a no-op") {
    Rng rng(73);
    std::vector<double> lx(8);
    std::vector<double> ly(8);
    for (std::size_t i = 0; i < lx.size(); ++i) {
        lx[i] = rng.uniform(-2.0, 2.0);
        ly[i] = cubic_truth_eval(lx[i]) + rng.normal();
    }
    std::vector<double> sx(6);
    std::vector<double> ps(6);
    for (std::size_t i = 0; i < sx.size(); ++i) {
        sx[i] = rng.uniform(-3.0, 3.0);
        ps[i] = cubic_truth_eval(sx[i]);
    }
    const int degree = 3;
    const double lambda = 0.8;

    auto solve_weighted = [&](double w_local, double w_shared) {
        Matrix m(4, 4, 0.0);
        std::vector<double> rhs(4, 0.0);
        accumulate_normal_system(lx, ly, w_local / static_cast<double>(lx.size()),
                                 degree, m, rhs);
        accumulate_normal_system(sx, ps, w_shared / static_cast<double>(sx.size()),
                                 degree, m, rhs);
        return solve_linear(std::move(m), std::move(rhs));
    };
    const std::vector<double> base = solve_weighted(1.0, lambda);
    const std::vector<double> rescaled = solve_weighted(2.0, 2.0 * lambda);
    for (std::size_t k = 0; k < base.size(); ++k)
        CHECK(base[k] == doctest::Approx(rescaled[k]).epsilon(1e-13));

    const PolynomialModel direct = poly_fit_collaborative(lx, ly, sx, ps, degree, lambda);
    for (std::size_t k = 0; k < base.size(); ++k)
        CHECK(direct.coefficients[k] == doctest::Approx(base[k]).epsilon(1e-13));
}

TEST_CASE("mlp forward: zeros give uniform class probabilities") {
    MlpModel model;
    model.layer_sizes = {3, 5, 4};
    model.weights = {Matrix(5, 3, 0.0), Matrix(4, 5, 0.0)};
    model.biases = {std::vector<double>(5, 0.0), std::vector<double>(4, 0.0)};
    Matrix x(2, 3);
    x(0, 0) = 1.0;
    x(1, 2) = -2.0;
    const Matrix probs = mlp_forward(model, x);
    for (std::size_t i = 0; i < probs.rows; ++i)
        for (std::size_t j = 0; j < probs.cols; ++j)
            CHECK(probs(i, j) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("mlp forward golden check against a hand-computed pass") {
    MlpModel model;
    model.layer_sizes = {2, 2, 2};
    model.weights = {Matrix(2, 2, 0.0), Matrix(2, 2, 0.0)};
    model.biases = {std::vector<double>(2, 0.0), std::vector<double>(2, 0.0)};
    model.weights[0](0, 0) = 1.0;
    model.weights[0](1, 1) = 1.0;
    model.weights[1](0, 0) = 1.0;
    model.weights[1](0, 1) = -1.0;
    model.weights[1](1, 0) = -1.0;
    model.weights[1](1, 1) = 1.0;

    Matrix x(1, 2);
    x(0, 0) = 0.5;
    x(0, 1) = -0.25;
    const Matrix probs = mlp_forward(model, x);

    const double a = std::tanh(0.5) - std::tanh(-0.25);
    const double p0 = 1.0 / (1.0 + std::exp(-2.0 * a));
    CHECK(probs(0, 0) == doctest::Approx(p0).epsilon(1e-12));
    CHECK(probs(0, 1) == doctest::Approx(1.0 - p0).epsilon(1e-12));

    CHECK_THROWS_AS(mlp_forward(model, Matrix(1, 3)), InvalidInputError);
}

TEST_CASE("mlp forward rows are probability vectors") {
    Rng rng(81);
    const MlpModel model = mlp_init({4, 6, 3}, rng);
    Matrix x(17, 4);
    for (auto& v : x.data) v = rng.uniform(-2.0, 2.0);
    const Matrix probs = mlp_forward(model, x);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < probs.cols; ++j) sum += probs(i, j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(91);
    for (int trial = 0; trial < 4; ++trial) {
        const GradCheckSetup s = random_grad_setup(rng, 5, 4);
        CHECK(max_gradient_error(s, 0.7, true, true) < 1e-4);   // combined
        CHECK(max_gradient_error(s, 0.0, true, false) < 1e-4);  // local only
        CHECK(max_gradient_error(s, 1.0, false, true) < 1e-4);  // shared only
    }
}

TEST_CASE("training separates a linearly separable toy set") {
    Rng rng(101);
    const std::size_t per_class = 20;
    Matrix x(2 * per_class, 2);
    std::vector<int> y(2 * per_class);
    for (std::size_t i = 0; i < per_class; ++i) {
        x(i, 0) = -2.0 + 0.3 * rng.normal();
        x(i, 1) = 0.3 * rng.normal();
        y[i] = 0;
        x(per_class + i, 0) = 2.0 + 0.3 * rng.normal();
        x(per_class + i, 1) = 0.3 * rng.normal();
        y[per_class + i] = 1;
    }
    MlpModel model = mlp_init({2, 4, 2}, rng);
    TrainConfig config;
    config.learning_rate = 0.2;
    config.local_epochs = 200;
    config.batch_size_local = 64;
    config.seed = 7;
    model = mlp_local_fit(std::move(model), x, y, config);

    const Matrix probs = mlp_forward(model, x);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < probs.rows; ++i) {
        const std::size_t arg = probs(i, 0) > probs(i, 1) ? 0 : 1;
        hits += arg == static_cast<std::size_t>(y[i]);
    }
    CHECK(hits == probs.rows);
}

TEST_CASE("distillation toward true labels helps on the shared set") {
    Rng rng(111);
    // two gaussian blobs per class, local labels carry some flips
    const std::size_t n_local = 60;
    const std::size_t n_shared = 40;
    auto sample = [&](std::size_t n, Matrix& x, std::vector<int>& y) {
        x = Matrix(n, 2);
        y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int label = static_cast<int>(rng.next_below(2));
            x(i, 0) = (label ? 1.4 : -1.4) + rng.normal();
            x(i, 1) = rng.normal();
            y[i] = label;
        }
    };
    Matrix lx;
    std::vector<int> ly;
    sample(n_local, lx, ly);
    for (std::size_t i = 0; i < n_local; i += 7) ly[i] = 1 - ly[i];  // label noise
    Matrix sx;
    std::vector<int> sy;
    sample(n_shared, sx, sy);
    Matrix pseudo(n_shared, 2, 0.0);
    for (std::size_t i = 0; i < n_shared; ++i)
        pseudo(i, static_cast<std::size_t>(sy[i])) = 1.0;

    Rng init_rng(5);
    const MlpModel start = mlp_init({2, 5, 2}, init_rng);
    TrainConfig config;
    config.learning_rate = 0.1;
    config.local_epochs = 1;
    config.batch_size_local = 1000;  // full batch keeps the loss trace clean
    config.batch_size_shared = 1000;
    config.seed = 11;

    MlpModel local_only = start;
    MlpModel distilled = start;
    double prev_ce = mlp_cross_entropy_soft(distilled, sx, pseudo);
    const int epochs = 60;
    for (int e = 0; e < epochs; ++e) {
        TrainConfig step = config;
        step.seed = config.seed + static_cast<std::uint64_t>(e);
        local_only = mlp_local_fit(std::move(local_only), lx, ly, step);
        step.lambda = 1.0;
        distilled = mlp_train_collaborative(std::move(distilled), lx, ly, sx, pseudo,
                                            step);
        const double ce = mlp_cross_entropy_soft(distilled, sx, pseudo);
        CHECK(ce <= prev_ce + 1e-9);
        prev_ce = ce;
    }
    auto shared_accuracy = [&](const MlpModel& m) {
        const Matrix probs = mlp_forward(m, sx);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < probs.rows; ++i) {
            const std::size_t arg = probs(i, 0) > probs(i, 1) ? 0 : 1;
            hits += arg == static_cast<std::size_t>(sy[i]);
        }
        return static_cast<double>(hits) / static_cast<double>(probs.rows);
    };
    CHECK(shared_accuracy(distilled) >= shared_accuracy(local_only));
}

TEST_CASE("training is bit-deterministic in the seed") {
    Rng rng(121);
    Matrix x(30, 2);
    std::vector<int> y(30);
    for (std::size_t i = 0; i < 30; ++i) {
        x(i, 0) = rng.uniform(-2.0, 2.0);
        x(i, 1) = rng.uniform(-2.0, 2.0);
        y[i] = static_cast<int>(rng.next_below(3));
    }
    TrainConfig config;
    config.learning_rate = 0.05;
    config.local_epochs = 5;
    config.batch_size_local = 8;
    config.seed = 42;

    Rng init_a(9);
    Rng init_b(9);
    const MlpModel a = mlp_local_fit(mlp_init({2, 4, 3}, init_a), x, y, config);
    const MlpModel b = mlp_local_fit(mlp_init({2, 4, 3}, init_b), x, y, config);
    std::ostringstream sa;
    std::ostringstream sb;
    save_mlp_text(sa, a);
    save_mlp_text(sb, b);
    CHECK(sa.str() == sb.str());

    TrainConfig other = config;
    other.seed = 43;
    Rng init_c(9);
    const MlpModel c = mlp_local_fit(mlp_init({2, 4, 3}, init_c), x, y, other);
    std::ostringstream sc;
    save_mlp_text(sc, c);
    CHECK(sa.str() != sc.str());
}

TEST_CASE("an under-parameterized agent fits the cubic strictly worse") {
    const RegressionAgentSpec spec{0.0, 2.0, 60, 0.5};
    const LabeledRegression data = gen_cubic_regression(spec, 77);
    const PolynomialModel weak = poly_local_fit(data.x, data.y, 1);
    const PolynomialModel strong = poly_local_fit(data.x, data.y, 4);
    auto train_mse = [&](const PolynomialModel& m) {
        double acc = 0.0;
        for (std::size_t i = 0; i < data.x.size(); ++i) {
            const double r = poly_eval(m, data.x[i]) - data.y[i];
            acc += r * r;
        }
        return acc / static_cast<double>(data.x.size());
    };
    CHECK(train_mse(weak) > train_mse(strong));
}

TEST_CASE("model text round-trips exactly") {
    Rng rng(131);
    const PolynomialModel poly{4, {1.25, -0.5, 3.0, 0.0, 1e-17}};
    std::stringstream ps;
    save_poly_text(ps, poly);
    const PolynomialModel poly_back = load_poly_text(ps);
    CHECK(poly_back.degree == poly.degree);
    CHECK(poly_back.coefficients == poly.coefficients);

    const MlpModel mlp = mlp_init({3, 5, 2}, rng);
    std::stringstream ms;
    save_mlp_text(ms, mlp);
    const MlpModel mlp_back = load_mlp_text(ms);
    CHECK(mlp_back.layer_sizes == mlp.layer_sizes);
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
        CHECK(mlp_back.weights[l] == mlp.weights[l]);
        CHECK(mlp_back.biases[l] == mlp.biases[l]);
    }

    std::stringstream garbage("poly x");
    CHECK_THROWS_AS(load_poly_text(garbage), InvalidInputError);
}
