#include <doctest.h>

#include <cmath>
#include <limits>

#include "mcduct/errors.hpp"
#include "mcduct/mlp.hpp"
#include "mcduct/train.hpp"

using namespace mcduct;

TEST_SUITE_BEGIN("mlp");

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * (2.0 * rng.next_double() - 1.0);
    return m;
}

MlpArchitecture reduced_arch() {
    MlpArchitecture arch;
    arch.sizes = {16, 8, 8, 4, 5};
    return arch;
}

}  // namespace

TEST_CASE("parameter count matches the closed-form expression") {
    MlpArchitecture arch;
    arch.sizes = {16, 192, 192, 96, 25};
    const std::int64_t expected = 16 * 192 + 192 + 192 * 192 + 192 + 192 * 96 + 96 +
                                  96 * 25 + 25 + 2 * (2 * 192);
    CHECK(arch.param_count() == expected);
    Mlp net(arch);
    CHECK(net.param_count() == expected);
    CHECK(net.params().size() == expected);
}

TEST_CASE("zero-initialized network outputs the final-layer bias") {
    Mlp net(reduced_arch());  // parameters start at zero
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(net.param_count());
    net.set_params(theta);
    net.bias(3) << 1.0, -2.0, 0.5, 3.0, -0.25;

    Rng rng(3);
    const Eigen::MatrixXd X = random_matrix(4, 16, rng);
    const Eigen::MatrixXd Y = net.forward(X);
    for (Eigen::Index r = 0; r < Y.rows(); ++r) {
        CHECK(Y(r, 0) == 1.0);
        CHECK(Y(r, 1) == -2.0);
        CHECK(Y(r, 4) == -0.25);
    }
}

TEST_CASE("inference is deterministic") {
    Mlp net(reduced_arch());
    net.init(99);
    Rng rng(5);
    const Eigen::MatrixXd X = random_matrix(6, 16, rng);
    const Eigen::MatrixXd a = net.forward(X);
    const Eigen::MatrixXd b = net.forward(X);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("layer norm standardizes each sample before gain and bias") {
    MlpArchitecture arch;
    arch.sizes = {16, 192, 192, 96, 10};
    Mlp net(arch);
    net.init(7);
    Rng rng(11);
    // large input scale keeps the pre-activation variance far above ln_eps
    const Eigen::MatrixXd X = random_matrix(8, 16, rng, 40.0);
    Mlp::Cache cache;
    net.forward(X, false, nullptr, cache);
    REQUIRE(cache.ln_xhat.size() == 2);
    for (const auto& xhat : cache.ln_xhat) {
        for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
            const double mean = xhat.row(r).mean();
            const double var = xhat.row(r).array().square().mean() - mean * mean;
            CHECK(std::abs(mean) < 1e-6);
            CHECK(std::abs(var - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("loss equals the residual norm plus the ridge term") {
    Mlp net(reduced_arch());
    net.init(13);
    Rng rng(17);
    const Eigen::MatrixXd X = random_matrix(1, 16, rng);
    const Eigen::MatrixXd pred = net.forward(X);

    // perfect prediction, lambda = 0
    CHECK(net.loss(X, pred, 0.0) == 0.0);

    // single sample: ||r||^2 + lambda ||theta_w||^2
    Eigen::MatrixXd Y = pred;
    Y(0, 2) += 0.7;
    const double lambda = 1e-3;
    const double expected = 0.49 + lambda * net.weight_sq_norm();
    CHECK(net.loss(X, Y, lambda) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("loss decomposition: loss(lambda) - loss(0) = lambda * ||weights||^2") {
    Mlp net(reduced_arch());
    net.init(19);
    Rng rng(23);
    const Eigen::MatrixXd X = random_matrix(12, 16, rng);
    const Eigen::MatrixXd Y = random_matrix(12, 5, rng);
    const double lambda = 3.7e-4;
    const double diff = net.loss(X, Y, lambda) - net.loss(X, Y, 0.0);
    CHECK(diff == doctest::Approx(lambda * net.weight_sq_norm()).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences") {
    MlpArchitecture arch = reduced_arch();
    Mlp net(arch);
    net.init(29);
    Rng rng(31);
    const double lambda = 1e-5;
    const double h = 1e-5;

    for (int batch = 0; batch < 2; ++batch) {
        const Eigen::MatrixXd X = random_matrix(16, 16, rng);
        const Eigen::MatrixXd Y = random_matrix(16, 5, rng);
        Eigen::VectorXd grad;
        net.loss_and_grad(X, Y, lambda, false, nullptr, grad);

        Eigen::VectorXd theta = net.params();
        double worst = 0.0;
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            Mlp probe(arch);
            Eigen::VectorXd tp = theta;
            tp[i] += h;
            probe.set_params(tp);
            const double up = probe.loss(X, Y, lambda);
            tp[i] -= 2 * h;
            probe.set_params(tp);
            const double down = probe.loss(X, Y, lambda);
            const double fd = (up - down) / (2 * h);
            const double rel = std::abs(grad[i] - fd) /
                               std::max({std::abs(grad[i]), std::abs(fd), 1e-8});
            worst = std::max(worst, rel);
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("dropout uses inverted scaling and only acts in training mode") {
    MlpArchitecture arch;
    arch.sizes = {4, 64, 8};
    arch.dropout_p = 0.1;
    Mlp net(arch);
    net.init(37);
    Rng data_rng(41);
    const Eigen::MatrixXd X = random_matrix(1, 4, data_rng);
    const Eigen::MatrixXd ref = net.forward(X);

    // expectation over many masks approaches the inference output
    Rng dropout_rng(43);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(1, 8);
    const int trials = 20000;
    bool saw_difference = false;
    for (int t = 0; t < trials; ++t) {
        const Eigen::MatrixXd out = net.forward(X, true, &dropout_rng);
        if ((out - ref).cwiseAbs().maxCoeff() > 1e-12) saw_difference = true;
        acc += out;
    }
    acc /= trials;
    CHECK(saw_difference);
    CHECK((acc - ref).cwiseAbs().maxCoeff() < 0.05 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
}

TEST_CASE("training needs an rng when dropout is active") {
    Mlp net(reduced_arch());
    net.init(47);
    Rng rng(53);
    const Eigen::MatrixXd X = random_matrix(4, 16, rng);
    CHECK_THROWS_AS(net.forward(X, true, nullptr), error);
    Eigen::MatrixXd bad = X;
    bad(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(net.forward(bad), error);
}

TEST_CASE("seeded training runs are identical and an ensemble of one is its member") {
    MlpArchitecture arch;
    arch.sizes = {16, 8, 8, 4, 3};
    Rng rng(59);
    const Eigen::MatrixXd Xtr = random_matrix(64, 16, rng);
    Eigen::MatrixXd Ytr(64, 3);
    for (Eigen::Index i = 0; i < 64; ++i) {
        Ytr(i, 0) = Xtr.row(i).head(4).sum();
        Ytr(i, 1) = Xtr(i, 0) * Xtr(i, 1);
        Ytr(i, 2) = std::sin(Xtr(i, 2));
    }
    const Eigen::MatrixXd Xval = Xtr.topRows(16);
    const Eigen::MatrixXd Yval = Ytr.topRows(16);

    TrainConfig cfg;
    cfg.batch_size = 16;
    cfg.max_epochs = 30;
    cfg.patience = 30;
    cfg.ensemble = 1;
    cfg.seed = 1234;

    const TrainResult a = train_ensemble(Xtr, Ytr, Xval, Yval, arch, cfg);
    const TrainResult b = train_ensemble(Xtr, Ytr, Xval, Yval, arch, cfg);
    REQUIRE(a.history.size() == 1);
    REQUIRE(a.history[0].epochs.size() == b.history[0].epochs.size());
    for (std::size_t e = 0; e < a.history[0].epochs.size(); ++e) {
        CHECK(std::abs(a.history[0].epochs[e].val_loss - b.history[0].epochs[e].val_loss) <
              1e-10);
    }
    // training made progress
    CHECK(a.history[0].best_val < a.history[0].epochs.front().val_loss);

    // ensemble of one predicts exactly its member's output
    const Eigen::MatrixXd direct = a.ensemble.members[0].forward(Xval);
    const Eigen::MatrixXd mean = a.ensemble.predict(Xval);
    CHECK((direct - mean).cwiseAbs().maxCoeff() == 0.0);
}

TEST_SUITE_END();
