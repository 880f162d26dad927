#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mcduct/rng.hpp"

namespace mcduct {

/// Fully connected regression network: affine layers with layer
/// normalization after the first two, a rectifier after every hidden layer,
/// and dropout after the first hidden activation (training only, inverted
/// scaling). No output activation.
struct MlpArchitecture {
    std::vector<int> sizes;  // e.g. {16, 192, 192, 96, m}
    double dropout_p = 0.1;
    double ln_eps = 1e-5;

    int n_affine() const { return static_cast<int>(sizes.size()) - 1; }
    int n_hidden() const { return n_affine() - 1; }
    int n_layernorm() const { return n_hidden() < 2 ? n_hidden() : 2; }
    int input_dim() const { return sizes.front(); }
    int output_dim() const { return sizes.back(); }
    std::int64_t param_count() const;
};

class Mlp {
public:
    explicit Mlp(MlpArchitecture arch);

    const MlpArchitecture& architecture() const { return arch_; }
    std::int64_t param_count() const { return theta_.size(); }

    /// Uniform fan-in initialization: W, b ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in));
    /// layer-norm gains 1, biases 0.
    void init(std::uint64_t seed);

    /// Rows of X are samples. Deterministic when training = false; rng is
    /// consumed for dropout masks only (required when training and
    /// dropout_p > 0).
    Eigen::MatrixXd forward(const Eigen::MatrixXd& X, bool training = false,
                            Rng* rng = nullptr) const;

    /// Intermediate state captured by a training forward pass, consumed by
    /// backward(); exposed for the normalization-statistics checks.
    struct Cache {
        std::vector<Eigen::MatrixXd> inputs;    // per affine layer
        std::vector<Eigen::MatrixXd> ln_xhat;   // per layer-norm
        std::vector<Eigen::VectorXd> ln_istd;   // per layer-norm, per row
        std::vector<Eigen::MatrixXd> relu_mask; // per hidden layer
        Eigen::MatrixXd dropout_mask;           // empty when inactive
        Eigen::MatrixXd output;
    };
    Eigen::MatrixXd forward(const Eigen::MatrixXd& X, bool training, Rng* rng, Cache& cache) const;

    /// Full objective: mean squared residual norm over the batch plus
    /// lambda * ||affine weights||^2 (biases and layer-norm parameters are
    /// not penalized). Returns the objective value and fills grad (same
    /// layout as params()).
    double loss_and_grad(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double lambda,
                         bool training, Rng* rng, Eigen::VectorXd& grad) const;

    /// Objective evaluated without dropout and without gradients.
    double loss(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double lambda) const;

    /// Squared L2 norm of the affine weights (the ridge term base).
    double weight_sq_norm() const;

    const Eigen::VectorXd& params() const { return theta_; }
    void set_params(const Eigen::VectorXd& theta);
    double* params_data() { return theta_.data(); }

    // Mapped views into the flat parameter vector.
    Eigen::Map<const Eigen::MatrixXd> weight(int a) const;
    Eigen::Map<const Eigen::VectorXd> bias(int a) const;
    Eigen::Map<const Eigen::VectorXd> ln_gain(int k) const;
    Eigen::Map<const Eigen::VectorXd> ln_bias(int k) const;
    Eigen::Map<Eigen::MatrixXd> weight(int a);
    Eigen::Map<Eigen::VectorXd> bias(int a);
    Eigen::Map<Eigen::VectorXd> ln_gain(int k);
    Eigen::Map<Eigen::VectorXd> ln_bias(int k);

private:
    struct Layout {
        std::vector<std::ptrdiff_t> w_off, b_off, g_off, be_off;
        std::int64_t total = 0;
    };
    static Layout make_layout(const MlpArchitecture& arch);

    MlpArchitecture arch_;
    Layout layout_;
    Eigen::VectorXd theta_;
};

}  // namespace mcduct
