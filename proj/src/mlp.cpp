#include "mcduct/mlp.hpp"

#include <cmath>

#include "mcduct/errors.hpp"

namespace mcduct {

std::int64_t MlpArchitecture::param_count() const {
    std::int64_t n = 0;
    for (int a = 0; a < n_affine(); ++a)
        n += static_cast<std::int64_t>(sizes[a]) * sizes[a + 1] + sizes[a + 1];
    for (int k = 0; k < n_layernorm(); ++k) n += 2LL * sizes[k + 1];
    return n;
}

Mlp::Layout Mlp::make_layout(const MlpArchitecture& arch) {
    Layout lo;
    std::ptrdiff_t off = 0;
    for (int a = 0; a < arch.n_affine(); ++a) {
        lo.w_off.push_back(off);
        off += static_cast<std::ptrdiff_t>(arch.sizes[a]) * arch.sizes[a + 1];
        lo.b_off.push_back(off);
        off += arch.sizes[a + 1];
        if (a < arch.n_layernorm()) {
            lo.g_off.push_back(off);
            off += arch.sizes[a + 1];
            lo.be_off.push_back(off);
            off += arch.sizes[a + 1];
        }
    }
    lo.total = off;
    return lo;
}

Mlp::Mlp(MlpArchitecture arch) : arch_(std::move(arch)) {
    if (arch_.sizes.size() < 2) raise_invalid("network needs at least one affine layer");
    for (int s : arch_.sizes)
        if (s <= 0) raise_invalid("layer sizes must be positive");
    layout_ = make_layout(arch_);
    theta_ = Eigen::VectorXd::Zero(layout_.total);
}

// Weight a maps sizes[a] -> sizes[a+1]; stored column-major as (out x in).
Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int a) const {
    return {theta_.data() + layout_.w_off[static_cast<std::size_t>(a)], arch_.sizes[a + 1],
            arch_.sizes[a]};
}
Eigen::Map<const Eigen::VectorXd> Mlp::bias(int a) const {
    return {theta_.data() + layout_.b_off[static_cast<std::size_t>(a)], arch_.sizes[a + 1]};
}
Eigen::Map<const Eigen::VectorXd> Mlp::ln_gain(int k) const {
    return {theta_.data() + layout_.g_off[static_cast<std::size_t>(k)], arch_.sizes[k + 1]};
}
Eigen::Map<const Eigen::VectorXd> Mlp::ln_bias(int k) const {
    return {theta_.data() + layout_.be_off[static_cast<std::size_t>(k)], arch_.sizes[k + 1]};
}
Eigen::Map<Eigen::MatrixXd> Mlp::weight(int a) {
    return {theta_.data() + layout_.w_off[static_cast<std::size_t>(a)], arch_.sizes[a + 1],
            arch_.sizes[a]};
}
Eigen::Map<Eigen::VectorXd> Mlp::bias(int a) {
    return {theta_.data() + layout_.b_off[static_cast<std::size_t>(a)], arch_.sizes[a + 1]};
}
Eigen::Map<Eigen::VectorXd> Mlp::ln_gain(int k) {
    return {theta_.data() + layout_.g_off[static_cast<std::size_t>(k)], arch_.sizes[k + 1]};
}
Eigen::Map<Eigen::VectorXd> Mlp::ln_bias(int k) {
    return {theta_.data() + layout_.be_off[static_cast<std::size_t>(k)], arch_.sizes[k + 1]};
}

void Mlp::init(std::uint64_t seed) {
    Rng rng(seed);
    for (int a = 0; a < arch_.n_affine(); ++a) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(arch_.sizes[a]));
        auto w = weight(a);
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            for (Eigen::Index r = 0; r < w.rows(); ++r)
                w(r, c) = (2.0 * rng.next_double() - 1.0) * bound;
        auto bv = bias(a);
        for (Eigen::Index r = 0; r < bv.size(); ++r)
            bv[r] = (2.0 * rng.next_double() - 1.0) * bound;
    }
    for (int k = 0; k < arch_.n_layernorm(); ++k) {
        ln_gain(k).setOnes();
        ln_bias(k).setZero();
    }
}

void Mlp::set_params(const Eigen::VectorXd& theta) {
    if (theta.size() != theta_.size()) raise_invalid("parameter vector length mismatch");
    theta_ = theta;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& X, bool training, Rng* rng) const {
    Cache cache;
    return forward(X, training, rng, cache);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& X, bool training, Rng* rng,
                             Cache& cache) const {
    if (X.cols() != arch_.input_dim()) raise_invalid("input feature dimension mismatch");
    if (!X.allFinite()) raise_numeric("non-finite network input");

    cache = Cache{};
    Eigen::MatrixXd cur = X;
    for (int a = 0; a < arch_.n_affine(); ++a) {
        cache.inputs.push_back(cur);
        Eigen::MatrixXd z = cur * weight(a).transpose();
        z.rowwise() += bias(a).transpose();

        if (a < arch_.n_layernorm()) {
            const Eigen::VectorXd mean = z.rowwise().mean();
            Eigen::MatrixXd centered = z.colwise() - mean;
            const Eigen::VectorXd var = centered.array().square().rowwise().mean();
            const Eigen::VectorXd istd = (var.array() + arch_.ln_eps).rsqrt();
            Eigen::MatrixXd xhat = centered.array().colwise() * istd.array();
            cache.ln_xhat.push_back(xhat);
            cache.ln_istd.push_back(istd);
            z = (xhat.array().rowwise() * ln_gain(a).transpose().array()).matrix();
            z.rowwise() += ln_bias(a).transpose();
        }

        if (a < arch_.n_hidden()) {
            Eigen::MatrixXd mask = (z.array() > 0.0).cast<double>();
            cache.relu_mask.push_back(mask);
            z = z.cwiseProduct(mask);
            if (a == 0 && training && arch_.dropout_p > 0.0) {
                if (rng == nullptr) raise_invalid("training forward pass needs an rng for dropout");
                const double keep = 1.0 - arch_.dropout_p;
                Eigen::MatrixXd drop(z.rows(), z.cols());
                for (Eigen::Index r = 0; r < drop.rows(); ++r)
                    for (Eigen::Index c = 0; c < drop.cols(); ++c)
                        drop(r, c) = rng->next_double() < keep ? 1.0 / keep : 0.0;
                cache.dropout_mask = drop;
                z = z.cwiseProduct(drop);
            }
        }
        cur = std::move(z);
    }
    cache.output = cur;
    return cur;
}

double Mlp::weight_sq_norm() const {
    double s = 0.0;
    for (int a = 0; a < arch_.n_affine(); ++a) s += weight(a).squaredNorm();
    return s;
}

double Mlp::loss(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double lambda) const {
    const Eigen::MatrixXd pred = forward(X, false, nullptr);
    const double data = (pred - Y).squaredNorm() / static_cast<double>(X.rows());
    return data + lambda * weight_sq_norm();
}

double Mlp::loss_and_grad(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double lambda,
                          bool training, Rng* rng, Eigen::VectorXd& grad) const {
    if (Y.rows() != X.rows() || Y.cols() != arch_.output_dim())
        raise_invalid("target dimension mismatch");

    Cache cache;
    const Eigen::MatrixXd pred = forward(X, training, rng, cache);
    const double inv_n = 1.0 / static_cast<double>(X.rows());
    const Eigen::MatrixXd resid = pred - Y;
    const double objective = resid.squaredNorm() * inv_n + lambda * weight_sq_norm();

    grad.setZero(theta_.size());
    Eigen::MatrixXd delta = 2.0 * inv_n * resid;  // d objective / d output

    for (int a = arch_.n_affine() - 1; a >= 0; --a) {
        if (a < arch_.n_hidden()) {
            if (a == 0 && cache.dropout_mask.size() > 0)
                delta = delta.cwiseProduct(cache.dropout_mask);
            delta = delta.cwiseProduct(cache.relu_mask[static_cast<std::size_t>(a)]);
        }
        if (a < arch_.n_layernorm()) {
            const auto& xhat = cache.ln_xhat[static_cast<std::size_t>(a)];
            const auto& istd = cache.ln_istd[static_cast<std::size_t>(a)];
            Eigen::Map<Eigen::VectorXd> dg(grad.data() + layout_.g_off[static_cast<std::size_t>(a)],
                                           arch_.sizes[a + 1]);
            Eigen::Map<Eigen::VectorXd> db(grad.data() + layout_.be_off[static_cast<std::size_t>(a)],
                                           arch_.sizes[a + 1]);
            dg = delta.cwiseProduct(xhat).colwise().sum();
            db = delta.colwise().sum();

            Eigen::MatrixXd g = delta.array().rowwise() * ln_gain(a).transpose().array();
            const Eigen::VectorXd m1 = g.rowwise().mean();
            const Eigen::VectorXd m2 = g.cwiseProduct(xhat).rowwise().mean();
            delta = ((g.colwise() - m1) - (xhat.array().colwise() * m2.array()).matrix())
                        .array()
                        .colwise() *
                    istd.array();
        }
        const auto& input = cache.inputs[static_cast<std::size_t>(a)];
        Eigen::Map<Eigen::MatrixXd> dW(grad.data() + layout_.w_off[static_cast<std::size_t>(a)],
                                       arch_.sizes[a + 1], arch_.sizes[a]);
        Eigen::Map<Eigen::VectorXd> db(grad.data() + layout_.b_off[static_cast<std::size_t>(a)],
                                       arch_.sizes[a + 1]);
        dW = delta.transpose() * input;
        dW += 2.0 * lambda * weight(a);
        db = delta.colwise().sum();
        if (a > 0) delta = (delta * weight(a)).eval();
    }
    return objective;
}

}  // namespace mcduct
