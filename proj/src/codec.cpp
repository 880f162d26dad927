#include "mcduct/codec.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "mcduct/errors.hpp"
#include "mcduct/hashio.hpp"

namespace mcduct {

namespace {

/// Linear interpolation of a waveform sampled at t_l = (l+1) * dt, zero
/// outside the recorded span.
double interp_waveform(const std::vector<double>& h, double dt, double t) {
    const double s = t / dt - 1.0;  // fractional sample index
    const auto n = static_cast<std::ptrdiff_t>(h.size());
    if (s <= -1.0 || s >= static_cast<double>(n)) return 0.0;
    if (s < 0.0) {
        // Between t = 0 (release, h = 0) and the first sample.
        return (s + 1.0) * h[0];
    }
    const auto i0 = static_cast<std::ptrdiff_t>(s);
    if (i0 >= n - 1) return 0.0;  // beyond the last sample
    const double frac = s - static_cast<double>(i0);
    return h[static_cast<std::size_t>(i0)] * (1.0 - frac) +
           h[static_cast<std::size_t>(i0 + 1)] * frac;
}

/// Linear interpolation on the uniform tau grid, zero outside.
double interp_tau(const Eigen::VectorXd& y, const TauGrid& tg, double tau) {
    const double s = (tau - tg.tau_min) / tg.spacing();
    if (s < 0.0 || s > static_cast<double>(tg.N_tau - 1)) return 0.0;
    const auto i0 = static_cast<int>(s);
    if (i0 >= tg.N_tau - 1) return y[tg.N_tau - 1];
    const double frac = s - i0;
    return y[i0] * (1.0 - frac) + y[i0 + 1] * frac;
}

}  // namespace

ShapeFactorization factorize(const CirWaveform& cir, const TauGrid& tg) {
    const auto n = cir.h.size();
    if (n == 0) raise_invalid("degenerate waveform: empty");

    std::size_t peak_idx = 0;
    double peak = cir.h[0];
    for (std::size_t l = 1; l < n; ++l) {
        if (cir.h[l] > peak) {  // strict: ties keep the earliest index
            peak = cir.h[l];
            peak_idx = l;
        }
    }
    if (!(peak > 0.0)) raise_invalid("degenerate waveform: no strictly positive sample");

    const double t_p = cir.grid.time(static_cast<int>(peak_idx));
    double mass = 0.0;
    double second_moment = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        const double t = cir.grid.time(static_cast<int>(l));
        mass += cir.h[l];
        second_moment += cir.h[l] * (t - t_p) * (t - t_p);
    }
    const double w = std::sqrt(second_moment / mass);
    if (!(w > 0.0)) raise_invalid("degenerate waveform: zero rms width (single nonzero sample)");

    ShapeFactorization f;
    f.warp = WarpTriplet{peak, t_p, w};
    f.shape.resize(tg.N_tau);
    const double dt = cir.grid.dt();
    for (int k = 0; k < tg.N_tau; ++k)
        f.shape[k] = interp_waveform(cir.h, dt, t_p + w * tg.tau(k)) / peak;

    const double t_lo = t_p + w * tg.tau_min;
    const double t_hi = t_p + w * tg.tau_max;
    double outside = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        const double t = cir.grid.time(static_cast<int>(l));
        if (t < t_lo || t > t_hi) outside += cir.h[l];
    }
    f.truncated_fraction = outside / mass;
    return f;
}

double ShapeCodec::weighted_dot(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    return (weights.array() * u.array() * v.array()).sum() / tau_grid.N_tau;
}

ShapeCodec fit_codec(const std::vector<ShapeFactorization>& train, const TauGrid& tg,
                     double sigma_w, double variance_target) {
    const auto n = static_cast<Eigen::Index>(train.size());
    if (n < 2) raise_invalid("codec fit needs at least 2 training shapes");
    if (!(sigma_w > 0.0)) raise_invalid("sigma_w must be positive");
    if (!(variance_target > 0.0 && variance_target <= 1.0))
        raise_invalid("variance_target must lie in (0, 1]");

    ShapeCodec codec;
    codec.tau_grid = tg;
    codec.sigma_w = sigma_w;
    codec.variance_target = variance_target;

    codec.weights.resize(tg.N_tau);
    for (int k = 0; k < tg.N_tau; ++k) {
        const double r = tg.tau(k) / sigma_w;
        codec.weights[k] = std::exp(-r * r);
    }
    codec.weights *= static_cast<double>(tg.N_tau) / codec.weights.sum();

    Eigen::MatrixXd shapes(n, tg.N_tau);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (train[static_cast<std::size_t>(i)].shape.size() != tg.N_tau)
            raise_invalid("training shape length mismatch");
        shapes.row(i) = train[static_cast<std::size_t>(i)].shape.transpose();
    }
    codec.mu_shape = shapes.colwise().mean();

    // Weighted PCA realized as plain PCA of sqrt(weight)-scaled residuals.
    const Eigen::VectorXd scale =
        (codec.weights / static_cast<double>(tg.N_tau)).array().sqrt().matrix();
    Eigen::MatrixXd resid = shapes.rowwise() - codec.mu_shape.transpose();
    Eigen::MatrixXd scaled = resid * scale.asDiagonal();

    const double total_variance = scaled.squaredNorm() / static_cast<double>(n);
    if (total_variance <= 1e-30) {
        // All shapes identical: keep a single flat component with zero variance
        // (the constant vector has unit weighted norm by the normalization).
        codec.K = 1;
        codec.basis = Eigen::MatrixXd::Ones(1, tg.N_tau);
        codec.captured_variance = 1.0;
        codec.eigenvalues = Eigen::VectorXd::Zero(1);
    } else {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinV);
        const Eigen::VectorXd sv = svd.singularValues();
        const Eigen::Index rank = sv.size();
        Eigen::VectorXd lambda(rank);
        for (Eigen::Index k = 0; k < rank; ++k) lambda[k] = sv[k] * sv[k] / static_cast<double>(n);

        int K = 1;
        double cum = lambda[0];
        while (cum < variance_target * total_variance && K < rank) {
            cum += lambda[K];
            ++K;
        }
        if (cum < variance_target * total_variance && K >= tg.N_tau)
            raise_invalid("variance target unreachable: K would exceed the tau grid length");

        codec.K = K;
        codec.captured_variance = cum / total_variance;
        codec.eigenvalues = lambda;
        codec.basis.resize(K, tg.N_tau);
        for (int k = 0; k < K; ++k) {
            Eigen::VectorXd phi = svd.matrixV().col(k).array() / scale.array();
            // Deterministic sign: largest-magnitude entry positive.
            Eigen::Index imax = 0;
            phi.cwiseAbs().maxCoeff(&imax);
            if (phi[imax] < 0.0) phi = -phi;
            codec.basis.row(k) = phi.transpose();
        }
    }

    // Target statistics over the training set.
    const int m = codec.target_dim();
    Eigen::MatrixXd targets(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
        targets.row(i) = codec.raw_target(train[static_cast<std::size_t>(i)]).transpose();
    codec.mu_Y = targets.colwise().mean();
    Eigen::VectorXd var =
        (targets.rowwise() - codec.mu_Y.transpose()).array().square().colwise().mean();
    codec.sigma_Y = var.array().sqrt();
    for (int d = 0; d < m; ++d) {
        if (!(codec.sigma_Y[d] > 0.0)) {
            const std::string name = d < codec.K ? ("c_" + std::to_string(d + 1))
                                   : d == codec.K ? "ln_A"
                                   : d == codec.K + 1 ? "t_p"
                                                      : "ln_w";
            raise_invalid("zero variance in target '" + name + "'");
        }
    }

    codec.W_loss = Eigen::VectorXd::Ones(m);
    codec.W_loss[m - 3] = 4.0;
    codec.W_loss[m - 2] = 5.0;
    codec.W_loss[m - 1] = 3.0;
    return codec;
}

Eigen::VectorXd ShapeCodec::raw_target(const ShapeFactorization& f) const {
    Eigen::VectorXd y(target_dim());
    const Eigen::VectorXd resid = f.shape - mu_shape;
    for (int k = 0; k < K; ++k) y[k] = weighted_dot(resid, basis.row(k).transpose());
    y[K] = std::log(f.warp.amplitude);
    y[K + 1] = f.warp.peak_time;
    y[K + 2] = std::log(f.warp.width);
    return y;
}

Eigen::VectorXd ShapeCodec::encode(const CirWaveform& cir) const {
    const ShapeFactorization f = factorize(cir, tau_grid);
    const Eigen::VectorXd raw = raw_target(f);
    return ((raw - mu_Y).array() / sigma_Y.array() * W_loss.array()).matrix();
}

CirWaveform ShapeCodec::decode(const Eigen::VectorXd& y_weighted, const TimeGrid& grid) const {
    if (y_weighted.size() != target_dim()) raise_invalid("decode: target length mismatch");
    if (!y_weighted.allFinite()) raise_numeric("decode: non-finite target");

    const Eigen::VectorXd raw =
        ((y_weighted.array() / W_loss.array()) * sigma_Y.array()).matrix() + mu_Y;
    const double A = std::exp(raw[K]);
    const double t_p = raw[K + 1];
    const double w = std::exp(raw[K + 2]);

    Eigen::VectorXd shape = mu_shape;
    for (int k = 0; k < K; ++k) shape += raw[k] * basis.row(k).transpose();

    CirWaveform out;
    out.grid = grid;
    out.h.resize(static_cast<std::size_t>(grid.N_s));
    for (int l = 0; l < grid.N_s; ++l) {
        const double tau = (grid.time(l) - t_p) / w;
        out.h[static_cast<std::size_t>(l)] = std::max(0.0, A * interp_tau(shape, tau_grid, tau));
    }
    return out;
}

std::vector<std::uint8_t> ShapeCodec::serialize() const {
    nlohmann::json header{{"N_tau", tau_grid.N_tau},
                          {"tau_min", tau_grid.tau_min},
                          {"tau_max", tau_grid.tau_max},
                          {"sigma_w", sigma_w},
                          {"variance_target", variance_target},
                          {"K", K},
                          {"captured_variance", captured_variance},
                          {"mu_Y", std::vector<double>(mu_Y.data(), mu_Y.data() + mu_Y.size())},
                          {"sigma_Y", std::vector<double>(sigma_Y.data(), sigma_Y.data() + sigma_Y.size())},
                          {"W_loss", std::vector<double>(W_loss.data(), W_loss.data() + W_loss.size())},
                          {"eigenvalues", std::vector<double>(eigenvalues.data(),
                                                              eigenvalues.data() + eigenvalues.size())},
                          {"train_index_hash", train_index_hash},
                          {"manifest_hash", manifest_hash}};
    const std::string header_str = header.dump();

    BinaryWriter wtr;
    wtr.raw("MCDCODEC", 8);
    wtr.u32(1);  // format version
    wtr.u64(header_str.size());
    wtr.raw(header_str.data(), header_str.size());
    wtr.f64_block(weights.data(), static_cast<std::size_t>(weights.size()));
    wtr.f64_block(mu_shape.data(), static_cast<std::size_t>(mu_shape.size()));
    for (int k = 0; k < K; ++k) {
        const Eigen::VectorXd row = basis.row(k).transpose();
        wtr.f64_block(row.data(), static_cast<std::size_t>(row.size()));
    }
    return wtr.buffer();
}

ShapeCodec ShapeCodec::deserialize(const std::vector<std::uint8_t>& bytes) {
    BinaryReader rdr(bytes);
    const auto magic = rdr.raw(8);
    if (std::string(magic.begin(), magic.end()) != "MCDCODEC")
        raise_io("not a codec bundle (bad magic)");
    const std::uint32_t version = rdr.u32();
    if (version != 1) raise_io("unsupported codec bundle version");
    const std::uint64_t header_len = rdr.u64();
    const auto header_bytes = rdr.raw(header_len);
    const nlohmann::json header =
        nlohmann::json::parse(header_bytes.begin(), header_bytes.end());

    ShapeCodec codec;
    codec.tau_grid.N_tau = header.at("N_tau").get<int>();
    codec.tau_grid.tau_min = header.at("tau_min").get<double>();
    codec.tau_grid.tau_max = header.at("tau_max").get<double>();
    codec.sigma_w = header.at("sigma_w").get<double>();
    codec.variance_target = header.at("variance_target").get<double>();
    codec.K = header.at("K").get<int>();
    codec.captured_variance = header.at("captured_variance").get<double>();
    codec.train_index_hash = header.at("train_index_hash").get<std::uint64_t>();
    codec.manifest_hash = header.at("manifest_hash").get<std::uint64_t>();

    auto to_vec = [&](const char* key) {
        const auto v = header.at(key).get<std::vector<double>>();
        return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))
            .eval();
    };
    codec.mu_Y = to_vec("mu_Y");
    codec.sigma_Y = to_vec("sigma_Y");
    codec.W_loss = to_vec("W_loss");
    codec.eigenvalues = to_vec("eigenvalues");

    codec.weights.resize(codec.tau_grid.N_tau);
    rdr.f64_block(codec.weights.data(), static_cast<std::size_t>(codec.tau_grid.N_tau));
    codec.mu_shape.resize(codec.tau_grid.N_tau);
    rdr.f64_block(codec.mu_shape.data(), static_cast<std::size_t>(codec.tau_grid.N_tau));
    codec.basis.resize(codec.K, codec.tau_grid.N_tau);
    for (int k = 0; k < codec.K; ++k) {
        Eigen::VectorXd row(codec.tau_grid.N_tau);
        rdr.f64_block(row.data(), static_cast<std::size_t>(row.size()));
        codec.basis.row(k) = row.transpose();
    }
    return codec;
}

void ShapeCodec::save(const std::filesystem::path& path) const {
    write_binary_file(path, serialize());
}

ShapeCodec ShapeCodec::load(const std::filesystem::path& path) {
    return deserialize(read_binary_file(path));
}

}  // namespace mcduct
