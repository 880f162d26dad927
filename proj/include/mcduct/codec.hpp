#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "mcduct/waveform.hpp"

namespace mcduct {

/// Scale-shift-shape summary of one waveform: h(t) = A * y_n((t - t_p)/w).
struct WarpTriplet {
    double amplitude;  ///< peak value A [1/s]
    double peak_time;  ///< time of the (earliest) peak sample t_p [s]
    double width;      ///< energy-weighted rms width w [s]
};

/// Shared dimensionless grid the unit shapes live on. Asymmetric span:
/// dispersion gives CIRs long right tails.
struct TauGrid {
    int N_tau = 241;
    double tau_min = -4.0;
    double tau_max = 8.0;

    double spacing() const { return (tau_max - tau_min) / (N_tau - 1); }
    double tau(int k) const { return tau_min + k * spacing(); }
};

struct ShapeFactorization {
    WarpTriplet warp;
    Eigen::VectorXd shape;      ///< y_n on the tau grid, zero outside the recorded span
    double truncated_fraction;  ///< waveform mass falling outside the tau span
};

/// Extracts (A, t_p, w) and the resampled unit shape. Peak ties break to the
/// earliest index. Throws errc::invalid_argument for all-zero waveforms and
/// for single-sample spikes (w = 0).
ShapeFactorization factorize(const CirWaveform& cir, const TauGrid& tg);

/// Fitted warp + weighted-PCA codec state. The PCA inner product carries a
/// Gaussian tau weight (peak neighborhood emphasized); samples are averaged
/// uniformly. Basis components are orthonormal under
///   <u, v>_w = sum_l weights[l] u[l] v[l] / N_tau.
class ShapeCodec {
public:
    TauGrid tau_grid;
    double sigma_w = 2.0;
    double variance_target = 0.995;

    Eigen::VectorXd weights;   ///< Gaussian tau weights rescaled to sum to N_tau
    Eigen::VectorXd mu_shape;  ///< mean unit shape on the tau grid
    Eigen::MatrixXd basis;     ///< K x N_tau leading weighted components
    int K = 0;
    double captured_variance = 0.0;    ///< weighted variance fraction of the K components
    Eigen::VectorXd eigenvalues;       ///< full weighted-PCA spectrum (descending)

    Eigen::VectorXd mu_Y;    ///< (K+3) training-target means
    Eigen::VectorXd sigma_Y; ///< (K+3) training-target standard deviations
    Eigen::VectorXd W_loss;  ///< fixed elementwise loss weights [1,..,1, 4, 5, 3]

    std::uint64_t train_index_hash = 0;
    std::uint64_t manifest_hash = 0;

    int target_dim() const { return K + 3; }

    /// Weighted inner product on the tau grid.
    double weighted_dot(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

    /// Raw target [c_1..c_K, ln A, t_p, ln w] for one factorized waveform.
    Eigen::VectorXd raw_target(const ShapeFactorization& f) const;

    /// Standardized, reweighted target for one waveform.
    Eigen::VectorXd encode(const CirWaveform& cir) const;

    /// Inverse of encode followed by shape reconstruction and un-warping onto
    /// the recording grid. Negative reconstruction values clamp to zero.
    CirWaveform decode(const Eigen::VectorXd& y_weighted, const TimeGrid& grid) const;

    std::vector<std::uint8_t> serialize() const;
    static ShapeCodec deserialize(const std::vector<std::uint8_t>& bytes);
    void save(const std::filesystem::path& path) const;
    static ShapeCodec load(const std::filesystem::path& path);
};

/// Fits weights, mean, basis, K, and the target statistics from training
/// factorizations. Needs at least two samples.
ShapeCodec fit_codec(const std::vector<ShapeFactorization>& train, const TauGrid& tg,
                     double sigma_w = 2.0, double variance_target = 0.995);

}  // namespace mcduct
