#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mcduct/params.hpp"

namespace mcduct {

inline constexpr int kFeatureCount = 16;

/// The eight derived transport/reaction scalings appended to the raw
/// parameter vector.
struct DerivedFeatures {
    double Pe;       ///< v_bar * a_c / D
    double Da;       ///< k_f * B_tot * a_c / D
    double t_diff;   ///< a_c^2 / (4 D) [s]
    double t_adv;    ///< z_rx / v_bar [s]
    double zeta;     ///< t_adv / t_diff
    double A_patch;  ///< 2 pi a_c ell_z [m^2]
    double R_cap;    ///< B_tot * A_patch [molecules]
    double k_dim;    ///< kappa * t_adv
};

DerivedFeatures derive(const ChannelParams& p, const FixedGeometry& g);

/// Raw 16-vector in the fixed order
/// [D, v_bar, kappa, k_f, k_r, B_tot, z_rx, ell_z,
///  Pe, Da, t_diff, t_adv, zeta, A_patch, R_cap, k_dim].
std::array<double, kFeatureCount> assemble(const ChannelParams& p, const DerivedFeatures& d);

const std::vector<std::string>& feature_names();

/// Log-then-z-score transform fitted on the training partition only.
/// An entry is log-transformed iff it is strictly positive across the whole
/// training set (natural log), so a kappa = 0 sample disables the log for
/// kappa and k_dim.
struct FeatureStandardizer {
    std::array<bool, kFeatureCount> log_mask{};
    std::array<double, kFeatureCount> mu_X{};
    std::array<double, kFeatureCount> sigma_X{};
    std::uint64_t train_index_hash = 0;  // anti-leakage audit tag

    std::array<double, kFeatureCount> transform(const std::array<double, kFeatureCount>& X) const;
    std::array<double, kFeatureCount> inverse_transform(
        const std::array<double, kFeatureCount>& Xz) const;
};

FeatureStandardizer fit_standardizer(const std::vector<std::array<double, kFeatureCount>>& train_X,
                                     std::uint64_t train_index_hash = 0);

void to_json(nlohmann::json& j, const FeatureStandardizer& s);
void from_json(const nlohmann::json& j, FeatureStandardizer& s);

}  // namespace mcduct
