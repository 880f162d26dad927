#include "mcduct/features.hpp"

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "mcduct/errors.hpp"

namespace mcduct {

DerivedFeatures derive(const ChannelParams& p, const FixedGeometry& g) {
    DerivedFeatures d;
    d.Pe = p.v_bar * g.a_c / p.D;
    d.Da = p.k_f * p.B_tot * g.a_c / p.D;
    d.t_diff = g.a_c * g.a_c / (4.0 * p.D);
    d.t_adv = p.z_rx / p.v_bar;
    d.zeta = d.t_adv / d.t_diff;
    d.A_patch = 2.0 * std::numbers::pi * g.a_c * p.ell_z;
    d.R_cap = p.B_tot * d.A_patch;
    d.k_dim = p.kappa * d.t_adv;
    return d;
}

std::array<double, kFeatureCount> assemble(const ChannelParams& p, const DerivedFeatures& d) {
    return {p.D,  p.v_bar, p.kappa,  p.k_f,   p.k_r,  p.B_tot,    p.z_rx,  p.ell_z,
            d.Pe, d.Da,    d.t_diff, d.t_adv, d.zeta, d.A_patch, d.R_cap, d.k_dim};
}

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = {
        "D",  "v_bar", "kappa",  "k_f",   "k_r",  "B_tot",   "z_rx",  "ell_z",
        "Pe", "Da",    "t_diff", "t_adv", "zeta", "A_patch", "R_cap", "k_dim"};
    return names;
}

FeatureStandardizer fit_standardizer(const std::vector<std::array<double, kFeatureCount>>& train_X,
                                     std::uint64_t train_index_hash) {
    const std::size_t n = train_X.size();
    if (n < 2) raise_invalid("standardizer needs at least 2 training samples");

    FeatureStandardizer s;
    s.train_index_hash = train_index_hash;
    for (int f = 0; f < kFeatureCount; ++f) {
        double min_v = train_X[0][static_cast<std::size_t>(f)];
        for (const auto& x : train_X) min_v = std::min(min_v, x[static_cast<std::size_t>(f)]);
        s.log_mask[static_cast<std::size_t>(f)] = min_v > 0.0;
    }

    for (int f = 0; f < kFeatureCount; ++f) {
        const auto fi = static_cast<std::size_t>(f);
        double mean = 0.0;
        for (const auto& x : train_X) {
            const double v = s.log_mask[fi] ? std::log(x[fi]) : x[fi];
            mean += v;
        }
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (const auto& x : train_X) {
            const double v = s.log_mask[fi] ? std::log(x[fi]) : x[fi];
            var += (v - mean) * (v - mean);
        }
        var /= static_cast<double>(n);
        if (!(var > 0.0))
            raise_invalid("zero variance in feature '" + feature_names()[fi] + "'");
        s.mu_X[fi] = mean;
        s.sigma_X[fi] = std::sqrt(var);
    }
    return s;
}

std::array<double, kFeatureCount> FeatureStandardizer::transform(
    const std::array<double, kFeatureCount>& X) const {
    std::array<double, kFeatureCount> z;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        const double v = log_mask[f] ? std::log(X[f]) : X[f];
        z[f] = (v - mu_X[f]) / sigma_X[f];
    }
    return z;
}

std::array<double, kFeatureCount> FeatureStandardizer::inverse_transform(
    const std::array<double, kFeatureCount>& Xz) const {
    std::array<double, kFeatureCount> x;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        const double v = Xz[f] * sigma_X[f] + mu_X[f];
        x[f] = log_mask[f] ? std::exp(v) : v;
    }
    return x;
}

void to_json(nlohmann::json& j, const FeatureStandardizer& s) {
    j = nlohmann::json{{"order", feature_names()},
                       {"log_mask", s.log_mask},
                       {"mu_X", s.mu_X},
                       {"sigma_X", s.sigma_X},
                       {"train_index_hash", s.train_index_hash}};
}

void from_json(const nlohmann::json& j, FeatureStandardizer& s) {
    j.at("log_mask").get_to(s.log_mask);
    j.at("mu_X").get_to(s.mu_X);
    j.at("sigma_X").get_to(s.sigma_X);
    s.train_index_hash = j.value("train_index_hash", std::uint64_t{0});
}

}  // namespace mcduct
