#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcduct/errors.hpp"
#include "mcduct/features.hpp"
#include "mcduct/rng.hpp"

using namespace mcduct;

TEST_SUITE_BEGIN("features");

TEST_CASE("derived features match direct arithmetic") {
    FixedGeometry g;  // a_c = 60e-6
    ChannelParams p;
    p.D = 1e-9;
    p.v_bar = 2e-3;
    p.z_rx = 2e-4;
    const DerivedFeatures d = derive(p, g);
    CHECK(d.Pe == doctest::Approx(120.0).epsilon(1e-12));
    CHECK(d.t_diff == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(d.t_adv == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(d.zeta == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
    CHECK(d.zeta * d.t_diff == doctest::Approx(d.t_adv).epsilon(1e-14));
}

TEST_CASE("kappa = 0 gives k_dim = 0") {
    FixedGeometry g;
    ChannelParams p;
    p.kappa = 0.0;
    CHECK(derive(p, g).k_dim == 0.0);
}

TEST_CASE("derive is pure") {
    FixedGeometry g;
    ChannelParams p;
    const DerivedFeatures a = derive(p, g);
    const DerivedFeatures b = derive(p, g);
    CHECK(a.Pe == b.Pe);
    CHECK(a.Da == b.Da);
    CHECK(a.R_cap == b.R_cap);
}

TEST_CASE("assembled vector has the fixed order") {
    FixedGeometry g;
    ChannelParams p;
    const auto X = assemble(p, derive(p, g));
    REQUIRE(X.size() == 16);
    for (int f = 0; f < 8; ++f) CHECK(X[static_cast<std::size_t>(f)] == p.field(f));
    // k_dim = kappa * t_adv (definitional redundancy between entries 3 and 12)
    CHECK(X[15] == doctest::Approx(X[2] * X[11]).epsilon(1e-14));
    CHECK(feature_names().size() == 16);
}

namespace {

std::vector<std::array<double, kFeatureCount>> synthetic_training_set(int n, bool with_kappa_zero) {
    FixedGeometry g;
    Rng rng(42);
    std::vector<std::array<double, kFeatureCount>> xs;
    for (int i = 0; i < n; ++i) {
        ChannelParams p;
        p.D = 5e-10 * std::exp(rng.next_double() * std::log(4.0));
        p.v_bar = 1e-3 + 2e-3 * rng.next_double();
        p.kappa = rng.next_double();
        p.k_f = 1e-6 * std::exp(rng.next_double() * std::log(5.0));
        p.k_r = 5e-2 * std::exp(rng.next_double() * std::log(10.0));
        p.B_tot = 1e15 * std::exp(rng.next_double() * std::log(10.0));
        p.z_rx = 150e-6 + 150e-6 * rng.next_double();
        p.ell_z = 10e-6 + 30e-6 * rng.next_double();
        xs.push_back(assemble(p, derive(p, g)));
    }
    if (with_kappa_zero && n > 0) {
        ChannelParams p;
        p.kappa = 0.0;
        xs.back() = assemble(p, derive(p, g));
    }
    return xs;
}

}  // namespace

TEST_CASE("log mask excludes kappa and k_dim when a kappa = 0 sample is present") {
    const auto xs = synthetic_training_set(64, true);
    const FeatureStandardizer s = fit_standardizer(xs);
    for (int f = 0; f < kFeatureCount; ++f) {
        const bool expect = !(f == 2 || f == 15);  // kappa, k_dim
        CHECK(s.log_mask[static_cast<std::size_t>(f)] == expect);
    }
}

TEST_CASE("transformed training set has mean 0 and std 1 per entry") {
    const auto xs = synthetic_training_set(256, true);
    const FeatureStandardizer s = fit_standardizer(xs);
    // independent recomputation of the moments from the transformed values
    std::array<double, kFeatureCount> mean{}, var{};
    for (const auto& x : xs) {
        const auto z = s.transform(x);
        for (std::size_t f = 0; f < kFeatureCount; ++f) mean[f] += z[f];
    }
    for (auto& m : mean) m /= static_cast<double>(xs.size());
    for (const auto& x : xs) {
        const auto z = s.transform(x);
        for (std::size_t f = 0; f < kFeatureCount; ++f)
            var[f] += (z[f] - mean[f]) * (z[f] - mean[f]);
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        CHECK(std::abs(mean[f]) < 1e-10);
        CHECK(std::abs(var[f] / static_cast<double>(xs.size()) - 1.0) < 1e-10);
    }
}

TEST_CASE("transform of the training mean in masked space is the zero vector") {
    const auto xs = synthetic_training_set(64, false);
    const FeatureStandardizer s = fit_standardizer(xs);
    // build the masked-space mean, map it back, transform
    std::array<double, kFeatureCount> masked_mean{};
    for (const auto& x : xs)
        for (std::size_t f = 0; f < kFeatureCount; ++f)
            masked_mean[f] += s.log_mask[f] ? std::log(x[f]) : x[f];
    std::array<double, kFeatureCount> mean_point{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        masked_mean[f] /= static_cast<double>(xs.size());
        mean_point[f] = s.log_mask[f] ? std::exp(masked_mean[f]) : masked_mean[f];
    }
    const auto z = s.transform(mean_point);
    for (double v : z) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("inverse transform undoes transform") {
    const auto xs = synthetic_training_set(32, true);
    const FeatureStandardizer s = fit_standardizer(xs);
    for (const auto& x : xs) {
        const auto back = s.inverse_transform(s.transform(x));
        for (std::size_t f = 0; f < kFeatureCount; ++f)
            CHECK(back[f] == doctest::Approx(x[f]).epsilon(1e-12));
    }
}

TEST_CASE("zero variance in an entry is an error naming it") {
    auto xs = synthetic_training_set(8, false);
    for (auto& x : xs) x[1] = 2e-3;  // freeze v_bar
    CHECK_THROWS_WITH_AS(fit_standardizer(xs), "zero variance in feature 'v_bar'", error);
}

TEST_CASE("standardizer JSON round trip") {
    const auto xs = synthetic_training_set(32, true);
    const FeatureStandardizer s = fit_standardizer(xs, 0xabcdULL);
    nlohmann::json j;
    to_json(j, s);
    CHECK(j.contains("order"));
    FeatureStandardizer back;
    from_json(j, back);
    CHECK(back.train_index_hash == 0xabcdULL);
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        CHECK(back.log_mask[f] == s.log_mask[f]);
        CHECK(back.mu_X[f] == s.mu_X[f]);
        CHECK(back.sigma_X[f] == s.sigma_X[f]);
    }
}

TEST_SUITE_END();
