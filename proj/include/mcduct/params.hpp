#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mcduct {

/// The eight channel parameters that vary across a dataset. All SI units.
///
/// Invariants (checked by validate_params): every rate/length strictly
/// positive except kappa which may be zero, and the receiver ring must sit
/// strictly downstream of the transmitter sphere.
struct ChannelParams {
    double D = 1e-9;        ///< molecular diffusivity [m^2/s]
    double v_bar = 2e-3;    ///< cross-section-averaged flow speed [m/s]
    double kappa = 0.5;     ///< first-order degradation rate [1/s]
    double k_f = 2e-6;      ///< forward binding rate [m^3/(molecule s)]
    double k_r = 0.2;       ///< reverse unbinding rate [1/s]
    double B_tot = 3e15;    ///< total receptor surface density [molecules/m^2]
    double z_rx = 225e-6;   ///< axial center of receiver ring [m]
    double ell_z = 25e-6;   ///< axial length of receiver ring [m]

    /// Fixed serialization/feature order of the fields above.
    static const std::vector<std::string>& field_names();
    double field(int i) const;
    void set_field(int i, double v);
};

/// Geometry held fixed across a dataset.
struct FixedGeometry {
    double a_c = 60e-6;    ///< duct radius [m]
    double a_tx = 10e-6;   ///< transmitter sphere radius [m]
    double z_tx = 30e-6;   ///< axial center of transmitter [m]
    double L = 450e-6;     ///< duct length [m]
    double N_0 = 1.0;      ///< number of released molecules
};

/// Uniform recording grid t_l = l * t_end / N_s, l = 1..N_s. One grid is
/// shared by every waveform in a dataset.
struct TimeGrid {
    int N_s = 500;
    double t_end = 5.0;

    double dt() const { return t_end / N_s; }
    double time(int l) const { return (l + 1) * t_end / N_s; }  // l = 0..N_s-1
    std::vector<double> times() const;
};

/// Returns p unchanged if all invariants hold; throws errc::invalid_argument
/// naming the offending field otherwise. Idempotent.
const ChannelParams& validate_params(const ChannelParams& p, const FixedGeometry& g);

/// Geometry self-consistency (a_tx < a_c, 0 < z_tx < L, positive sizes).
const FixedGeometry& validate_geometry(const FixedGeometry& g);

void validate_grid(const TimeGrid& grid);

void to_json(nlohmann::json& j, const ChannelParams& p);
void from_json(const nlohmann::json& j, ChannelParams& p);
void to_json(nlohmann::json& j, const FixedGeometry& g);
void from_json(const nlohmann::json& j, FixedGeometry& g);
void to_json(nlohmann::json& j, const TimeGrid& grid);
void from_json(const nlohmann::json& j, TimeGrid& grid);

}  // namespace mcduct
