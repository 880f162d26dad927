#include "mcduct/params.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "mcduct/errors.hpp"

namespace mcduct {

const std::vector<std::string>& ChannelParams::field_names() {
    static const std::vector<std::string> names = {"D",   "v_bar", "kappa", "k_f",
                                                   "k_r", "B_tot", "z_rx",  "ell_z"};
    return names;
}

double ChannelParams::field(int i) const {
    switch (i) {
        case 0: return D;
        case 1: return v_bar;
        case 2: return kappa;
        case 3: return k_f;
        case 4: return k_r;
        case 5: return B_tot;
        case 6: return z_rx;
        case 7: return ell_z;
        default: raise_invalid("ChannelParams field index out of range");
    }
}

void ChannelParams::set_field(int i, double v) {
    switch (i) {
        case 0: D = v; break;
        case 1: v_bar = v; break;
        case 2: kappa = v; break;
        case 3: k_f = v; break;
        case 4: k_r = v; break;
        case 5: B_tot = v; break;
        case 6: z_rx = v; break;
        case 7: ell_z = v; break;
        default: raise_invalid("ChannelParams field index out of range");
    }
}

std::vector<double> TimeGrid::times() const {
    std::vector<double> t(static_cast<std::size_t>(N_s));
    for (int l = 0; l < N_s; ++l) t[static_cast<std::size_t>(l)] = time(l);
    return t;
}

namespace {

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) raise_invalid(std::string(name) + " must be finite");
}

void require_positive(double v, const char* name) {
    require_finite(v, name);
    if (!(v > 0.0)) raise_invalid(std::string(name) + " must be positive");
}

}  // namespace

const ChannelParams& validate_params(const ChannelParams& p, const FixedGeometry& g) {
    require_positive(p.D, "D");
    require_positive(p.v_bar, "v_bar");
    require_finite(p.kappa, "kappa");
    if (p.kappa < 0.0) raise_invalid("kappa must be nonnegative");
    require_positive(p.k_f, "k_f");
    require_positive(p.k_r, "k_r");
    require_positive(p.B_tot, "B_tot");
    require_positive(p.z_rx, "z_rx");
    require_positive(p.ell_z, "ell_z");
    if (!(p.z_rx - p.ell_z / 2.0 > g.z_tx + g.a_tx))
        raise_invalid("receiver ring overlaps or precedes the transmitter: need z_rx - ell_z/2 > z_tx + a_tx");
    if (!(p.z_rx + p.ell_z / 2.0 + 2.0 * g.a_c <= g.L))
        raise_invalid("receiver ring too close to the outlet: need z_rx + ell_z/2 + 2*a_c <= L");
    return p;
}

const FixedGeometry& validate_geometry(const FixedGeometry& g) {
    require_positive(g.a_c, "a_c");
    require_positive(g.a_tx, "a_tx");
    require_positive(g.z_tx, "z_tx");
    require_positive(g.L, "L");
    require_positive(g.N_0, "N_0");
    if (!(g.a_tx < g.a_c)) raise_invalid("a_tx must be smaller than a_c");
    if (!(g.z_tx < g.L)) raise_invalid("z_tx must lie inside the duct (z_tx < L)");
    if (!(g.z_tx - g.a_tx >= 0.0)) raise_invalid("transmitter sphere must fit inside the duct at the inlet");
    return g;
}

void validate_grid(const TimeGrid& grid) {
    if (grid.N_s < 2) raise_invalid("N_s must be at least 2");
    require_positive(grid.t_end, "t_end");
}

void to_json(nlohmann::json& j, const ChannelParams& p) {
    j = nlohmann::json{{"D", p.D},     {"v_bar", p.v_bar}, {"kappa", p.kappa},
                       {"k_f", p.k_f}, {"k_r", p.k_r},     {"B_tot", p.B_tot},
                       {"z_rx", p.z_rx}, {"ell_z", p.ell_z}};
}

void from_json(const nlohmann::json& j, ChannelParams& p) {
    j.at("D").get_to(p.D);
    j.at("v_bar").get_to(p.v_bar);
    j.at("kappa").get_to(p.kappa);
    j.at("k_f").get_to(p.k_f);
    j.at("k_r").get_to(p.k_r);
    j.at("B_tot").get_to(p.B_tot);
    j.at("z_rx").get_to(p.z_rx);
    j.at("ell_z").get_to(p.ell_z);
}

void to_json(nlohmann::json& j, const FixedGeometry& g) {
    j = nlohmann::json{
        {"a_c", g.a_c}, {"a_tx", g.a_tx}, {"z_tx", g.z_tx}, {"L", g.L}, {"N_0", g.N_0}};
}

void from_json(const nlohmann::json& j, FixedGeometry& g) {
    j.at("a_c").get_to(g.a_c);
    j.at("a_tx").get_to(g.a_tx);
    j.at("z_tx").get_to(g.z_tx);
    j.at("L").get_to(g.L);
    j.at("N_0").get_to(g.N_0);
}

void to_json(nlohmann::json& j, const TimeGrid& grid) {
    j = nlohmann::json{{"N_s", grid.N_s}, {"t_end", grid.t_end}};
}

void from_json(const nlohmann::json& j, TimeGrid& grid) {
    j.at("N_s").get_to(grid.N_s);
    j.at("t_end").get_to(grid.t_end);
}

}  // namespace mcduct
