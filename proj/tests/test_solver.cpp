#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "mcduct/errors.hpp"
#include "mcduct/mesh.hpp"
#include "mcduct/solver.hpp"

using namespace mcduct;

TEST_SUITE_BEGIN("solver");

namespace {

ChannelParams mid_params() {
    ChannelParams p;
    p.D = 1e-9;
    p.v_bar = 2e-3;
    p.kappa = 0.5;
    p.k_f = 2e-6;
    p.k_r = 0.2;
    p.B_tot = 3e15;
    p.z_rx = 225e-6;
    p.ell_z = 25e-6;
    return p;
}

}  // namespace

TEST_CASE("mesh volumes sum to the duct volume") {
    FixedGeometry g;
    Mesh m(24, 192, g);
    const double exact = std::numbers::pi * g.a_c * g.a_c * g.L;
    CHECK(std::abs(m.total_volume() - exact) / exact < 1e-10);
}

TEST_CASE("receiver ring is resolved for every admissible parameter set") {
    FixedGeometry g;
    Mesh m(24, 192, g);
    ChannelParams p = mid_params();
    p.ell_z = 10e-6;  // smallest admissible ring
    CHECK(m.receiver_cells(p).size() >= 2);
    // a coarse request gets refined until the ring spans two cells
    Mesh refined = make_mesh(g, 24, 16, 10e-6);
    CHECK(refined.d_z <= 5e-6);
}

TEST_CASE("initial release: discrete mass is exactly N_0 and zero outside the ball") {
    FixedGeometry g;
    Mesh m(24, 192, g);
    DuctSolver s(mid_params(), g, m);
    s.init();
    CHECK(s.budget().bulk == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.budget().bound == 0.0);
    CHECK(s.budget().degraded == 0.0);
    CHECK(s.budget().outflow == 0.0);

    // (rho = 50 um, z = 200 um) lies far outside the 10 um ball at z_tx = 30 um
    int i = static_cast<int>(50e-6 / m.d_rho);
    int j = static_cast<int>(200e-6 / m.d_z);
    CHECK(s.concentration(i, j) == 0.0);
}

TEST_CASE("pre-rescale release concentration equals N_0 over the sphere volume") {
    FixedGeometry g;
    const double v_tx = (4.0 / 3.0) * std::numbers::pi * std::pow(g.a_tx, 3);
    CHECK(g.N_0 / v_tx == doctest::Approx(2.3873e14).epsilon(1e-4));
}

TEST_CASE("unresolved transmitter ball raises a resolution error") {
    FixedGeometry g;
    Mesh m(4, 8, g);  // cells far larger than the release ball
    DuctSolver s(mid_params(), g, m);
    CHECK_THROWS_AS(s.init(), error);
}

TEST_CASE("Poiseuille profile at centerline and wall") {
    // v_z(rho) = 2 v_bar (1 - rho^2/a_c^2)
    const double v_bar = 2e-3, a_c = 60e-6;
    auto v_z = [&](double rho) { return 2.0 * v_bar * (1.0 - rho * rho / (a_c * a_c)); };
    CHECK(v_z(0.0) == doctest::Approx(4e-3).epsilon(1e-14));
    CHECK(v_z(a_c) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("closed variant conserves mass to 1e-8 over 1000 steps") {
    FixedGeometry g;
    Mesh m(12, 48, g);
    ChannelParams p = mid_params();
    p.kappa = 0.0;
    SolverOptions opts;
    opts.closed_outlet = true;
    opts.disable_binding = true;
    DuctSolver s(p, g, m, opts);
    s.init();
    const double dt = 0.5 * m.d_z / (2.0 * p.v_bar);
    for (int step = 0; step < 1000; ++step) s.step(dt);
    CHECK(std::abs(s.budget().total - 1.0) < 1e-8);
    CHECK(s.budget().outflow == 0.0);
    CHECK(s.budget().degraded == 0.0);
}

TEST_CASE("fixed-concentration receptor ODE matches the closed form") {
    // dC/dt = k_f c0 (B_tot - C) - k_r C with c0 held constant:
    // C(t) = C_eq (1 - exp(-(k_f c0 + k_r) t)), C_eq = k_f c0 B_tot / (k_f c0 + k_r)
    const double k_f = 2e-6, k_r = 0.2, B_tot = 3e15, c0 = 1e5;
    const double rate = k_f * c0 + k_r;
    const double C_eq = k_f * c0 * B_tot / rate;
    const double dt = 1e-4 / rate;
    const double inf = std::numeric_limits<double>::infinity();

    double C = 0.0, t = 0.0;
    double worst = 0.0;
    const int steps = static_cast<int>(std::ceil(5.0 / rate / dt));
    for (int n = 0; n < steps; ++n) {
        C = wall_exchange_update(c0, C, dt, k_f, k_r, B_tot, 0.0, inf).C_new;
        t += dt;
        const double exact = C_eq * (1.0 - std::exp(-rate * t));
        worst = std::max(worst, std::abs(C - exact) / exact);
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("wall exchange conserves cell + surface mass and respects bounds") {
    const double k_f = 5e-6, k_r = 0.05, B_tot = 1e16, r_av = 4e5;
    const double g_half = 2.0 * 1e-9 / 2.5e-6;
    double c = 2e14, C = 0.0;
    for (int n = 0; n < 50; ++n) {
        const WallExchange w = wall_exchange_update(c, C, 2e-4, k_f, k_r, B_tot, r_av, g_half);
        // conservation: V dc = -A dC, with r_av = A/V
        CHECK(w.c_new - c == doctest::Approx(-r_av * w.dC).epsilon(1e-9));
        CHECK(w.c_new >= 0.0);
        CHECK(w.C_new >= 0.0);
        CHECK(w.C_new <= B_tot);
        c = w.c_new;
        C = w.C_new;
    }
}

TEST_CASE("saturated receptors take up nothing") {
    // forward flux k_f c (B_tot - C) vanishes at C = B_tot
    const double k_f = 2e-6, k_r = 0.0, B_tot = 3e15;
    const double inf = std::numeric_limits<double>::infinity();
    const WallExchange w = wall_exchange_update(1e10, B_tot, 1e-3, k_f, k_r, B_tot, 0.0, inf);
    CHECK(w.C_new == B_tot);
    CHECK(w.dC == 0.0);
    CHECK(k_f * 1e10 * (B_tot - w.C_new) == 0.0);
}

TEST_CASE("bulk decays as N_0 exp(-kappa t) before any outflow") {
    FixedGeometry g;
    Mesh m(12, 96, g);
    ChannelParams p = mid_params();
    p.kappa = 5.0;
    SolverOptions opts;
    opts.disable_binding = true;
    DuctSolver s(p, g, m, opts);
    s.init();
    const double dt = 0.5 * m.d_z / (2.0 * p.v_bar);
    const int steps = static_cast<int>(0.1 / dt);
    for (int n = 0; n < steps; ++n) s.step(dt);
    const double expected = std::exp(-p.kappa * s.time());
    CHECK(s.budget().outflow < 1e-9);
    CHECK(std::abs(s.budget().bulk - expected) / expected < 1e-3);
    // and the loss is accounted as degraded mass
    CHECK(s.budget().degraded == doctest::Approx(1.0 - expected).epsilon(1e-3));
}

TEST_CASE("zero-flow closed duct relaxes to the uniform concentration") {
    FixedGeometry g;
    g.L = 100e-6;
    g.z_tx = 50e-6;  // centered release kills the slowest axial mode
    Mesh m(16, 32, g);
    ChannelParams p = mid_params();
    p.kappa = 0.0;
    p.D = 1e-9;
    SolverOptions opts;
    opts.zero_flow = true;
    opts.closed_outlet = true;
    opts.disable_binding = true;
    DuctSolver s(p, g, m, opts);
    s.init();
    const double t_diff = g.a_c * g.a_c / (4.0 * p.D);
    const double dt = 0.25 * t_diff / (m.N_rho * m.N_rho);
    const int steps = static_cast<int>(std::ceil(10.0 * t_diff / dt));
    for (int n = 0; n < steps; ++n) s.step(dt);

    const double uniform = g.N_0 / (std::numbers::pi * g.a_c * g.a_c * g.L);
    for (int i = 0; i < m.N_rho; ++i)
        for (int j = 0; j < m.N_z; ++j)
            CHECK(std::abs(s.concentration(i, j) - uniform) / uniform < 0.01);
    CHECK(std::abs(s.budget().total - 1.0) < 1e-8);
}

TEST_CASE("no receiver surface means an identically zero CIR") {
    FixedGeometry g;
    Mesh m(12, 96, g);
    TimeGrid grid{50, 0.5};
    SolverOptions opts;
    opts.disable_binding = true;
    DuctSolver s(mid_params(), g, m, opts);
    const CirWaveform cir = s.solve_cir(grid);
    CHECK(cir.all_zero());
}

TEST_CASE("strong degradation suppresses the CIR by the decay bound") {
    FixedGeometry g;
    Mesh m(12, 96, g);
    TimeGrid grid{60, 1.2};
    ChannelParams p0 = mid_params();
    p0.kappa = 0.0;
    ChannelParams p1 = p0;
    p1.kappa = 1e4;
    const CirWaveform base = DuctSolver(p0, g, m).solve_cir(grid);
    const CirWaveform damped = DuctSolver(p1, g, m).solve_cir(grid);
    REQUIRE(base.peak() > 0.0);
    for (std::size_t l = 0; l < base.h.size(); ++l)
        CHECK(damped.h[l] <= 1e-3 * base.h[l] + 1e-30);
}

TEST_CASE("mid-range CIR is a single-peaked pulse with positive samples") {
    FixedGeometry g;
    Mesh m(24, 192, g);
    TimeGrid grid{150, 3.0};
    DuctSolver s(mid_params(), g, m);
    const CirWaveform cir = s.solve_cir(grid);

    const double peak = cir.peak();
    REQUIRE(peak > 0.0);
    std::size_t argmax = 0;
    for (std::size_t l = 0; l < cir.h.size(); ++l) {
        CHECK(cir.h[l] >= 0.0);
        CHECK(std::isfinite(cir.h[l]));
        if (cir.h[l] == peak && argmax == 0) argmax = l;
    }
    CHECK(argmax > 0);
    CHECK(argmax < cir.h.size() - 1);
    CHECK(cir.h.front() < 0.5 * peak);
    CHECK(cir.h.back() < 0.5 * peak);
    // decays after the peak in a smoothed sense: no late sample exceeds the peak
    for (std::size_t l = argmax + 1; l < cir.h.size(); ++l) CHECK(cir.h[l] <= peak);

    // mass budget stays tight throughout (checked at the end here; the
    // acceptance suite tracks it at every recorded time)
    CHECK(std::abs(s.budget().total - 1.0) < 1e-10);
    // receptor occupancy bounded
    for (int j : s.receiver_cells()) {
        CHECK(s.surface_density(j) >= 0.0);
        CHECK(s.surface_density(j) <= mid_params().B_tot);
    }
    // positivity clamping stayed at the noise level
    CHECK(s.clamped_mass() < 1e-9);
}

TEST_CASE("step rejects CFL violations and bad dt") {
    FixedGeometry g;
    Mesh m(12, 48, g);
    DuctSolver s(mid_params(), g, m);
    s.init();
    CHECK_THROWS_AS(s.step(0.0), error);
    CHECK_THROWS_AS(s.step(10.0 * m.d_z / mid_params().v_bar), error);
}

TEST_CASE("grid refinement stays within the documented first-order band") {
    // The spec's first-order scheme at the pinned default resolution lands
    // near 0.17 against a 2x-refined mesh at mid-range parameters (wall-layer
    // and upwind errors partially cancel); guard the implementation against
    // regressions beyond that behavior.
    FixedGeometry g;
    TimeGrid grid{120, 2.4};
    ChannelParams p = mid_params();
    const CirWaveform coarse = DuctSolver(p, g, Mesh(24, 192, g)).solve_cir(grid);
    const CirWaveform fine = DuctSolver(p, g, Mesh(48, 384, g)).solve_cir(grid);
    double num = 0.0, den = 0.0;
    for (std::size_t l = 0; l < coarse.h.size(); ++l) {
        const double d = coarse.h[l] - fine.h[l];
        num += d * d;
        den += fine.h[l] * fine.h[l];
    }
    CHECK(std::sqrt(num / den) < 0.25);
}

TEST_SUITE_END();
