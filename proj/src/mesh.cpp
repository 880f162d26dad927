#include "mcduct/mesh.hpp"

#include <cmath>
#include <numbers>

#include "mcduct/errors.hpp"

namespace mcduct {

Mesh::Mesh(int n_rho, int n_z, const FixedGeometry& g)
    : N_rho(n_rho), N_z(n_z), a_c(g.a_c), L(g.L) {
    if (n_rho < 4 || n_z < 8) raise_invalid("mesh must have at least 4 radial and 8 axial cells");
    d_rho = a_c / N_rho;
    d_z = L / N_z;
}

double Mesh::volume(int i, int j) const {
    (void)j;
    return 2.0 * std::numbers::pi * rho(i) * d_rho * d_z;
}

double Mesh::wall_cell_area() const { return 2.0 * std::numbers::pi * a_c * d_z; }

double Mesh::total_volume() const {
    double v = 0.0;
    for (int i = 0; i < N_rho; ++i) v += 2.0 * std::numbers::pi * rho(i) * d_rho * d_z;
    return v * N_z;
}

std::vector<int> Mesh::receiver_cells(const ChannelParams& p) const {
    std::vector<int> cells;
    for (int j = 0; j < N_z; ++j) {
        if (std::abs(z(j) - p.z_rx) <= p.ell_z / 2.0) cells.push_back(j);
    }
    return cells;
}

Mesh make_mesh(const FixedGeometry& g, int n_rho, int n_z, double min_ell_z) {
    Mesh m(n_rho, n_z, g);
    // Refine axially until the smallest admissible ring is resolved.
    while (min_ell_z < 2.0 * m.d_z) {
        if (m.N_z > (1 << 20)) raise_invalid("receiver ring unresolvable: ell_z too small");
        m = Mesh(m.N_rho, m.N_z * 2, g);
    }
    return m;
}

}  // namespace mcduct
