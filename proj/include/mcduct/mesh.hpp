#pragma once

#include <vector>

#include "mcduct/params.hpp"

namespace mcduct {

/// Axisymmetric finite-volume mesh of the duct interior: N_rho x N_z annular
/// cells with centers (rho_i, z_j) and volumes 2*pi*rho_i*d_rho*d_z. The
/// azimuthal direction is never discretized; on-axis release, Poiseuille flow
/// and the full-circumference ring receiver keep every field phi-independent.
struct Mesh {
    int N_rho = 24;
    int N_z = 192;
    double a_c = 60e-6;
    double L = 450e-6;
    double d_rho = 0.0;
    double d_z = 0.0;

    Mesh() = default;
    Mesh(int n_rho, int n_z, const FixedGeometry& g);

    int cells() const { return N_rho * N_z; }
    int index(int i, int j) const { return i + j * N_rho; }
    double rho(int i) const { return (i + 0.5) * d_rho; }
    double z(int j) const { return (j + 0.5) * d_z; }
    double volume(int i, int j) const;
    /// Wall patch area of one axial slice of the duct surface.
    double wall_cell_area() const;
    double total_volume() const;

    /// Wall-adjacent axial indices j with |z_j - z_rx| <= ell_z/2.
    std::vector<int> receiver_cells(const ChannelParams& p) const;
};

/// Builds the mesh, doubling N_z until the receiver ring spans at least two
/// axial cells for the given minimum ring length.
Mesh make_mesh(const FixedGeometry& g, int n_rho, int n_z, double min_ell_z);

}  // namespace mcduct
