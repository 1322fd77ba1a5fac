#pragma once

#include "rbc/spectral/field.hpp"

#include <Eigen/Dense>

namespace rbc::spectral {

/// (psi1, psi2)_H: unweighted L2 product of (u1, u2, T) over one period cell.
double inner_H(const SpectralField& a, const SpectralField& b);
double norm_H(const SpectralField& a);

/// Galerkin load of the linear operator: load(e) = (L psi, e)_H for every basis
/// element e. velocity_scale multiplies the velocity rows (diffusion and buoyancy),
/// which is how the 1/Pr form of the momentum equation enters.
Eigen::MatrixXd linear_load(const SpectralField& psi, double lambda, double velocity_scale = 1.0);

/// L_lambda psi = -A psi + B_lambda psi, represented in the discrete space.
SpectralField apply_L(const SpectralField& psi, const PhysParams& p);

/// Galerkin load of G(psi1, psi2) = (-P[(u1 . grad) u2], -(u1 . grad) T2).
Eigen::MatrixXd nonlinear_load(const SpectralField& psi1, const SpectralField& psi2);

SpectralField apply_G(const SpectralField& psi1, const SpectralField& psi2);

/// (G(a, b), c)_H with quadrature exact for the truncation.
double trilinear(const SpectralField& a, const SpectralField& b, const SpectralField& c);

/// A velocity field sampled on a tensor grid: rows are the n Gauss-Legendre
/// nodes on (0, 1) (n = rows), columns the uniform points x_i = i L / m,
/// i = 0..m, including the periodic seam column x = L.
struct GriddedVectorField {
    double L = 1.0;
    Eigen::MatrixXd u1;
    Eigen::MatrixXd u2;
};

/// Samples f(x1, x2) -> (u1, u2) on an nz x (nx + 1) grid of the layout above.
template <class F>
GriddedVectorField sample_vector_field(double L, int nx, int nz, F&& f) {
    GriddedVectorField g;
    g.L = L;
    const auto q = gauss_legendre(nz);
    g.u1.resize(nz, nx + 1);
    g.u2.resize(nz, nx + 1);
    for (int i = 0; i <= nx; ++i) {
        const double x = L * i / nx;
        for (int j = 0; j < nz; ++j) {
            const auto v = f(x, q.nodes(j));
            g.u1(j, i) = v[0];
            g.u2(j, i) = v[1];
        }
    }
    return g;
}

/// Orthogonal L2 projection of v onto the divergence-free velocities of disc
/// (the discrete Leray projection). Throws if v is not periodic to seam_tol
/// relative to its maximum.
SpectralField leray_project(const GriddedVectorField& v, const DiscretizationPtr& disc,
                            double seam_tol = 1e-8);

/// Horizontal mean velocity profile q(x2) = (1/L) int u1 dx1 at the given
/// heights, and M = int int u1 dx.
Eigen::VectorXd mean_velocity_profile(const SpectralField& psi, const Eigen::VectorXd& z);
double mean_flow(const SpectralField& psi);

/// max |div u| over the quadrature grid.
double max_divergence(const SpectralField& psi);

}  // namespace rbc::spectral
