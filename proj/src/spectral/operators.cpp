#include "rbc/spectral/operators.hpp"

#include <cmath>
#include <sstream>

namespace rbc::spectral {

double inner_H(const SpectralField& a, const SpectralField& b) {
    require_same_discretization(a, b);
    const auto& d = a.disc();
    const int n = d.vertical_size();
    double s = 0.0;
    for (int k = 0; k <= d.max_wavenumber(); ++k) {
        for (Parity p : {Parity::Cos, Parity::Sin}) {
            const auto col = Discretization::column(k, p);
            double v = 0.0;
            if (d.velocity_active(k, p)) {
                const int nv = d.velocity_size(k, p);
                v += a.coeffs().col(col).head(nv).dot(d.velocity_mass(k, p) * b.coeffs().col(col).head(nv));
            }
            if (d.temperature_active(k, p))
                v += a.coeffs().col(col).segment(n, n).dot(d.temperature_mass() *
                                                           b.coeffs().col(col).segment(n, n));
            s += d.h_factor(k) * v;
        }
    }
    return s;
}

double norm_H(const SpectralField& a) { return std::sqrt(std::max(0.0, inner_H(a, a))); }

Eigen::MatrixXd linear_load(const SpectralField& psi, double lambda, double velocity_scale) {
    const auto& d = psi.disc();
    const int n = d.vertical_size();
    const auto& c = psi.coeffs();
    Eigen::MatrixXd load = Eigen::MatrixXd::Zero(d.rows(), d.cols());

    const int ns = d.shear_size();
    load.col(0).segment(n, n) = -d.h_factor(0) * (d.temperature_stiffness(0) * c.col(0).segment(n, n));
    load.col(1).head(ns) = -d.h_factor(0) * velocity_scale * (d.shear_stiffness() * c.col(1).head(ns));

    for (int k = 1; k <= d.max_wavenumber(); ++k) {
        const double a = d.wavenumber(k);
        const double f = d.h_factor(k);
        for (Parity p : {Parity::Cos, Parity::Sin}) {
            const auto col = Discretization::column(k, p);
            const auto h = c.col(col).head(n);
            const auto th = c.col(col).segment(n, n);
            load.col(col).head(n) =
                f * velocity_scale * (-(d.stream_stiffness(k) * h) + lambda * a * (d.coupling() * th));
            load.col(col).segment(n, n) =
                f * (-(d.temperature_stiffness(k) * th) + lambda * a * (d.coupling().transpose() * h));
        }
    }
    return load;
}

SpectralField apply_L(const SpectralField& psi, const PhysParams& p) {
    return {psi.disc_ptr(), psi.disc().solve_mass(linear_load(psi, p.lambda()))};
}

namespace {

// Projects grid forcing (f1, f2, fT) given on the quadrature grid of d onto the
// basis: load(e) = int int f . e dx.
Eigen::MatrixXd project_grid(const Discretization& d, const Eigen::MatrixXd& f1,
                             const Eigen::MatrixXd& f2, const Eigen::MatrixXd* fT) {
    const int n = d.vertical_size();
    const double dx = d.period() / d.nx();
    const auto& w = d.z_weights();

    // x-integration against cos/sin, then z weights folded in: nz x (K+1).
    const Eigen::MatrixXd w1c = w.asDiagonal() * (f1 * d.cos_table()) * dx;
    const Eigen::MatrixXd w1s = w.asDiagonal() * (f1 * d.sin_table()) * dx;
    const Eigen::MatrixXd w2c = w.asDiagonal() * (f2 * d.cos_table()) * dx;
    const Eigen::MatrixXd w2s = w.asDiagonal() * (f2 * d.sin_table()) * dx;

    const Eigen::MatrixXd g0 = d.stream_table(0).transpose() * w2c;  // N x (K+1)
    const Eigen::MatrixXd g0s = d.stream_table(0).transpose() * w2s;
    const Eigen::MatrixXd g1c = d.stream_table(1).transpose() * w1c;
    const Eigen::MatrixXd g1s = d.stream_table(1).transpose() * w1s;

    Eigen::MatrixXd load = Eigen::MatrixXd::Zero(d.rows(), d.cols());
    load.col(1).head(d.shear_size()) = d.shear_table(0).transpose() * w1c.col(0);
    for (int k = 1; k <= d.max_wavenumber(); ++k) {
        const double a = d.wavenumber(k);
        load.col(Discretization::column(k, Parity::Cos)).head(n) = -g1s.col(k) + a * g0.col(k);
        load.col(Discretization::column(k, Parity::Sin)).head(n) = g1c.col(k) + a * g0s.col(k);
    }
    if (fT) {
        const Eigen::MatrixXd wTc = w.asDiagonal() * ((*fT) * d.cos_table()) * dx;
        const Eigen::MatrixXd wTs = w.asDiagonal() * ((*fT) * d.sin_table()) * dx;
        const Eigen::MatrixXd tc = d.temperature_table(0).transpose() * wTc;
        const Eigen::MatrixXd ts = d.temperature_table(0).transpose() * wTs;
        load.col(0).segment(n, n) = tc.col(0);
        for (int k = 1; k <= d.max_wavenumber(); ++k) {
            load.col(Discretization::column(k, Parity::Cos)).segment(n, n) = tc.col(k);
            load.col(Discretization::column(k, Parity::Sin)).segment(n, n) = ts.col(k);
        }
    }
    return load;
}

}  // namespace

Eigen::MatrixXd nonlinear_load(const SpectralField& psi1, const SpectralField& psi2) {
    require_same_discretization(psi1, psi2);
    const GridView a = psi1.grid_view();
    const GridView b = psi2.grid_view();
    const Eigen::MatrixXd f1 = -(a.u1.cwiseProduct(b.du1_dx1) + a.u2.cwiseProduct(b.du1_dx2));
    const Eigen::MatrixXd f2 = -(a.u1.cwiseProduct(b.du2_dx1) + a.u2.cwiseProduct(b.du2_dx2));
    const Eigen::MatrixXd fT = -(a.u1.cwiseProduct(b.dT_dx1) + a.u2.cwiseProduct(b.dT_dx2));
    return project_grid(psi1.disc(), f1, f2, &fT);
}

SpectralField apply_G(const SpectralField& psi1, const SpectralField& psi2) {
    return {psi1.disc_ptr(), psi1.disc().solve_mass(nonlinear_load(psi1, psi2))};
}

double trilinear(const SpectralField& a, const SpectralField& b, const SpectralField& c) {
    require_same_discretization(a, c);
    return nonlinear_load(a, b).cwiseProduct(c.coeffs()).sum();
}

SpectralField leray_project(const GriddedVectorField& v, const DiscretizationPtr& disc,
                            double seam_tol) {
    const auto& d = *disc;
    const Eigen::Index nz = v.u1.rows();
    const Eigen::Index m = v.u1.cols() - 1;
    if (v.u2.rows() != nz || v.u2.cols() != m + 1 || m < 2 || nz < 2)
        throw std::invalid_argument("gridded field must be nz x (nx + 1) with nx >= 2");
    if (std::abs(v.L - d.period()) > 1e-12 * d.period())
        throw DiscretizationError("gridded field period does not match the discretization");

    const double scale = std::max({v.u1.cwiseAbs().maxCoeff(), v.u2.cwiseAbs().maxCoeff(), 1e-300});
    const double seam = std::max((v.u1.col(0) - v.u1.col(m)).cwiseAbs().maxCoeff(),
                                 (v.u2.col(0) - v.u2.col(m)).cwiseAbs().maxCoeff());
    if (seam > seam_tol * scale) {
        std::ostringstream os;
        os << "field is not periodic in x1: seam mismatch " << seam << " exceeds " << seam_tol
           << " x max|v| = " << seam_tol * scale;
        throw std::invalid_argument(os.str());
    }

    // Trapezoidal rule on the periodic grid is exact for the retained modes; the
    // seam column is dropped.
    const auto q = gauss_legendre(static_cast<int>(nz));
    const double dx = d.period() / static_cast<double>(m);
    const int n = d.vertical_size();
    Eigen::MatrixXd ct(m, d.max_wavenumber() + 1), st(m, d.max_wavenumber() + 1);
    for (Eigen::Index i = 0; i < m; ++i)
        for (int k = 0; k <= d.max_wavenumber(); ++k) {
            const double x = d.period() * static_cast<double>(i) / static_cast<double>(m);
            ct(i, k) = std::cos(d.wavenumber(k) * x);
            st(i, k) = std::sin(d.wavenumber(k) * x);
        }
    const Eigen::MatrixXd f1 = v.u1.leftCols(m);
    const Eigen::MatrixXd f2 = v.u2.leftCols(m);
    const Eigen::MatrixXd w1c = q.weights.asDiagonal() * (f1 * ct) * dx;
    const Eigen::MatrixXd w1s = q.weights.asDiagonal() * (f1 * st) * dx;
    const Eigen::MatrixXd w2c = q.weights.asDiagonal() * (f2 * ct) * dx;
    const Eigen::MatrixXd w2s = q.weights.asDiagonal() * (f2 * st) * dx;
    const Eigen::MatrixXd h0 = d.stream_basis().tabulate(q.nodes, 0);
    const Eigen::MatrixXd h1 = d.stream_basis().tabulate(q.nodes, 1);
    const Eigen::MatrixXd s0 = d.shear_basis().tabulate(q.nodes, 0);

    Eigen::MatrixXd load = Eigen::MatrixXd::Zero(d.rows(), d.cols());
    load.col(1).head(d.shear_size()) = s0.transpose() * w1c.col(0);
    for (int k = 1; k <= d.max_wavenumber(); ++k) {
        const double a = d.wavenumber(k);
        load.col(Discretization::column(k, Parity::Cos)).head(n) =
            -h1.transpose() * w1s.col(k) + a * h0.transpose() * w2c.col(k);
        load.col(Discretization::column(k, Parity::Sin)).head(n) =
            h1.transpose() * w1c.col(k) + a * h0.transpose() * w2s.col(k);
    }
    return {disc, d.solve_mass(load)};
}

Eigen::VectorXd mean_velocity_profile(const SpectralField& psi, const Eigen::VectorXd& z) {
    const auto& d = psi.disc();
    const Eigen::VectorXd u = psi.coeffs().col(1).head(d.shear_size());
    return d.shear_basis().tabulate(z, 0) * u;
}

double mean_flow(const SpectralField& psi) {
    const auto& d = psi.disc();
    const Eigen::VectorXd q = mean_velocity_profile(psi, d.z_nodes());
    return d.period() * d.z_weights().dot(q);
}

double max_divergence(const SpectralField& psi) {
    const GridView g = psi.grid_view();
    return (g.du1_dx1 + g.du2_dx2).cwiseAbs().maxCoeff();
}

}  // namespace rbc::spectral
