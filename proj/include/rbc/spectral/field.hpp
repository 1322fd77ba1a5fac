#pragma once

#include "rbc/spectral/basis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rbc::spectral {

enum class BcTag { RigidRigid, FreeFree, FreeRigid };

/// Function space the velocity lives in: B0 (no-slip both walls), B1 (no-slip
/// bottom, free top), B2 (free both walls), B3 (B2 with zero mean velocity).
enum class SpaceTag { B0, B1, B2, B3 };

struct BoundaryCondition {
    BcTag tag = BcTag::RigidRigid;
    SpaceTag space = SpaceTag::B0;

    /// The space tag implied by the wall conditions; free-free defaults to B3.
    static BoundaryCondition from_tag(BcTag tag);
    static BoundaryCondition free_free(SpaceTag space);

    /// Free-rigid follows the convention no-slip at x2 = 0, stress-free at x2 = 1.
    [[nodiscard]] WallType bottom() const;
    [[nodiscard]] WallType top() const;
    [[nodiscard]] bool zero_mean_velocity() const { return space == SpaceTag::B3; }

    friend bool operator==(const BoundaryCondition&, const BoundaryCondition&) = default;
};

std::string to_string(BcTag tag);
std::string to_string(SpaceTag tag);
BcTag parse_bc_tag(std::string_view text);
SpaceTag parse_space_tag(std::string_view text);

/// Rayleigh and Prandtl numbers. lambda() is sqrt(R).
struct PhysParams {
    double R = 0.0;
    double Pr = 10.0;

    PhysParams() = default;
    PhysParams(double rayleigh, double prandtl = 10.0);
    [[nodiscard]] double lambda() const;
};

enum class Parity { Cos = 0, Sin = 1 };

/// Index of a two-dimensional mode: x1-wavenumber index k, vertical rank j
/// (1-based) and the cos/sin parity. At k = 0 parity Cos is the pure
/// temperature family and parity Sin the pure shear family.
struct ModeIndex {
    int k = 0;
    int j = 1;
    Parity parity = Parity::Cos;
};

/// Thrown when two fields do not share a discretization or when a field
/// violates a structural constraint.
class DiscretizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Immutable description of the Fourier x Galerkin discretization on
/// (0, L) x (0, 1): bases, quadrature grid and the per-wavenumber Galerkin
/// matrices shared by every field built on it.
class Discretization {
public:
    /// K: largest retained x1-wavenumber index. N: vertical functions per variable.
    Discretization(double L, int K, int N, BoundaryCondition bc);

    static std::shared_ptr<const Discretization> make(double L, int K, int N, BoundaryCondition bc);

    [[nodiscard]] double period() const { return L_; }
    [[nodiscard]] int max_wavenumber() const { return K_; }
    [[nodiscard]] int vertical_size() const { return N_; }
    /// Members of the k = 0 shear family. Large enough that the mean Reynolds
    /// stress divergence of any retained roll field lies in its span.
    [[nodiscard]] int shear_size() const { return Ns_; }
    [[nodiscard]] const BoundaryCondition& bc() const { return bc_; }
    [[nodiscard]] double wavenumber(int k) const;

    [[nodiscard]] const VerticalBasis& stream_basis() const { return *stream_; }
    [[nodiscard]] const VerticalBasis& temperature_basis() const { return *temp_; }
    [[nodiscard]] const VerticalBasis& shear_basis() const { return *shear_; }

    // Physical grid: nx uniform points in [0, L), nz Gauss-Legendre nodes in (0, 1).
    [[nodiscard]] int nx() const { return nx_; }
    [[nodiscard]] int nz() const { return static_cast<int>(quad_.nodes.size()); }
    [[nodiscard]] const Eigen::VectorXd& x_nodes() const { return x_; }
    [[nodiscard]] const Eigen::VectorXd& z_nodes() const { return quad_.nodes; }
    [[nodiscard]] const Eigen::VectorXd& z_weights() const { return quad_.weights; }

    /// nz x N tables of basis derivatives at the z nodes.
    [[nodiscard]] const Eigen::MatrixXd& stream_table(int order) const { return stream_tab_.at(order); }
    [[nodiscard]] const Eigen::MatrixXd& temperature_table(int order) const { return temp_tab_.at(order); }
    [[nodiscard]] const Eigen::MatrixXd& shear_table(int order) const { return shear_tab_.at(order); }
    /// nx x (K + 1) tables of cos(a_k x_i) and sin(a_k x_i).
    [[nodiscard]] const Eigen::MatrixXd& cos_table() const { return cos_; }
    [[nodiscard]] const Eigen::MatrixXd& sin_table() const { return sin_; }

    // Galerkin matrices in vertical coordinates. For k >= 1 the H product of two
    // same-parity modes is (L/2) * c1^T M c2; at k = 0 it is L * c1^T M c2.
    [[nodiscard]] const Eigen::MatrixXd& stream_mass(int k) const { return stream_mass_.at(k); }
    [[nodiscard]] const Eigen::MatrixXd& stream_stiffness(int k) const { return stream_stiff_.at(k); }
    [[nodiscard]] const Eigen::MatrixXd& temperature_mass() const { return temp_mass_; }
    [[nodiscard]] const Eigen::MatrixXd& temperature_stiffness(int k) const { return temp_stiff_.at(k); }
    [[nodiscard]] const Eigen::MatrixXd& shear_mass() const { return shear_mass_; }
    [[nodiscard]] const Eigen::MatrixXd& shear_stiffness() const { return shear_stiff_; }
    /// coupling(i, j) = int h_i theta_j dz.
    [[nodiscard]] const Eigen::MatrixXd& coupling() const { return coupling_; }

    /// Weight turning vertical Gram products into H products at wavenumber k.
    [[nodiscard]] double h_factor(int k) const { return k == 0 ? L_ : 0.5 * L_; }

    /// Mass matrix of the velocity block of column (k, parity); identity when inactive.
    [[nodiscard]] const Eigen::MatrixXd& velocity_mass(int k, Parity p) const;
    [[nodiscard]] bool velocity_active(int k, Parity p) const { return k > 0 || p == Parity::Sin; }
    [[nodiscard]] bool temperature_active(int k, Parity p) const { return k > 0 || p == Parity::Cos; }

    /// Solves the H-mass system for a Galerkin load of the same shape as a coefficient matrix.
    [[nodiscard]] Eigen::MatrixXd solve_mass(const Eigen::MatrixXd& load) const;

    [[nodiscard]] bool same_as(const Discretization& other) const;

    /// Rows of the velocity block of column (k, parity).
    [[nodiscard]] int velocity_size(int k, Parity p) const { return k == 0 && p == Parity::Sin ? Ns_ : N_; }

    [[nodiscard]] Eigen::Index rows() const { return std::max(2 * N_, Ns_); }
    [[nodiscard]] Eigen::Index cols() const { return 2 * (K_ + 1); }
    [[nodiscard]] static Eigen::Index column(int k, Parity p) { return 2 * k + static_cast<int>(p); }

private:
    double L_;
    int K_;
    int N_;
    int Ns_;
    BoundaryCondition bc_;
    std::unique_ptr<VerticalBasis> stream_, temp_, shear_;
    int nx_;
    Eigen::VectorXd x_;
    Quadrature quad_;
    std::array<Eigen::MatrixXd, 4> stream_tab_;
    std::array<Eigen::MatrixXd, 3> temp_tab_;
    std::array<Eigen::MatrixXd, 3> shear_tab_;
    Eigen::MatrixXd cos_, sin_;
    std::vector<Eigen::MatrixXd> stream_mass_, stream_stiff_, temp_stiff_;
    Eigen::MatrixXd temp_mass_, shear_mass_, shear_stiff_, coupling_, identity_;
    std::vector<Eigen::LLT<Eigen::MatrixXd>> stream_mass_llt_;
    Eigen::LLT<Eigen::MatrixXd> temp_mass_llt_, shear_mass_llt_;
};

using DiscretizationPtr = std::shared_ptr<const Discretization>;

/// Physical values of a state on the quadrature grid (nz x nx each).
struct GridView {
    Eigen::MatrixXd u1, u2, T;
    Eigen::MatrixXd du1_dx1, du1_dx2, du2_dx1, du2_dx2, dT_dx1, dT_dx2;
};

/// A state psi = (u1, u2, T) in the Fourier x Galerkin basis.
///
/// Column 2k + p of the coefficient matrix holds the mode with wavenumber k and
/// parity p. Rows 0..N-1 are the velocity profile h and rows N..2N-1 the
/// temperature profile; the k = 0 / Sin column instead holds the shear profile U
/// in rows 0..Ns-1. Unused rows stay zero. For k >= 1
///   Cos: (-sin(a x) h', a cos(a x) h, cos(a x) theta)
///   Sin: ( cos(a x) h', a sin(a x) h, sin(a x) theta)
/// so velocities are divergence-free by construction. At k = 0 the Cos column
/// carries (0, 0, theta) and the Sin column (U, 0, 0).
class SpectralField {
public:
    explicit SpectralField(DiscretizationPtr disc);
    SpectralField(DiscretizationPtr disc, Eigen::MatrixXd coeffs);

    [[nodiscard]] const Discretization& disc() const { return *disc_; }
    [[nodiscard]] const DiscretizationPtr& disc_ptr() const { return disc_; }
    [[nodiscard]] const Eigen::MatrixXd& coeffs() const { return c_; }

    [[nodiscard]] auto velocity(int k, Parity p) const {
        return c_.col(Discretization::column(k, p)).head(disc_->velocity_size(k, p));
    }
    [[nodiscard]] auto temperature(int k, Parity p) const {
        return c_.col(Discretization::column(k, p)).segment(disc_->vertical_size(), disc_->vertical_size());
    }

    /// Physical values and first derivatives on the quadrature grid.
    [[nodiscard]] GridView grid_view() const;

    /// The field moved by delta along x1: result(x1) = this(x1 - delta).
    [[nodiscard]] SpectralField translated(double delta) const;

    SpectralField& operator+=(const SpectralField& o);
    SpectralField& operator-=(const SpectralField& o);
    SpectralField& operator*=(double s);
    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

    /// Velocity and its derivatives up to second order at an arbitrary point.
    struct PointJet {
        std::array<double, 2> u{};
        std::array<std::array<double, 2>, 2> du{};                   // du[i][j] = d u_i / d x_j
        std::array<std::array<std::array<double, 2>, 2>, 2> d2u{};  // d2u[i][j][l]
        double T = 0.0;
    };
    [[nodiscard]] PointJet evaluate(double x1, double x2) const;

private:
    void check_shape() const;

    DiscretizationPtr disc_;
    Eigen::MatrixXd c_;
};

void require_same_discretization(const SpectralField& a, const SpectralField& b);

}  // namespace rbc::spectral
