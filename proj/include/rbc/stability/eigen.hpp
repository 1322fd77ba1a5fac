#pragma once

#include "rbc/spectral/field.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace rbc::stability {

using spectral::BoundaryCondition;
using spectral::Parity;
using spectral::VerticalBasis;

/// Which family an eigen-solution belongs to. Roll modes couple h and theta;
/// at k = 0 the problem splits into pure temperature and pure shear families.
enum class Family { Roll, Temperature, Shear };

/// Vertical bases and their Gram matrices for one wall configuration; forms the
/// eigenproblem pencil for any horizontal wavenumber a.
class VerticalOperators {
public:
    /// Standalone operators on the same bases a Discretization with these walls uses.
    VerticalOperators(const BoundaryCondition& bc, int resolution);
    explicit VerticalOperators(spectral::DiscretizationPtr d);

    [[nodiscard]] int size() const { return disc_->vertical_size(); }
    [[nodiscard]] int shear_size() const { return disc_->shear_size(); }
    [[nodiscard]] const BoundaryCondition& bc() const { return disc_->bc(); }
    [[nodiscard]] const VerticalBasis& stream_basis() const { return disc_->stream_basis(); }
    [[nodiscard]] const VerticalBasis& temperature_basis() const { return disc_->temperature_basis(); }
    [[nodiscard]] const VerticalBasis& shear_basis() const { return disc_->shear_basis(); }

    /// Pencil (K, M) of the coupled roll problem on unknowns (h; theta):
    ///   M = diag(int h'g' + a^2 hg, int theta chi)
    ///   K = [[-(int h''g'' + 2a^2 h'g' + a^4 hg), sqrt(R) a C], [sqrt(R) a C^T, -(int theta'chi' + a^2 theta chi)]]
    void roll_pencil(double a, double R, Eigen::MatrixXd& K, Eigen::MatrixXd& M) const;
    void temperature_pencil(Eigen::MatrixXd& K, Eigen::MatrixXd& M) const;
    void shear_pencil(Eigen::MatrixXd& K, Eigen::MatrixXd& M) const;

private:
    spectral::DiscretizationPtr disc_;
    Eigen::MatrixXd hh0_, hh1_, hh2_, tt0_, tt1_;
};

/// One vertical eigen-solution. The coefficient vectors refer to the bases of
/// the VerticalOperators that produced it and satisfy v^T M v = 1 (unit norm in
/// the induced product); profile values come from profile().
struct EigenPair {
    int k = 0;
    int j = 1;
    double a = 0.0;
    double beta = 0.0;
    Family family = Family::Roll;
    Eigen::VectorXd h;      // stream coefficients (roll) or shear coefficients (shear family)
    Eigen::VectorXd theta;  // temperature coefficients
    double norm_H = 1.0;    // sqrt(v^T M v)
};

/// Profile values of an eigenpair: rows are z points, columns (h, h', h'', theta, theta').
/// For the shear family the h columns hold (U, U', U'').
Eigen::MatrixXd profile(const VerticalOperators& ops, const EigenPair& e, const Eigen::VectorXd& z);

class DiscretizationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Leading eigenpairs of the vertical problem at wavenumber a (k only labels the
/// result). For a = 0 pass family Temperature or Shear; Roll requires a > 0.
/// Sorted by decreasing beta; count <= 0 returns all.
std::vector<EigenPair> vertical_eigensolve(const VerticalOperators& ops, double a, double R, int count = -1,
                                           Family family = Family::Roll, int k = 1);

/// Convenience form building its own operators.
std::vector<EigenPair> vertical_eigensolve(double a, double R, const BoundaryCondition& bc, int resolution = 32,
                                           int count = -1);

/// Fixes the sign so theta(1/2) > 0 (h or U when theta vanishes); when that value
/// is negligible, the first non-negligible sample on a uniform grid is made positive.
void apply_sign_convention(const VerticalOperators& ops, EigenPair& e);

/// The 2D mode psi_kj (Cos) or psi~_kj (Sin) on disc with ||psi||_H = 1. At k = 0
/// Cos gives the pure temperature mode and Sin the pure shear mode.
spectral::SpectralField build_eigenvector_2d(const spectral::DiscretizationPtr& disc, int k, int j, Parity parity,
                                             double R);

/// Eigen-solutions of all (k, family) blocks of disc at one R, with the modal
/// coordinates x_kj = (psi, psi_kj)_H, y_kj = (psi, psi~_kj)_H.
class EigenBasis {
public:
    EigenBasis(spectral::DiscretizationPtr disc, double R);

    [[nodiscard]] double R() const { return R_; }
    [[nodiscard]] const spectral::Discretization& disc() const { return *disc_; }
    /// Eigenpairs of block k (k = 0: temperature for Cos, shear for Sin).
    [[nodiscard]] const std::vector<EigenPair>& pairs(int k, Parity p) const;
    [[nodiscard]] double beta(int k, int j, Parity p) const { return pairs(k, p).at(j - 1).beta; }
    [[nodiscard]] spectral::SpectralField mode(int k, int j, Parity p) const;

    /// Coordinates of psi: matrix with one column per (k, parity) as in the field
    /// layout, row j - 1 holding the coordinate of mode j.
    [[nodiscard]] Eigen::MatrixXd coordinates(const spectral::SpectralField& psi) const;
    [[nodiscard]] spectral::SpectralField synthesize(const Eigen::MatrixXd& coords) const;

private:
    spectral::DiscretizationPtr disc_;
    double R_;
    std::vector<std::vector<EigenPair>> pairs_;  // indexed by column 2k + p
};

}  // namespace rbc::stability
