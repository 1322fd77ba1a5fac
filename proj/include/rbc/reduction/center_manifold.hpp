#pragma once

#include "rbc/stability/eigen.hpp"

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbc::reduction {

using spectral::BoundaryCondition;
using spectral::Parity;
using spectral::SpectralField;

/// Raised when the interaction identities fail beyond round-off, which means the
/// quadrature or a basis is broken rather than anything physical.
class IdentityFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Refusals: a stable-mode eigenvalue >= 0 (no center/stable splitting) or alpha <= 0.
class ReductionRefused : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct TableOptions {
    double L = 0.0;  // <= 0: the critical period of the walls
    int N = 0;       // vertical size; <= 0 picks J_table + 8
    int K = 3;       // x1-wavenumbers kept in the quadrature (>= 3 for the k = 3 checks)
};

/// Largest residuals of the trilinear identities, grouped by the family they belong to.
struct IdentityResiduals {
    double off_harmonic = 0.0;   // k = 1, 3: roll-roll transfer and its transposes vanish
    double parity = 0.0;         // cos-cos onto sin modes and the mixed transposes vanish, any k
    double second_harmonic = 0.0;  // (G(psi~_2j, psi_11), psi~_11) = (G(psi~_2j, psi~_11), psi_11) = 0
    double mean_equal = 0.0;     // (G(psi11,psi11),psi_0j) = (G(psi~11,psi~11),psi_0j)
    double harmonic_opposite = 0.0;  // (G(psi11,psi11),psi_2j) = -(G(psi~11,psi~11),psi_2j)
    double mixed_mean = 0.0;     // (G(psi11,psi~11) + G(psi~11,psi11), psi~_0j) = 0
    double mixed_harmonic = 0.0;  // (G(psi11,psi~11),psi~_2j) = (G(psi~11,psi11),psi~_2j) = c2_j
    [[nodiscard]] double max() const;
};

/// Interaction integrals between the critical pair psi_11 (cos), psi~_11 (sin)
/// and the k = 0, 2 modes, all unit H-norm, at one R and period L.
struct InteractionTable {
    BoundaryCondition bc;
    double R = 0.0;
    double L = 0.0;
    int J = 0;
    double beta1 = 0.0;
    std::vector<double> beta0;        // k = 0 temperature modes psi_0j
    std::vector<double> beta0_shear;  // k = 0 shear modes psi~_0j
    std::vector<double> beta2;        // k = 2 modes psi_2j and psi~_2j
    std::vector<double> c0;           // (G(psi11, psi11), psi_0j)
    std::vector<double> c2;           // (G(psi11, psi11), psi_2j)
    std::vector<double> c0_tilde;     // (G(psi~11, psi~11), psi_0j)
    std::vector<double> c2_tilde;     // (G(psi~11, psi~11), psi_2j)
    std::vector<double> mixed0;       // (G(psi11, psi~11) + G(psi~11, psi11), psi~_0j)
    std::vector<double> mixed2_cs;    // (G(psi11, psi~11), psi~_2j)
    std::vector<double> mixed2_sc;    // (G(psi~11, psi11), psi~_2j)
    IdentityResiduals residuals;
};

/// Eigen-solutions and the critical-pair loads at one R, shared by the table,
/// the center-manifold field and the quadratic-feedback right-hand side.
class ModalContext {
public:
    ModalContext(double R, const BoundaryCondition& bc, int J_table, const TableOptions& opt = {});

    [[nodiscard]] const stability::EigenBasis& basis() const { return *basis_; }
    [[nodiscard]] const spectral::DiscretizationPtr& disc() const { return disc_; }
    [[nodiscard]] int J_table() const { return J_; }
    [[nodiscard]] const SpectralField& psi11() const { return psi_; }
    [[nodiscard]] const SpectralField& psi11_tilde() const { return psi_t_; }
    /// Galerkin loads of G(psi11, psi11), G(psi~11, psi~11), G(psi11, psi~11), G(psi~11, psi11).
    [[nodiscard]] const std::array<Eigen::MatrixXd, 4>& loads() const { return loads_; }

private:
    spectral::DiscretizationPtr disc_;
    std::shared_ptr<stability::EigenBasis> basis_;
    int J_;
    SpectralField psi_, psi_t_;
    std::array<Eigen::MatrixXd, 4> loads_;
};

/// Residuals of every identity for j <= J (k = 0..3 where applicable).
IdentityResiduals identity_residuals(const ModalContext& ctx, int J);

/// Table for j <= J. Throws IdentityFailure when a residual exceeds 1e-8.
InteractionTable interaction_table(const ModalContext& ctx, int J);
InteractionTable interaction_table(double R, const BoundaryCondition& bc, int J, const TableOptions& opt = {});

/// First-order center-manifold coefficients on the k = 0, 2 modes.
struct CmCoefficients {
    std::vector<double> phi0, phi2, phi0_tilde, phi2_tilde;
};

/// Phi_0j = -(c0 x^2 + c0~ y^2) / beta_0j, Phi_2j = -(c2 x^2 + c2~ y^2) / beta_2j,
/// Phi~_0j = -mixed0 x y / beta~_0j, Phi~_2j = -(mixed2_cs + mixed2_sc) x y / beta_2j.
/// J <= 0 uses the whole table. Throws ReductionRefused if a stable eigenvalue is >= 0.
CmCoefficients cm_function(double x11, double y11, const InteractionTable& table, int J = 0);

/// The center-manifold state Phi(x, y) as a field on ctx's discretization.
SpectralField cm_field(const ModalContext& ctx, const CmCoefficients& phi);

/// Landau coefficient -sum_j [c0_j^2 / beta_0j + c2_j^2 / beta_2j] over j <= J.
double alpha(const InteractionTable& table, int J);

struct AlphaConvergence {
    int J = 0;
    double alpha_J = 0.0;
    double alpha_2J = 0.0;
    double rel_change = 0.0;
    bool converged = true;
    int suggested_J = 0;
    std::string warning;
    std::vector<double> partial;  // alpha(j) for j = 1..2J
};

/// alpha(J) against alpha(2J); table.J must be >= 2J. Not converged when the
/// relative change exceeds 1e-2; suggested_J is then the first j whose partial
/// sum is within 1e-3 of alpha(2J), doubled.
AlphaConvergence alpha_convergence(const InteractionTable& table, int J);

struct ReducedModel {
    double R = 0.0;
    double L = 0.0;
    double R_alpha = 0.0;  // where alpha was evaluated
    double beta1 = 0.0;
    double alpha = 0.0;
    int J = 0;
    InteractionTable table;
    std::vector<double> beta_0j, beta_2j;
    AlphaConvergence convergence;
    double translation_witness = 0.0;  // max || psi11(x - theta/a) - (cos theta psi11 + sin theta psi~11) ||_H
};

struct ModelOptions {
    double L = 0.0;           // <= 0: critical period
    int J = 12;
    int N = 0;                // <= 0: 2 J + 8
    bool alpha_at_R = false;  // default evaluates alpha at the neutral R of L
};

ReducedModel build_reduced_model(double R, const BoundaryCondition& bc, const ModelOptions& opt = {});

/// (beta1 x - alpha x r^2, beta1 y - alpha y r^2).
std::array<double, 2> reduced_rhs(const std::array<double, 2>& state, const ReducedModel& m);
Eigen::Matrix2d reduced_jacobian(const std::array<double, 2>& state, const ReducedModel& m);

/// beta1 (x, y) plus the projection of G(u + Phi, u + Phi) onto (psi11, psi~11)
/// kept to cubic order, with u = x psi11 + y psi~11 and Phi from cm_function.
std::array<double, 2> quadratic_feedback_rhs(const ModalContext& ctx, const InteractionTable& table, double x11,
                                             double y11, int J = 0);

/// sqrt(max(beta1, 0) / alpha). Throws ReductionRefused when alpha <= 0.
double equilibrium_amplitude(const ReducedModel& m);

struct BifurcationVerdict {
    bool s1 = false;
    std::string verdict;
    double R_cross = 0.0;  // interpolated zero of beta1
    double C1 = 0.0;       // min over the unit circle of (g(x), x) / |x|^4
    double alpha = 0.0;
    double translation_witness = 0.0;
    std::vector<std::string> reasons;
};

/// Checks the sign change of beta1 across the sweep and the cubic lower bound
/// (g(x), x) >= C1 |x|^4 with C1 > 0, g = beta1 x - reduced_rhs.
BifurcationVerdict bifurcation_classify(const std::vector<ReducedModel>& sweep);

void write_interaction_table_csv(std::ostream& os, const InteractionTable& t);
void write_alpha_vs_J_csv(std::ostream& os, const AlphaConvergence& c);
void write_alpha_vs_R_csv(std::ostream& os, const std::vector<ReducedModel>& sweep);
void write_verdict(std::ostream& os, const BifurcationVerdict& v);

}  // namespace rbc::reduction
