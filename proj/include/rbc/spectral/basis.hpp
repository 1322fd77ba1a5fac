#pragma once

#include <Eigen/Dense>

#include <memory>

namespace rbc::spectral {

enum class WallType { Rigid, Free };

/// Which field a vertical profile family represents. The role fixes the
/// homogeneous conditions every member satisfies at x2 = 0 and x2 = 1.
enum class ProfileRole {
    Stream,       ///< h, with velocity (-sin h', a cos h): h = 0, plus h' = 0 (rigid) or h'' = 0 (free)
    Temperature,  ///< theta = 0 on both walls
    Shear,        ///< k = 0 horizontal velocity U: U = 0 (rigid) or U' = 0 (free)
};

/// Gauss-Legendre rule mapped to [0, 1].
struct Quadrature {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

Quadrature gauss_legendre(int n);

/// A finite family of real functions on [0, 1] with derivatives.
class VerticalBasis {
public:
    virtual ~VerticalBasis() = default;

    [[nodiscard]] virtual Eigen::Index size() const = 0;
    [[nodiscard]] virtual ProfileRole role() const = 0;

    /// out(d, i) = d^d phi_i / dz^d at z, for d = 0..max_order. out must be
    /// (max_order + 1) x size().
    virtual void evaluate(double z, int max_order, Eigen::Ref<Eigen::MatrixXd> out) const = 0;

    /// Number of Gauss-Legendre nodes needed to integrate any product of three
    /// members (or their derivatives) to round-off.
    [[nodiscard]] virtual int triple_product_nodes() const = 0;

    /// Values of the order-th derivative at each node: nodes.size() x size().
    [[nodiscard]] Eigen::MatrixXd tabulate(const Eigen::VectorXd& nodes, int order) const;
};

/// Legendre-Galerkin family satisfying the role's wall conditions. Members are
/// hierarchical (member i has degree <= i + #constraints) and L2-orthonormal.
std::unique_ptr<VerticalBasis> make_legendre_basis(ProfileRole role, WallType bottom, WallType top,
                                                   int n);

/// Closed-form free-free family: sqrt(2) sin(j pi z) for Stream/Temperature,
/// cos(j pi z) for Shear (constant member included only when requested).
std::unique_ptr<VerticalBasis> make_trig_basis(ProfileRole role, int n, bool include_constant);

}  // namespace rbc::spectral
