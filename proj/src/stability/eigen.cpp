#include "rbc/stability/eigen.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rbc::stability {

using spectral::Discretization;
using spectral::SpectralField;

VerticalOperators::VerticalOperators(const BoundaryCondition& bc, int resolution)
    : VerticalOperators(Discretization::make(1.0, 1, resolution, bc)) {}

VerticalOperators::VerticalOperators(spectral::DiscretizationPtr d) : disc_(std::move(d)) {
    const auto& w = disc_->z_weights();
    auto gram = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) -> Eigen::MatrixXd {
        Eigen::MatrixXd g = a.transpose() * w.asDiagonal() * b;
        return g;
    };
    hh0_ = gram(disc_->stream_table(0), disc_->stream_table(0));
    hh1_ = gram(disc_->stream_table(1), disc_->stream_table(1));
    hh2_ = gram(disc_->stream_table(2), disc_->stream_table(2));
    tt0_ = gram(disc_->temperature_table(0), disc_->temperature_table(0));
    tt1_ = gram(disc_->temperature_table(1), disc_->temperature_table(1));
}

void VerticalOperators::roll_pencil(double a, double R, Eigen::MatrixXd& K, Eigen::MatrixXd& M) const {
    const int n = size();
    const double a2 = a * a;
    const double la = std::sqrt(R) * a;
    K.setZero(2 * n, 2 * n);
    M.setZero(2 * n, 2 * n);
    M.topLeftCorner(n, n) = hh1_ + a2 * hh0_;
    M.bottomRightCorner(n, n) = tt0_;
    K.topLeftCorner(n, n) = -(hh2_ + 2.0 * a2 * hh1_ + a2 * a2 * hh0_);
    K.bottomRightCorner(n, n) = -(tt1_ + a2 * tt0_);
    K.topRightCorner(n, n) = la * disc_->coupling();
    K.bottomLeftCorner(n, n) = la * disc_->coupling().transpose();
    K = 0.5 * (K + K.transpose()).eval();
    M = 0.5 * (M + M.transpose()).eval();
}

void VerticalOperators::temperature_pencil(Eigen::MatrixXd& K, Eigen::MatrixXd& M) const {
    M = 0.5 * (tt0_ + tt0_.transpose());
    K = -0.5 * (tt1_ + tt1_.transpose());
}

void VerticalOperators::shear_pencil(Eigen::MatrixXd& K, Eigen::MatrixXd& M) const {
    M = disc_->shear_mass();
    K = -disc_->shear_stiffness();
}

Eigen::MatrixXd profile(const VerticalOperators& ops, const EigenPair& e, const Eigen::VectorXd& z) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(z.size(), 5);
    const VerticalBasis& vb = e.family == Family::Shear ? ops.shear_basis() : ops.stream_basis();
    Eigen::MatrixXd hv(3, vb.size()), tv(2, ops.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (e.h.size() > 0) {
            vb.evaluate(z(i), 2, hv);
            out.block(i, 0, 1, 3) = (hv * e.h).transpose();
        }
        if (e.theta.size() > 0) {
            ops.temperature_basis().evaluate(z(i), 1, tv);
            out.block(i, 3, 1, 2) = (tv * e.theta).transpose();
        }
    }
    return out;
}

void apply_sign_convention(const VerticalOperators& ops, EigenPair& e) {
    const Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(65, 0.0, 1.0);
    const Eigen::MatrixXd p = profile(ops, e, z);
    const int col = e.theta.size() > 0 && p.col(3).cwiseAbs().maxCoeff() > 0.0 ? 3 : 0;
    const Eigen::VectorXd v = p.col(col);
    const double vmax = v.cwiseAbs().maxCoeff();
    if (vmax == 0.0) return;
    double ref = v(32);  // z = 1/2
    if (std::abs(ref) <= 1e-8 * vmax) {
        ref = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (std::abs(v(i)) > 1e-6 * vmax) {
                ref = v(i);
                break;
            }
    }
    if (ref < 0.0) {
        e.h = -e.h;
        e.theta = -e.theta;
    }
}

std::vector<EigenPair> vertical_eigensolve(const VerticalOperators& ops, double a, double R, int count,
                                           Family family, int k) {
    if (family == Family::Roll && !(a > 0.0))
        throw std::invalid_argument("roll eigenproblem needs a positive wavenumber");
    if (R < 0.0) throw std::invalid_argument("Rayleigh number must be non-negative");
    Eigen::MatrixXd K, M;
    switch (family) {
        case Family::Roll: ops.roll_pencil(a, R, K, M); break;
        case Family::Temperature: ops.temperature_pencil(K, M); break;
        case Family::Shear: ops.shear_pencil(K, M); break;
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) {
        std::ostringstream os;
        os << "vertical eigensolve failed (mass matrix not positive definite) at a = " << a << ", R = " << R
           << "; retry with resolution >= " << 2 * ops.size();
        throw DiscretizationFailure(os.str());
    }
    const Eigen::Index total = es.eigenvalues().size();
    const Eigen::Index want = count <= 0 ? total : std::min<Eigen::Index>(count, total);
    const int n = ops.size();
    std::vector<EigenPair> out;
    out.reserve(want);
    for (Eigen::Index r = 0; r < want; ++r) {
        const Eigen::Index idx = total - 1 - r;
        EigenPair e;
        e.k = k;
        e.j = static_cast<int>(r) + 1;
        e.a = a;
        e.beta = es.eigenvalues()(idx);
        e.family = family;
        const Eigen::VectorXd v = es.eigenvectors().col(idx);
        switch (family) {
            case Family::Roll:
                e.h = v.head(n);
                e.theta = v.tail(n);
                break;
            case Family::Temperature: e.theta = v; break;
            case Family::Shear: e.h = v; break;
        }
        e.norm_H = std::sqrt(v.dot(M * v));
        apply_sign_convention(ops, e);
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<EigenPair> vertical_eigensolve(double a, double R, const BoundaryCondition& bc, int resolution,
                                           int count) {
    if (resolution < 1) throw std::invalid_argument("resolution must be positive");
    const VerticalOperators ops(bc, resolution);
    if (a == 0.0) {
        auto t = vertical_eigensolve(ops, 0.0, R, count, Family::Temperature, 0);
        auto s = vertical_eigensolve(ops, 0.0, R, count, Family::Shear, 0);
        t.insert(t.end(), s.begin(), s.end());
        std::stable_sort(t.begin(), t.end(), [](const EigenPair& x, const EigenPair& y) { return x.beta > y.beta; });
        return t;
    }
    return vertical_eigensolve(ops, a, R, count, Family::Roll, 1);
}

namespace {

Family family_of(int k, Parity p) {
    if (k > 0) return Family::Roll;
    return p == Parity::Cos ? Family::Temperature : Family::Shear;
}

Eigen::VectorXd column_of(const Discretization& d, const EigenPair& e) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(d.rows());
    const int n = d.vertical_size();
    if (e.h.size() > 0) c.head(e.h.size()) = e.h;
    if (e.theta.size() > 0) c.segment(n, n) = e.theta;
    return c;
}

}  // namespace

SpectralField build_eigenvector_2d(const spectral::DiscretizationPtr& disc, int k, int j, Parity parity,
                                   double R) {
    if (k < 0 || k > disc->max_wavenumber())
        throw std::invalid_argument("wavenumber index outside the truncation");
    if (j < 1) throw std::invalid_argument("vertical index j starts at 1");
    const VerticalOperators ops(disc);
    const auto fam = family_of(k, parity);
    const auto pairs = vertical_eigensolve(ops, disc->wavenumber(k), R, j, fam, k);
    if (static_cast<int>(pairs.size()) < j) throw std::invalid_argument("vertical index j exceeds the truncation");
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(disc->rows(), disc->cols());
    c.col(Discretization::column(k, parity)) = column_of(*disc, pairs.back()) / std::sqrt(disc->h_factor(k));
    return {disc, std::move(c)};
}

EigenBasis::EigenBasis(spectral::DiscretizationPtr disc, double R) : disc_(std::move(disc)), R_(R) {
    const VerticalOperators ops(disc_);
    pairs_.resize(disc_->cols());
    for (int k = 0; k <= disc_->max_wavenumber(); ++k) {
        for (Parity p : {Parity::Cos, Parity::Sin}) {
            const auto col = Discretization::column(k, p);
            if (k > 0 && p == Parity::Sin) {
                pairs_[col] = pairs_[col - 1];
                continue;
            }
            pairs_[col] = vertical_eigensolve(ops, disc_->wavenumber(k), R, -1, family_of(k, p), k);
        }
    }
}

const std::vector<EigenPair>& EigenBasis::pairs(int k, Parity p) const {
    return pairs_.at(Discretization::column(k, p));
}

SpectralField EigenBasis::mode(int k, int j, Parity p) const {
    const auto& e = pairs(k, p).at(j - 1);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(disc_->rows(), disc_->cols());
    c.col(Discretization::column(k, p)) = column_of(*disc_, e) / std::sqrt(disc_->h_factor(k));
    return {disc_, std::move(c)};
}

Eigen::MatrixXd EigenBasis::coordinates(const SpectralField& psi) const {
    if (!psi.disc().same_as(*disc_)) throw spectral::DiscretizationError("field is not on this eigen-basis");
    const auto& d = *disc_;
    const int n = d.vertical_size();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d.rows(), d.cols());
    for (int k = 0; k <= d.max_wavenumber(); ++k) {
        const double s = std::sqrt(d.h_factor(k));
        for (Parity p : {Parity::Cos, Parity::Sin}) {
            const auto col = Discretization::column(k, p);
            const auto& ps = pairs_[col];
            const auto c = psi.coeffs().col(col);
            for (std::size_t j = 0; j < ps.size(); ++j) {
                const auto& e = ps[j];
                double v = 0.0;
                if (e.h.size() > 0) v += e.h.dot(d.velocity_mass(k, p) * c.head(e.h.size()));
                if (e.theta.size() > 0) v += e.theta.dot(d.temperature_mass() * c.segment(n, n));
                out(static_cast<Eigen::Index>(j), col) = s * v;
            }
        }
    }
    return out;
}

SpectralField EigenBasis::synthesize(const Eigen::MatrixXd& coords) const {
    const auto& d = *disc_;
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d.rows(), d.cols());
    for (int k = 0; k <= d.max_wavenumber(); ++k) {
        const double s = 1.0 / std::sqrt(d.h_factor(k));
        for (Parity p : {Parity::Cos, Parity::Sin}) {
            const auto col = Discretization::column(k, p);
            const auto& ps = pairs_[col];
            for (std::size_t j = 0; j < ps.size(); ++j)
                c.col(col) += s * coords(static_cast<Eigen::Index>(j), col) * column_of(d, ps[j]);
        }
    }
    return {disc_, std::move(c)};
}

}  // namespace rbc::stability
