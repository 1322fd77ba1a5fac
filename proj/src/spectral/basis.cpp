#include "rbc/spectral/basis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rbc::spectral {

namespace {

constexpr double kPi = std::numbers::pi;

// P_n^{(d)}(x) for n = 0..nmax, d = 0..dmax, written into out(d, n).
void legendre_table(double x, int nmax, int dmax, Eigen::MatrixXd& out) {
    out.setZero(dmax + 1, nmax + 1);
    out(0, 0) = 1.0;
    if (nmax >= 1) {
        out(0, 1) = x;
        if (dmax >= 1) out(1, 1) = 1.0;
    }
    for (int n = 1; n < nmax; ++n) {
        out(0, n + 1) = ((2.0 * n + 1.0) * x * out(0, n) - n * out(0, n - 1)) / (n + 1.0);
        for (int d = 1; d <= dmax; ++d)
            out(d, n + 1) = out(d, n - 1) + (2.0 * n + 1.0) * out(d - 1, n);
    }
}

struct WallConstraint {
    double z;   // 0 or 1
    int order;  // derivative order that must vanish
};

std::vector<WallConstraint> constraints_for(ProfileRole role, WallType bottom, WallType top) {
    std::vector<WallConstraint> c;
    auto add_wall = [&](double z, WallType w) {
        switch (role) {
            case ProfileRole::Stream:
                c.push_back({z, 0});
                c.push_back({z, w == WallType::Rigid ? 1 : 2});
                break;
            case ProfileRole::Temperature:
                c.push_back({z, 0});
                break;
            case ProfileRole::Shear:
                c.push_back({z, w == WallType::Rigid ? 0 : 1});
                break;
        }
    };
    add_wall(0.0, bottom);
    add_wall(1.0, top);
    return c;
}

class LegendreBasis final : public VerticalBasis {
public:
    LegendreBasis(ProfileRole role, WallType bottom, WallType top, int n) : role_(role), n_(n) {
        if (n < 1) throw std::invalid_argument("vertical basis size must be positive");
        const auto cons = constraints_for(role, bottom, top);
        m_ = static_cast<int>(cons.size());
        const int ncoef = n_ + m_;

        // Constraint matrix on Legendre coefficients (in z, so d/dz = 2 d/dx).
        Eigen::MatrixXd bmat(m_, ncoef);
        Eigen::MatrixXd tab;
        for (int r = 0; r < m_; ++r) {
            legendre_table(2.0 * cons[r].z - 1.0, ncoef - 1, cons[r].order, tab);
            bmat.row(r) = tab.row(cons[r].order) * std::pow(2.0, cons[r].order);
        }

        // Compact members P_i + sum_l c_l P_{i+l}; fall back to an SVD null
        // space if a local system is singular.
        coef_.setZero(ncoef, n_);
        bool compact_ok = true;
        for (int i = 0; i < n_ && compact_ok; ++i) {
            Eigen::MatrixXd a = bmat.block(0, i + 1, m_, m_);
            Eigen::VectorXd rhs = -bmat.col(i);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
            if (!lu.isInvertible() || lu.rcond() < 1e-12) {
                compact_ok = false;
                break;
            }
            coef_(i, i) = 1.0;
            coef_.block(i + 1, i, m_, 1) = lu.solve(rhs);
        }
        if (!compact_ok) {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(bmat, Eigen::ComputeFullV);
            coef_ = svd.matrixV().rightCols(n_);
        }

        // L2 orthonormalisation (Gram-Schmidt through Cholesky keeps the
        // hierarchy since L^{-T} is upper triangular).
        const auto q = gauss_legendre(ncoef + 2);
        Eigen::MatrixXd vals(q.nodes.size(), n_);
        for (Eigen::Index j = 0; j < q.nodes.size(); ++j) {
            legendre_table(2.0 * q.nodes(j) - 1.0, ncoef - 1, 0, tab);
            vals.row(j) = tab.row(0) * coef_;
        }
        Eigen::MatrixXd gram = vals.transpose() * q.weights.asDiagonal() * vals;
        Eigen::LLT<Eigen::MatrixXd> llt(gram);
        Eigen::MatrixXd linv_t = llt.matrixL().solve(Eigen::MatrixXd::Identity(n_, n_)).transpose();
        coef_ = coef_ * linv_t;
    }

    [[nodiscard]] Eigen::Index size() const override { return n_; }
    [[nodiscard]] ProfileRole role() const override { return role_; }

    void evaluate(double z, int max_order, Eigen::Ref<Eigen::MatrixXd> out) const override {
        Eigen::MatrixXd tab;
        legendre_table(2.0 * z - 1.0, n_ + m_ - 1, max_order, tab);
        double scale = 1.0;
        for (int d = 0; d <= max_order; ++d) {
            out.row(d) = scale * (tab.row(d) * coef_);
            scale *= 2.0;
        }
    }

    [[nodiscard]] int triple_product_nodes() const override {
        const int deg = n_ + m_ - 1;
        return (3 * deg + 2) / 2 + 1;
    }

private:
    ProfileRole role_;
    int n_;
    int m_ = 0;
    Eigen::MatrixXd coef_;  // Legendre coefficients, (n + m) x n
};

class TrigBasis final : public VerticalBasis {
public:
    TrigBasis(ProfileRole role, int n, bool include_constant)
        : role_(role), n_(n), constant_(role == ProfileRole::Shear && include_constant) {
        if (n < 1) throw std::invalid_argument("vertical basis size must be positive");
    }

    [[nodiscard]] Eigen::Index size() const override { return n_; }
    [[nodiscard]] ProfileRole role() const override { return role_; }

    void evaluate(double z, int max_order, Eigen::Ref<Eigen::MatrixXd> out) const override {
        const double s2 = std::sqrt(2.0);
        for (int i = 0; i < n_; ++i) {
            const int j = frequency(i);
            const double w = j * kPi;
            if (j == 0) {
                out(0, i) = 1.0;
                for (int d = 1; d <= max_order; ++d) out(d, i) = 0.0;
                continue;
            }
            const double s = std::sin(w * z);
            const double c = std::cos(w * z);
            // Derivatives of sin cycle (s, c, -s, -c); of cos (c, -s, -c, s).
            const bool is_sin = role_ != ProfileRole::Shear;
            double p = 1.0;
            for (int d = 0; d <= max_order; ++d) {
                const int phase = (d + (is_sin ? 0 : 1)) % 4;
                const double v = phase == 0 ? s : phase == 1 ? c : phase == 2 ? -s : -c;
                out(d, i) = s2 * p * v;
                p *= w;
            }
        }
    }

    [[nodiscard]] int triple_product_nodes() const override { return 4 * (n_ + 1) + 24; }

private:
    [[nodiscard]] int frequency(int i) const { return constant_ ? i : i + 1; }

    ProfileRole role_;
    int n_;
    bool constant_;
};

}  // namespace

Quadrature gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("quadrature needs at least one node");
    Quadrature q;
    q.nodes.resize(n);
    q.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [-1, 1] -> [0, 1].
        q.nodes(i) = 0.5 * (1.0 - x);
        q.nodes(n - 1 - i) = 0.5 * (1.0 + x);
        q.weights(i) = 0.5 * w;
        q.weights(n - 1 - i) = 0.5 * w;
    }
    if (n == 1) {
        q.nodes(0) = 0.5;
        q.weights(0) = 1.0;
    }
    return q;
}

Eigen::MatrixXd VerticalBasis::tabulate(const Eigen::VectorXd& nodes, int order) const {
    Eigen::MatrixXd out(nodes.size(), size());
    Eigen::MatrixXd tmp(order + 1, size());
    for (Eigen::Index j = 0; j < nodes.size(); ++j) {
        evaluate(nodes(j), order, tmp);
        out.row(j) = tmp.row(order);
    }
    return out;
}

std::unique_ptr<VerticalBasis> make_legendre_basis(ProfileRole role, WallType bottom, WallType top,
                                                   int n) {
    return std::make_unique<LegendreBasis>(role, bottom, top, n);
}

std::unique_ptr<VerticalBasis> make_trig_basis(ProfileRole role, int n, bool include_constant) {
    return std::make_unique<TrigBasis>(role, n, include_constant);
}

}  // namespace rbc::spectral
