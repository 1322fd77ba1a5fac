#include "rbc/spectral/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace rbc::spectral {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd gram(const Eigen::MatrixXd& a, const Eigen::VectorXd& w, const Eigen::MatrixXd& b) {
    return a.transpose() * w.asDiagonal() * b;
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

BoundaryCondition BoundaryCondition::from_tag(BcTag tag) {
    switch (tag) {
        case BcTag::RigidRigid: return {tag, SpaceTag::B0};
        case BcTag::FreeRigid: return {tag, SpaceTag::B1};
        case BcTag::FreeFree: return {tag, SpaceTag::B3};
    }
    return {};
}

BoundaryCondition BoundaryCondition::free_free(SpaceTag space) {
    if (space != SpaceTag::B2 && space != SpaceTag::B3)
        throw std::invalid_argument("free-free walls admit only the B2 or B3 space");
    return {BcTag::FreeFree, space};
}

WallType BoundaryCondition::bottom() const {
    return tag == BcTag::FreeFree ? WallType::Free : WallType::Rigid;
}

WallType BoundaryCondition::top() const {
    return tag == BcTag::RigidRigid ? WallType::Rigid : WallType::Free;
}

std::string to_string(BcTag tag) {
    switch (tag) {
        case BcTag::RigidRigid: return "rigid-rigid";
        case BcTag::FreeFree: return "free-free";
        case BcTag::FreeRigid: return "free-rigid";
    }
    return "?";
}

std::string to_string(SpaceTag tag) {
    switch (tag) {
        case SpaceTag::B0: return "B0";
        case SpaceTag::B1: return "B1";
        case SpaceTag::B2: return "B2";
        case SpaceTag::B3: return "B3";
    }
    return "?";
}

BcTag parse_bc_tag(std::string_view text) {
    std::string s(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    std::erase(s, '_');
    std::erase(s, '-');
    if (s == "rigidrigid" || s == "rr") return BcTag::RigidRigid;
    if (s == "freefree" || s == "ff") return BcTag::FreeFree;
    if (s == "freerigid" || s == "rigidfree" || s == "fr") return BcTag::FreeRigid;
    throw std::invalid_argument("unknown boundary condition '" + std::string(text) + "'");
}

SpaceTag parse_space_tag(std::string_view text) {
    if (text == "B0" || text == "b0") return SpaceTag::B0;
    if (text == "B1" || text == "b1") return SpaceTag::B1;
    if (text == "B2" || text == "b2") return SpaceTag::B2;
    if (text == "B3" || text == "b3") return SpaceTag::B3;
    throw std::invalid_argument("unknown space tag '" + std::string(text) + "'");
}

PhysParams::PhysParams(double rayleigh, double prandtl) : R(rayleigh), Pr(prandtl) {
    if (!(rayleigh > 0.0)) throw std::invalid_argument("Rayleigh number must be positive");
    if (!(prandtl > 0.0)) throw std::invalid_argument("Prandtl number must be positive");
}

double PhysParams::lambda() const { return std::sqrt(R); }

Discretization::Discretization(double L, int K, int N, BoundaryCondition bc)
    : L_(L), K_(K), N_(N), Ns_(bc.tag == BcTag::FreeFree ? 2 * N : 2 * N + 3), bc_(bc) {
    if (!(L > 0.0)) throw std::invalid_argument("period L must be positive");
    if (K < 1) throw std::invalid_argument("K must be at least 1");
    if (N < 1) throw std::invalid_argument("N must be at least 1");
    const bool ff = bc.tag == BcTag::FreeFree;
    if (ff != (bc.space == SpaceTag::B2 || bc.space == SpaceTag::B3) ||
        (bc.tag == BcTag::RigidRigid && bc.space != SpaceTag::B0) ||
        (bc.tag == BcTag::FreeRigid && bc.space != SpaceTag::B1))
        throw std::invalid_argument("space tag " + to_string(bc.space) + " does not match " +
                                    to_string(bc.tag) + " walls");

    if (ff) {
        stream_ = make_trig_basis(ProfileRole::Stream, N, false);
        temp_ = make_trig_basis(ProfileRole::Temperature, N, false);
        shear_ = make_trig_basis(ProfileRole::Shear, Ns_, bc.space == SpaceTag::B2);
    } else {
        stream_ = make_legendre_basis(ProfileRole::Stream, bc.bottom(), bc.top(), N);
        temp_ = make_legendre_basis(ProfileRole::Temperature, bc.bottom(), bc.top(), N);
        shear_ = make_legendre_basis(ProfileRole::Shear, bc.bottom(), bc.top(), Ns_);
    }

    const int nz = std::max({stream_->triple_product_nodes(), temp_->triple_product_nodes(),
                             shear_->triple_product_nodes()});
    quad_ = gauss_legendre(nz);
    for (int d = 0; d < 4; ++d) stream_tab_[d] = stream_->tabulate(quad_.nodes, d);
    for (int d = 0; d < 3; ++d) {
        temp_tab_[d] = temp_->tabulate(quad_.nodes, d);
        shear_tab_[d] = shear_->tabulate(quad_.nodes, d);
    }

    // Triple products of modes with |k| <= K contain frequencies up to 3K.
    nx_ = 3 * K_ + 2;
    x_.resize(nx_);
    cos_.resize(nx_, K_ + 1);
    sin_.resize(nx_, K_ + 1);
    for (int i = 0; i < nx_; ++i) {
        x_(i) = L_ * i / nx_;
        for (int k = 0; k <= K_; ++k) {
            cos_(i, k) = std::cos(wavenumber(k) * x_(i));
            sin_(i, k) = std::sin(wavenumber(k) * x_(i));
        }
    }

    const auto& w = quad_.weights;
    const Eigen::MatrixXd hh0 = gram(stream_tab_[0], w, stream_tab_[0]);
    const Eigen::MatrixXd hh1 = gram(stream_tab_[1], w, stream_tab_[1]);
    const Eigen::MatrixXd hh2 = gram(stream_tab_[2], w, stream_tab_[2]);
    const Eigen::MatrixXd tt0 = gram(temp_tab_[0], w, temp_tab_[0]);
    const Eigen::MatrixXd tt1 = gram(temp_tab_[1], w, temp_tab_[1]);
    temp_mass_ = symmetrized(tt0);
    shear_mass_ = symmetrized(gram(shear_tab_[0], w, shear_tab_[0]));
    shear_stiff_ = symmetrized(gram(shear_tab_[1], w, shear_tab_[1]));
    coupling_ = gram(stream_tab_[0], w, temp_tab_[0]);
    identity_ = Eigen::MatrixXd::Identity(N_, N_);

    for (int k = 0; k <= K_; ++k) {
        const double a = wavenumber(k);
        const double a2 = a * a;
        stream_mass_.push_back(symmetrized(hh1 + a2 * hh0));
        stream_stiff_.push_back(symmetrized(hh2 + 2.0 * a2 * hh1 + a2 * a2 * hh0));
        temp_stiff_.push_back(symmetrized(tt1 + a2 * tt0));
        stream_mass_llt_.emplace_back(k == 0 ? identity_ : stream_mass_.back());
    }
    temp_mass_llt_.compute(temp_mass_);
    shear_mass_llt_.compute(shear_mass_);
}

std::shared_ptr<const Discretization> Discretization::make(double L, int K, int N,
                                                           BoundaryCondition bc) {
    return std::make_shared<const Discretization>(L, K, N, bc);
}

double Discretization::wavenumber(int k) const { return 2.0 * kPi * k / L_; }

const Eigen::MatrixXd& Discretization::velocity_mass(int k, Parity p) const {
    if (k == 0) return p == Parity::Sin ? shear_mass_ : identity_;
    return stream_mass_.at(k);
}

Eigen::MatrixXd Discretization::solve_mass(const Eigen::MatrixXd& load) const {
    if (load.rows() != rows() || load.cols() != cols())
        throw DiscretizationError("load has the wrong shape for this discretization");
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(rows(), cols());
    for (int k = 0; k <= K_; ++k) {
        const double f = 1.0 / h_factor(k);
        for (Parity p : {Parity::Cos, Parity::Sin}) {
            const auto col = column(k, p);
            if (velocity_active(k, p)) {
                const auto& llt = k == 0 ? shear_mass_llt_ : stream_mass_llt_[k];
                const int nv = velocity_size(k, p);
                c.col(col).head(nv) = llt.solve(f * load.col(col).head(nv));
            }
            if (temperature_active(k, p))
                c.col(col).segment(N_, N_) = temp_mass_llt_.solve(f * load.col(col).segment(N_, N_));
        }
    }
    return c;
}

bool Discretization::same_as(const Discretization& o) const {
    return this == &o || (L_ == o.L_ && K_ == o.K_ && N_ == o.N_ && bc_ == o.bc_);
}

SpectralField::SpectralField(DiscretizationPtr disc) : disc_(std::move(disc)) {
    if (!disc_) throw DiscretizationError("null discretization");
    c_.setZero(disc_->rows(), disc_->cols());
}

SpectralField::SpectralField(DiscretizationPtr disc, Eigen::MatrixXd coeffs)
    : disc_(std::move(disc)), c_(std::move(coeffs)) {
    if (!disc_) throw DiscretizationError("null discretization");
    check_shape();
    // Inactive slots carry no meaning; keep them zero so norms and hashes are canonical.
    const int n = disc_->vertical_size();
    const auto rows = disc_->rows();
    c_.col(0).head(n).setZero();
    c_.col(0).tail(rows - 2 * n).setZero();
    c_.col(1).tail(rows - disc_->shear_size()).setZero();
    c_.rightCols(c_.cols() - 2).bottomRows(rows - 2 * n).setZero();
}

void SpectralField::check_shape() const {
    if (c_.rows() != disc_->rows() || c_.cols() != disc_->cols()) {
        std::ostringstream os;
        os << "coefficient matrix is " << c_.rows() << "x" << c_.cols() << ", expected "
           << disc_->rows() << "x" << disc_->cols();
        throw DiscretizationError(os.str());
    }
    if (!c_.allFinite()) throw DiscretizationError("coefficient matrix contains non-finite values");
}

void require_same_discretization(const SpectralField& a, const SpectralField& b) {
    if (!a.disc().same_as(b.disc()))
        throw DiscretizationError("fields live on different discretizations");
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
    require_same_discretization(*this, o);
    c_ += o.c_;
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
    require_same_discretization(*this, o);
    c_ -= o.c_;
    return *this;
}

SpectralField& SpectralField::operator*=(double s) {
    c_ *= s;
    return *this;
}

GridView SpectralField::grid_view() const {
    const auto& d = *disc_;
    const int nz = d.nz();
    const int nx = d.nx();
    const int n = d.vertical_size();
    GridView g;
    for (auto* m : {&g.u1, &g.u2, &g.T, &g.du1_dx1, &g.du1_dx2, &g.du2_dx1, &g.du2_dx2, &g.dT_dx1,
                    &g.dT_dx2})
        m->setZero(nz, nx);

    // k = 0: mean temperature and shear.
    {
        const Eigen::VectorXd th = c_.col(0).segment(n, n);
        const Eigen::VectorXd u = c_.col(1).head(d.shear_size());
        const Eigen::VectorXd t0 = d.temperature_table(0) * th;
        const Eigen::VectorXd t1 = d.temperature_table(1) * th;
        const Eigen::VectorXd s0 = d.shear_table(0) * u;
        const Eigen::VectorXd s1 = d.shear_table(1) * u;
        g.T.colwise() += t0;
        g.dT_dx2.colwise() += t1;
        g.u1.colwise() += s0;
        g.du1_dx2.colwise() += s1;
    }

    for (int k = 1; k <= d.max_wavenumber(); ++k) {
        const double a = d.wavenumber(k);
        const auto C = d.cos_table().col(k).transpose();
        const auto S = d.sin_table().col(k).transpose();
        for (Parity p : {Parity::Cos, Parity::Sin}) {
            const auto col = Discretization::column(k, p);
            const Eigen::VectorXd h = c_.col(col).head(n);
            const Eigen::VectorXd th = c_.col(col).segment(n, n);
            if (h.isZero(0.0) && th.isZero(0.0)) continue;
            const Eigen::VectorXd h0 = d.stream_table(0) * h;
            const Eigen::VectorXd h1 = d.stream_table(1) * h;
            const Eigen::VectorXd h2 = d.stream_table(2) * h;
            const Eigen::VectorXd t0 = d.temperature_table(0) * th;
            const Eigen::VectorXd t1 = d.temperature_table(1) * th;
            if (p == Parity::Cos) {
                g.u1.noalias() -= h1 * S;
                g.u2.noalias() += a * h0 * C;
                g.T.noalias() += t0 * C;
                g.du1_dx1.noalias() -= a * h1 * C;
                g.du1_dx2.noalias() -= h2 * S;
                g.du2_dx1.noalias() -= a * a * h0 * S;
                g.du2_dx2.noalias() += a * h1 * C;
                g.dT_dx1.noalias() -= a * t0 * S;
                g.dT_dx2.noalias() += t1 * C;
            } else {
                g.u1.noalias() += h1 * C;
                g.u2.noalias() += a * h0 * S;
                g.T.noalias() += t0 * S;
                g.du1_dx1.noalias() -= a * h1 * S;
                g.du1_dx2.noalias() += h2 * C;
                g.du2_dx1.noalias() += a * a * h0 * C;
                g.du2_dx2.noalias() += a * h1 * S;
                g.dT_dx1.noalias() += a * t0 * C;
                g.dT_dx2.noalias() += t1 * S;
            }
        }
    }
    return g;
}

SpectralField SpectralField::translated(double delta) const {
    Eigen::MatrixXd out = c_;
    for (int k = 1; k <= disc_->max_wavenumber(); ++k) {
        const double phi = disc_->wavenumber(k) * delta;
        const double cs = std::cos(phi);
        const double sn = std::sin(phi);
        const auto cc = Discretization::column(k, Parity::Cos);
        const auto sc = Discretization::column(k, Parity::Sin);
        out.col(cc) = cs * c_.col(cc) - sn * c_.col(sc);
        out.col(sc) = sn * c_.col(cc) + cs * c_.col(sc);
    }
    return {disc_, std::move(out)};
}

SpectralField::PointJet SpectralField::evaluate(double x1, double x2) const {
    const auto& d = *disc_;
    const int n = d.vertical_size();
    Eigen::MatrixXd hs(4, n), ts(2, n), us(3, d.shear_size());
    d.stream_basis().evaluate(x2, 3, hs);
    d.temperature_basis().evaluate(x2, 1, ts);
    d.shear_basis().evaluate(x2, 2, us);

    PointJet jet;
    {
        const Eigen::VectorXd u = us * c_.col(1).head(d.shear_size());
        jet.u[0] += u(0);
        jet.du[0][1] += u(1);
        jet.d2u[0][1][1] += u(2);
        jet.T += (ts.row(0) * c_.col(0).segment(n, n))(0);
    }
    for (int k = 1; k <= d.max_wavenumber(); ++k) {
        const double a = d.wavenumber(k);
        const double c = std::cos(a * x1);
        const double s = std::sin(a * x1);
        for (Parity p : {Parity::Cos, Parity::Sin}) {
            const auto col = Discretization::column(k, p);
            const Eigen::VectorXd h = hs * c_.col(col).head(n);  // h, h', h'', h'''
            const double th = (ts.row(0) * c_.col(col).segment(n, n))(0);
            // x-factors of u1 and u2 and their first two x1-derivatives.
            std::array<double, 3> f1{}, f2{};
            if (p == Parity::Cos) {
                f1 = {-s, -a * c, a * a * s};
                f2 = {a * c, -a * a * s, -a * a * a * c};
                jet.T += c * th;
            } else {
                f1 = {c, -a * s, -a * a * c};
                f2 = {a * s, a * a * c, -a * a * a * s};
                jet.T += s * th;
            }
            jet.u[0] += f1[0] * h(1);
            jet.u[1] += f2[0] * h(0);
            jet.du[0][0] += f1[1] * h(1);
            jet.du[0][1] += f1[0] * h(2);
            jet.du[1][0] += f2[1] * h(0);
            jet.du[1][1] += f2[0] * h(1);
            jet.d2u[0][0][0] += f1[2] * h(1);
            jet.d2u[0][0][1] += f1[1] * h(2);
            jet.d2u[0][1][1] += f1[0] * h(3);
            jet.d2u[1][0][0] += f2[2] * h(0);
            jet.d2u[1][0][1] += f2[1] * h(1);
            jet.d2u[1][1][1] += f2[0] * h(2);
        }
    }
    for (int i = 0; i < 2; ++i) jet.d2u[i][1][0] = jet.d2u[i][0][1];
    return jet;
}

}  // namespace rbc::spectral
