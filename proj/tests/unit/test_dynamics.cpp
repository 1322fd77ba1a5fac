#include <doctest.h>

#include "rbc/dynamics/integrator.hpp"
#include "rbc/dynamics/sweep.hpp"
#include "rbc/reduction/center_manifold.hpp"
#include "rbc/spectral/operators.hpp"
#include "rbc/spectral/snapshot.hpp"
#include "rbc/stability/eigen.hpp"
#include "rbc/stability/neutral.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

using namespace rbc::dynamics;
using rbc::spectral::BcTag;
using rbc::spectral::BoundaryCondition;
using rbc::spectral::Discretization;
using rbc::spectral::Parity;
using rbc::spectral::SpaceTag;

namespace {

constexpr double kPi = std::numbers::pi;
const BoundaryCondition kRR = BoundaryCondition::from_tag(BcTag::RigidRigid);
const BoundaryCondition kFF = BoundaryCondition::from_tag(BcTag::FreeFree);
const double kRcFF = 27.0 * std::pow(kPi, 4) / 4.0;
const double kLcFF = 2.0 * std::sqrt(2.0);

const rbc::stability::NeutralPoint& rr_critical() {
    static const auto nc = rbc::stability::critical_rayleigh(kRR);
    return nc;
}

rbc::spectral::DiscretizationPtr ff_disc(SpaceTag space = SpaceTag::B3) {
    return Discretization::make(kLcFF, 3, 8, BoundaryCondition::free_free(space));
}

rbc::spectral::DiscretizationPtr rr_disc() { return Discretization::make(rr_critical().L_c, 3, 12, kRR); }

SpectralField cos_only(const SpectralField& f) {
    Eigen::MatrixXd c = f.coeffs();
    for (int k = 0; k <= f.disc().max_wavenumber(); ++k) c.col(Discretization::column(k, Parity::Sin)).setZero();
    return {f.disc_ptr(), c};
}

}  // namespace

TEST_CASE("zero is a fixed point") {
    const auto d = rr_disc();
    const SpectralField z(d);
    const auto n = step(z, 1e-2, rbc::spectral::PhysParams(2000.0));
    CHECK(n.coeffs().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("horizontally uniform modes decay by the implicit Euler factor") {
    // at k = 0 buoyancy does not couple, so the linear step is pure diffusion
    const auto d = rr_disc();
    const double dt = 0.01;
    const rbc::spectral::PhysParams p(1500.0);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> et(d->temperature_stiffness(0), d->temperature_mass());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(d->shear_stiffness(), d->shear_mass());
    for (int j : {0, 3}) {
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d->rows(), d->cols());
        c.col(Discretization::column(0, Parity::Cos)).segment(d->vertical_size(), d->vertical_size()) =
            et.eigenvectors().col(j);
        const SpectralField psi(d, c);
        const auto n = step(psi, dt, p, false);
        CHECK((n.coeffs() - psi.coeffs() / (1.0 + dt * et.eigenvalues()(j))).cwiseAbs().maxCoeff() < 1e-13);

        Eigen::MatrixXd u = Eigen::MatrixXd::Zero(d->rows(), d->cols());
        u.col(Discretization::column(0, Parity::Sin)).head(d->shear_size()) = es.eigenvectors().col(j);
        const SpectralField v(d, u);
        const auto m = step(v, dt, p, false);
        CHECK((m.coeffs() - v.coeffs() / (1.0 + dt * es.eigenvalues()(j))).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("linearized growth factor is consistent with the eigenvalue") {
    const auto d = rr_disc();
    const double R = 1.2 * rr_critical().R_c;
    const rbc::spectral::PhysParams p(R);
    const auto e = rbc::stability::build_eigenvector_2d(d, 1, 1, Parity::Cos, R);
    const rbc::stability::EigenBasis basis(d, R);
    const double beta = basis.beta(1, 1, Parity::Cos);
    double prev_err = 0.0;
    for (double dt : {2e-3, 1e-3, 5e-4}) {
        const auto n = step(e, dt, p, false);
        const double g = rbc::spectral::inner_H(n, e);
        const double err = std::abs(g - (1.0 + dt * beta));
        if (prev_err > 0.0) CHECK(prev_err / err == doctest::Approx(4.0).epsilon(0.1));
        prev_err = err;
    }
}

TEST_CASE("SBDF2 is second order on the linear problem") {
    const auto d = rr_disc();
    const double R = 1.2 * rr_critical().R_c;
    const auto e = rbc::stability::build_eigenvector_2d(d, 1, 1, Parity::Cos, R);
    const rbc::stability::EigenBasis basis(d, R);
    const double beta = basis.beta(1, 1, Parity::Cos);
    const double T = 0.5;
    std::vector<double> err;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
        StepOptions o;
        o.dt = dt;
        o.scheme = Scheme::SBDF2;
        o.nonlinear = false;
        Stepper st(d, rbc::spectral::PhysParams(R), o);
        SpectralField psi = e;
        for (int n = 0; n < static_cast<int>(std::lround(T / dt)); ++n) psi = st.advance(psi);
        err.push_back(std::abs(rbc::spectral::inner_H(psi, e) - std::exp(beta * T)));
    }
    CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.15));
    CHECK(err[1] / err[2] == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("energy decreases below onset") {
    for (const auto& d : {ff_disc(), rr_disc()}) {
        const double Rc = d->bc().tag == BcTag::FreeFree ? kRcFF : rr_critical().R_c;
        const rbc::spectral::PhysParams p(0.5 * Rc);
        StepOptions o;
        o.dt = 1e-3;
        Stepper st(d, p, o);
        SpectralField psi = random_initial_data(d, 3, 1e-3);
        double prev = rbc::spectral::norm_H(psi);
        for (int n = 0; n < 300; ++n) {
            psi = st.advance(psi);
            const double cur = rbc::spectral::norm_H(psi);
            CHECK(cur < prev);
            prev = cur;
        }
    }
}

TEST_CASE("decay below onset at the leading rate") {
    const auto d = ff_disc();
    const double R = 0.9 * kRcFF;
    const double beta1 = rbc::stability::growth_rate_beta1(R, kFF, kLcFF);
    EvolveOptions o;
    o.step.dt = 2e-3;
    o.step.scheme = Scheme::SBDF2;
    o.sample_every = 50;
    o.steady_tol = 1e-12;
    const auto s = evolve(random_initial_data(d, 17), rbc::spectral::PhysParams(R), 40.0, o);
    CHECK(s.norms.back() <= 1e-8);
    const double rate = decay_rate_fit(s.times, s.norms);
    CHECK(rate == doctest::Approx(beta1).epsilon(0.05));
    for (std::size_t i = 1; i < s.times.size(); ++i) CHECK(s.times[i] > s.times[i - 1]);
}

TEST_CASE("steady rolls above onset") {
    const auto d = rr_disc();
    const auto& nc = rr_critical();
    const double R = 1.05 * nc.R_c;
    rbc::reduction::ModelOptions mo;
    mo.L = nc.L_c;
    mo.J = 8;
    const double r_pred = rbc::reduction::equilibrium_amplitude(rbc::reduction::build_reduced_model(R, kRR, mo));

    EvolveOptions o;
    o.step.dt = 0.01;
    o.step.scheme = Scheme::SBDF2;
    o.sample_every = 20;
    const auto s = evolve(random_initial_data(d, 5), rbc::spectral::PhysParams(R), 300.0, o);
    REQUIRE(s.steady);
    CHECK(s.rhs_norm.back() <= o.steady_tol);
    CHECK(s.amplitude.back() == doctest::Approx(r_pred).epsilon(0.1));
    CHECK(rbc::spectral::max_divergence(s.final) < 1e-10);

    // halving dt leaves the steady amplitude unchanged
    o.step.dt = 0.005;
    const auto h = evolve(random_initial_data(d, 5), rbc::spectral::PhysParams(R), 300.0, o);
    REQUIRE(h.steady);
    CHECK(std::abs(h.amplitude.back() / s.amplitude.back() - 1.0) <= 1e-4);

    // shifted initial data lands on the shifted steady state
    const double delta = 0.37;
    const auto t = evolve(random_initial_data(d, 5).translated(delta), rbc::spectral::PhysParams(R), 300.0,
                          [&] { auto q = o; q.step.dt = 0.01; return q; }());
    REQUIRE(t.steady);
    double dphi = t.phase.back() - s.phase.back() - 2.0 * kPi * delta / nc.L_c;
    dphi = std::remainder(dphi, 2.0 * kPi);
    CHECK(std::abs(dphi) < 1e-3);
}

TEST_CASE("flow map commutes with translation") {
    const auto d = rr_disc();
    const rbc::spectral::PhysParams p(1.3 * rr_critical().R_c);
    const SpectralField psi = random_initial_data(d, 9, 0.5);
    StepOptions o;
    o.dt = 5e-3;
    Stepper a(d, p, o), b(d, p, o);
    SpectralField x = psi, y = psi.translated(0.41);
    for (int n = 0; n < 50; ++n) {
        x = a.advance(x);
        y = b.advance(y);
        CHECK(rbc::spectral::max_divergence(x) < 1e-10);
    }
    CHECK(rbc::spectral::norm_H(x.translated(0.41) - y) <= 1e-8 * rbc::spectral::norm_H(x));
}

TEST_CASE("mean flow profile") {
    const auto d = rr_disc();
    Eigen::MatrixXd c = random_initial_data(d, 1, 1.0).coeffs();
    c.col(0).setZero();
    c.col(1).setZero();
    const auto p = mean_flow_profile(SpectralField(d, c));
    CHECK(p.q.cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(p.M) < 1e-14);

    const auto shear = rbc::stability::build_eigenvector_2d(d, 0, 1, Parity::Sin, 1000.0);
    const auto m = mean_flow_profile(shear, 2001);
    const auto& sb = d->shear_basis();
    const Eigen::VectorXd U = shear.velocity(0, Parity::Sin);
    Eigen::MatrixXd v(1, sb.size());
    double integral = 0.0;
    for (Eigen::Index i = 0; i < m.z.size(); ++i) {
        sb.evaluate(m.z(i), 0, v);
        const double u = (v * U)(0);
        CHECK(m.q(i) == doctest::Approx(u).epsilon(1e-12).scale(1.0));
        const double w = (i == 0 || i + 1 == m.z.size()) ? 0.5 : 1.0;
        integral += w * u / (m.z.size() - 1);
    }
    CHECK(m.M == doctest::Approx(d->period() * integral).epsilon(1e-6));
    CHECK(m.M != 0.0);
}

TEST_CASE("zero-mean data stays in E") {
    // free-free with the constant shear mode retained (B2); M is conserved
    const auto d = ff_disc(SpaceTag::B2);
    Eigen::MatrixXd c = random_initial_data(d, 21, 1e-2).coeffs();
    const auto& sb = d->shear_basis();
    // remove the mean: the B2 shear basis starts with the constant member
    c(0, 1) = 0.0;
    SpectralField psi(d, c);
    REQUIRE(std::abs(rbc::spectral::mean_flow(psi)) < 1e-15);
    CHECK(sb.size() == d->shear_size());
    const rbc::spectral::PhysParams p(1.05 * kRcFF);
    StepOptions o;
    o.dt = 0.01;
    Stepper st(d, p, o);
    for (int n = 0; n < 500; ++n) {
        psi = st.advance(psi);
        const double n2 = std::pow(rbc::spectral::norm_H(psi), 2);
        CHECK(std::abs(rbc::spectral::mean_flow(psi)) <= 1e-9 * std::max(n2, 1e-30) + 1e-18);
    }

    // rigid walls: reflection-symmetric data has no mean flow at all
    const auto r = rr_disc();
    SpectralField q = cos_only(random_initial_data(r, 4, 0.5));
    Stepper sr(r, rbc::spectral::PhysParams(1.05 * rr_critical().R_c), o);
    for (int n = 0; n < 200; ++n) {
        q = sr.advance(q);
        CHECK(std::abs(rbc::spectral::mean_flow(q)) <= 1e-13);
    }
}

TEST_CASE("rigid-wall mean flow decays at the slowest shear rate") {
    const auto d = rr_disc();
    const double R = 1.05 * rr_critical().R_c;
    const rbc::stability::EigenBasis basis(d, R);
    const double b01 = basis.beta(0, 1, Parity::Sin);
    SpectralField psi = 2.0 * rbc::stability::build_eigenvector_2d(d, 1, 1, Parity::Cos, R) +
                        0.5 * rbc::stability::build_eigenvector_2d(d, 0, 1, Parity::Sin, R) +
                        0.3 * rbc::stability::build_eigenvector_2d(d, 0, 2, Parity::Sin, R);
    EvolveOptions o;
    o.step.dt = 2e-3;
    o.step.scheme = Scheme::SBDF2;
    o.sample_every = 10;
    o.steady_tol = 1e-14;
    const auto s = evolve(psi, rbc::spectral::PhysParams(R), 1.5, o);
    CHECK(decay_rate_fit(s.times, s.mean_flow) == doctest::Approx(b01).epsilon(0.05));
}

TEST_CASE("decay rate fit") {
    std::vector<double> t, v, w, s;
    for (int i = 0; i <= 200; ++i) {
        const double x = 0.05 * i;
        t.push_back(x);
        v.push_back(2.5 * std::exp(-3.0 * x));
        w.push_back(-std::exp(-1.0 * x) - 5.0 * std::exp(-6.0 * x));
        s.push_back(std::cos(x));
    }
    CHECK(decay_rate_fit(t, v) == doctest::Approx(-3.0).epsilon(1e-6));
    CHECK(decay_rate_fit(t, w) == doctest::Approx(-1.0).epsilon(1e-3));
    CHECK_THROWS_AS(decay_rate_fit(t, s), std::domain_error);
    CHECK_THROWS_AS(decay_rate_fit({0, 1}, {1, 1}), std::invalid_argument);
}

TEST_CASE("blow-up is reported with a state dump") {
    const auto d = ff_disc();
    const auto path = std::filesystem::temp_directory_path() / "rbc_blowup_dump.snap";
    std::filesystem::remove(path);
    StepOptions o;
    o.dt = 1.0;
    o.dump_path = path.string();
    Stepper st(d, rbc::spectral::PhysParams(5000.0), o);
    SpectralField psi = random_initial_data(d, 2, 1e40);
    bool thrown = false;
    try {
        for (int n = 0; n < 20; ++n) psi = st.advance(psi);
    } catch (const IntegrationError& e) {
        thrown = true;
        CHECK(std::string(e.what()).find("stopped being finite") != std::string::npos);
        CHECK(std::filesystem::exists(path));
        const auto snap = rbc::spectral::read_snapshot(path);
        CHECK(snap.field.coeffs().allFinite());
    }
    CHECK(thrown);
    std::filesystem::remove(path);
}

TEST_CASE("integrator argument checks and csv") {
    const auto d = ff_disc();
    StepOptions o;
    o.dt = 0.0;
    CHECK_THROWS_AS(Stepper(d, rbc::spectral::PhysParams(100.0), o), std::invalid_argument);
    CHECK_THROWS_AS(evolve(SpectralField(d), rbc::spectral::PhysParams(100.0), -1.0), std::invalid_argument);
    CHECK(parse_scheme("sbdf2") == Scheme::SBDF2);
    CHECK(to_string(Scheme::IMEX1) == "imex1");
    CHECK_THROWS_AS(parse_scheme("rk4"), std::invalid_argument);

    EvolveOptions eo;
    eo.step.dt = 0.01;
    int calls = 0;
    eo.observer = [&](double, const SpectralField&) { ++calls; };
    const auto s = evolve(random_initial_data(d, 1), rbc::spectral::PhysParams(300.0), 0.5, eo);
    CHECK_FALSE(s.steady);
    CHECK(calls == static_cast<int>(s.times.size()));
    CHECK(s.stability_bound > 0.0);
    std::ostringstream os;
    write_trajectory_csv(os, s);
    const auto text = os.str();
    CHECK(text.rfind("t,norm,r,theta,M,rhs\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + static_cast<long>(s.times.size()));
}

TEST_CASE("exponent fit recovers a synthetic power law and skips unusable points") {
    SweepResult s;
    s.R_c = 100.0;
    for (double d : {0.1, 0.5, 2.0, 4.0}) {
        SweepPoint p;
        p.R = s.R_c + d;
        p.amplitude = 3.0 * std::pow(d, 0.75);
        p.steady = true;
        s.points.push_back(p);
    }
    SweepPoint below;
    below.R = 90.0;
    below.steady = true;
    s.points.push_back(below);
    SweepPoint drifting;
    drifting.R = 101.0;
    drifting.amplitude = 50.0;
    s.points.push_back(drifting);

    const auto f = fit_amplitude_exponent(s);
    CHECK(f.points == 4);
    CHECK(f.slope == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));

    s.points.resize(1);
    CHECK_THROWS_AS(fit_amplitude_exponent(s), std::domain_error);
}

TEST_CASE("amplitude sweep: zero below onset, square-root law above, order preserved") {
    auto d = Discretization::make(kLcFF, 3, 8, kFF);
    SweepOptions o;
    o.evolve.step.scheme = Scheme::SBDF2;
    o.evolve.step.dt = 0.05;
    o.evolve.sample_every = 50;
    o.horizon = 6000.0;
    const std::vector<double> ratios{1.002, 0.95, 1.01, 1.005};
    const auto s = amplitude_sweep(d, ratios, o);
    CHECK(s.R_c == doctest::Approx(kRcFF).epsilon(1e-9));
    REQUIRE(s.points.size() == ratios.size());
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        CHECK(s.points[i].ratio == ratios[i]);
        CHECK(s.points[i].steady);
    }
    CHECK(s.points[1].amplitude == 0.0);
    CHECK(s.points[1].beta1 < 0.0);
    for (std::size_t i : {0u, 2u, 3u}) {
        const double pred = std::sqrt(s.points[i].beta1 * 48.0 * std::sqrt(2.0));  // free-free alpha = 1/(48 sqrt 2)
        CHECK(s.points[i].amplitude == doctest::Approx(pred).epsilon(0.02));
    }
    CHECK(std::abs(fit_amplitude_exponent(s).slope - 0.5) <= 0.02);

    std::ostringstream a, b;
    write_sweep_csv(a, s);
    write_sweep_csv(b, amplitude_sweep(d, ratios, o));
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("ratio,R,beta1,amplitude,norm,steady,steps\n", 0) == 0);

    CHECK_THROWS_AS(amplitude_sweep(d, {}, o), std::invalid_argument);
    CHECK_THROWS_AS(amplitude_sweep(d, {1.01, -1.0}, o), std::invalid_argument);
}
