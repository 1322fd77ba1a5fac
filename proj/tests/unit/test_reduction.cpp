#include <doctest.h>

#include "rbc/reduction/center_manifold.hpp"
#include "rbc/stability/neutral.hpp"
#include "support/galerkin_ff.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

using namespace rbc::reduction;
using rbc::spectral::BcTag;
using rbc::spectral::SpaceTag;

namespace {

constexpr double kPi = std::numbers::pi;
const BoundaryCondition kRR = BoundaryCondition::from_tag(BcTag::RigidRigid);
const BoundaryCondition kFR = BoundaryCondition::from_tag(BcTag::FreeRigid);
const BoundaryCondition kFF = BoundaryCondition::from_tag(BcTag::FreeFree);

const rbc::stability::NeutralPoint& critical(const BoundaryCondition& bc) {
    static std::map<BcTag, rbc::stability::NeutralPoint> cache;
    auto it = cache.find(bc.tag);
    if (it == cache.end()) it = cache.emplace(bc.tag, rbc::stability::critical_rayleigh(bc)).first;
    return it->second;
}

TableOptions at_critical(const BoundaryCondition& bc, int N = 0) {
    TableOptions o;
    o.L = critical(bc).L_c;
    o.N = N;
    return o;
}

}  // namespace

TEST_CASE("interaction identities hold to round-off") {
    for (const auto& bc : {kFF, kRR, kFR}) {
        const auto& nc = critical(bc);
        for (double ratio : {1.0, 1.1}) {
            const ModalContext ctx(ratio * nc.R_c, bc, 12, at_critical(bc));
            const auto r = identity_residuals(ctx, 12);
            CAPTURE(rbc::spectral::to_string(bc.tag));
            CHECK(r.off_harmonic <= 1e-10);
            CHECK(r.parity <= 1e-10);
            CHECK(r.second_harmonic <= 1e-10);
            CHECK(r.mean_equal <= 1e-10);
            CHECK(r.harmonic_opposite <= 1e-10);
            CHECK(r.mixed_mean <= 1e-10);
            CHECK(r.mixed_harmonic <= 1e-10);
            const auto t = interaction_table(ctx, 12);
            CHECK(t.residuals.max() == r.max());
        }
    }
}

TEST_CASE("free-free interactions match the Lorenz closed form") {
    const double a = kPi / std::sqrt(2.0);
    const double L = 2.0 * kPi / a;
    const double q = kPi * kPi + a * a;
    const double Rc = 27.0 * std::pow(kPi, 4) / 4.0;
    TableOptions o;
    o.L = L;
    const auto t = interaction_table(Rc, kFF, 12, o);
    // u.grad T of the unit roll averages to (a pi / 2) H Theta sin(2 pi z) with H Theta = 2 / (L sqrt(q)).
    CHECK(t.c0[1] == doctest::Approx(-a * kPi / std::sqrt(2.0 * L * q)).epsilon(1e-12));
    for (int j = 0; j < 12; ++j) {
        if (j != 1) CHECK(std::abs(t.c0[j]) < 1e-12);
        CHECK(std::abs(t.c2[j]) < 1e-12);
        CHECK(t.beta0[j] == doctest::Approx(-(j + 1) * (j + 1) * kPi * kPi).epsilon(1e-11));
    }
    CHECK(std::abs(t.beta1) < 1e-9);
    const double alpha_closed = a * a / (8.0 * L * q);
    CHECK(alpha(t, 12) == doctest::Approx(alpha_closed).epsilon(1e-11));
    CHECK(alpha_closed == doctest::Approx(1.0 / (48.0 * std::sqrt(2.0))).epsilon(1e-14));

    const auto phi = cm_function(1.0, 0.0, t);
    CHECK(phi.phi0[1] == doctest::Approx(-t.c0[1] / (-4.0 * kPi * kPi)).epsilon(1e-11));
    CHECK(phi.phi0[0] == doctest::Approx(-t.c0[0] / t.beta0[0]));
}

TEST_CASE("free-free alpha against the direct Galerkin steady states") {
    const double a = kPi / std::sqrt(2.0);
    const double Rc = 27.0 * std::pow(kPi, 4) / 4.0;
    TableOptions o;
    o.L = 2.0 * kPi / a;
    const double alpha_cm = alpha(interaction_table(Rc, kFF, 12, o), 12);

    // Branch of steady rolls followed downward in R; r^2 / beta1 -> 1 / alpha.
    const std::vector<double> ratios{1.04, 1.02, 1.01, 1.005};
    std::vector<double> b, y;
    Eigen::VectorXd X;
    for (double ratio : ratios) {
        const rbc::oracle::GalerkinFF g(a, ratio * Rc, 8);
        if (X.size() == 0) {
            X = 0.1 * g.critical_mode();
            X = g.rk4(X, 2e-3, 20000);
        }
        X = g.newton(X);
        const double r = g.inner_H(X, g.critical_mode());
        b.push_back(g.beta1());
        y.push_back(r * r / g.beta1());
    }
    // y = 1/alpha + c beta1 + d beta1^2
    Eigen::MatrixXd A(b.size(), 3);
    Eigen::VectorXd rhs(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        A(i, 0) = 1.0;
        A(i, 1) = b[i];
        A(i, 2) = b[i] * b[i];
        rhs(i) = y[i];
    }
    const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(rhs);
    const double alpha_oracle = 1.0 / coef(0);
    CHECK(alpha_cm == doctest::Approx(alpha_oracle).epsilon(1e-2));
    MESSAGE("alpha center manifold " << alpha_cm << ", Galerkin oracle " << alpha_oracle);
}

TEST_CASE("alpha is positive and converged at criticality") {
    for (const auto& bc : {kFF, kRR, kFR}) {
        ModelOptions mo;
        mo.L = critical(bc).L_c;
        const auto m = build_reduced_model(critical(bc).R_c, bc, mo);
        CAPTURE(rbc::spectral::to_string(bc.tag));
        CHECK(m.alpha > 0.0);
        CHECK(m.convergence.rel_change <= 1e-2);
        CHECK(m.convergence.converged);
        CHECK(m.convergence.warning.empty());
        CHECK(std::abs(m.beta1) < 1e-6);
        for (double bj : m.beta_0j) CHECK(bj < 0.0);
        for (double bj : m.beta_2j) CHECK(bj < 0.0);
        // partial sums of positive terms increase; tail terms shrink with |beta|
        const auto& p = m.convergence.partial;
        for (std::size_t j = 1; j < p.size(); ++j) CHECK(p[j] >= p[j - 1] - 1e-15);
        CHECK(p.back() - p[p.size() / 2 - 1] <= 1e-2 * p.back());
        CHECK(m.translation_witness < 1e-12);
    }
}

TEST_CASE("alpha sum ignores vanishing interactions") {
    auto t = interaction_table(critical(kRR).R_c, kRR, 6, at_critical(kRR));
    const double base = alpha(t, 6);
    t.J = 7;
    t.beta0.push_back(-500.0);
    t.beta0_shear.push_back(-500.0);
    t.beta2.push_back(-600.0);
    for (auto* v : {&t.c0, &t.c2, &t.c0_tilde, &t.c2_tilde, &t.mixed0, &t.mixed2_cs, &t.mixed2_sc}) v->push_back(0.0);
    CHECK(alpha(t, 7) == base);
}

TEST_CASE("alpha convergence report flags a short table") {
    auto t = interaction_table(critical(kRR).R_c, kRR, 4, at_critical(kRR));
    t.c0[3] = 10.0;  // a large tail contribution
    const auto c = alpha_convergence(t, 2);
    CHECK_FALSE(c.converged);
    CHECK(c.suggested_J > 2);
    CHECK(c.warning.find("retry with J") != std::string::npos);
    CHECK_THROWS_AS(alpha_convergence(t, 3), std::invalid_argument);
}

TEST_CASE("center-manifold function") {
    const auto t = interaction_table(critical(kRR).R_c, kRR, 8, at_critical(kRR));
    const auto z = cm_function(0.0, 0.0, t);
    for (std::size_t j = 0; j < z.phi0.size(); ++j) {
        CHECK(z.phi0[j] == 0.0);
        CHECK(z.phi2[j] == 0.0);
        CHECK(z.phi0_tilde[j] == 0.0);
        CHECK(z.phi2_tilde[j] == 0.0);
    }
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int i = 0; i < 10; ++i) {
        const double x = U(rng), y = U(rng);
        const auto p = cm_function(x, y, t);
        const auto r = cm_function(-y, x, t);
        for (std::size_t j = 0; j < p.phi0.size(); ++j) {
            CHECK(r.phi0[j] == doctest::Approx(p.phi0[j]).epsilon(1e-12));
            CHECK(r.phi2[j] == doctest::Approx(-p.phi2[j]).epsilon(1e-12));
            CHECK(r.phi2_tilde[j] == doctest::Approx(-p.phi2_tilde[j]).epsilon(1e-12));
            CHECK(std::abs(p.phi0_tilde[j]) < 1e-12);
            // specialized forms with the identities applied
            CHECK(p.phi0[j] == doctest::Approx(-t.c0[j] * (x * x + y * y) / t.beta0[j]).epsilon(1e-9));
            CHECK(p.phi2[j] == doctest::Approx(-t.c2[j] * (x * x - y * y) / t.beta2[j]).epsilon(1e-9));
            CHECK(p.phi2_tilde[j] == doctest::Approx(-2.0 * t.c2[j] * x * y / t.beta2[j]).epsilon(1e-9));
        }
    }
    auto bad = t;
    bad.beta2[3] = 0.0;
    CHECK_THROWS_AS(cm_function(0.1, 0.2, bad), ReductionRefused);
    CHECK_THROWS_AS(cm_function(0.1, 0.2, t, 9), std::invalid_argument);
}

TEST_CASE("free-free with the mean shear mode kept is refused") {
    const auto b2 = BoundaryCondition::free_free(SpaceTag::B2);
    TableOptions o;
    o.L = 2.0 * std::sqrt(2.0);
    const auto t = interaction_table(27.0 * std::pow(kPi, 4) / 4.0, b2, 4, o);
    CHECK(t.beta0_shear[0] == doctest::Approx(0.0).scale(1.0));
    CHECK_THROWS_AS(cm_function(0.1, 0.0, t), ReductionRefused);
}

TEST_CASE("reduced right-hand side") {
    ReducedModel m;
    m.beta1 = 0.7;
    m.alpha = 0.03;
    const auto o = reduced_rhs({0.0, 0.0}, m);
    CHECK(o[0] == 0.0);
    CHECK(o[1] == 0.0);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (int i = 0; i < 8; ++i) {
        const double th = 2.0 * kPi * i / 8 + 0.3;
        const double c = std::cos(th), s = std::sin(th);
        const std::array<double, 2> x{U(rng), U(rng)};
        const auto f = reduced_rhs(x, m);
        const auto fr = reduced_rhs({c * x[0] - s * x[1], s * x[0] + c * x[1]}, m);
        CHECK(std::abs(fr[0] - (c * f[0] - s * f[1])) < 1e-12);
        CHECK(std::abs(fr[1] - (s * f[0] + c * f[1])) < 1e-12);
    }
    const double r = std::sqrt(m.beta1 / m.alpha);
    for (int i = 0; i < 8; ++i) {
        const double th = 0.7 * i;
        const std::array<double, 2> x{r * std::cos(th), r * std::sin(th)};
        const auto f = reduced_rhs(x, m);
        CHECK(std::abs(f[0] * x[0] + f[1] * x[1]) < 1e-12 * r * r);
    }
    for (int i = 0; i < 20; ++i) {
        const std::array<double, 2> x{U(rng), U(rng)};
        const auto J = reduced_jacobian(x, m);
        for (int c = 0; c < 2; ++c) {
            auto xp = x, xm = x;
            const double h = 1e-5;
            xp[c] += h;
            xm[c] -= h;
            const auto fp = reduced_rhs(xp, m), fm = reduced_rhs(xm, m);
            for (int r2 = 0; r2 < 2; ++r2) {
                const double fd = (fp[r2] - fm[r2]) / (2 * h);
                CHECK(std::abs(fd - J(r2, c)) <= 1e-6 * std::max(1.0, std::abs(J(r2, c))));
            }
        }
    }
}

TEST_CASE("quadratic feedback reproduces the cubic normal form") {
    for (const auto& bc : {kRR, kFF, kFR}) {
        const double Rc = critical(bc).R_c;
        const ModalContext ctx(Rc, bc, 12, at_critical(bc));
        const auto t = interaction_table(ctx, 12);
        const double al = alpha(t, 12);
        CAPTURE(rbc::spectral::to_string(bc.tag));
        for (double x : {0.5, -1.3}) {
            const auto f = quadratic_feedback_rhs(ctx, t, x, 0.0);
            CHECK(f[0] - t.beta1 * x == doctest::Approx(-al * x * x * x).epsilon(1e-10));
            CHECK(std::abs(f[1]) < 1e-12);
        }
        const double x = 0.8, y = -0.35;
        const auto f = quadratic_feedback_rhs(ctx, t, x, y);
        for (int i = 1; i < 8; ++i) {
            const double th = 2.0 * kPi * i / 8;
            const double c = std::cos(th), s = std::sin(th);
            const auto fr = quadratic_feedback_rhs(ctx, t, c * x - s * y, s * x + c * y);
            CHECK(std::abs(fr[0] - (c * f[0] - s * f[1])) < 1e-10);
            CHECK(std::abs(fr[1] - (s * f[0] + c * f[1])) < 1e-10);
        }
        const double r2 = x * x + y * y;
        CHECK(f[0] == doctest::Approx(t.beta1 * x - al * x * r2).epsilon(1e-10));
        CHECK(f[1] == doctest::Approx(t.beta1 * y - al * y * r2).epsilon(1e-10));
    }
}

TEST_CASE("equilibrium amplitude") {
    const auto& nc = critical(kRR);
    ModelOptions mo;
    mo.L = nc.L_c;
    mo.J = 8;
    const auto at_c = build_reduced_model(nc.R_c, kRR, mo);
    CHECK(equilibrium_amplitude(at_c) < 1e-4);

    std::vector<double> lx, ly;
    for (double ratio : {1.001, 1.004, 1.008, 1.012, 1.016, 1.02}) {
        const auto m = build_reduced_model(ratio * nc.R_c, kRR, mo);
        CHECK(m.R_alpha == doctest::Approx(nc.R_c).epsilon(1e-8));
        lx.push_back(std::log(m.R - nc.R_c));
        ly.push_back(std::log(equilibrium_amplitude(m)));
    }
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(std::abs(slope - 0.5) <= 0.02);

    auto m = build_reduced_model(1.01 * nc.R_c, kRR, mo);
    const double r1 = equilibrium_amplitude(m);
    m.alpha *= 2.0;
    CHECK(equilibrium_amplitude(m) * equilibrium_amplitude(m) == doctest::Approx(0.5 * r1 * r1).epsilon(1e-14));
    m.alpha = -m.alpha;
    CHECK_THROWS_AS(equilibrium_amplitude(m), ReductionRefused);
    m.alpha = 0.0;
    CHECK_THROWS_AS(equilibrium_amplitude(m), ReductionRefused);

    const auto below = build_reduced_model(0.95 * nc.R_c, kRR, mo);
    CHECK(equilibrium_amplitude(below) == 0.0);
}

TEST_CASE("bifurcation verdict") {
    for (const auto& bc : {kFF, kRR}) {
        const auto& nc = critical(bc);
        ModelOptions mo;
        mo.L = nc.L_c;
        mo.J = 8;
        std::vector<ReducedModel> sweep;
        for (double ratio : {0.98, 0.995, 1.005, 1.02}) sweep.push_back(build_reduced_model(ratio * nc.R_c, bc, mo));
        const auto v = bifurcation_classify(sweep);
        CAPTURE(rbc::spectral::to_string(bc.tag));
        CHECK(v.s1);
        CHECK(v.verdict == "S1 attractor bifurcation: circle of steady states");
        CHECK(v.R_cross == doctest::Approx(nc.R_c).epsilon(1e-3));
        CHECK(v.C1 == doctest::Approx(sweep.front().alpha).epsilon(1e-12));
        CHECK(v.translation_witness < 1e-12);

        for (auto& m : sweep) m.alpha = -m.alpha;
        const auto bad = bifurcation_classify(sweep);
        CHECK_FALSE(bad.s1);
        CHECK(bad.verdict == "inconclusive");

        std::vector<ReducedModel> above(sweep.begin() + 2, sweep.end());
        for (auto& m : above) m.alpha = -m.alpha;
        CHECK_FALSE(bifurcation_classify(above).s1);
    }
    CHECK_FALSE(bifurcation_classify({}).s1);
}

TEST_CASE("reduction csv and report emitters") {
    const auto& nc = critical(kFF);
    ModelOptions mo;
    mo.L = nc.L_c;
    mo.J = 4;
    const auto m = build_reduced_model(1.01 * nc.R_c, kFF, mo);
    std::ostringstream a, b, c, d;
    write_interaction_table_csv(a, m.table);
    write_alpha_vs_J_csv(b, m.convergence);
    write_alpha_vs_R_csv(c, {m});
    write_verdict(d, bifurcation_classify({m}));
    const std::string sa = a.str(), sb = b.str(), sc = c.str(), sd = d.str();
    CHECK(sa.rfind("j,beta0,beta0_shear,beta2,c0", 0) == 0);
    CHECK(std::count(sa.begin(), sa.end(), '\n') == 1 + m.table.J);
    CHECK(std::count(sb.begin(), sb.end(), '\n') == 1 + 2 * mo.J);
    CHECK(sc.rfind("R,beta1,alpha,amplitude\n", 0) == 0);
    CHECK(sd.find("verdict: inconclusive") != std::string::npos);
}
