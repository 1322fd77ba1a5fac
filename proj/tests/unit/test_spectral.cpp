#include <doctest.h>

#include "rbc/spectral/field.hpp"
#include "rbc/spectral/operators.hpp"
#include "rbc/spectral/random.hpp"
#include "rbc/spectral/snapshot.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace rbc::spectral;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<DiscretizationPtr> all_discs(int K = 4, int N = 10) {
    return {Discretization::make(2.0, K, N, BoundaryCondition::from_tag(BcTag::RigidRigid)),
            Discretization::make(2.3, K, N, BoundaryCondition::from_tag(BcTag::FreeRigid)),
            Discretization::make(2.0 * std::sqrt(2.0), K, N, BoundaryCondition::free_free(SpaceTag::B2)),
            Discretization::make(2.0 * std::sqrt(2.0), K, N, BoundaryCondition::free_free(SpaceTag::B3))};
}

double rel(double a, double scale) { return std::abs(a) / std::max(scale, 1e-300); }

}  // namespace

TEST_CASE("boundary condition tags") {
    CHECK(BoundaryCondition::from_tag(BcTag::RigidRigid).space == SpaceTag::B0);
    CHECK(BoundaryCondition::from_tag(BcTag::FreeRigid).space == SpaceTag::B1);
    CHECK(BoundaryCondition::from_tag(BcTag::FreeFree).space == SpaceTag::B3);
    CHECK(parse_bc_tag("free-free") == BcTag::FreeFree);
    CHECK(parse_bc_tag("rigid_rigid") == BcTag::RigidRigid);
    CHECK_THROWS(parse_bc_tag("slippery"));
    CHECK_THROWS(BoundaryCondition::free_free(SpaceTag::B0));
    CHECK_THROWS(Discretization(1.0, 2, 4, BoundaryCondition{BcTag::RigidRigid, SpaceTag::B2}));
    CHECK_THROWS(PhysParams(-1.0));
    CHECK_THROWS(PhysParams(100.0, 0.0));
    const PhysParams p(657.5);
    CHECK(p.lambda() * p.lambda() == doctest::Approx(657.5).epsilon(1e-15));
}

TEST_CASE("fields are divergence free and satisfy wall conditions") {
    for (const auto& d : all_discs()) {
        const auto f = random_field(d, 7);
        const GridView g = f.grid_view();
        const double umax = std::max(g.u1.cwiseAbs().maxCoeff(), g.u2.cwiseAbs().maxCoeff());
        CHECK(max_divergence(f) <= 1e-12 * umax * 10);
        for (double x : {0.1, 0.77, 1.3}) {
            for (double z : {0.0, 1.0}) {
                const auto jet = f.evaluate(x, z);
                CHECK(std::abs(jet.u[1]) < 1e-9 * umax);
                CHECK(std::abs(jet.T) < 1e-9 * umax);
                const bool rigid = (z == 0.0 ? d->bc().bottom() : d->bc().top()) == WallType::Rigid;
                if (rigid) CHECK(std::abs(jet.u[0]) < 1e-9 * umax);
                else CHECK(std::abs(jet.du[0][1]) < 1e-9 * umax);
            }
        }
    }
}

TEST_CASE("point evaluation matches the grid view") {
    for (const auto& d : all_discs()) {
        const auto f = random_field(d, 3);
        const GridView g = f.grid_view();
        for (int i : {0, 3, 7}) {
            for (int j : {1, 5, 9}) {
                const auto jet = f.evaluate(d->x_nodes()(i), d->z_nodes()(j));
                CHECK(jet.u[0] == doctest::Approx(g.u1(j, i)).epsilon(1e-12).scale(1));
                CHECK(jet.u[1] == doctest::Approx(g.u2(j, i)).epsilon(1e-12).scale(1));
                CHECK(jet.T == doctest::Approx(g.T(j, i)).epsilon(1e-12).scale(1));
                CHECK(jet.du[0][1] == doctest::Approx(g.du1_dx2(j, i)).epsilon(1e-11).scale(1));
                CHECK(jet.du[1][0] == doctest::Approx(g.du2_dx1(j, i)).epsilon(1e-11).scale(1));
            }
        }
        // Second derivatives against central differences of the first.
        const double x = 0.41, z = 0.63, h = 1e-5;
        const auto c = f.evaluate(x, z);
        const auto px = f.evaluate(x + h, z), mx = f.evaluate(x - h, z);
        const auto pz = f.evaluate(x, z + h), mz = f.evaluate(x, z - h);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                CHECK(c.d2u[i][j][0] == doctest::Approx((px.du[i][j] - mx.du[i][j]) / (2 * h)).epsilon(1e-5).scale(1));
                CHECK(c.d2u[i][j][1] == doctest::Approx((pz.du[i][j] - mz.du[i][j]) / (2 * h)).epsilon(1e-5).scale(1));
            }
    }
}

TEST_CASE("H inner product matches grid quadrature") {
    for (const auto& d : all_discs()) {
        const auto a = random_field(d, 1), b = random_field(d, 2);
        const GridView ga = a.grid_view(), gb = b.grid_view();
        const double dx = d->period() / d->nx();
        const Eigen::MatrixXd prod =
            ga.u1.cwiseProduct(gb.u1) + ga.u2.cwiseProduct(gb.u2) + ga.T.cwiseProduct(gb.T);
        const double quad = d->z_weights().dot(prod.rowwise().sum()) * dx;
        CHECK(inner_H(a, b) == doctest::Approx(quad).epsilon(1e-11));
    }
}

TEST_CASE("linear operator is self-adjoint") {
    for (const auto& d : all_discs()) {
        const PhysParams p(1234.5);
        for (int s = 0; s < 20; ++s) {
            const auto a = random_field(d, 100 + s), b = random_field(d, 200 + s);
            const double lab = inner_H(apply_L(a, p), b);
            const double alb = inner_H(a, apply_L(b, p));
            CHECK(rel(lab - alb, std::abs(lab) + std::abs(alb)) < 1e-10);
        }
    }
}

TEST_CASE("pure temperature mode is a Laplacian eigenfunction") {
    auto d = Discretization::make(2.0, 2, 8, BoundaryCondition::free_free(SpaceTag::B3));
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d->rows(), d->cols());
    c(d->vertical_size() + 2, 0) = 1.0;  // sqrt(2) sin(3 pi z)
    const SpectralField t(d, c);
    const auto lt = apply_L(t, PhysParams(1e-30));
    CHECK((lt.coeffs() + 9 * kPi * kPi * c).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("nonlinearity is skew and dealiased") {
    for (const auto& d : all_discs()) {
        const auto zero = SpectralField(d);
        const auto a0 = random_field(d, 5);
        CHECK(apply_G(zero, a0).coeffs().cwiseAbs().maxCoeff() == 0.0);
        CHECK(apply_G(a0, zero).coeffs().cwiseAbs().maxCoeff() == 0.0);
        for (int s = 0; s < 10; ++s) {
            const auto a = random_field(d, 300 + s), b = random_field(d, 400 + s), c = random_field(d, 500 + s);
            const double scale = norm_H(a) * norm_H(b) * norm_H(c);
            CHECK(rel(trilinear(a, b, b), scale) < 1e-10);
            CHECK(rel(trilinear(a, b, c) + trilinear(a, c, b), scale) < 1e-10);
            CHECK(rel(inner_H(apply_G(a, b), c) - trilinear(a, b, c), scale) < 1e-10);
        }
    }
}

TEST_CASE("operators commute with horizontal translation") {
    for (const auto& d : all_discs()) {
        const PhysParams p(900.0);
        const auto a = random_field(d, 11), b = random_field(d, 12);
        for (double delta : {0.13, 0.5, 1.7}) {
            const auto l1 = apply_L(a.translated(delta), p);
            const auto l2 = apply_L(a, p).translated(delta);
            CHECK(norm_H(l1 - l2) <= 1e-10 * norm_H(l2));
            const auto g1 = apply_G(a.translated(delta), b.translated(delta));
            const auto g2 = apply_G(a, b).translated(delta);
            CHECK(norm_H(g1 - g2) <= 1e-10 * norm_H(g2));
        }
        CHECK(norm_H(a.translated(d->period()) - a) <= 1e-12 * norm_H(a));
    }
}

TEST_CASE("projected advection carries no net horizontal momentum") {
    for (const auto& d : all_discs()) {
        const auto a = random_field(d, 21);
        const auto g = apply_G(a, a);
        CHECK(std::abs(mean_flow(g)) <= 1e-10 * inner_H(a, a));
    }
}

TEST_CASE("B3 fields have zero mean flow by construction") {
    auto d = Discretization::make(2.8, 3, 8, BoundaryCondition::free_free(SpaceTag::B3));
    const auto a = random_field(d, 9);
    CHECK(std::abs(mean_flow(a)) < 1e-14);
    CHECK(std::abs(mean_flow(apply_G(a, a))) < 1e-14);
    auto d2 = Discretization::make(2.8, 3, 8, BoundaryCondition::free_free(SpaceTag::B2));
    CHECK(std::abs(mean_flow(random_field(d2, 9))) > 1e-6);
}

TEST_CASE("mismatched discretizations are rejected") {
    auto d1 = Discretization::make(2.0, 3, 8, BoundaryCondition::from_tag(BcTag::RigidRigid));
    auto d2 = Discretization::make(2.0, 4, 8, BoundaryCondition::from_tag(BcTag::RigidRigid));
    CHECK_THROWS_AS(apply_G(random_field(d1, 1), random_field(d2, 1)), DiscretizationError);
    CHECK_THROWS_AS(SpectralField(d1, Eigen::MatrixXd::Zero(3, 3)), DiscretizationError);
}

TEST_CASE("leray projection") {
    for (const auto& d : all_discs(3, 12)) {
        const double L = d->period();
        const double a = 2 * kPi / L;
        // Gradient of sin(a x) sin(pi z): projects to zero.
        const auto grad = sample_vector_field(L, 24, 40, [&](double x, double z) {
            return std::array<double, 2>{a * std::cos(a * x) * std::sin(kPi * z),
                                         kPi * std::sin(a * x) * std::cos(kPi * z)};
        });
        CHECK(norm_H(leray_project(grad, d)) < 1e-12);

        // Idempotence on discrete divergence-free fields.
        const auto f = random_field(d, 31, 1.0, 0.5);
        Eigen::MatrixXd vc = f.coeffs();
        vc.col(0).setZero();
        vc.rightCols(vc.cols() - 2).bottomRows(vc.rows() - d->vertical_size()).setZero();
        const SpectralField v(d, vc);
        const auto sampled = sample_vector_field(L, 24, 60, [&](double x, double z) {
            const auto j = v.evaluate(x, z);
            return std::array<double, 2>{j.u[0], j.u[1]};
        });
        CHECK(norm_H(leray_project(sampled, d) - v) <= 1e-12 * norm_H(v));

        // Non-periodic input is rejected.
        auto bad = sampled;
        bad.u1(5, bad.u1.cols() - 1) += 1.0;
        CHECK_THROWS_AS(leray_project(bad, d), std::invalid_argument);
    }
}

TEST_CASE("snapshot round trip") {
    for (const auto& d : all_discs()) {
        Snapshot s{random_field(d, 77), 1700.0, 10.0, 3.25, {{"note", "hello"}}};
        std::stringstream ss;
        write_snapshot(ss, s);
        const auto r = read_snapshot(ss);
        CHECK(r.field.disc().same_as(*d));
        CHECK((r.field.coeffs() - s.field.coeffs()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(r.R == 1700.0);
        CHECK(r.time == 3.25);
        CHECK(r.extra.at("note") == "hello");
    }
    std::stringstream bad("NOTASNAP 1\n");
    CHECK_THROWS(read_snapshot(bad));
}

TEST_CASE("leray projection agrees with a per-mode Neumann solve") {
    // v = (sin(a_k x) z, 0) for k = 1, 2. Per mode, p = cos(a x) P(z) with
    // P'' - a^2 P = a z and P'(0) = P'(1) = 0 solved in closed form; the
    // divergence-free part is (sin(a x)(z + a P), -cos(a x) P').
    for (const auto& d : all_discs(3, 14)) {
        const double L = d->period();
        auto mode_P = [](double a, double z) {
            const double A = (1.0 - std::cosh(a)) / (a * a * std::sinh(a));
            const double B = 1.0 / (a * a);
            return std::array<double, 2>{-z / a + A * std::cosh(a * z) + B * std::sinh(a * z),
                                         -1.0 / a + a * A * std::sinh(a * z) + a * B * std::cosh(a * z)};
        };
        auto v = sample_vector_field(L, 30, 80, [&](double x, double z) {
            double u = 0.0;
            for (int k : {1, 2}) u += std::sin(2 * kPi * k * x / L) * z;
            return std::array<double, 2>{u, 0.0};
        });
        auto pv = sample_vector_field(L, 30, 80, [&](double x, double z) {
            std::array<double, 2> r{0.0, 0.0};
            for (int k : {1, 2}) {
                const double a = 2 * kPi * k / L;
                const auto P = mode_P(a, z);
                r[0] += std::sin(a * x) * (z + a * P[0]);
                r[1] -= std::cos(a * x) * P[1];
            }
            return r;
        });
        const auto p1 = leray_project(v, d);
        const auto p2 = leray_project(pv, d);
        CHECK(norm_H(p1) > 0.01);
        CHECK(norm_H(p1 - p2) <= 1e-10 * norm_H(p1));
        CHECK(max_divergence(p1) <= 1e-10 * norm_H(p1) * 100);
        // Idempotence and self-adjointness of the projection.
        CHECK(norm_H(leray_project(sample_vector_field(L, 30, 80, [&](double x, double z) {
                          const auto j = p1.evaluate(x, z);
                          return std::array<double, 2>{j.u[0], j.u[1]};
                      }), d) - p1) <= 1e-12 * norm_H(p1));
    }
}
