#include "rbc/stability/neutral.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <unsupported/Eigen/NonLinearOptimization>

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rbc::stability {

namespace {

constexpr double kPi = std::numbers::pi;

double initial_guess(double a, const BoundaryCondition& bc) {
    const double ff = std::pow(kPi * kPi + a * a, 3) / (a * a);
    switch (bc.tag) {
        case spectral::BcTag::FreeFree: return ff;
        case spectral::BcTag::FreeRigid: return 1.7 * ff;
        case spectral::BcTag::RigidRigid: return 2.6 * ff;
    }
    return ff;
}

}  // namespace

double leading_growth_rate(const VerticalOperators& ops, double a, double R) {
    return vertical_eigensolve(ops, a, R, 1, Family::Roll, 1).front().beta;
}

double neutral_rayleigh(const VerticalOperators& ops, double a, double rel_tol) {
    if (!(a > 0.0)) throw std::invalid_argument("neutral Rayleigh number needs a > 0");
    auto f = [&](double R) { return leading_growth_rate(ops, a, R); };
    const double guess = initial_guess(a, ops.bc());
    double lo = 0.8 * guess, hi = 1.25 * guess;
    double flo = f(lo), fhi = f(hi);
    const double lo_limit = 1e-6 * guess, hi_limit = 1e6 * guess;
    while (flo > 0.0 && lo > lo_limit) {
        hi = lo;
        fhi = flo;
        lo *= 0.5;
        flo = f(lo);
    }
    while (fhi < 0.0 && hi < hi_limit) {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = f(hi);
    }
    if (!(flo <= 0.0 && fhi >= 0.0)) {
        std::ostringstream os;
        os << "beta_1 does not change sign for R in [" << lo << ", " << hi << "] at a = " << a;
        throw std::runtime_error(os.str());
    }
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    auto tol = [rel_tol](double x, double y) { return std::abs(x - y) <= rel_tol * std::abs(y); };
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
    return 0.5 * (r.first + r.second);
}

double neutral_rayleigh(double a, const BoundaryCondition& bc, int resolution, double rel_tol) {
    const VerticalOperators ops(bc, resolution);
    return neutral_rayleigh(ops, a, rel_tol);
}

NeutralPoint critical_rayleigh(const BoundaryCondition& bc, int resolution, const CriticalScan& scan) {
    if (scan.points < 3 || !(scan.L_min > 0.0) || !(scan.L_max > scan.L_min))
        throw std::invalid_argument("critical scan needs L_max > L_min > 0 and at least 3 points");
    const VerticalOperators ops(bc, resolution);
    auto R1 = [&](double L) { return neutral_rayleigh(ops, 2.0 * kPi / L, 1e-13); };

    NeutralPoint out;
    out.scan.reserve(scan.points);
    for (int i = 0; i < scan.points; ++i) {
        const double L = scan.L_min + (scan.L_max - scan.L_min) * i / (scan.points - 1);
        out.scan.push_back({L, 2.0 * kPi / L, R1(L)});
    }
    std::size_t best = 0;
    int interior_minima = 0;
    for (std::size_t i = 0; i < out.scan.size(); ++i) {
        if (out.scan[i].R < out.scan[best].R) best = i;
        if (i > 0 && i + 1 < out.scan.size() && out.scan[i].R <= out.scan[i - 1].R &&
            out.scan[i].R <= out.scan[i + 1].R)
            ++interior_minima;
    }
    out.unimodal = interior_minima == 1 && best > 0 && best + 1 < out.scan.size();

    const std::size_t il = best == 0 ? 0 : best - 1;
    const std::size_t ir = std::min(best + 1, out.scan.size() - 1);
    std::uintmax_t iters = 200;
    const auto m = boost::math::tools::brent_find_minima(R1, out.scan[il].L, out.scan[ir].L,
                                                         std::numeric_limits<double>::digits / 2, iters);
    out.L_c = m.first;
    out.R_c = m.second;
    out.a_c = 2.0 * kPi / out.L_c;
    out.certified = out.scan[il].R >= out.R_c && out.scan[ir].R >= out.R_c;
    return out;
}

double growth_rate_beta1(double R, const BoundaryCondition& bc, double L, int resolution) {
    const VerticalOperators ops(bc, resolution);
    return leading_growth_rate(ops, 2.0 * kPi / L, R);
}

namespace {

struct TemplateFunctor {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    Eigen::VectorXd s, y;

    int inputs() const { return 6; }
    int values() const { return static_cast<int>(s.size()); }

    static double model(const Eigen::VectorXd& p, double t) {
        return p(0) * (std::cos(p(1) * t) - p(4) * std::cosh(p(2) * t) * std::cos(p(3) * t) +
                       p(5) * std::sinh(p(2) * t) * std::sin(p(3) * t));
    }

    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
        for (Eigen::Index i = 0; i < s.size(); ++i) f(i) = model(p, s(i)) - y(i);
        return 0;
    }

    int df(const Eigen::VectorXd& p, Eigen::MatrixXd& J) const {
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            const double t = s(i);
            const double c0 = std::cos(p(1) * t), s0 = std::sin(p(1) * t);
            const double ch = std::cosh(p(2) * t), sh = std::sinh(p(2) * t);
            const double c2 = std::cos(p(3) * t), s2 = std::sin(p(3) * t);
            const double inner = c0 - p(4) * ch * c2 + p(5) * sh * s2;
            J(i, 0) = inner;
            J(i, 1) = -p(0) * t * s0;
            J(i, 2) = p(0) * t * (-p(4) * sh * c2 + p(5) * ch * s2);
            J(i, 3) = p(0) * t * (p(4) * ch * s2 + p(5) * sh * c2);
            J(i, 4) = -p(0) * ch * c2;
            J(i, 5) = p(0) * sh * s2;
        }
        return 0;
    }
};

}  // namespace

TemplateFit fit_eigenfunction_template(const VerticalOperators& ops, double a, double R) {
    const auto pairs = vertical_eigensolve(ops, a, R, 1, Family::Roll, 1);
    const int m = 201;
    const Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(m, 0.0, 1.0);
    const Eigen::MatrixXd prof = profile(ops, pairs.front(), z);
    const double hmid = prof(m / 2, 0);
    if (hmid == 0.0) throw std::runtime_error("template fit: profile vanishes at mid-depth");

    TemplateFunctor fn;
    fn.s = z.array() - 0.5;
    fn.y = prof.col(0) / hmid;
    Eigen::VectorXd p(6);
    p << 1.0, kPi, 4.5, 2.5, 0.0, 0.0;
    Eigen::LevenbergMarquardt<TemplateFunctor> lm(fn);
    lm.parameters.xtol = 1e-14;
    lm.parameters.ftol = 1e-14;
    lm.parameters.maxfev = 20000;
    const auto status = lm.minimize(p);

    Eigen::VectorXd res(m);
    fn(p, res);
    TemplateFit out;
    out.scale = p(0) * hmid;
    out.alpha0 = std::abs(p(1));
    out.alpha1 = std::abs(p(2));
    out.alpha2 = std::abs(p(3));
    // The template is even in each alpha up to the sign of the sinh sin term.
    out.A1 = p(4);
    out.A2 = p(5) * (p(2) < 0.0 ? -1.0 : 1.0) * (p(3) < 0.0 ? -1.0 : 1.0);
    out.rms_residual = std::sqrt(res.squaredNorm() / m) / fn.y.cwiseAbs().maxCoeff();
    out.status = static_cast<int>(status);
    return out;
}

void write_neutral_curve_csv(std::ostream& os, const std::vector<NeutralSample>& samples) {
    os << "L,a,R_neutral\n" << std::setprecision(12);
    for (const auto& s : samples) os << s.L << ',' << s.a << ',' << s.R << '\n';
}

void write_eigenvalues_csv(std::ostream& os, const std::vector<EigenPair>& pairs) {
    os << "k,j,family,a,beta\n" << std::setprecision(12);
    for (const auto& e : pairs) {
        const char* fam = e.family == Family::Roll ? "roll" : e.family == Family::Temperature ? "temperature" : "shear";
        os << e.k << ',' << e.j << ',' << fam << ',' << e.a << ',' << e.beta << '\n';
    }
}

void write_profile_csv(std::ostream& os, const VerticalOperators& ops, const EigenPair& e, int points) {
    const Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(points, 0.0, 1.0);
    const Eigen::MatrixXd p = profile(ops, e, z);
    os << "x2,h,dh,theta\n" << std::setprecision(12);
    for (int i = 0; i < points; ++i) os << z(i) << ',' << p(i, 0) << ',' << p(i, 1) << ',' << p(i, 3) << '\n';
}

}  // namespace rbc::stability
