#include "rbc/reduction/center_manifold.hpp"

#include "rbc/spectral/operators.hpp"
#include "rbc/stability/neutral.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace rbc::reduction {

using spectral::Discretization;
using spectral::nonlinear_load;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kIdentityTol = 1e-8;

double project(const Eigen::MatrixXd& load, const SpectralField& e) {
    return (load.array() * e.coeffs().array()).sum();
}

double critical_period(const BoundaryCondition& bc) { return stability::critical_rayleigh(bc).L_c; }

void require_stable(const std::vector<double>& betas, int J, const char* name) {
    for (int j = 0; j < J; ++j)
        if (!(betas.at(j) < 0.0)) {
            std::ostringstream os;
            os << "stable-mode eigenvalue " << name << "[" << j + 1 << "] = " << betas[j]
               << " is not negative; the center-stable splitting does not hold";
            throw ReductionRefused(os.str());
        }
}

int effective_J(const InteractionTable& t, int J) {
    if (J <= 0) return t.J;
    if (J > t.J) throw std::invalid_argument("requested truncation exceeds the interaction table");
    return J;
}

}  // namespace

double IdentityResiduals::max() const {
    return std::max({off_harmonic, parity, second_harmonic, mean_equal, harmonic_opposite, mixed_mean,
                     mixed_harmonic});
}

namespace {

spectral::DiscretizationPtr context_disc(const BoundaryCondition& bc, int J_table, const TableOptions& opt) {
    if (J_table < 1) throw std::invalid_argument("table truncation must be positive");
    if (opt.K < 2) throw std::invalid_argument("the interaction table needs wavenumbers up to k = 2");
    const double L = opt.L > 0.0 ? opt.L : critical_period(bc);
    const int N = opt.N > 0 ? opt.N : J_table + 8;
    if (N < J_table) throw std::invalid_argument("vertical size must be at least the table truncation");
    return Discretization::make(L, opt.K, N, bc);
}

}  // namespace

ModalContext::ModalContext(double R, const BoundaryCondition& bc, int J_table, const TableOptions& opt)
    : disc_(context_disc(bc, J_table, opt)),
      basis_(std::make_shared<stability::EigenBasis>(disc_, R)),
      J_(J_table),
      psi_(basis_->mode(1, 1, Parity::Cos)),
      psi_t_(basis_->mode(1, 1, Parity::Sin)) {
    loads_[0] = nonlinear_load(psi_, psi_);
    loads_[1] = nonlinear_load(psi_t_, psi_t_);
    loads_[2] = nonlinear_load(psi_, psi_t_);
    loads_[3] = nonlinear_load(psi_t_, psi_);
}

IdentityResiduals identity_residuals(const ModalContext& ctx, int J) {
    const auto& b = ctx.basis();
    const auto& [lcc, lss, lcs, lsc] = ctx.loads();
    const auto& p = ctx.psi11();
    const auto& pt = ctx.psi11_tilde();
    const int K = ctx.disc()->max_wavenumber();
    IdentityResiduals r;
    auto upd = [](double& slot, double v) { slot = std::max(slot, std::abs(v)); };

    for (int k = 0; k <= K; ++k) {
        for (int j = 1; j <= J; ++j) {
            const auto ec = b.mode(k, j, Parity::Cos);
            const auto es = b.mode(k, j, Parity::Sin);
            // parity family: any k
            upd(r.parity, project(lcc, es));
            upd(r.parity, project(lss, es));
            upd(r.parity, spectral::trilinear(ec, pt, p));
            upd(r.parity, spectral::trilinear(ec, p, pt));
            if (k != 0 && k != 2) {
                upd(r.off_harmonic, project(lcc, ec));
                upd(r.off_harmonic, project(lss, ec));
                upd(r.off_harmonic, spectral::trilinear(es, pt, p));
                upd(r.off_harmonic, spectral::trilinear(es, p, pt));
            }
            if (k == 2) {
                const double a = spectral::trilinear(es, p, pt);
                const double c = spectral::trilinear(es, pt, p);
                upd(r.second_harmonic, a);
                upd(r.second_harmonic, c);
                const double c2 = project(lcc, ec);
                upd(r.harmonic_opposite, c2 + project(lss, ec));
                upd(r.mixed_harmonic, project(lcs, es) - c2);
                upd(r.mixed_harmonic, project(lsc, es) - c2);
            }
            if (k == 0) {
                upd(r.mean_equal, project(lcc, ec) - project(lss, ec));
                upd(r.mixed_mean, project(lcs, es) + project(lsc, es));
            }
        }
    }
    return r;
}

InteractionTable interaction_table(const ModalContext& ctx, int J) {
    if (J < 1 || J > ctx.J_table()) throw std::invalid_argument("table truncation outside the modal context");
    const auto& b = ctx.basis();
    const auto& [lcc, lss, lcs, lsc] = ctx.loads();
    InteractionTable t;
    t.bc = ctx.disc()->bc();
    t.R = b.R();
    t.L = ctx.disc()->period();
    t.J = J;
    t.beta1 = b.beta(1, 1, Parity::Cos);
    for (int j = 1; j <= J; ++j) {
        const auto e0 = b.mode(0, j, Parity::Cos);
        const auto e0t = b.mode(0, j, Parity::Sin);
        const auto e2 = b.mode(2, j, Parity::Cos);
        const auto e2t = b.mode(2, j, Parity::Sin);
        t.beta0.push_back(b.beta(0, j, Parity::Cos));
        t.beta0_shear.push_back(b.beta(0, j, Parity::Sin));
        t.beta2.push_back(b.beta(2, j, Parity::Cos));
        t.c0.push_back(project(lcc, e0));
        t.c2.push_back(project(lcc, e2));
        t.c0_tilde.push_back(project(lss, e0));
        t.c2_tilde.push_back(project(lss, e2));
        t.mixed0.push_back(project(lcs, e0t) + project(lsc, e0t));
        t.mixed2_cs.push_back(project(lcs, e2t));
        t.mixed2_sc.push_back(project(lsc, e2t));
    }
    t.residuals = identity_residuals(ctx, J);
    if (t.residuals.max() > kIdentityTol) {
        std::ostringstream os;
        os << "interaction identity residual " << t.residuals.max() << " exceeds " << kIdentityTol
           << " (quadrature or basis defect)";
        throw IdentityFailure(os.str());
    }
    return t;
}

InteractionTable interaction_table(double R, const BoundaryCondition& bc, int J, const TableOptions& opt) {
    const ModalContext ctx(R, bc, J, opt);
    return interaction_table(ctx, J);
}

CmCoefficients cm_function(double x, double y, const InteractionTable& t, int J) {
    J = effective_J(t, J);
    require_stable(t.beta0, J, "beta_0j");
    require_stable(t.beta0_shear, J, "beta~_0j");
    require_stable(t.beta2, J, "beta_2j");
    CmCoefficients c;
    for (int j = 0; j < J; ++j) {
        c.phi0.push_back(-(t.c0[j] * x * x + t.c0_tilde[j] * y * y) / t.beta0[j]);
        c.phi2.push_back(-(t.c2[j] * x * x + t.c2_tilde[j] * y * y) / t.beta2[j]);
        c.phi0_tilde.push_back(-t.mixed0[j] * x * y / t.beta0_shear[j]);
        c.phi2_tilde.push_back(-(t.mixed2_cs[j] + t.mixed2_sc[j]) * x * y / t.beta2[j]);
    }
    return c;
}

SpectralField cm_field(const ModalContext& ctx, const CmCoefficients& phi) {
    const auto& b = ctx.basis();
    SpectralField out(ctx.disc());
    for (std::size_t i = 0; i < phi.phi0.size(); ++i) {
        const int j = static_cast<int>(i) + 1;
        out += phi.phi0[i] * b.mode(0, j, Parity::Cos);
        out += phi.phi0_tilde[i] * b.mode(0, j, Parity::Sin);
        out += phi.phi2[i] * b.mode(2, j, Parity::Cos);
        out += phi.phi2_tilde[i] * b.mode(2, j, Parity::Sin);
    }
    return out;
}

double alpha(const InteractionTable& t, int J) {
    J = effective_J(t, J);
    require_stable(t.beta0, J, "beta_0j");
    require_stable(t.beta2, J, "beta_2j");
    double s = 0.0;
    for (int j = 0; j < J; ++j) s += t.c0[j] * t.c0[j] / t.beta0[j] + t.c2[j] * t.c2[j] / t.beta2[j];
    return -s;
}

AlphaConvergence alpha_convergence(const InteractionTable& t, int J) {
    if (J < 1 || 2 * J > t.J) throw std::invalid_argument("alpha convergence needs a table with at least 2J rows");
    AlphaConvergence c;
    c.J = J;
    for (int j = 1; j <= 2 * J; ++j) c.partial.push_back(alpha(t, j));
    c.alpha_J = c.partial[J - 1];
    c.alpha_2J = c.partial[2 * J - 1];
    c.rel_change = std::abs(c.alpha_2J - c.alpha_J) / std::abs(c.alpha_J);
    c.converged = c.rel_change <= 1e-2;
    c.suggested_J = J;
    if (!c.converged) {
        int first = 2 * J;
        for (int j = 1; j <= 2 * J; ++j)
            if (std::abs(c.partial[j - 1] - c.alpha_2J) <= 1e-3 * std::abs(c.alpha_2J)) {
                first = j;
                break;
            }
        c.suggested_J = 2 * first;
        std::ostringstream os;
        os << "alpha truncation not converged: |alpha(" << 2 * J << ") - alpha(" << J
           << ")| / |alpha| = " << c.rel_change << "; retry with J >= " << c.suggested_J;
        c.warning = os.str();
    }
    return c;
}

ReducedModel build_reduced_model(double R, const BoundaryCondition& bc, const ModelOptions& opt) {
    if (opt.J < 1) throw std::invalid_argument("truncation J must be positive");
    ReducedModel m;
    m.R = R;
    m.J = opt.J;
    m.L = opt.L > 0.0 ? opt.L : critical_period(bc);
    const double a = 2.0 * kPi / m.L;
    const int N = opt.N > 0 ? opt.N : 2 * opt.J + 8;
    m.R_alpha = opt.alpha_at_R ? R : stability::neutral_rayleigh(a, bc, N);

    TableOptions topt;
    topt.L = m.L;
    topt.N = N;
    const ModalContext ctx(m.R_alpha, bc, 2 * opt.J, topt);
    m.table = interaction_table(ctx, 2 * opt.J);
    m.convergence = alpha_convergence(m.table, opt.J);
    m.alpha = m.convergence.alpha_J;
    m.beta_0j.assign(m.table.beta0.begin(), m.table.beta0.begin() + opt.J);
    m.beta_2j.assign(m.table.beta2.begin(), m.table.beta2.begin() + opt.J);
    const stability::VerticalOperators ops(bc, N);
    m.beta1 = stability::leading_growth_rate(ops, a, R);

    for (int i = 0; i < 8; ++i) {
        const double th = 2.0 * kPi * i / 8;
        const auto moved = ctx.psi11().translated(th / a);
        const auto rot = std::cos(th) * ctx.psi11() + std::sin(th) * ctx.psi11_tilde();
        m.translation_witness = std::max(m.translation_witness, spectral::norm_H(moved - rot));
    }
    return m;
}

std::array<double, 2> reduced_rhs(const std::array<double, 2>& s, const ReducedModel& m) {
    const double r2 = s[0] * s[0] + s[1] * s[1];
    return {m.beta1 * s[0] - m.alpha * s[0] * r2, m.beta1 * s[1] - m.alpha * s[1] * r2};
}

Eigen::Matrix2d reduced_jacobian(const std::array<double, 2>& s, const ReducedModel& m) {
    const double x = s[0], y = s[1];
    Eigen::Matrix2d J;
    J << m.beta1 - m.alpha * (3 * x * x + y * y), -2 * m.alpha * x * y, -2 * m.alpha * x * y,
        m.beta1 - m.alpha * (x * x + 3 * y * y);
    return J;
}

std::array<double, 2> quadratic_feedback_rhs(const ModalContext& ctx, const InteractionTable& t, double x, double y,
                                             int J) {
    const auto phi = cm_field(ctx, cm_function(x, y, t, J));
    const SpectralField u = x * ctx.psi11() + y * ctx.psi11_tilde();
    const auto q = spectral::nonlinear_load(u, u);
    const auto c = spectral::nonlinear_load(u, phi) + spectral::nonlinear_load(phi, u);
    const Eigen::MatrixXd load = q + c;
    return {t.beta1 * x + project(load, ctx.psi11()), t.beta1 * y + project(load, ctx.psi11_tilde())};
}

double equilibrium_amplitude(const ReducedModel& m) {
    if (!(m.alpha > 0.0)) {
        std::ostringstream os;
        os << "alpha = " << m.alpha << " <= 0: subcritical onset, no small-amplitude equilibrium";
        throw ReductionRefused(os.str());
    }
    return std::sqrt(std::max(m.beta1, 0.0) / m.alpha);
}

BifurcationVerdict bifurcation_classify(const std::vector<ReducedModel>& sweep) {
    BifurcationVerdict v;
    if (sweep.empty()) {
        v.verdict = "inconclusive";
        v.reasons.push_back("empty sweep");
        return v;
    }
    std::vector<const ReducedModel*> s;
    for (const auto& m : sweep) s.push_back(&m);
    std::sort(s.begin(), s.end(), [](auto* a, auto* b) { return a->R < b->R; });

    int changes = 0;
    bool ordered = true;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double b0 = s[i - 1]->beta1, b1 = s[i]->beta1;
        if (b1 < b0) ordered = false;
        if (b0 <= 0.0 && b1 > 0.0) {
            ++changes;
            v.R_cross = b1 == b0 ? s[i]->R : s[i - 1]->R - b0 * (s[i]->R - s[i - 1]->R) / (b1 - b0);
        } else if (b0 > 0.0 && b1 <= 0.0) {
            ++changes;
        }
    }
    const bool sign_change = changes == 1 && ordered && s.front()->beta1 < 0.0 && s.back()->beta1 > 0.0;
    std::ostringstream r1;
    r1 << "beta1 from " << s.front()->beta1 << " at R = " << s.front()->R << " to " << s.back()->beta1
       << " at R = " << s.back()->R << (sign_change ? ": single sign change" : ": no clean sign change");
    v.reasons.push_back(r1.str());

    v.C1 = std::numeric_limits<double>::infinity();
    v.alpha = s.front()->alpha;
    for (const auto* m : s) {
        for (int i = 0; i < 64; ++i) {
            const double th = 2.0 * kPi * i / 64;
            const std::array<double, 2> x{std::cos(th), std::sin(th)};
            const auto f = reduced_rhs(x, *m);
            const double g0 = m->beta1 * x[0] - f[0], g1 = m->beta1 * x[1] - f[1];
            v.C1 = std::min(v.C1, g0 * x[0] + g1 * x[1]);
        }
        v.alpha = std::min(v.alpha, m->alpha);
        v.translation_witness = std::max(v.translation_witness, m->translation_witness);
    }
    const bool cubic = v.C1 > 0.0;
    std::ostringstream r2;
    r2 << "cubic term (g(x), x) >= " << v.C1 << " |x|^4" << (cubic ? "" : ": lower bound not positive");
    v.reasons.push_back(r2.str());
    std::ostringstream r3;
    r3 << "translation witness: psi11 shifted by theta/a equals the rotated critical pair to "
       << v.translation_witness;
    v.reasons.push_back(r3.str());

    v.s1 = sign_change && cubic;
    v.verdict = v.s1 ? "S1 attractor bifurcation: circle of steady states" : "inconclusive";
    return v;
}

void write_interaction_table_csv(std::ostream& os, const InteractionTable& t) {
    os << "j,beta0,beta0_shear,beta2,c0,c0_tilde,c2,c2_tilde,mixed0,mixed2_cs,mixed2_sc\n" << std::setprecision(15);
    for (int j = 0; j < t.J; ++j)
        os << j + 1 << ',' << t.beta0[j] << ',' << t.beta0_shear[j] << ',' << t.beta2[j] << ',' << t.c0[j] << ','
           << t.c0_tilde[j] << ',' << t.c2[j] << ',' << t.c2_tilde[j] << ',' << t.mixed0[j] << ','
           << t.mixed2_cs[j] << ',' << t.mixed2_sc[j] << '\n';
}

void write_alpha_vs_J_csv(std::ostream& os, const AlphaConvergence& c) {
    os << "J,alpha\n" << std::setprecision(15);
    for (std::size_t j = 0; j < c.partial.size(); ++j) os << j + 1 << ',' << c.partial[j] << '\n';
}

void write_alpha_vs_R_csv(std::ostream& os, const std::vector<ReducedModel>& sweep) {
    os << "R,beta1,alpha,amplitude\n" << std::setprecision(15);
    for (const auto& m : sweep) {
        const double amp = m.alpha > 0.0 ? equilibrium_amplitude(m) : std::nan("");
        os << m.R << ',' << m.beta1 << ',' << m.alpha << ',' << amp << '\n';
    }
}

void write_verdict(std::ostream& os, const BifurcationVerdict& v) {
    os << "verdict: " << v.verdict << '\n' << std::setprecision(12);
    os << "R_cross: " << v.R_cross << '\n';
    os << "C1: " << v.C1 << '\n';
    os << "alpha: " << v.alpha << '\n';
    os << "translation_witness: " << v.translation_witness << '\n';
    for (const auto& r : v.reasons) os << "- " << r << '\n';
}

}  // namespace rbc::reduction
