#include "rbc/dynamics/integrator.hpp"

#include "rbc/spectral/operators.hpp"
#include "rbc/spectral/random.hpp"
#include "rbc/spectral/snapshot.hpp"
#include "rbc/stability/eigen.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace rbc::dynamics {

using spectral::Discretization;
using spectral::Parity;

std::string to_string(Scheme s) { return s == Scheme::IMEX1 ? "imex1" : "sbdf2"; }

Scheme parse_scheme(const std::string& text) {
    if (text == "imex1") return Scheme::IMEX1;
    if (text == "sbdf2") return Scheme::SBDF2;
    throw std::invalid_argument("unknown time scheme '" + text + "' (expected imex1 or sbdf2)");
}

Stepper::Stepper(DiscretizationPtr disc, const PhysParams& phys, const StepOptions& opt)
    : disc_(std::move(disc)), phys_(phys), opt_(opt) {
    if (!(opt_.dt > 0.0) || !std::isfinite(opt_.dt)) throw std::invalid_argument("time step must be positive");
    const auto& d = *disc_;
    const int n = d.vertical_size();
    const double vs = velocity_scale();
    blocks_.resize(d.cols());
    for (int k = 0; k <= d.max_wavenumber(); ++k) {
        for (Parity p : {Parity::Cos, Parity::Sin}) {
            auto& list = blocks_[Discretization::column(k, p)];
            auto add = [&](int offset, int rows, const Eigen::MatrixXd& M, const Eigen::MatrixXd& S) {
                Block b;
                b.rows = rows;
                b.offset = offset;
                b.M = M;
                b.imex1.compute(M + opt_.dt * S);
                b.sbdf2.compute(1.5 * M + opt_.dt * S);
                list.push_back(std::move(b));
            };
            if (d.velocity_active(k, p)) {
                const Eigen::MatrixXd& S = k == 0 ? d.shear_stiffness() : d.stream_stiffness(k);
                add(0, d.velocity_size(k, p), d.velocity_mass(k, p), vs * S);
            }
            if (d.temperature_active(k, p)) add(n, n, d.temperature_mass(), d.temperature_stiffness(k));
        }
    }
}

void Stepper::reset() {
    have_history_ = false;
    steps_ = 0;
}

Eigen::MatrixXd Stepper::explicit_load(const SpectralField& psi) const {
    const auto& d = *disc_;
    const int n = d.vertical_size();
    const double lam = phys_.lambda();
    const double vs = velocity_scale();
    const auto& c = psi.coeffs();
    Eigen::MatrixXd E = opt_.nonlinear ? spectral::nonlinear_load(psi, psi) : Eigen::MatrixXd::Zero(d.rows(), d.cols());
    for (int k = 1; k <= d.max_wavenumber(); ++k) {
        const double f = d.h_factor(k) * lam * d.wavenumber(k);
        for (Parity p : {Parity::Cos, Parity::Sin}) {
            const auto col = Discretization::column(k, p);
            E.col(col).head(n) += f * vs * (d.coupling() * c.col(col).segment(n, n));
            E.col(col).segment(n, n) += f * (d.coupling().transpose() * c.col(col).head(n));
        }
    }
    // loads are H-weighted; the block solves work in vertical coordinates
    for (int k = 0; k <= d.max_wavenumber(); ++k) {
        E.col(Discretization::column(k, Parity::Cos)) /= d.h_factor(k);
        E.col(Discretization::column(k, Parity::Sin)) /= d.h_factor(k);
    }
    return E;
}

SpectralField Stepper::imex1(const SpectralField& psi, const Eigen::MatrixXd& E) const {
    const auto& c = psi.coeffs();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(c.rows(), c.cols());
    for (Eigen::Index col = 0; col < c.cols(); ++col)
        for (const auto& b : blocks_[col]) {
            const auto x = c.col(col).segment(b.offset, b.rows);
            out.col(col).segment(b.offset, b.rows) =
                b.imex1.solve(b.M * x + opt_.dt * E.col(col).segment(b.offset, b.rows));
        }
    return {disc_, std::move(out)};
}

SpectralField Stepper::sbdf2(const SpectralField& psi, const Eigen::MatrixXd& E) const {
    const auto& c = psi.coeffs();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(c.rows(), c.cols());
    for (Eigen::Index col = 0; col < c.cols(); ++col)
        for (const auto& b : blocks_[col]) {
            const auto x = c.col(col).segment(b.offset, b.rows);
            const auto xp = prev_c_.col(col).segment(b.offset, b.rows);
            const auto e = E.col(col).segment(b.offset, b.rows);
            const auto ep = prev_E_.col(col).segment(b.offset, b.rows);
            out.col(col).segment(b.offset, b.rows) =
                b.sbdf2.solve(b.M * (2.0 * x - 0.5 * xp) + opt_.dt * (2.0 * e - ep));
        }
    return {disc_, std::move(out)};
}

void Stepper::check_finite(const SpectralField& last_good, const SpectralField& next) const {
    if (next.coeffs().allFinite() && next.coeffs().cwiseAbs().maxCoeff() < 1e150) return;
    std::ostringstream os;
    os << "state stopped being finite at step " << steps_ + 1 << " (t = " << (steps_ + 1) * opt_.dt
       << ", dt = " << opt_.dt << ")";
    if (!opt_.dump_path.empty()) {
        try {
            spectral::Snapshot s{last_good, phys_.R, phys_.Pr, steps_ * opt_.dt, {{"reason", "blow-up dump"}}};
            spectral::write_snapshot(std::filesystem::path(opt_.dump_path), s);
            os << "; last finite state written to " << opt_.dump_path;
        } catch (const std::exception& e) {
            os << "; state dump failed: " << e.what();
        }
    }
    throw IntegrationError(os.str());
}

SpectralField Stepper::advance(const SpectralField& psi) {
    if (!psi.disc().same_as(*disc_)) throw spectral::DiscretizationError("field is not on the stepper's grid");
    const Eigen::MatrixXd E = explicit_load(psi);
    SpectralField next = opt_.scheme == Scheme::SBDF2 && have_history_ ? sbdf2(psi, E) : imex1(psi, E);
    check_finite(psi, next);
    if (opt_.scheme == Scheme::SBDF2) {
        prev_c_ = psi.coeffs();
        prev_E_ = E;
        have_history_ = true;
    }
    ++steps_;
    return next;
}

SpectralField Stepper::rhs(const SpectralField& psi) const {
    Eigen::MatrixXd load = spectral::linear_load(psi, phys_.lambda(), velocity_scale());
    if (opt_.nonlinear) load += spectral::nonlinear_load(psi, psi);
    return {disc_, disc_->solve_mass(load)};
}

double Stepper::stability_bound(const SpectralField& psi) const {
    const auto& d = *disc_;
    const auto g = psi.grid_view();
    const double u1 = g.u1.cwiseAbs().maxCoeff();
    const double u2 = g.u2.cwiseAbs().maxCoeff();
    const double adv = u1 * d.wavenumber(d.max_wavenumber()) + u2 * std::numbers::pi * d.vertical_size();
    const double buoy = phys_.lambda() * std::sqrt(velocity_scale());
    double bound = std::numeric_limits<double>::infinity();
    if (buoy > 0.0) bound = std::min(bound, 1.0 / buoy);
    if (opt_.nonlinear && adv > 0.0) bound = std::min(bound, 1.0 / adv);
    return bound;
}

SpectralField step(const SpectralField& psi, double dt, const PhysParams& params, bool nonlinear) {
    StepOptions o;
    o.dt = dt;
    o.nonlinear = nonlinear;
    Stepper s(psi.disc_ptr(), params, o);
    return s.advance(psi);
}

TrajectorySummary evolve(const SpectralField& psi0, const PhysParams& params, double horizon,
                         const EvolveOptions& opt) {
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (!(opt.steady_tol > 0.0)) throw std::invalid_argument("steady tolerance must be positive");
    if (opt.sample_every < 1) throw std::invalid_argument("sample interval must be at least one step");
    const auto& disc = psi0.disc_ptr();
    const auto e = stability::build_eigenvector_2d(disc, 1, 1, Parity::Cos, params.R);
    const auto et = stability::build_eigenvector_2d(disc, 1, 1, Parity::Sin, params.R);

    Stepper st(disc, params, opt.step);
    TrajectorySummary s(psi0);
    s.dt = opt.step.dt;
    s.stability_bound = st.stability_bound(psi0);

    auto sample = [&](double t, const SpectralField& psi) {
        const double x = spectral::inner_H(psi, e), y = spectral::inner_H(psi, et);
        const double r = spectral::norm_H(st.rhs(psi));
        s.times.push_back(t);
        s.norms.push_back(spectral::norm_H(psi));
        s.amplitude.push_back(std::hypot(x, y));
        s.phase.push_back(std::atan2(y, x));
        s.mean_flow.push_back(spectral::mean_flow(psi));
        s.rhs_norm.push_back(r);
        if (opt.observer) opt.observer(t, psi);
        return r;
    };

    const auto total = static_cast<std::int64_t>(std::ceil(horizon / opt.step.dt - 1e-9));
    SpectralField psi = psi0;
    if (sample(0.0, psi) <= opt.steady_tol) {
        s.steady = true;
        return s;
    }
    for (std::int64_t n = 1; n <= total; ++n) {
        psi = st.advance(psi);
        if (n % opt.sample_every == 0 || n == total) {
            if (sample(n * opt.step.dt, psi) <= opt.steady_tol) {
                s.steady = true;
                s.steps = n;
                s.final = psi;
                return s;
            }
        }
    }
    s.steps = total;
    s.final = psi;
    return s;
}

SpectralField random_initial_data(const DiscretizationPtr& disc, std::uint64_t seed, double magnitude) {
    return spectral::random_field(disc, seed, magnitude);
}

MeanFlowProfile mean_flow_profile(const SpectralField& psi, int points) {
    if (points < 2) throw std::invalid_argument("profile needs at least two points");
    MeanFlowProfile p;
    p.z = Eigen::VectorXd::LinSpaced(points, 0.0, 1.0);
    p.q = spectral::mean_velocity_profile(psi, p.z);
    p.M = spectral::mean_flow(psi);
    return p;
}

double decay_rate_fit(const std::vector<double>& t, const std::vector<double>& v) {
    if (t.size() != v.size() || t.size() < 4) throw std::invalid_argument("decay fit needs at least 4 paired samples");
    const std::size_t start = t.size() / 2;
    const bool positive = v[start] > 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = start; i < t.size(); ++i) {
        if (v[i] == 0.0 || (v[i] > 0.0) != positive || !std::isfinite(v[i]))
            throw std::domain_error("series changes sign or vanishes in the fit window");
        const double y = std::log(std::abs(v[i]));
        sx += t[i];
        sy += y;
        sxx += t[i] * t[i];
        sxy += t[i] * y;
    }
    const double n = static_cast<double>(t.size() - start);
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_trajectory_csv(std::ostream& os, const TrajectorySummary& s) {
    os << "t,norm,r,theta,M,rhs\n" << std::setprecision(15);
    for (std::size_t i = 0; i < s.times.size(); ++i)
        os << s.times[i] << ',' << s.norms[i] << ',' << s.amplitude[i] << ',' << s.phase[i] << ',' << s.mean_flow[i]
           << ',' << s.rhs_norm[i] << '\n';
}

}  // namespace rbc::dynamics
