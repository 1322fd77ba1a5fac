#include "rbc/dynamics/sweep.hpp"

#include "rbc/spectral/operators.hpp"
#include "rbc/stability/eigen.hpp"
#include "rbc/stability/neutral.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>

namespace rbc::dynamics {

SweepResult amplitude_sweep(const DiscretizationPtr& disc, const std::vector<double>& ratios, const SweepOptions& opt) {
    if (ratios.empty()) throw std::invalid_argument("sweep needs at least one ratio");
    for (double r : ratios)
        if (!(r > 0.0)) throw std::invalid_argument("sweep ratios must be positive");
    const stability::VerticalOperators ops(disc);
    SweepResult out;
    out.R_c = stability::neutral_rayleigh(ops, disc->wavenumber(1));
    out.points.resize(ratios.size());

    std::vector<std::size_t> order(ratios.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return ratios[a] > ratios[b]; });

    std::optional<SpectralField> prev;
    double prev_beta = 0.0;
    for (std::size_t idx : order) {
        SweepPoint& p = out.points[idx];
        p.ratio = ratios[idx];
        p.R = p.ratio * out.R_c;
        p.beta1 = stability::leading_growth_rate(ops, disc->wavenumber(1), p.R);
        SpectralField psi0 = random_initial_data(disc, opt.seed, opt.magnitude);
        if (opt.continuation && prev && p.beta1 > 0.0 && prev_beta > 0.0)
            psi0 = std::sqrt(p.beta1 / prev_beta) * *prev;
        const auto s = evolve(psi0, PhysParams(p.R), opt.horizon, opt.evolve);
        p.steady = s.steady;
        p.steps = s.steps;
        p.final_norm = spectral::norm_H(s.final);
        p.amplitude = s.amplitude.back();
        if (p.beta1 <= 0.0 && p.final_norm <= opt.zero_tol) p.amplitude = 0.0;
        if (p.beta1 > 0.0 && s.steady) {
            prev = s.final;
            prev_beta = p.beta1;
        }
    }
    return out;
}

PowerFit fit_amplitude_exponent(const SweepResult& s) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& p : s.points) {
        if (!(p.R > s.R_c) || !p.steady || !(p.amplitude > 0.0)) continue;
        const double x = std::log(p.R - s.R_c), y = std::log(p.amplitude);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) throw std::domain_error("exponent fit needs at least two steady supercritical points");
    PowerFit f;
    f.points = n;
    f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

void write_sweep_csv(std::ostream& os, const SweepResult& s) {
    os << "ratio,R,beta1,amplitude,norm,steady,steps\n" << std::setprecision(12);
    for (const auto& p : s.points)
        os << p.ratio << ',' << p.R << ',' << p.beta1 << ',' << p.amplitude << ',' << p.final_norm << ','
           << (p.steady ? 1 : 0) << ',' << p.steps << '\n';
}

}  // namespace rbc::dynamics
