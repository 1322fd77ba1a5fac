#pragma once

#include "rbc/dynamics/integrator.hpp"

#include <iosfwd>
#include <vector>

namespace rbc::dynamics {

struct SweepOptions {
    EvolveOptions evolve;
    double horizon = 5000.0;
    std::uint64_t seed = 1;
    double magnitude = 1e-3;
    /// Start each supercritical run from the previous steady state rescaled by
    /// sqrt(beta1 ratio); runs go from the largest R downwards.
    bool continuation = true;
    double zero_tol = 1e-8;  // subcritical runs ending below this H-norm report amplitude 0
};

struct SweepPoint {
    double ratio = 0.0;  // R / R_c of the discretization
    double R = 0.0;
    double beta1 = 0.0;
    double amplitude = 0.0;
    double final_norm = 0.0;
    bool steady = false;
    std::int64_t steps = 0;
};

struct SweepResult {
    double R_c = 0.0;  // neutral R of the k = 1 mode on the sweep discretization
    std::vector<SweepPoint> points;  // in the order of the requested ratios
};

/// DNS amplitude r = sqrt(x11^2 + y11^2) of the long-time state at each R = ratio R_c.
SweepResult amplitude_sweep(const DiscretizationPtr& disc, const std::vector<double>& ratios,
                            const SweepOptions& opt = {});

struct PowerFit {
    double slope = 0.0;
    double intercept = 0.0;
    int points = 0;
};

/// Least-squares slope of log r against log(R - R_c) over steady supercritical points.
PowerFit fit_amplitude_exponent(const SweepResult& s);

/// Columns ratio,R,beta1,amplitude,norm,steady,steps.
void write_sweep_csv(std::ostream& os, const SweepResult& s);

}  // namespace rbc::dynamics
