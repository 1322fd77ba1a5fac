#pragma once

#include "rbc/stability/eigen.hpp"

#include <iosfwd>
#include <vector>

namespace rbc::stability {

/// Leading roll eigenvalue beta_1 at wavenumber a.
double leading_growth_rate(const VerticalOperators& ops, double a, double R);

/// R with beta_1(a, R) = 0. The bracket starts near the free-free neutral value
/// and doubles outward until beta_1 changes sign. Throws std::runtime_error
/// naming the searched interval when no sign change is found.
double neutral_rayleigh(const VerticalOperators& ops, double a, double rel_tol = 1e-12);
double neutral_rayleigh(double a, const BoundaryCondition& bc, int resolution = 32, double rel_tol = 1e-12);

struct NeutralSample {
    double L = 0.0;
    double a = 0.0;
    double R = 0.0;
};

struct CriticalScan {
    double L_min = 0.5;
    double L_max = 10.0;
    int points = 64;
};

struct NeutralPoint {
    double R_c = 0.0;
    double L_c = 0.0;
    double a_c = 0.0;
    bool unimodal = true;      // scan had a single interior minimum
    bool certified = false;    // R_1(L_c +- delta) >= R_c on the scan neighbours
    std::vector<NeutralSample> scan;
};

/// Minimizes the k = 1 neutral curve R_1(L) over L: coarse scan followed by a
/// Brent refinement in the bracketing scan cell.
NeutralPoint critical_rayleigh(const BoundaryCondition& bc, int resolution = 32, const CriticalScan& scan = {});

/// beta_11(R) at horizontal period L.
double growth_rate_beta1(double R, const BoundaryCondition& bc, double L, int resolution = 32);

/// Fit of h(z) ~ c [cos(alpha0 s) - A1 cosh(alpha1 s) cos(alpha2 s) + A2 sinh(alpha1 s) sin(alpha2 s)],
/// s = z - 1/2, to the leading roll profile.
struct TemplateFit {
    double scale = 0.0;
    double alpha0 = 0.0;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double A1 = 0.0;
    double A2 = 0.0;
    double rms_residual = 0.0;  // relative to max |h|
    int status = 0;             // LevenbergMarquardt return code
};

TemplateFit fit_eigenfunction_template(const VerticalOperators& ops, double a, double R);

void write_neutral_curve_csv(std::ostream& os, const std::vector<NeutralSample>& samples);
void write_eigenvalues_csv(std::ostream& os, const std::vector<EigenPair>& pairs);
void write_profile_csv(std::ostream& os, const VerticalOperators& ops, const EigenPair& e, int points = 101);

}  // namespace rbc::stability
