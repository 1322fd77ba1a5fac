#pragma once

#include "rbc/spectral/field.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbc::dynamics {

using spectral::DiscretizationPtr;
using spectral::PhysParams;
using spectral::SpectralField;

enum class Scheme { IMEX1, SBDF2 };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& text);

struct StepOptions {
    Scheme scheme = Scheme::IMEX1;
    double dt = 1e-3;
    bool nonlinear = true;
    bool prandtl_form = false;  // velocity linear terms multiplied by Pr
    std::string dump_path;      // where to write the last finite state on blow-up; empty: no dump
};

/// Thrown when the state stops being finite. what() names the step and time and,
/// when a dump path was configured, the snapshot written there.
class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Diffusion implicit, buoyancy coupling and advection explicit, per
/// (wavenumber, parity) block with one Cholesky factorization each.
class Stepper {
public:
    Stepper(DiscretizationPtr disc, const PhysParams& phys, const StepOptions& opt = {});

    [[nodiscard]] const StepOptions& options() const { return opt_; }
    [[nodiscard]] const PhysParams& params() const { return phys_; }
    [[nodiscard]] double velocity_scale() const { return opt_.prandtl_form ? phys_.Pr : 1.0; }

    /// One step. SBDF2 starts with an IMEX1 step and then uses the stored history;
    /// reset() forgets it.
    SpectralField advance(const SpectralField& psi);
    void reset();
    [[nodiscard]] std::int64_t steps_taken() const { return steps_; }
    [[nodiscard]] double time() const { return steps_ * opt_.dt; }

    /// L psi + G(psi, psi) (G omitted when nonlinear is off).
    [[nodiscard]] SpectralField rhs(const SpectralField& psi) const;

    /// Largest dt keeping both explicit parts resolved:
    /// dt * lambda * sqrt(velocity_scale) <= 1 and dt * (max|u1| a_K + max|u2| kz) <= 1,
    /// kz = pi N the largest resolved vertical wavenumber.
    [[nodiscard]] double stability_bound(const SpectralField& psi) const;

private:
    struct Block {
        int rows = 0;
        int offset = 0;
        Eigen::MatrixXd M;
        Eigen::LLT<Eigen::MatrixXd> imex1, sbdf2;
    };

    [[nodiscard]] Eigen::MatrixXd explicit_load(const SpectralField& psi) const;
    [[nodiscard]] SpectralField imex1(const SpectralField& psi, const Eigen::MatrixXd& E) const;
    [[nodiscard]] SpectralField sbdf2(const SpectralField& psi, const Eigen::MatrixXd& E) const;
    void check_finite(const SpectralField& last_good, const SpectralField& next) const;

    DiscretizationPtr disc_;
    PhysParams phys_;
    StepOptions opt_;
    std::vector<std::vector<Block>> blocks_;  // per column: velocity then temperature
    bool have_history_ = false;
    Eigen::MatrixXd prev_c_, prev_E_;
    std::int64_t steps_ = 0;
};

/// Single IMEX1 step with a throwaway stepper.
SpectralField step(const SpectralField& psi, double dt, const PhysParams& params, bool nonlinear = true);

struct TrajectorySummary {
    explicit TrajectorySummary(SpectralField f) : final(std::move(f)) {}

    std::vector<double> times;
    std::vector<double> norms;      // ||psi||_H
    std::vector<double> amplitude;  // sqrt(x11^2 + y11^2)
    std::vector<double> mean_flow;  // M = int int u1
    std::vector<double> phase;      // atan2(y11, x11)
    std::vector<double> rhs_norm;   // ||L psi + G(psi)||_H at the sample
    bool steady = false;
    SpectralField final;
    std::int64_t steps = 0;
    double dt = 0.0;
    double stability_bound = 0.0;  // at the initial state
};

struct EvolveOptions {
    StepOptions step;
    double steady_tol = 1e-9;
    int sample_every = 10;  // steps between recorded samples and steadiness checks
    /// Called at every sample with (t, psi); may be empty.
    std::function<void(double, const SpectralField&)> observer;
};

/// Integrates until ||rhs||_H <= steady_tol or t >= horizon. The critical pair
/// psi11, psi~11 used for x11, y11 is the unit k = 1, j = 1 eigenpair at params.R.
TrajectorySummary evolve(const SpectralField& psi0, const PhysParams& params, double horizon,
                         const EvolveOptions& opt = {});

/// Seeded random initial data with H-norm magnitude.
SpectralField random_initial_data(const DiscretizationPtr& disc, std::uint64_t seed, double magnitude = 1e-3);

struct MeanFlowProfile {
    Eigen::VectorXd z;
    Eigen::VectorXd q;  // (1/L) int u1 dx1 at z
    double M = 0.0;     // int int u1
};

MeanFlowProfile mean_flow_profile(const SpectralField& psi, int points = 101);

/// Least-squares slope of log|v| against t over the last half of the series.
/// Throws std::domain_error when v changes sign or vanishes in that window.
double decay_rate_fit(const std::vector<double>& t, const std::vector<double>& v);

/// CSV rows t,norm,r,theta,M,rhs.
void write_trajectory_csv(std::ostream& os, const TrajectorySummary& s);

}  // namespace rbc::dynamics
