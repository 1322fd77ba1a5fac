#include "rbc/app/cli.hpp"
#include "rbc/dynamics/integrator.hpp"
#include "rbc/dynamics/sweep.hpp"
#include "rbc/reduction/center_manifold.hpp"
#include "rbc/stability/eigen.hpp"
#include "rbc/stability/neutral.hpp"
#include "rbc/topology/flow_topology.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

namespace py = pybind11;
using namespace rbc;
using spectral::BcTag;
using spectral::BoundaryCondition;
using spectral::Discretization;

namespace {

BoundaryCondition boundary(const std::string& bc, const std::string& space) {
    const BcTag tag = spectral::parse_bc_tag(bc);
    if (space.empty() || space == "auto") return BoundaryCondition::from_tag(tag);
    if (tag == BcTag::FreeFree) return BoundaryCondition::free_free(spectral::parse_space_tag(space));
    return BoundaryCondition::from_tag(tag);
}

double period(const BoundaryCondition& bc, double L) { return L > 0.0 ? L : stability::critical_rayleigh(bc).L_c; }

/// R given directly, or ratio times the neutral R of the k = 1 mode on disc.
double rayleigh(const spectral::DiscretizationPtr& d, std::optional<double> R, double ratio) {
    if (R) return *R;
    return ratio * stability::neutral_rayleigh(stability::VerticalOperators(d), d->wavenumber(1));
}

py::dict critical(const std::string& bc, int resolution) {
    const auto np = stability::critical_rayleigh(boundary(bc, "auto"), resolution);
    py::dict d;
    d["R_c"] = np.R_c;
    d["L_c"] = np.L_c;
    d["a_c"] = np.a_c;
    d["unimodal"] = np.unimodal;
    d["certified"] = np.certified;
    return d;
}

py::dict reduce(double R, const std::string& bc, const std::string& space, double L, int J) {
    reduction::ModelOptions mo;
    mo.L = L;
    mo.J = J;
    const auto m = reduction::build_reduced_model(R, boundary(bc, space), mo);
    py::dict d;
    d["R"] = m.R;
    d["L"] = m.L;
    d["beta1"] = m.beta1;
    d["alpha"] = m.alpha;
    d["alpha_converged"] = m.convergence.converged;
    d["translation_witness"] = m.translation_witness;
    try {
        d["amplitude"] = reduction::equilibrium_amplitude(m);
    } catch (const reduction::ReductionRefused&) {
        d["amplitude"] = py::none();
    }
    return d;
}

dynamics::EvolveOptions evolve_options(const std::string& scheme, double dt, int sample_every, double steady_tol) {
    dynamics::EvolveOptions o;
    o.step.scheme = dynamics::parse_scheme(scheme);
    o.step.dt = dt;
    o.sample_every = sample_every;
    o.steady_tol = steady_tol;
    return o;
}

py::dict simulate(const std::string& bc, const std::string& space, std::optional<double> R, double ratio, double L,
                  int K, int N, const std::string& scheme, double dt, double horizon, std::uint64_t seed,
                  double magnitude, double mean_flow, int sample_every, double steady_tol) {
    const auto b = boundary(bc, space);
    auto d = Discretization::make(period(b, L), K, N, b);
    const double Rv = rayleigh(d, R, ratio);
    auto psi0 = dynamics::random_initial_data(d, seed, magnitude);
    if (mean_flow != 0.0)
        psi0 = psi0 + mean_flow * stability::build_eigenvector_2d(d, 0, 1, spectral::Parity::Sin, Rv);
    dynamics::TrajectorySummary s = [&] {
        py::gil_scoped_release release;
        return dynamics::evolve(psi0, spectral::PhysParams(Rv), horizon,
                                evolve_options(scheme, dt, sample_every, steady_tol));
    }();
    const auto rep = topology::classify_regime(s.final);
    py::dict out;
    out["R"] = Rv;
    out["L"] = d->period();
    out["t"] = s.times;
    out["norm"] = s.norms;
    out["r"] = s.amplitude;
    out["theta"] = s.phase;
    out["M"] = s.mean_flow;
    out["steady"] = s.steady;
    out["steps"] = s.steps;
    out["final_regime"] = topology::to_string(rep.regime);
    return out;
}

py::dict sweep(const std::vector<double>& ratios, const std::string& bc, const std::string& space, double L, int K,
               int N, const std::string& scheme, double dt, double horizon, std::uint64_t seed) {
    const auto b = boundary(bc, space);
    auto d = Discretization::make(period(b, L), K, N, b);
    dynamics::SweepOptions so;
    so.evolve = evolve_options(scheme, dt, 50, 1e-9);
    so.horizon = horizon;
    so.seed = seed;
    dynamics::SweepResult s = [&] {
        py::gil_scoped_release release;
        return dynamics::amplitude_sweep(d, ratios, so);
    }();
    py::list pts;
    for (const auto& p : s.points) {
        py::dict e;
        e["ratio"] = p.ratio;
        e["R"] = p.R;
        e["beta1"] = p.beta1;
        e["amplitude"] = p.amplitude;
        e["steady"] = p.steady;
        pts.append(e);
    }
    py::dict out;
    out["R_c"] = s.R_c;
    out["points"] = pts;
    try {
        out["slope"] = dynamics::fit_amplitude_exponent(s).slope;
    } catch (const std::domain_error&) {
        out["slope"] = py::none();
    }
    return out;
}

py::dict classify_template(const std::string& bc, std::optional<double> R, double ratio, double shear, double L,
                           int K, int N) {
    const auto b = boundary(bc, "auto");
    auto d = Discretization::make(period(b, L), K, N, b);
    const double Rv = rayleigh(d, R, ratio);
    auto psi = topology::roll_template(d, Rv);
    if (shear != 0.0) psi = psi + shear * stability::build_eigenvector_2d(d, 0, 1, spectral::Parity::Sin, Rv);
    const auto rep = topology::classify_regime(psi);
    py::dict stable;
    for (const auto& [space, v] : rep.stability) stable[py::str(spectral::to_string(space))] = v.stable();
    py::dict out;
    out["regime"] = topology::to_string(rep.regime);
    out["centers"] = rep.centers();
    out["interior_saddles"] = rep.interior_saddles();
    out["boundary_saddles"] = rep.boundary_saddles();
    out["d_regular"] = rep.d_regular();
    out["cross_channel"] = rep.graph.has_cross_channel();
    out["mean_flow"] = rep.norms.mean_flow;
    out["structurally_stable"] = stable;
    return out;
}

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "rbc");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return app::run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

PYBIND11_MODULE(rbc, m) {
    m.doc() = "Rayleigh-Benard convection onset, reduction, simulation and flow topology";
    m.attr("__version__") = RBC_VERSION;

    m.def("critical_rayleigh", &critical, py::arg("bc") = "rigid-rigid", py::arg("resolution") = 32);
    m.def(
        "neutral_rayleigh",
        [](double a, const std::string& bc, int res) { return stability::neutral_rayleigh(a, boundary(bc, "auto"), res); },
        py::arg("a"), py::arg("bc") = "rigid-rigid", py::arg("resolution") = 32);
    m.def(
        "growth_rate",
        [](double R, const std::string& bc, double L, int res) {
            const auto b = boundary(bc, "auto");
            return stability::growth_rate_beta1(R, b, period(b, L), res);
        },
        "beta_1 at R and period L (0: critical period)", py::arg("R"), py::arg("bc") = "rigid-rigid",
        py::arg("L") = 0.0, py::arg("resolution") = 32);
    m.def("reduce", &reduce, py::arg("R"), py::arg("bc") = "rigid-rigid", py::arg("space") = "auto",
          py::arg("L") = 0.0, py::arg("J") = 12);
    m.def("simulate", &simulate, py::arg("bc") = "rigid-rigid", py::arg("space") = "auto", py::arg("R") = py::none(),
          py::arg("ratio") = 1.05, py::arg("L") = 0.0, py::arg("K") = 3, py::arg("N") = 12,
          py::arg("scheme") = "sbdf2", py::arg("dt") = 0.02, py::arg("horizon") = 3000.0, py::arg("seed") = 1,
          py::arg("magnitude") = 1e-3, py::arg("mean_flow") = 0.0, py::arg("sample_every") = 50,
          py::arg("steady_tol") = 1e-9);
    m.def("sweep", &sweep, py::arg("ratios"), py::arg("bc") = "free-free", py::arg("space") = "auto",
          py::arg("L") = 0.0, py::arg("K") = 3, py::arg("N") = 8, py::arg("scheme") = "sbdf2", py::arg("dt") = 0.05,
          py::arg("horizon") = 6000.0, py::arg("seed") = 1);
    m.def("classify_template", &classify_template, py::arg("bc") = "rigid-rigid", py::arg("R") = py::none(),
          py::arg("ratio") = 1.0, py::arg("shear") = 0.0, py::arg("L") = 0.0, py::arg("K") = 3, py::arg("N") = 12);
    m.def("run_cli", &run_cli, "run the rbc command line with the given arguments; returns the exit code",
          py::arg("args"));
}
