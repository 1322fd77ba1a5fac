#include "rbc/app/cli.hpp"

#include "rbc/dynamics/integrator.hpp"
#include "rbc/dynamics/sweep.hpp"
#include "rbc/reduction/center_manifold.hpp"
#include "rbc/spectral/operators.hpp"
#include "rbc/spectral/snapshot.hpp"
#include "rbc/stability/eigen.hpp"
#include "rbc/stability/neutral.hpp"
#include "rbc/topology/flow_topology.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

#ifndef RBC_VERSION
#define RBC_VERSION "0.0.0"
#endif

namespace rbc::app {

namespace fs = std::filesystem;
using json = nlohmann::json;
using spectral::BcTag;
using spectral::BoundaryCondition;
using spectral::Discretization;
using spectral::Parity;
using spectral::SpectralField;

namespace {

std::string hex(const unsigned char* d, unsigned n) {
    std::ostringstream os;
    for (unsigned i = 0; i < n; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(d[i]);
    return os.str();
}

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(const void* p, std::size_t n) { EVP_DigestUpdate(ctx_, p, n); }
    std::string hex_digest() {
        unsigned char d[EVP_MAX_MD_SIZE];
        unsigned n = 0;
        EVP_DigestFinal_ex(ctx_, d, &n);
        return hex(d, n);
    }

private:
    EVP_MD_CTX* ctx_;
};

std::string sha256_string(const std::string& s) {
    Sha256 h;
    h.update(s.data(), s.size());
    return h.hex_digest();
}

double wall_clock() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

std::string utc_stamp(const char* fmt) {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, fmt, &tm);
    return buf;
}

}  // namespace

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    Sha256 h;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex_digest();
}

RunDirectory::RunDirectory(const fs::path& root, const std::string& command, const std::string& tag)
    : command_(command), started_(wall_clock()) {
    fs::create_directories(root);
    const std::string base = command + "_" + utc_stamp("%Y%m%dT%H%M%S") + (tag.empty() ? "" : "_" + tag);
    for (int i = 0;; ++i) {
        dir_ = root / (i == 0 ? base : base + "-" + std::to_string(i));
        if (fs::create_directory(dir_)) break;
        if (i > 1000) throw std::runtime_error("cannot create a fresh run directory under " + root.string());
    }
}

void RunDirectory::write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const fs::path p = dir_ / name;
    fs::create_directories(p.parent_path());
    {
        std::ofstream os(p, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + p.string());
        body(os);
    }
    add(name);
}

void RunDirectory::add(const std::string& name) {
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
}

void RunDirectory::finish(const json& config, const json& resolved, int exit_code) {
    json files = json::array();
    for (const auto& f : files_) {
        const fs::path p = dir_ / f;
        if (!fs::exists(p)) continue;
        files.push_back({{"name", f}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
    }
    json m;
    m["tool"] = "rbc";
    m["version"] = RBC_VERSION;
    m["command"] = command_;
    m["config"] = config;
    m["config_sha256"] = sha256_string(config.dump());
    m["resolved"] = resolved;
    m["files"] = files;
    m["timings"] = {{"finished_utc", utc_stamp("%Y-%m-%dT%H:%M:%SZ")}, {"wall_seconds", wall_clock() - started_}};
    m["exit_code"] = exit_code;
    std::ofstream os(dir_ / "manifest.json");
    os << m.dump(2) << '\n';
}

namespace {

/// Run configuration shared by the subcommands; each subcommand binds the
/// fields it uses with its own defaults.
struct RunConfig {
    std::string bc = "rigid-rigid";
    std::string space = "auto";  // free-free: B2 or B3; auto takes the default space of the walls
    std::string L = "critical";
    double R = 0.0;  // 0: use ratio
    double ratio = 1.05;
    double Pr = 10.0;
    bool prandtl_form = false;
    int K = 3;
    int N = 12;
    int J = 12;
    int resolution = 32;
    std::string scheme = "imex1";
    double dt = 1e-2;
    double horizon = 200.0;
    double steady_tol = 1e-9;
    int sample_every = 10;
    std::uint64_t seed = 1;
    double magnitude = 1e-3;
};

struct Context {
    RunDirectory& run;
    json resolved = json::object();
};

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

BoundaryCondition boundary(const RunConfig& c) {
    BoundaryCondition bc;
    try {
        const BcTag tag = spectral::parse_bc_tag(c.bc);
        bc = BoundaryCondition::from_tag(tag);
        if (c.space != "auto") {
            const auto space = spectral::parse_space_tag(c.space);
            if (tag == BcTag::FreeFree)
                bc = BoundaryCondition::free_free(space);
            else if (space != bc.space)
                throw ConfigError(spectral::to_string(tag) + " walls use the " + spectral::to_string(bc.space) + " space");
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return bc;
}

void validate(const RunConfig& c) {
    boundary(c);
    if (c.L != "critical") {
        double L = 0.0;
        try {
            std::size_t used = 0;
            L = std::stod(c.L, &used);
            require(used == c.L.size(), "L must be a number or 'critical'");
        } catch (const std::logic_error&) {
            throw ConfigError("L must be a number or 'critical', got '" + c.L + "'");
        }
        require(L > 0.0 && std::isfinite(L), "L must be positive");
    }
    require(c.R >= 0.0, "R must be positive");
    require(c.ratio > 0.0, "ratio must be positive");
    require(c.Pr > 0.0, "Pr must be positive");
    require(c.K >= 1, "K must be at least 1");
    require(c.N >= 2, "N must be at least 2");
    require(c.J >= 1, "J must be at least 1");
    require(c.resolution >= 4, "resolution must be at least 4");
    require(c.dt > 0.0, "dt must be positive");
    require(c.horizon > 0.0, "horizon must be positive");
    require(c.steady_tol > 0.0, "steady-tol must be positive");
    require(c.sample_every >= 1, "sample-every must be at least 1");
    require(c.magnitude > 0.0, "magnitude must be positive");
    try {
        dynamics::parse_scheme(c.scheme);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

/// L from the config, resolving "critical" through the neutral curve.
double resolve_period(const RunConfig& c, Context& ctx) {
    if (c.L != "critical") return std::stod(c.L);
    const auto np = stability::critical_rayleigh(boundary(c), c.resolution);
    ctx.resolved["L_c"] = np.L_c;
    ctx.resolved["R_c"] = np.R_c;
    return np.L_c;
}

dynamics::EvolveOptions evolve_options(const RunConfig& c) {
    dynamics::EvolveOptions o;
    o.step.scheme = dynamics::parse_scheme(c.scheme);
    o.step.dt = c.dt;
    o.step.prandtl_form = c.prandtl_form;
    o.steady_tol = c.steady_tol;
    o.sample_every = c.sample_every;
    return o;
}

std::string file_tag(BcTag t) {
    std::string s = spectral::to_string(t);
    std::erase(s, '-');
    return s;
}

// ---------------------------------------------------------------- critical

int cmd_critical(const RunConfig& c, const std::string& which, Context& ctx) {
    std::vector<BcTag> tags;
    if (which == "all")
        tags = {BcTag::RigidRigid, BcTag::FreeRigid, BcTag::FreeFree};
    else
        tags = {boundary(c).tag};
    std::vector<std::pair<BcTag, stability::NeutralPoint>> rows;
    for (BcTag t : tags) rows.emplace_back(t, stability::critical_rayleigh(BoundaryCondition::from_tag(t), c.resolution));

    ctx.run.write("critical.csv", [&](std::ostream& os) {
        os << "bc,R_c,L_c,a_c,unimodal,certified\n" << std::setprecision(12);
        for (const auto& [t, np] : rows)
            os << spectral::to_string(t) << ',' << np.R_c << ',' << np.L_c << ',' << np.a_c << ',' << int(np.unimodal)
               << ',' << int(np.certified) << '\n';
    });
    json res = json::object();
    for (const auto& [t, np] : rows) {
        ctx.run.write("neutral_" + file_tag(t) + ".csv",
                      [&](std::ostream& os) { stability::write_neutral_curve_csv(os, np.scan); });
        res[spectral::to_string(t)] = {{"R_c", np.R_c}, {"L_c", np.L_c}, {"a_c", np.a_c}, {"certified", np.certified}};
    }
    ctx.resolved["critical"] = res;
    if (rows.size() == 1) {
        ctx.resolved["R_c"] = rows[0].second.R_c;
        ctx.resolved["L_c"] = rows[0].second.L_c;
    }
    bool ok = true;
    for (const auto& r : rows) ok = ok && r.second.certified;
    return ok ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- eigs

int cmd_eigs(const RunConfig& c, int k, int count, Context& ctx) {
    require(k >= 0, "k must be non-negative");
    const BoundaryCondition bc = boundary(c);
    const double L = resolve_period(c, ctx);
    const stability::VerticalOperators ops(bc, c.resolution);
    const double a1 = 2.0 * std::numbers::pi / L;
    const double R_L = stability::neutral_rayleigh(ops, a1);
    const double R = c.R > 0.0 ? c.R : c.ratio * R_L;
    ctx.resolved["L"] = L;
    ctx.resolved["R_neutral_L"] = R_L;
    ctx.resolved["R"] = R;

    std::vector<stability::EigenPair> pairs;
    if (k == 0) {
        for (auto fam : {stability::Family::Temperature, stability::Family::Shear}) {
            auto p = stability::vertical_eigensolve(ops, 0.0, R, count, fam, 0);
            pairs.insert(pairs.end(), p.begin(), p.end());
        }
    } else {
        pairs = stability::vertical_eigensolve(ops, k * a1, R, count, stability::Family::Roll, k);
    }
    ctx.run.write("eigenvalues.csv", [&](std::ostream& os) { stability::write_eigenvalues_csv(os, pairs); });
    if (!pairs.empty()) {
        ctx.run.write("profile_leading.csv", [&](std::ostream& os) { stability::write_profile_csv(os, ops, pairs.front()); });
        ctx.resolved["beta_leading"] = pairs.front().beta;
    }
    if (k == 1) ctx.resolved["beta1"] = pairs.front().beta;
    return kExitOk;
}

// ---------------------------------------------------------------- reduce

int cmd_reduce(const RunConfig& c, std::vector<double> ratios, bool alpha_at_R, int N, Context& ctx) {
    const BoundaryCondition bc = boundary(c);
    const double L = resolve_period(c, ctx);
    const double R_L = stability::neutral_rayleigh(L > 0 ? 2.0 * std::numbers::pi / L : 1.0, bc, c.resolution);
    const double R = c.R > 0.0 ? c.R : c.ratio * R_L;
    for (double r : ratios) require(r > 0.0, "ratios must be positive");
    ratios.push_back(R / R_L);
    std::sort(ratios.begin(), ratios.end());
    ratios.erase(std::unique(ratios.begin(), ratios.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                 ratios.end());

    reduction::ModelOptions mo;
    mo.L = L;
    mo.J = c.J;
    mo.N = N;
    mo.alpha_at_R = alpha_at_R;
    std::vector<reduction::ReducedModel> models;
    std::size_t primary = 0;
    for (double r : ratios) {
        if (std::abs(r - R / R_L) < 1e-12) primary = models.size();
        models.push_back(reduction::build_reduced_model(r * R_L, bc, mo));
    }
    const auto& m = models[primary];
    const auto verdict = reduction::bifurcation_classify(models);

    ctx.run.write("interaction_table.csv", [&](std::ostream& os) { reduction::write_interaction_table_csv(os, m.table); });
    ctx.run.write("alpha_vs_J.csv", [&](std::ostream& os) { reduction::write_alpha_vs_J_csv(os, m.convergence); });
    ctx.run.write("alpha_vs_R.csv", [&](std::ostream& os) { reduction::write_alpha_vs_R_csv(os, models); });
    ctx.run.write("verdict.txt", [&](std::ostream& os) { reduction::write_verdict(os, verdict); });

    ctx.resolved["L"] = L;
    ctx.resolved["R_neutral_L"] = R_L;
    ctx.resolved["R"] = R;
    ctx.resolved["beta1"] = m.beta1;
    ctx.resolved["alpha"] = m.alpha;
    ctx.resolved["alpha_converged"] = m.convergence.converged;
    try {
        ctx.resolved["amplitude"] = reduction::equilibrium_amplitude(m);
    } catch (const reduction::ReductionRefused&) {
        ctx.resolved["amplitude"] = nullptr;
    }
    ctx.resolved["verdict"] = verdict.verdict;
    ctx.resolved["s1"] = verdict.s1;
    return verdict.s1 ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- simulate

struct SimulateExtras {
    std::string init;
    double mean_flow = 0.0;
    double snapshot_every = 0.0;
};

spectral::Snapshot make_snapshot(const SpectralField& f, double R, double Pr, double t) {
    return spectral::Snapshot{f, R, Pr, t, {}};
}

int cmd_simulate(const RunConfig& c, const SimulateExtras& x, Context& ctx) {
    require(x.snapshot_every >= 0.0, "snapshot-every must be non-negative");
    const BoundaryCondition bc = boundary(c);
    const double L = resolve_period(c, ctx);
    auto disc = Discretization::make(L, c.K, c.N, bc);
    const double R_L = stability::neutral_rayleigh(stability::VerticalOperators(disc), disc->wavenumber(1));
    const double R = c.R > 0.0 ? c.R : c.ratio * R_L;
    const spectral::PhysParams phys(R, c.Pr);

    SpectralField psi0 = dynamics::random_initial_data(disc, c.seed, c.magnitude);
    if (!x.init.empty()) {
        auto snap = spectral::read_snapshot(fs::path(x.init));
        const auto& d = snap.field.disc();
        require(std::abs(d.period() - L) <= 1e-12 * L && d.max_wavenumber() == c.K && d.vertical_size() == c.N &&
                    d.bc() == bc,
                "initial snapshot does not match the configured discretization");
        psi0 = snap.field;
    }
    if (x.mean_flow != 0.0) psi0 = psi0 + x.mean_flow * stability::build_eigenvector_2d(disc, 0, 1, Parity::Sin, R);

    ctx.resolved["L"] = L;
    ctx.resolved["R_neutral_L"] = R_L;
    ctx.resolved["R"] = R;
    ctx.resolved["beta1"] = stability::leading_growth_rate(stability::VerticalOperators(disc), disc->wavenumber(1), R);
    ctx.run.write("initial.snap", [&](std::ostream& os) { spectral::write_snapshot(os, make_snapshot(psi0, R, c.Pr, 0.0)); });

    auto opt = evolve_options(c);
    opt.step.dump_path = (ctx.run.path() / "blowup.snap").string();
    double next_snap = x.snapshot_every;
    int snap_count = 0;
    if (x.snapshot_every > 0.0) {
        opt.observer = [&](double t, const SpectralField& psi) {
            if (t + 1e-12 < next_snap) return;
            std::ostringstream name;
            name << "snapshots/snap_" << std::setw(5) << std::setfill('0') << snap_count++ << ".snap";
            ctx.run.write(name.str(), [&](std::ostream& os) { spectral::write_snapshot(os, make_snapshot(psi, R, c.Pr, t)); });
            while (next_snap <= t + 1e-12) next_snap += x.snapshot_every;
        };
    }
    try {
        const auto s = dynamics::evolve(psi0, phys, c.horizon, opt);
        ctx.run.write("trajectory.csv", [&](std::ostream& os) { dynamics::write_trajectory_csv(os, s); });
        ctx.run.write("final.snap", [&](std::ostream& os) {
            spectral::write_snapshot(os, make_snapshot(s.final, R, c.Pr, s.times.empty() ? 0.0 : s.times.back()));
        });
        ctx.resolved["steady"] = s.steady;
        ctx.resolved["steps"] = s.steps;
        ctx.resolved["final_norm"] = s.norms.back();
        ctx.resolved["amplitude"] = s.amplitude.back();
        ctx.resolved["mean_flow"] = s.mean_flow.back();
        ctx.resolved["stability_bound"] = s.stability_bound;
    } catch (const dynamics::IntegrationError& e) {
        ctx.run.add("blowup.snap");
        ctx.resolved["error"] = e.what();
        std::cerr << "rbc: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

// ---------------------------------------------------------------- classify

struct ClassifyExtras {
    std::string snapshot;
    bool templ = false;
    double amplitude = 1.0;
    double shear = 0.0;
};

int cmd_classify(const RunConfig& c, const ClassifyExtras& x, Context& ctx) {
    require(x.snapshot.empty() != !x.templ, "classify needs exactly one of --snapshot or --template");
    std::optional<SpectralField> psi;
    if (!x.snapshot.empty()) {
        auto snap = spectral::read_snapshot(fs::path(x.snapshot));
        ctx.resolved["snapshot_sha256"] = sha256_file(x.snapshot);
        ctx.resolved["R"] = snap.R;
        ctx.resolved["time"] = snap.time;
        psi = std::move(snap.field);
    } else {
        const BoundaryCondition bc = boundary(c);
        const double L = resolve_period(c, ctx);
        auto disc = Discretization::make(L, c.K, c.N, bc);
        const double R_L = stability::neutral_rayleigh(stability::VerticalOperators(disc), disc->wavenumber(1));
        const double R = c.R > 0.0 ? c.R : c.ratio * R_L;
        ctx.resolved["L"] = L;
        ctx.resolved["R"] = R;
        psi = topology::roll_template(disc, R, x.amplitude);
        if (x.shear != 0.0) *psi = *psi + x.shear * stability::build_eigenvector_2d(disc, 0, 1, Parity::Sin, R);
    }
    const auto u = topology::FlowField::from_spectral(*psi);
    const auto rep = topology::classify_regime(u);
    ctx.run.write("report.json", [&](std::ostream& os) { topology::write_report_json(os, rep); });
    ctx.run.write("separatrices.csv", [&](std::ostream& os) { topology::write_polylines_csv(os, rep); });
    ctx.run.write("flow.svg", [&](std::ostream& os) { topology::write_svg(os, u, rep); });
    ctx.resolved["regime"] = topology::to_string(rep.regime);
    ctx.resolved["centers"] = rep.centers();
    ctx.resolved["interior_saddles"] = rep.interior_saddles();
    ctx.resolved["boundary_saddles"] = rep.boundary_saddles();
    ctx.resolved["d_regular"] = rep.d_regular();
    ctx.resolved["mean_flow"] = rep.norms.mean_flow;
    return kExitOk;
}

// ---------------------------------------------------------------- sweep

struct SweepExtras {
    std::vector<double> ratios;
    double from = 0.0;
    double to = 0.0;
    int points = 0;
    bool no_continuation = false;
};

std::vector<double> sweep_ratios(const SweepExtras& x) {
    if (!x.ratios.empty()) {
        for (double r : x.ratios) require(r > 0.0, "ratios must be positive");
        return x.ratios;
    }
    require(x.points >= 1, "points must be at least 1");
    require(x.from > 0.0 && x.to > 0.0, "from and to must be positive");
    std::vector<double> r;
    if (x.points == 1) return {x.from};
    const bool logspaced = x.from > 1.0 && x.to > 1.0;
    for (int i = 0; i < x.points; ++i) {
        const double s = double(i) / (x.points - 1);
        if (logspaced)
            r.push_back(1.0 + std::exp((1 - s) * std::log(x.from - 1.0) + s * std::log(x.to - 1.0)));
        else
            r.push_back((1 - s) * x.from + s * x.to);
    }
    return r;
}

int cmd_sweep(const RunConfig& c, const SweepExtras& x, Context& ctx) {
    const auto ratios = sweep_ratios(x);
    const BoundaryCondition bc = boundary(c);
    const double L = resolve_period(c, ctx);
    auto disc = Discretization::make(L, c.K, c.N, bc);
    dynamics::SweepOptions so;
    so.evolve = evolve_options(c);
    so.horizon = c.horizon;
    so.seed = c.seed;
    so.magnitude = c.magnitude;
    so.continuation = !x.no_continuation;
    const auto s = dynamics::amplitude_sweep(disc, ratios, so);
    ctx.run.write("sweep.csv", [&](std::ostream& os) { dynamics::write_sweep_csv(os, s); });
    ctx.resolved["L"] = L;
    ctx.resolved["R_c_discrete"] = s.R_c;
    try {
        const auto f = dynamics::fit_amplitude_exponent(s);
        ctx.resolved["slope"] = f.slope;
        ctx.resolved["intercept"] = f.intercept;
        ctx.resolved["fit_points"] = f.points;
    } catch (const std::domain_error&) {
        ctx.resolved["slope"] = nullptr;
    }
    int unsteady = 0;
    for (const auto& p : s.points) unsteady += p.steady ? 0 : 1;
    ctx.resolved["unsteady_points"] = unsteady;
    return kExitOk;
}

// ---------------------------------------------------------------- report

struct Check {
    std::string run;
    std::string command;
    int exit_code = -1;
    int files = 0;
    std::vector<std::string> problems;
};

Check verify_run(const fs::path& dir) {
    Check c;
    c.run = dir.filename().string();
    const fs::path mpath = dir / "manifest.json";
    std::ifstream in(mpath);
    if (!in) {
        c.problems.push_back("missing manifest.json");
        return c;
    }
    json m;
    try {
        m = json::parse(in);
        c.command = m.at("command").get<std::string>();
        c.exit_code = m.at("exit_code").get<int>();
        for (const auto& f : m.at("files")) {
            ++c.files;
            const std::string name = f.at("name").get<std::string>();
            const fs::path p = dir / name;
            if (!fs::exists(p)) {
                c.problems.push_back(name + ": missing");
                continue;
            }
            if (fs::file_size(p) != f.at("bytes").get<std::uintmax_t>()) c.problems.push_back(name + ": size differs");
            if (sha256_file(p) != f.at("sha256").get<std::string>()) c.problems.push_back(name + ": hash differs");
        }
    } catch (const json::exception& e) {
        c.problems.push_back(std::string("malformed manifest: ") + e.what());
    }
    return c;
}

int cmd_report(const fs::path& root, std::vector<std::string> runs, Context& ctx) {
    if (runs.empty()) {
        if (fs::is_directory(root))
            for (const auto& e : fs::directory_iterator(root))
                if (e.is_directory() && e.path() != ctx.run.path() && fs::exists(e.path() / "manifest.json"))
                    runs.push_back(e.path().string());
        std::sort(runs.begin(), runs.end());
    }
    std::vector<Check> checks;
    for (const auto& r : runs) checks.push_back(verify_run(r));
    int bad = 0;
    ctx.run.write("report.csv", [&](std::ostream& os) {
        os << "run,command,exit_code,files,ok,problems\n";
        for (const auto& c : checks) {
            std::string probs;
            for (const auto& p : c.problems) probs += (probs.empty() ? "" : "; ") + p;
            os << c.run << ',' << c.command << ',' << c.exit_code << ',' << c.files << ',' << int(c.problems.empty())
               << ",\"" << probs << "\"\n";
        }
    });
    for (const auto& c : checks) {
        std::cout << (c.problems.empty() ? "ok       " : "MISMATCH ") << c.run << '\n';
        for (const auto& p : c.problems) std::cout << "    " << p << '\n';
        bad += c.problems.empty() ? 0 : 1;
    }
    ctx.resolved["runs"] = checks.size();
    ctx.resolved["mismatched"] = bad;
    return bad == 0 ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- wiring

void bind_common(CLI::App* sub, RunConfig& c, bool dynamics_opts) {
    sub->add_option("--bc", c.bc, "rigid-rigid, free-free or free-rigid");
    sub->add_option("--space", c.space, "function space B0..B3 (free-free: B2 or B3)");
    sub->add_option("--L", c.L, "horizontal period or 'critical'");
    sub->add_option("--R", c.R, "Rayleigh number (overrides --ratio)");
    sub->add_option("--ratio", c.ratio, "R as a multiple of the neutral R of the k = 1 mode at L");
    sub->add_option("--resolution", c.resolution, "vertical functions for the stability problem");
    if (!dynamics_opts) return;
    sub->add_option("--Pr", c.Pr, "Prandtl number");
    sub->add_flag("--prandtl-form", c.prandtl_form, "multiply the velocity linear terms by Pr");
    sub->add_option("--K", c.K, "largest x1-wavenumber index");
    sub->add_option("--N", c.N, "vertical functions per variable");
    sub->add_option("--scheme", c.scheme, "imex1 or sbdf2");
    sub->add_option("--dt", c.dt, "time step");
    sub->add_option("--horizon", c.horizon, "final time");
    sub->add_option("--steady-tol", c.steady_tol, "steady when the rhs H-norm drops below this");
    sub->add_option("--sample-every", c.sample_every, "steps between samples");
    sub->add_option("--seed", c.seed, "seed for the random initial data");
    sub->add_option("--magnitude", c.magnitude, "H-norm of the random initial data");
}

json config_snapshot(const CLI::App& app, const CLI::App* sub) {
    json out = json::object();
    auto take = [&](const CLI::App& a, json& into) {
        for (const CLI::Option* o : a.get_options()) {
            const std::string name = o->get_single_name();
            if (name.empty() || name == "help" || name == "config" || name == "version") continue;
            const auto& res = o->results();
            if (o->get_expected_max() == 0) {
                into[name] = res.empty() ? false : o->as<bool>();
            } else if (res.empty()) {
                into[name] = o->get_default_str();
            } else if (res.size() == 1) {
                into[name] = res.front();
            } else {
                std::string joined;
                for (const auto& r : res) joined += (joined.empty() ? "" : ",") + r;
                into[name] = joined;
            }
        }
    };
    take(app, out);
    json s = json::object();
    take(*sub, s);
    out[sub->get_name()] = s;
    return out;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Rayleigh-Benard convection: onset, reduction, simulation and flow topology", "rbc"};
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "INI file; [command] sections hold per-command keys");
    app.set_version_flag("--version", RBC_VERSION);
    std::string root = "runs";
    app.add_option("--output-root", root, "where run directories are created")->envname("RBC_OUTPUT_ROOT");
    app.require_subcommand(1);

    RunConfig crit_c, eigs_c, red_c, sim_c, cls_c, swp_c;
    crit_c.bc = "all";
    auto* crit = app.add_subcommand("critical", "critical Rayleigh number and neutral curves");
    crit->add_option("--bc", crit_c.bc, "rigid-rigid, free-free, free-rigid or all");
    crit->add_option("--resolution", crit_c.resolution, "vertical functions");

    int eig_k = 1, eig_count = 8;
    auto* eigs = app.add_subcommand("eigs", "eigenvalues and leading profile at one wavenumber");
    bind_common(eigs, eigs_c, false);
    eigs->add_option("--k", eig_k, "x1-wavenumber index");
    eigs->add_option("--count", eig_count, "eigenvalues to keep");

    std::vector<double> red_ratios{0.95, 1.0};
    bool red_alpha_at_R = false;
    int red_N = 0;
    auto* red = app.add_subcommand("reduce", "center-manifold reduction and bifurcation verdict");
    bind_common(red, red_c, false);
    red->add_option("--J", red_c.J, "vertical modes kept in the reduction");
    red->add_option("--N", red_N, "vertical functions of the reduction (<= 0: 2J + 8)");
    red->add_option("--ratios", red_ratios, "additional R/R_c values for the verdict")->delimiter(',');
    red->add_flag("--alpha-at-R", red_alpha_at_R, "evaluate alpha at R instead of the neutral R");

    SimulateExtras sim_x;
    auto* sim = app.add_subcommand("simulate", "direct simulation");
    bind_common(sim, sim_c, true);
    sim->add_option("--init", sim_x.init, "initial snapshot instead of random data");
    sim->add_option("--mean-flow", sim_x.mean_flow, "add this multiple of the leading shear mode");
    sim->add_option("--snapshot-every", sim_x.snapshot_every, "snapshot cadence in time units (0: none)");

    ClassifyExtras cls_x;
    auto* cls = app.add_subcommand("classify", "flow topology of a snapshot or roll template");
    bind_common(cls, cls_c, false);
    cls->add_option("--K", cls_c.K, "largest x1-wavenumber index (template)");
    cls->add_option("--N", cls_c.N, "vertical functions (template)");
    cls->add_option("--snapshot", cls_x.snapshot, "snapshot file");
    cls->add_flag("--template", cls_x.templ, "classify the roll template instead");
    cls->add_option("--amplitude", cls_x.amplitude, "roll template amplitude");
    cls->add_option("--shear", cls_x.shear, "added multiple of the leading shear mode");

    swp_c.bc = "free-free";
    swp_c.N = 8;
    swp_c.scheme = "sbdf2";
    swp_c.dt = 0.05;
    swp_c.horizon = 6000.0;
    swp_c.sample_every = 50;
    SweepExtras swp_x;
    swp_x.from = 1.001;
    swp_x.to = 1.02;
    swp_x.points = 6;
    auto* swp = app.add_subcommand("sweep", "steady amplitude against R and the exponent fit");
    bind_common(swp, swp_c, true);
    swp->add_option("--ratios", swp_x.ratios, "explicit R/R_c values")->delimiter(',');
    swp->add_option("--from", swp_x.from, "first R/R_c");
    swp->add_option("--to", swp_x.to, "last R/R_c");
    swp->add_option("--points", swp_x.points, "number of ratios (log-spaced in R/R_c - 1 above onset)");
    swp->add_flag("--no-continuation", swp_x.no_continuation, "start every run from random data");

    std::vector<std::string> rep_runs;
    auto* rep = app.add_subcommand("report", "verify run manifests against the files on disk");
    rep->add_option("runs", rep_runs, "run directories (default: all under the output root)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    const std::map<std::string, RunConfig*> configs{{"critical", &crit_c}, {"eigs", &eigs_c}, {"reduce", &red_c},
                                                    {"simulate", &sim_c},  {"classify", &cls_c}, {"sweep", &swp_c}};
    try {
        if (auto it = configs.find(name); it != configs.end()) {
            RunConfig& c = *it->second;
            if (name == "critical") {
                if (c.bc != "all") boundary(c);
                require(c.resolution >= 4, "resolution must be at least 4");
            } else {
                validate(c);
            }
        }
        if (name == "eigs") require(eig_k >= 0 && eig_count >= 1, "k must be non-negative and count positive");
        if (name == "reduce")
            for (double r : red_ratios) require(r > 0.0, "ratios must be positive");
        if (name == "simulate") require(sim_x.snapshot_every >= 0.0, "snapshot-every must be non-negative");
        if (name == "classify")
            require(cls_x.snapshot.empty() != !cls_x.templ, "classify needs exactly one of --snapshot or --template");
        if (name == "sweep") sweep_ratios(swp_x);
    } catch (const ConfigError& e) {
        std::cerr << "rbc: invalid configuration: " << e.what() << '\n';
        return kExitConfig;
    }

    const json config = config_snapshot(app, sub);
    std::optional<RunDirectory> run;
    try {
        run.emplace(fs::path(root), name, sha256_string(config.dump()).substr(0, 8));
    } catch (const std::exception& e) {
        std::cerr << "rbc: " << e.what() << '\n';
        return kExitConfig;
    }
    Context ctx{*run};
    int code = kExitFailure;
    try {
        if (name == "critical") code = cmd_critical(crit_c, crit_c.bc, ctx);
        else if (name == "eigs") code = cmd_eigs(eigs_c, eig_k, eig_count, ctx);
        else if (name == "reduce") code = cmd_reduce(red_c, red_ratios, red_alpha_at_R, red_N, ctx);
        else if (name == "simulate") code = cmd_simulate(sim_c, sim_x, ctx);
        else if (name == "classify") code = cmd_classify(cls_c, cls_x, ctx);
        else if (name == "sweep") code = cmd_sweep(swp_c, swp_x, ctx);
        else if (name == "report") code = cmd_report(root, rep_runs, ctx);
    } catch (const ConfigError& e) {
        std::cerr << "rbc: invalid configuration: " << e.what() << '\n';
        ctx.resolved["error"] = e.what();
        code = kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "rbc: " << name << " failed: " << e.what() << '\n';
        ctx.resolved["error"] = e.what();
        code = kExitFailure;
    }
    run->finish(config, ctx.resolved, code);
    std::cout << run->path().string() << '\n';
    return code;
}

}  // namespace rbc::app
