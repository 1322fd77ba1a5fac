#include "rbc/topology/flow_topology.hpp"

#include "rbc/spectral/basis.hpp"
#include "rbc/stability/eigen.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/tools/toms748_solve.hpp>
#include <boost/numeric/odeint.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace rbc::topology {

namespace {

std::string format_point(const Point& p) {
    std::ostringstream os;
    os << std::setprecision(6) << "(" << p[0] << ", " << p[1] << ")";
    return os.str();
}

double wrapped_distance(const FlowField& u, const Point& a, const Point& b) {
    const double L = u.period();
    double dx = std::remainder(a[0] - b[0], L);
    return std::hypot(dx, a[1] - b[1]);
}

double wall_height(Wall w) { return w == Wall::Bottom ? 0.0 : 1.0; }

double jacobian_det(const Jet& j) { return j.du[0][0] * j.du[1][1] - j.du[0][1] * j.du[1][0]; }

// (7.1)-type determinant with tau = x1 and n = x2; the orientation of n drops out.
double wall_det(const Jet& j) { return j.d2u[0][0][1] * j.d2u[1][1][1] - j.d2u[0][1][1] * j.d2u[1][0][1]; }

bool is_saddle_type(const SingularPoint& p) {
    return p.kind == PointKind::InteriorSaddle || p.kind == PointKind::BoundarySaddle;
}

void merge_into(std::vector<SingularPoint>& out, const SingularPoint& p, const FlowField& u, double radius) {
    for (auto& q : out) {
        if (wrapped_distance(u, p.location, q.location) <= radius) {
            if (p.residual < q.residual) q = p;
            return;
        }
    }
    out.push_back(p);
}

}  // namespace

std::string to_string(Wall w) { return w == Wall::Bottom ? "bottom" : "top"; }

std::string to_string(PointKind k) {
    switch (k) {
        case PointKind::Center: return "center";
        case PointKind::InteriorSaddle: return "saddle";
        case PointKind::BoundarySaddle: return "boundary-saddle";
        case PointKind::Degenerate: return "degenerate";
    }
    return "?";
}

std::string to_string(Regime r) {
    switch (r) {
        case Regime::PureRolls: return "PureRolls";
        case Regime::MeanderA: return "MeanderA";
        case Regime::MeanderB: return "MeanderB";
        case Regime::Degenerate: return "Degenerate";
        case Regime::Other: return "Other";
    }
    return "?";
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Stable: return "stable";
        case Verdict::Unstable: return "unstable";
        case Verdict::Unknown: return "unknown";
    }
    return "?";
}

FlowField::FlowField(double L, JetFn jet, WallKind bottom, WallKind top)
    : L_(L), jet_(std::move(jet)), bottom_(bottom), top_(top) {
    if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("period must be positive");
    if (!jet_) throw std::invalid_argument("flow field needs a jet function");
}

FlowField FlowField::from_spectral(const SpectralField& psi) {
    const auto& bc = psi.disc().bc();
    auto kind = [](spectral::WallType w) { return w == spectral::WallType::Rigid ? WallKind::NoSlip : WallKind::Free; };
    return {psi.disc().period(), [psi](double x1, double x2) { return psi.evaluate(x1, x2); }, kind(bc.bottom()),
            kind(bc.top())};
}

double FlowField::wrap(double x1) const {
    double x = std::fmod(x1, L_);
    if (x < 0.0) x += L_;
    return x >= L_ ? 0.0 : x;
}

Jet FlowField::operator()(double x1, double x2) const { return jet_(wrap(x1), x2); }

FieldNorms field_norms(const FlowField& u, int nx, int nz) {
    const auto q = spectral::gauss_legendre(nz);
    FieldNorms n;
    double energy = 0.0;
    for (int i = 0; i < nx; ++i) {
        const double x = u.period() * i / nx;
        for (int j = 0; j < nz; ++j) {
            const Jet jt = u(x, q.nodes(j));
            const double s2 = jt.u[0] * jt.u[0] + jt.u[1] * jt.u[1];
            n.sup = std::max(n.sup, std::sqrt(s2));
            energy += q.weights(j) * s2 / nx;
            n.mean_flow += q.weights(j) * jt.u[0] * u.period() / nx;
            double f = 0.0;
            for (const auto& row : jt.du)
                for (double v : row) f += v * v;
            n.jacobian = std::max(n.jacobian, std::sqrt(f));
        }
    }
    n.rms = std::sqrt(energy);
    return n;
}

std::vector<SingularPoint> find_interior_singularities(const FlowField& u, const ScanOptions& opt) {
    if (opt.nx < 4 || opt.nz < 4 || !(opt.tol > 0.0)) throw std::invalid_argument("bad scan options");
    const double L = u.period();
    const int nx = opt.nx, nz = opt.nz;
    const double hx = L / nx, hz = 1.0 / nz;
    Eigen::MatrixXd u1(nx + 1, nz + 1), u2(nx + 1, nz + 1);
    double sup = 0.0;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j <= nz; ++j) {
            const Jet jt = u(i * hx, j * hz);
            u1(i, j) = jt.u[0];
            u2(i, j) = jt.u[1];
            sup = std::max(sup, std::hypot(jt.u[0], jt.u[1]));
        }
    u1.row(nx) = u1.row(0);
    u2.row(nx) = u2.row(0);
    const FieldNorms norms = field_norms(u);
    sup = std::max(sup, norms.sup);
    if (!(sup > 0.0) || !std::isfinite(sup))
        throw DegenerateField("velocity vanishes identically: every point is a degenerate singular point");

    const double slack = 1e-13 * sup;
    auto straddles = [&](const Eigen::MatrixXd& f, int i, int j) {
        const double a = f(i, j), b = f(i + 1, j), c = f(i, j + 1), d = f(i + 1, j + 1);
        return std::min({a, b, c, d}) <= slack && std::max({a, b, c, d}) >= -slack;
    };

    std::vector<SingularPoint> out;
    // zeros closer to a wall than a quarter cell belong to the wall scan
    const double wall_eps = 0.25 * hz;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < nz; ++j) {
            if (!straddles(u1, i, j) || !straddles(u2, i, j)) continue;
            const double x0 = (i + 0.5) * hx, z0 = (j + 0.5) * hz;
            Eigen::Vector2d p(x0, z0);
            Jet jt = u(p(0), p(1));
            double res = std::hypot(jt.u[0], jt.u[1]);
            bool inside = true;
            for (int it = 0; it < 100 && res > 1e-2 * opt.tol * sup; ++it) {
                Eigen::Matrix2d J;
                J << jt.du[0][0], jt.du[0][1], jt.du[1][0], jt.du[1][1];
                const Eigen::Vector2d f(jt.u[0], jt.u[1]);
                const Eigen::Vector2d dp = -J.completeOrthogonalDecomposition().solve(f);
                if (!dp.allFinite() || dp.norm() == 0.0) break;
                double t = 1.0;
                Eigen::Vector2d trial;
                Jet tj;
                double tres = 0.0;
                for (int b = 0; b < 30; ++b, t *= 0.5) {
                    trial = p + t * dp;
                    tj = u(trial(0), trial(1));
                    tres = std::hypot(tj.u[0], tj.u[1]);
                    if (tres < (1.0 - 1e-4 * t) * res) break;
                }
                if (!(tres < res)) break;
                p = trial;
                jt = tj;
                res = tres;
                if (std::abs(p(0) - x0) > 1.5 * hx || std::abs(p(1) - z0) > 1.5 * hz) {
                    inside = false;
                    break;
                }
            }
            if (!inside || p(1) <= wall_eps || p(1) >= 1.0 - wall_eps) continue;
            SingularPoint sp;
            sp.location = {u.wrap(p(0)), p(1)};
            sp.residual = res;
            sp.jacobian_det = jacobian_det(jt);
            if (res > opt.tol * sup) {
                // Newton stalled inside the cell: only a near-zero away from the walls counts
                if (res > 1e-6 * sup || p(1) < hz || p(1) > 1.0 - hz) continue;
                sp.kind = PointKind::Degenerate;
            } else if (std::abs(sp.jacobian_det) <= opt.det_tol * norms.jacobian * norms.jacobian) {
                sp.kind = PointKind::Degenerate;
            } else {
                sp.kind = sp.jacobian_det > 0.0 ? PointKind::Center : PointKind::InteriorSaddle;
            }
            merge_into(out, sp, u, opt.merge_fraction * L);
        }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.location < b.location; });
    return out;
}

std::vector<SingularPoint> find_boundary_singularities(const FlowField& u, const ScanOptions& opt) {
    const double L = u.period();
    const int n = 2 * opt.nx;
    const FieldNorms norms = field_norms(u);
    std::vector<SingularPoint> out;
    for (Wall w : {Wall::Bottom, Wall::Top}) {
        const double z = wall_height(w);
        const bool noslip = u.wall(w) == WallKind::NoSlip;
        auto g = [&](double x) {
            const Jet jt = u(x, z);
            return noslip ? jt.du[0][1] : jt.u[0];
        };
        std::vector<double> gs(n + 1);
        double gscale = 0.0, second = 0.0;
        for (int i = 0; i < n; ++i) {
            const Jet jt = u(i * L / n, z);
            gs[i] = noslip ? jt.du[0][1] : jt.u[0];
            gscale = std::max(gscale, std::abs(gs[i]));
            for (const auto& a : jt.d2u)
                for (const auto& b : a)
                    for (double v : b) second = std::max(second, std::abs(v));
        }
        gs[n] = gs[0];
        const double ref = noslip ? norms.jacobian : norms.sup;
        if (!(gscale > 1e-12 * ref) || ref == 0.0) {
            SingularPoint sp;
            sp.location = {0.0, z};
            sp.boundary = w;
            sp.kind = PointKind::Degenerate;
            sp.residual = gscale;
            out.push_back(sp);
            continue;
        }
        std::vector<double> roots;
        for (int i = 0; i < n; ++i) {
            const double a = i * L / n, b = (i + 1) * L / n;
            if (gs[i] == 0.0) {
                roots.push_back(a);
            } else if (gs[i] * gs[i + 1] < 0.0) {
                std::uintmax_t iters = 100;
                const auto r = boost::math::tools::toms748_solve(g, a, b, gs[i], gs[i + 1],
                                                                 boost::math::tools::eps_tolerance<double>(50), iters);
                roots.push_back(0.5 * (r.first + r.second));
            }
        }
        for (double x : roots) {
            const Jet jt = u(x, z);
            SingularPoint sp;
            sp.location = {u.wrap(x), z};
            sp.boundary = w;
            sp.residual = std::abs(noslip ? jt.du[0][1] : jt.u[0]);
            if (noslip) {
                sp.jacobian_det = wall_det(jt);
                sp.kind = std::abs(sp.jacobian_det) <= opt.det_tol * second * second ? PointKind::Degenerate
                                                                                      : PointKind::BoundarySaddle;
            } else {
                sp.jacobian_det = jacobian_det(jt);
                sp.kind = sp.jacobian_det < -opt.det_tol * norms.jacobian * norms.jacobian ? PointKind::InteriorSaddle
                                                                                            : PointKind::Degenerate;
            }
            merge_into(out, sp, u, opt.merge_fraction * L);
        }
    }
    return out;
}

Regularity d_regularity(const std::vector<SingularPoint>& points) {
    Regularity r;
    for (const auto& p : points) {
        if (p.kind != PointKind::Degenerate) continue;
        std::ostringstream os;
        os << "degenerate " << (p.boundary ? to_string(*p.boundary) + " wall" : std::string("interior")) << " point at "
           << format_point(p.location) << ", det " << p.jacobian_det << ", residual " << p.residual;
        r.witnesses.push_back(os.str());
    }
    r.d_regular = r.witnesses.empty();
    return r;
}

Regularity d_regularity(const FlowField& u, const ScanOptions& opt) {
    try {
        auto pts = find_interior_singularities(u, opt);
        const auto b = find_boundary_singularities(u, opt);
        pts.insert(pts.end(), b.begin(), b.end());
        return d_regularity(pts);
    } catch (const DegenerateField& e) {
        return {false, {e.what()}};
    }
}

bool ConnectionGraph::has_cross_channel() const {
    return std::any_of(edges.begin(), edges.end(), [](const Edge& e) { return e.cross_channel; });
}

bool ConnectionGraph::has_unresolved() const {
    return std::any_of(edges.begin(), edges.end(), [](const Edge& e) { return e.unresolved; });
}

namespace {

using State = std::array<double, 2>;

struct Branch {
    Point start;
    double sigma;  // +1 forward in time, -1 backward
};

std::vector<Branch> branches(const FlowField& u, const SingularPoint& p, double eps) {
    std::vector<Branch> out;
    const Jet jt = u(p.location[0], p.location[1]);
    if (p.kind == PointKind::BoundarySaddle) {
        const double s = *p.boundary == Wall::Bottom ? 1.0 : -1.0;
        const double A = s * jt.d2u[0][0][1];
        const double B = jt.d2u[0][1][1];
        Eigen::Vector2d d(-B / (3.0 * A), s);
        d.normalize();
        const Point q{p.location[0] + eps * d(0), p.location[1] + eps * d(1)};
        const Jet qj = u(q[0], q[1]);
        const double dot = qj.u[0] * d(0) + qj.u[1] * d(1);
        out.push_back({q, dot >= 0.0 ? 1.0 : -1.0});
        return out;
    }
    Eigen::Matrix2d J;
    J << jt.du[0][0], jt.du[0][1], jt.du[1][0], jt.du[1][1];
    Eigen::EigenSolver<Eigen::Matrix2d> es(J);
    for (int m = 0; m < 2; ++m) {
        const double lam = es.eigenvalues()(m).real();
        Eigen::Vector2d v = es.eigenvectors().col(m).real();
        if (v.norm() == 0.0) continue;
        v.normalize();
        for (double sgn : {1.0, -1.0}) {
            Point q{p.location[0] + sgn * eps * v(0), p.location[1] + sgn * eps * v(1)};
            if (p.boundary) {
                const double z = wall_height(*p.boundary);
                if (std::abs(v(1)) < 1e-8) q[1] = z;
                else if (q[1] < 0.0 || q[1] > 1.0) continue;
            }
            out.push_back({q, lam > 0.0 ? 1.0 : -1.0});
        }
    }
    return out;
}

Edge trace(const FlowField& u, const std::vector<SingularPoint>& nodes, int source, const Branch& br,
           const SeparatrixOptions& opt, double sup) {
    namespace ode = boost::numeric::odeint;
    const double scale = std::min(u.period(), 1.0);
    const double capture = opt.capture_radius * scale;
    const double hmax = opt.max_step * scale;
    const double budget = opt.arc_budget > 0.0 ? opt.arc_budget : 20.0 * (u.period() + 2.0);
    const Point origin = nodes[source].location;
    const bool on_wall = nodes[source].boundary && br.start[1] == wall_height(*nodes[source].boundary);

    Edge e;
    e.from = source;
    e.forward = br.sigma > 0.0;
    e.polyline = {origin, br.start};
    bool stalled = false;
    auto rhs = [&](const State& x, State& dx, double) {
        const Jet jt = u(x[0], x[1]);
        const double s = std::hypot(jt.u[0], jt.u[1]);
        if (!(s > 1e-12 * sup)) {
            stalled = true;
            dx = {0.0, 0.0};
            return;
        }
        dx = {br.sigma * jt.u[0] / s, on_wall ? 0.0 : br.sigma * jt.u[1] / s};
    };
    auto stepper = ode::make_controlled<ode::runge_kutta_dopri5<State>>(1e-12, opt.rel_tol);
    State x{br.start[0], br.start[1]};
    double s = 0.0, ds = 0.1 * hmax;
    while (true) {
        ds = std::min(ds, hmax);
        if (stepper.try_step(rhs, x, s, ds) != ode::success) {
            if (ds < 1e-14) {
                e.unresolved = true;
                break;
            }
            continue;
        }
        const Point here{x[0], x[1]};
        if (wrapped_distance(u, here, e.polyline.back()) > 0.2 * hmax) e.polyline.push_back(here);
        int hit = -1;
        for (std::size_t n = 0; n < nodes.size(); ++n) {
            if (static_cast<int>(n) == source && s < 3.0 * capture) continue;
            if (wrapped_distance(u, here, nodes[n].location) < capture) {
                hit = static_cast<int>(n);
                break;
            }
        }
        if (hit < 0 && (x[1] < 0.0 || x[1] > 1.0)) {
            const Wall w = x[1] < 0.0 ? Wall::Bottom : Wall::Top;
            double best = 5.0 * capture;
            for (std::size_t n = 0; n < nodes.size(); ++n) {
                if (nodes[n].boundary != w) continue;
                const double d = std::abs(std::remainder(x[0] - nodes[n].location[0], u.period()));
                if (d < best) {
                    best = d;
                    hit = static_cast<int>(n);
                }
            }
            if (hit < 0) {
                e.unresolved = true;
                break;
            }
        }
        if (hit >= 0) {
            e.to = hit;
            // close the polyline on the target, keeping x1 unwrapped
            const double dx = std::remainder(nodes[hit].location[0] - x[0], u.period());
            e.polyline.push_back({x[0] + dx, nodes[hit].location[1]});
            break;
        }
        if (stalled || s > budget) {
            e.unresolved = true;
            break;
        }
    }
    e.arc_length = s;
    return e;
}

}  // namespace

ConnectionGraph separatrix_graph(const FlowField& u, const std::vector<SingularPoint>& points,
                                 const SeparatrixOptions& opt) {
    ConnectionGraph g;
    for (const auto& p : points)
        if (is_saddle_type(p)) g.nodes.push_back(p);
    g.self_connected.assign(g.nodes.size(), false);
    if (g.nodes.empty()) return g;
    const double sup = field_norms(u).sup;
    const double eps = opt.start_offset * std::min(u.period(), 1.0);

    std::vector<std::future<std::vector<Edge>>> tasks;
    for (std::size_t n = 0; n < g.nodes.size(); ++n) {
        tasks.push_back(std::async(std::launch::async, [&, n] {
            std::vector<Edge> edges;
            for (const auto& br : branches(u, g.nodes[n], eps))
                edges.push_back(trace(u, g.nodes, static_cast<int>(n), br, opt, sup));
            return edges;
        }));
    }
    for (std::size_t n = 0; n < tasks.size(); ++n) {
        auto edges = tasks[n].get();
        bool self = !g.nodes[n].boundary && !edges.empty();
        for (auto& e : edges) {
            if (e.to >= 0) {
                const auto& a = g.nodes[e.from];
                const auto& b = g.nodes[e.to];
                e.cross_channel = a.boundary && b.boundary && *a.boundary != *b.boundary;
            }
            self = self && e.to == e.from;
            g.edges.push_back(std::move(e));
        }
        g.self_connected[n] = self;
    }
    return g;
}

StabilityVerdict structural_stability(const Regularity& reg, const ConnectionGraph& graph, SpaceTag space) {
    StabilityVerdict v;
    bool violated = false;
    if (reg.d_regular) {
        v.reasons.push_back("condition 1 holds: all singular points are non-degenerate");
    } else {
        violated = true;
        v.reasons.push_back("condition 1 fails: field is not regular");
        for (const auto& w : reg.witnesses) v.reasons.push_back("  " + w);
    }

    bool c2 = true;
    for (std::size_t n = 0; n < graph.nodes.size(); ++n) {
        const auto& p = graph.nodes[n];
        if (p.boundary || graph.self_connected[n]) continue;
        bool unresolved_only = true;
        for (const auto& e : graph.edges)
            if (e.from == static_cast<int>(n) && !e.unresolved && e.to != e.from) unresolved_only = false;
        if (unresolved_only) continue;
        c2 = false;
        v.reasons.push_back("condition 2 fails: interior saddle at " + format_point(p.location) +
                            " is connected to a different saddle");
    }
    if (c2) v.reasons.push_back("condition 2 holds: interior saddles are self-connected");
    violated = violated || !c2;

    bool c3 = true;
    for (const auto& e : graph.edges) {
        if (e.unresolved) continue;
        const auto& a = graph.nodes[e.from];
        if (!a.boundary) continue;
        const auto& b = graph.nodes[e.to];
        std::string why;
        if (!b.boundary) why = "ends at an interior saddle";
        else if (space != SpaceTag::B3 && *a.boundary != *b.boundary) why = "crosses the channel";
        if (why.empty()) continue;
        c3 = false;
        v.reasons.push_back("condition 3 fails: separatrix of the " + to_string(*a.boundary) + " wall saddle at " +
                            format_point(a.location) + " " + why);
    }
    if (c3)
        v.reasons.push_back(space == SpaceTag::B3
                                ? "condition 3 holds: boundary saddles connect to boundary saddles"
                                : "condition 3 holds: boundary saddles connect to saddles on their own wall");
    violated = violated || !c3;

    if (violated) {
        v.verdict = Verdict::Unstable;
    } else if (graph.has_unresolved()) {
        v.verdict = Verdict::Unknown;
        v.reasons.push_back("some separatrices are unresolved");
    } else {
        v.verdict = Verdict::Stable;
    }
    return v;
}

int TopologyReport::count(PointKind k, bool on_boundary) const {
    return static_cast<int>(std::count_if(points.begin(), points.end(), [&](const SingularPoint& p) {
        return p.kind == k && p.boundary.has_value() == on_boundary;
    }));
}

TopologyReport classify_regime(const FlowField& u, const ClassifyOptions& opt) {
    TopologyReport rep;
    rep.period = u.period();
    rep.norms = field_norms(u);
    const SpaceTag spaces[] = {SpaceTag::B0, SpaceTag::B1, SpaceTag::B2, SpaceTag::B3};
    if (!(rep.norms.sup >= opt.noise_floor)) {
        rep.regime = Regime::Degenerate;
        rep.regularity = {false, {"velocity below the noise floor"}};
        for (auto s : spaces) rep.stability[s] = {Verdict::Unknown, {"velocity below the noise floor"}};
        return rep;
    }
    rep.points = find_interior_singularities(u, opt.scan);
    const auto b = find_boundary_singularities(u, opt.scan);
    rep.points.insert(rep.points.end(), b.begin(), b.end());
    rep.regularity = d_regularity(rep.points);
    rep.graph = separatrix_graph(u, rep.points, opt.separatrix);
    for (auto s : spaces) rep.stability[s] = structural_stability(rep.regularity, rep.graph, s);

    const double M = rep.norms.mean_flow;
    rep.mean_flow_sign = std::abs(M) < opt.mean_flow_threshold * rep.norms.rms * u.period() ? 0 : (M > 0 ? 1 : -1);
    const bool rolls = rep.centers() > 0;
    const bool cross = rep.graph.has_cross_channel();
    if (rolls && cross && rep.mean_flow_sign == 0) rep.regime = Regime::PureRolls;
    else if (rolls && !cross && rep.mean_flow_sign < 0) rep.regime = Regime::MeanderA;
    else if (rolls && !cross && rep.mean_flow_sign > 0) rep.regime = Regime::MeanderB;
    else rep.regime = Regime::Other;
    return rep;
}

TopologyReport classify_regime(const SpectralField& psi, const ClassifyOptions& opt) {
    return classify_regime(FlowField::from_spectral(psi), opt);
}

SpectralField roll_template(const spectral::DiscretizationPtr& disc, double R, double r) {
    using spectral::Discretization;
    using spectral::Parity;
    const auto e = stability::build_eigenvector_2d(disc, 1, 1, Parity::Sin, R);
    const int n = disc->vertical_size();
    const auto col = Discretization::column(1, Parity::Sin);
    const Eigen::VectorXd h = e.coeffs().col(col).head(n);
    Eigen::MatrixXd v(1, n);
    disc->stream_basis().evaluate(0.5, 0, v);
    const double mid = (v * h)(0);
    if (std::abs(mid) < 1e-12 * h.norm()) throw std::domain_error("leading profile vanishes at mid-depth");
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(disc->rows(), disc->cols());
    c.col(col).head(n) = (r / mid) * h;
    return {disc, std::move(c)};
}

void write_report_json(std::ostream& os, const TopologyReport& rep) {
    using nlohmann::json;
    json j;
    j["period"] = rep.period;
    j["regime"] = to_string(rep.regime);
    j["mean_flow"] = rep.norms.mean_flow;
    j["mean_flow_sign"] = rep.mean_flow_sign;
    j["rms_speed"] = rep.norms.rms;
    j["max_speed"] = rep.norms.sup;
    j["d_regular"] = rep.regularity.d_regular;
    j["regularity_witnesses"] = rep.regularity.witnesses;
    j["counts"] = {{"centers", rep.centers()},
                   {"interior_saddles", rep.interior_saddles()},
                   {"boundary_saddles", rep.boundary_saddles()},
                   {"wall_saddles", rep.count(PointKind::InteriorSaddle, true)},
                   {"degenerate", rep.count(PointKind::Degenerate, false) + rep.count(PointKind::Degenerate, true)}};
    json pts = json::array();
    for (const auto& p : rep.points) {
        json q = {{"x1", p.location[0]},
                  {"x2", p.location[1]},
                  {"kind", to_string(p.kind)},
                  {"det", p.jacobian_det},
                  {"residual", p.residual}};
        q["boundary"] = p.boundary ? json(to_string(*p.boundary)) : json(nullptr);
        pts.push_back(q);
    }
    j["points"] = pts;
    json edges = json::array();
    for (std::size_t i = 0; i < rep.graph.edges.size(); ++i) {
        const auto& e = rep.graph.edges[i];
        edges.push_back({{"id", i},
                         {"from", e.from},
                         {"to", e.to},
                         {"forward", e.forward},
                         {"unresolved", e.unresolved},
                         {"cross_channel", e.cross_channel},
                         {"arc_length", e.arc_length},
                         {"vertices", e.polyline.size()}});
    }
    json nodes = json::array();
    for (std::size_t n = 0; n < rep.graph.nodes.size(); ++n) {
        const auto& p = rep.graph.nodes[n];
        nodes.push_back({{"x1", p.location[0]},
                         {"x2", p.location[1]},
                         {"kind", to_string(p.kind)},
                         {"self_connected", static_cast<bool>(rep.graph.self_connected[n])}});
    }
    j["graph"] = {{"nodes", nodes},
                  {"edges", edges},
                  {"cross_channel", rep.graph.has_cross_channel()},
                  {"unresolved", rep.graph.has_unresolved()}};
    json st;
    for (const auto& [space, v] : rep.stability)
        st[spectral::to_string(space)] = {{"verdict", to_string(v.verdict)}, {"reasons", v.reasons}};
    j["structural_stability"] = st;
    os << j.dump(2) << '\n';
}

void write_polylines_csv(std::ostream& os, const TopologyReport& rep) {
    os << "edge,from,to,point,x1,x2\n" << std::setprecision(12);
    for (std::size_t i = 0; i < rep.graph.edges.size(); ++i) {
        const auto& e = rep.graph.edges[i];
        for (std::size_t k = 0; k < e.polyline.size(); ++k) {
            double x = std::fmod(e.polyline[k][0], rep.period);
            if (x < 0.0) x += rep.period;
            os << i << ',' << e.from << ',' << e.to << ',' << k << ',' << x << ',' << e.polyline[k][1] << '\n';
        }
    }
}

namespace {

std::vector<Point> streamline(const FlowField& u, Point p, double sigma, double arc, double h, double floor) {
    std::vector<Point> out{p};
    auto dir = [&](const Point& q, bool& ok) {
        const Jet jt = u(q[0], q[1]);
        const double s = std::hypot(jt.u[0], jt.u[1]);
        ok = s > floor;
        return ok ? Point{sigma * jt.u[0] / s, sigma * jt.u[1] / s} : Point{0.0, 0.0};
    };
    for (double s = 0.0; s < arc; s += h) {
        bool ok = true;
        const Point k1 = dir(p, ok);
        const Point k2 = dir({p[0] + 0.5 * h * k1[0], p[1] + 0.5 * h * k1[1]}, ok);
        const Point k3 = dir({p[0] + 0.5 * h * k2[0], p[1] + 0.5 * h * k2[1]}, ok);
        const Point k4 = dir({p[0] + h * k3[0], p[1] + h * k3[1]}, ok);
        if (!ok) break;
        p = {p[0] + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
             p[1] + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
        if (p[1] < 0.0 || p[1] > 1.0) break;
        out.push_back(p);
    }
    return out;
}

}  // namespace

void write_svg(std::ostream& os, const FlowField& u, const TopologyReport& rep) {
    const double L = u.period();
    const double W = 900.0, H = W / L, m = 20.0;
    auto X = [&](double x) { return m + x / L * W; };
    auto Y = [&](double z) { return m + (1.0 - z) * H; };
    auto path = [&](const std::vector<Point>& pts, const char* style) {
        // split where the wrapped x1 jumps across the period boundary
        std::string d;
        double prev = 0.0;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            double x = std::fmod(pts[k][0], L);
            if (x < 0.0) x += L;
            const bool jump = k == 0 || std::abs(x - prev) > 0.5 * L;
            std::ostringstream seg;
            seg << std::fixed << std::setprecision(2) << (jump ? "M" : "L") << X(x) << ' ' << Y(pts[k][1]) << ' ';
            d += seg.str();
            prev = x;
        }
        os << "<path d=\"" << d << "\" " << style << "/>\n";
    };
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W + 2 * m << "\" height=\"" << H + 2 * m << "\">\n";
    os << "<rect x=\"" << m << "\" y=\"" << m << "\" width=\"" << W << "\" height=\"" << H
       << "\" fill=\"white\" stroke=\"black\"/>\n";
    const double floor = 1e-8 * std::max(rep.norms.sup, 1e-300);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 5; ++j) {
            const Point seed{(i + 0.5) * L / 8.0, (j + 0.5) / 5.0};
            for (double sg : {1.0, -1.0})
                path(streamline(u, seed, sg, 0.5 * (L + 1.0), 0.01, floor),
                     "fill=\"none\" stroke=\"#999\" stroke-width=\"0.8\"");
        }
    for (const auto& e : rep.graph.edges)
        path(e.polyline, e.unresolved ? "fill=\"none\" stroke=\"orange\" stroke-width=\"1.5\" stroke-dasharray=\"4 3\""
                                      : "fill=\"none\" stroke=\"red\" stroke-width=\"1.5\"");
    for (const auto& p : rep.points) {
        const double x = X(p.location[0]), y = Y(p.location[1]);
        os << std::fixed << std::setprecision(2);
        switch (p.kind) {
            case PointKind::Center:
                os << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"4\" fill=\"blue\"/>\n";
                break;
            case PointKind::InteriorSaddle:
                os << "<rect x=\"" << x - 4 << "\" y=\"" << y - 4 << "\" width=\"8\" height=\"8\" fill=\"red\"/>\n";
                break;
            case PointKind::BoundarySaddle:
                os << "<polygon points=\"" << x - 5 << ',' << y + 4 << ' ' << x + 5 << ',' << y + 4 << ' ' << x << ','
                   << y - 5 << "\" fill=\"green\"/>\n";
                break;
            case PointKind::Degenerate:
                os << "<text x=\"" << x - 4 << "\" y=\"" << y + 4 << "\" font-size=\"12\">x</text>\n";
                break;
        }
    }
    os << "<text x=\"" << m << "\" y=\"" << H + 2 * m - 4 << "\" font-size=\"12\">" << to_string(rep.regime)
       << "</text>\n</svg>\n";
    os.unsetf(std::ios::floatfield);
}

}  // namespace rbc::topology
