#pragma once

#include "rbc/spectral/field.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbc::topology {

using spectral::SpaceTag;
using spectral::SpectralField;
using Jet = SpectralField::PointJet;
using Point = std::array<double, 2>;

enum class Wall { Bottom, Top };
enum class WallKind { NoSlip, Free };
enum class PointKind { Center, InteriorSaddle, BoundarySaddle, Degenerate };
enum class Regime { PureRolls, MeanderA, MeanderB, Degenerate, Other };

std::string to_string(Wall w);
std::string to_string(PointKind k);
std::string to_string(Regime r);

/// Thrown when the velocity is too small to carry any structure.
class DegenerateField : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Velocity on the channel (0, L) x (0, 1), periodic in x1. The jet supplies u,
/// Du and the second derivatives; x1 is wrapped into [0, L) before the call.
class FlowField {
public:
    using JetFn = std::function<Jet(double, double)>;

    FlowField(double L, JetFn jet, WallKind bottom, WallKind top);
    static FlowField from_spectral(const SpectralField& psi);

    [[nodiscard]] double period() const { return L_; }
    [[nodiscard]] WallKind wall(Wall w) const { return w == Wall::Bottom ? bottom_ : top_; }
    [[nodiscard]] Jet operator()(double x1, double x2) const;
    [[nodiscard]] double wrap(double x1) const;

private:
    double L_;
    JetFn jet_;
    WallKind bottom_, top_;
};

struct FieldNorms {
    double sup = 0.0;        // max |u| on the sampling grid
    double rms = 0.0;        // sqrt(mean |u|^2)
    double mean_flow = 0.0;  // M = int int u1
    double jacobian = 0.0;   // max Frobenius norm of Du on the sampling grid
};
FieldNorms field_norms(const FlowField& u, int nx = 64, int nz = 40);

struct SingularPoint {
    Point location{};
    PointKind kind = PointKind::Degenerate;
    /// det Du for points found by the ordinary analysis, the wall determinant
    /// of second derivatives for no-slip wall points.
    double jacobian_det = 0.0;
    std::optional<Wall> boundary;
    double residual = 0.0;  // |u| (or |du_tau/dn| on a no-slip wall) at the point
};

struct ScanOptions {
    int nx = 128;                         // screening cells along x1
    int nz = 64;                          // screening cells along x2
    double tol = 1e-10;                   // |u| <= tol * max|u|
    double merge_fraction = 1e-3;         // merge radius as a fraction of L
    double det_tol = 1e-6;                // |det| <= det_tol * scale^2 is degenerate
};

/// Zeros of u in the open channel: sign screening per cell, damped Newton polish,
/// classification by det Du. Zeros within a quarter cell of a wall are left to
/// find_boundary_singularities. Throws DegenerateField when u vanishes identically.
std::vector<SingularPoint> find_interior_singularities(const FlowField& u, const ScanOptions& opt = {});

/// No-slip walls: zeros of du_tau/dn classified by the wall determinant
/// (BoundarySaddle or Degenerate). Free walls: zeros of u1 on the wall,
/// reported as ordinary saddles with the boundary set.
std::vector<SingularPoint> find_boundary_singularities(const FlowField& u, const ScanOptions& opt = {});

struct Regularity {
    bool d_regular = false;
    std::vector<std::string> witnesses;  // one line per degenerate point
};
Regularity d_regularity(const std::vector<SingularPoint>& points);
Regularity d_regularity(const FlowField& u, const ScanOptions& opt = {});

struct Edge {
    int from = -1;
    int to = -1;             // node index, -1 when unresolved
    bool forward = true;     // integrated forward in time: the flow runs from -> to
    bool unresolved = false;
    bool cross_channel = false;
    double arc_length = 0.0;
    std::vector<Point> polyline;  // x1 unwrapped along the orbit
};

struct ConnectionGraph {
    std::vector<SingularPoint> nodes;  // saddle-type points
    std::vector<Edge> edges;
    std::vector<bool> self_connected;  // per node; true for interior saddles whose branches all return

    [[nodiscard]] bool has_cross_channel() const;
    [[nodiscard]] bool has_unresolved() const;
};

struct SeparatrixOptions {
    double start_offset = 1e-4;    // times min(L, 1)
    double capture_radius = 5e-3;  // times min(L, 1)
    double max_step = 0.02;        // largest arc-length step, times min(L, 1)
    double rel_tol = 1e-9;
    double arc_budget = 0.0;       // 0: 20 (L + 2)
};

/// Traces every separatrix of the saddle-type points in `points` (others are
/// ignored) by arc-length streamline integration, one task per saddle.
ConnectionGraph separatrix_graph(const FlowField& u, const std::vector<SingularPoint>& points,
                                 const SeparatrixOptions& opt = {});

enum class Verdict { Stable, Unstable, Unknown };
std::string to_string(Verdict v);

struct StabilityVerdict {
    Verdict verdict = Verdict::Unknown;
    std::vector<std::string> reasons;
    [[nodiscard]] bool stable() const { return verdict == Verdict::Stable; }
};

/// The three conditions for the given space: D-regularity, self-connected
/// interior saddles, and boundary saddles connected only to boundary saddles on
/// the same wall (B0, B1, B2) or on any wall (B3).
StabilityVerdict structural_stability(const Regularity& reg, const ConnectionGraph& graph, SpaceTag space);

struct TopologyReport {
    std::vector<SingularPoint> points;
    ConnectionGraph graph;
    Regularity regularity;
    std::map<SpaceTag, StabilityVerdict> stability;
    Regime regime = Regime::Other;
    int mean_flow_sign = 0;
    FieldNorms norms;
    double period = 0.0;

    [[nodiscard]] bool d_regular() const { return regularity.d_regular; }
    [[nodiscard]] int count(PointKind k, bool on_boundary) const;
    [[nodiscard]] int centers() const { return count(PointKind::Center, false); }
    [[nodiscard]] int interior_saddles() const { return count(PointKind::InteriorSaddle, false); }
    [[nodiscard]] int boundary_saddles() const { return count(PointKind::BoundarySaddle, true); }
    [[nodiscard]] bool structurally_stable(SpaceTag s) const { return stability.at(s).stable(); }
};

struct ClassifyOptions {
    ScanOptions scan;
    SeparatrixOptions separatrix;
    double mean_flow_threshold = 1e-8;  // |M| < threshold * rms * L counts as zero
    double noise_floor = 1e-14;         // max|u| below this: Degenerate
};

/// Full analysis. PureRolls: cross-channel separatrices, M = 0. MeanderA / MeanderB:
/// no cross-channel separatrices, M < 0 / M > 0. Both need at least one center.
TopologyReport classify_regime(const FlowField& u, const ClassifyOptions& opt = {});
TopologyReport classify_regime(const SpectralField& psi, const ClassifyOptions& opt = {});

/// r (cos(a x1) h'(x2), a sin(a x1) h(x2)) with h the leading k = 1 profile at R,
/// scaled to h(1/2) = 1; temperature zero.
SpectralField roll_template(const spectral::DiscretizationPtr& disc, double R, double r = 1.0);

void write_report_json(std::ostream& os, const TopologyReport& rep);
/// Columns edge,from,to,point,x1,x2 with x1 wrapped into [0, L).
void write_polylines_csv(std::ostream& os, const TopologyReport& rep);
/// Streamlines, separatrices and singular points on one period cell.
void write_svg(std::ostream& os, const FlowField& u, const TopologyReport& rep);

}  // namespace rbc::topology
