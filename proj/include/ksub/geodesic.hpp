#pragma once
#include <optional>
#include <utility>
#include <vector>

#include "ksub/base_model.hpp"

namespace ksub {

struct PathSample {
    double s = 0;
    Point2 p;
    Vec2 d; // chart derivative dp/ds; metric norm 1
};

// Arc-length sampled geodesic. Samples are uniformly spaced; the direction
// field is continuous along the table. A trace that reaches the numeric
// resolution of the chart boundary stops early and is flagged saturated.
class GeodesicPath {
public:
    std::vector<PathSample> samples;
    double ds = 0;
    bool saturated_forward = false;
    bool saturated_backward = false;

    double s_min() const { return samples.front().s; }
    double s_max() const { return samples.back().s; }
    size_t size() const { return samples.size(); }

    // Hermite interpolation of position (directions are exact derivatives),
    // linear interpolation of direction.
    PathSample at(double s) const;

    // Index of the sample nearest in chart distance to q, scanning with the
    // given stride and refining locally.
    size_t nearest_sample(Point2 q, size_t stride = 8) const;
};

struct IdealPoint {
    double theta = 0; // angle in [0, 2pi) of the tangent circle at the basepoint

    static IdealPoint from_angle(double a);
    bool same_as(const IdealPoint& o, double tol = 1e-4) const;
};

// Smallest signed difference a - b of two angles, in (-pi, pi].
double angle_diff(double a, double b);

struct OrientedGeodesic {
    GeodesicPath path;      // two-sided trace through an interior point
    IdealPoint backward;    // limit for s -> -inf
    IdealPoint forward;     // limit for s -> +inf
};

enum class Side { Interior, Exterior, On };

struct TriangleReport {
    double a = 0, b = 0, c = 0;          // side lengths opposite p, q, r
    double alpha = 0, beta = 0, gamma = 0; // angles at p, q, r
    double slack_law_of_cosines = 0;     // c^2 - (a^2 + b^2 - 2ab cos(gamma))
    double slack_double_law = 0;         // (b cos(alpha) + a cos(beta)) - c
    double slack_angle_sum = 0;          // pi - (alpha + beta + gamma)
};

struct ConnectResult {
    GeodesicPath path;
    double distance = 0;
    double initial_angle = 0; // chart angle of the initial direction at p
};

struct FootResult {
    Point2 foot;
    double distance = 0;
    double s_at_foot = 0;
    double orthogonality_residual = 0; // |angle - pi/2| at the foot, radians
};

struct DisjointnessWitness {
    double min_chart_distance = 1e300;
    double local_sample_gap = 0; // chart sample spacing near the closest approach
    size_t leaf_i = 0, leaf_j = 0;
    bool crossing_found = false; // exact polyline segment intersection

    bool separated(double factor = 10.0) const {
        return !crossing_found && min_chart_distance > factor * local_sample_gap;
    }
    // For families whose leaves share an ideal anchor: no sampling scale can
    // resolve the asymptotic approach, so the witness is crossing-freeness
    // plus an absolute margin away from the anchor.
    bool disjoint_with_margin(double abs_margin = 1e-6) const {
        return !crossing_found && min_chart_distance > abs_margin;
    }
};

// --- traces ---------------------------------------------------------------

// Unit-speed geodesic from p in direction v (must be metric-unit), sampled on
// [0, s_max]. Throws ChartExit on non-complete models whose chart boundary is
// reached, StepFailure if the integrator cannot meet tolerance.
GeodesicPath geodesic_trace(const HadamardModel& m, Point2 p, Vec2 v, double s_max,
                            double ds = 0);

// Two-sided trace on [-s_extent, s_extent] with a continuous direction field.
GeodesicPath trace_complete(const HadamardModel& m, Point2 p, Vec2 v, double s_extent,
                            double ds = 0);

// Max geodesic-equation residual over interior samples, via a fourth-order
// finite difference of the stored direction table. Independent of the
// integrator's own error control.
double max_geodesic_residual(const HadamardModel& m, const GeodesicPath& path);
double max_speed_error(const HadamardModel& m, const GeodesicPath& path);

// Chart acceleration of a unit-speed geodesic through (p, v): the right-hand
// side of the geodesic equation. Lets path consumers interpolate directions
// with Hermite accuracy.
Vec2 geodesic_acceleration(const HadamardModel& m, Point2 p, Vec2 v);

// --- two-point and ideal-point problems ------------------------------------

// Unique geodesic from p to q by shooting on the initial angle.
ConnectResult connect(const HadamardModel& m, Point2 p, Point2 q);

// Distance only (no path table); cheaper than connect().
double distance(const HadamardModel& m, Point2 p, Point2 q);

// Angle at p subtended by q and r, in [0, pi].
double angle_at(const HadamardModel& m, Point2 p, Point2 q, Point2 r);

// Asymptotic class of the ray from p in direction v, as the angle at the
// basepoint. Throws NoStabilization when the drift criterion is not met
// before the arc-length cutoff.
IdealPoint ideal_point(const HadamardModel& m, Point2 p, Vec2 v);

// Oriented geodesic with prescribed ideal endpoints, by a two-parameter
// shooting solve (offset along a transversal + direction).
OrientedGeodesic ideal_geodesic(const HadamardModel& m, IdealPoint th1, IdealPoint th2,
                                double trace_extent = 0);

// Side of p relative to the oriented trace: Exterior is the side the
// counter-clockwise rotation of the tangent points to; points within the
// geometric tolerance of the trace report On.
Side side_of(const HadamardModel& m, const GeodesicPath& oriented_trace, Point2 p);

// Signed chart-scaled distance from p to the trace: positive on the Exterior
// side. Approximates the metric distance near the trace.
double signed_distance(const HadamardModel& m, const GeodesicPath& trace, Point2 p);

TriangleReport triangle_checks(const HadamardModel& m, Point2 p, Point2 q, Point2 r);

// Closest point on alpha to p; the connecting geodesic meets alpha
// orthogonally (residual reported).
FootResult foot_of_perpendicular(const HadamardModel& m, const GeodesicPath& alpha, Point2 p);

// Geodesics through alpha(s) orthogonal to alpha, for each grid value.
std::vector<GeodesicPath> foliation_orthogonal(const HadamardModel& m, const GeodesicPath& alpha,
                                               const std::vector<double>& s_grid,
                                               double leaf_extent = 12.0);

// Geodesics alpha(x0, y) for each y in the grid.
std::vector<OrientedGeodesic> foliation_from_infinity(const HadamardModel& m, IdealPoint x0,
                                                      const std::vector<IdealPoint>& thetas,
                                                      double trace_extent = 0);

// Smallest pairwise chart distance between leaves, with the local sampling
// gap at the closest approach as the comparison scale, plus an exact
// segment-crossing scan. Leaves of an ideal-point foliation all run into the
// shared anchor on the chart boundary, where no finite sampling can resolve
// separation; pass that boundary point in exclude_near to measure the
// distance witness away from it (crossing detection still covers the full
// traces).
DisjointnessWitness leaves_disjointness(const std::vector<const GeodesicPath*>& leaves,
                                        std::optional<Point2> exclude_near = std::nullopt,
                                        double exclude_radius = 0.05);

} // namespace ksub
