#pragma once
#include <vector>

#include "ksub/plane.hpp"

namespace ksub {

struct CurveVertex {
    int chart = 0;
    double u = 0, v = 0; // surface parameters
    Point3 xyz;
    PlaneCoord pc;       // flat plane coordinates
    double arc = 0;      // cumulative arc length in the plane
    double curvature = 0; // geodesic curvature in the plane (filled by fits)
    double transversality = 0; // |gradient of the signed distance along the surface|
};

struct IntersectionCurve {
    std::vector<CurveVertex> pts;
    bool closed = false;
    bool touches_param_boundary = false; // open ends on the chart boundary
    double min_transversality = 0;
    double plane_diameter = 0; // diameter of the vertex set in (s, eta)

    Point2 base_centroid() const;
};

double plane_diameter_of(const IntersectionCurve& curve);

struct IntersectOptions {
    int grid_u = 0, grid_v = 0;   // 0: use the chart's declared resolution
    double transversality_floor = 1e-4;
    bool throw_on_tangency = true;
    int min_vertices = 6;         // discard fragments below this size
};

// Zero set of the signed base distance along the surface, extracted by
// marching squares on the marching chart and chained into components.
// Fragments separated by chart degeneracies (sphere poles, seam insets) are
// stitched back by endpoint proximity in the ambient chart.
std::vector<IntersectionCurve> intersect(const SubmersionModel& m, const ImmersedSurface& surf,
                                         const VerticalPlane& plane,
                                         const IntersectOptions& opt = {});

// Joins open fragments whose endpoints coincide across chart degeneracies;
// exposed for tests.
void stitch_chart_seams(std::vector<IntersectionCurve>& curves);

struct ConvexityReport {
    bool passes = false;
    bool sign_constant = false;
    double min_abs_curvature = 0;
    double max_abs_curvature = 0;
    double margin = 1e-3; // required uniform lower bound on |curvature|
};

// Strict convexity of the section inside the flat plane: nowhere-vanishing,
// constant-sign curvature with a uniform margin. Curvatures come from local
// quadratic fits over an arc-length window; open ends are trimmed by half a
// window where the fit is one-sided.
ConvexityReport convexity_check(const SubmersionModel& m, IntersectionCurve& curve,
                                const VerticalPlane& plane, double margin = 1e-3,
                                double fit_window = 0.25);

enum class Tilt { Tilted, Untilted, NotApplicable };

struct PlaneWindow {
    double s_min = -8, s_max = 8;
    double eta_min = -8, eta_max = 8;

    bool inside(PlaneCoord c) const {
        return c.s > s_min && c.s < s_max && c.eta > eta_min && c.eta < eta_max;
    }
};

struct TiltReport {
    Tilt cls = Tilt::NotApplicable;
    bool used_positive_ray = false; // vertical flow direction that stays inside
    double s_extremum = 0;
};

// Classification of a complete convex curve in the plane: untilted when a
// vertical ray from an interior s-extremum stays inside the convex side
// within the window, tilted otherwise. Throws WindowTooSmall when the
// answer flips between the full and the halved window.
TiltReport tilt_classify(const IntersectionCurve& curve, const PlaneWindow& window);

} // namespace ksub
