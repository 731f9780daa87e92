#pragma once
#include <vector>

#include "ksub/submersion.hpp"
#include "ksub/surface.hpp"

namespace ksub {

struct PlaneCoord {
    double s = 0;   // arc length along the base geodesic
    double eta = 0; // flat height coordinate t + W(s)
};

// Vertical plane over an oriented base geodesic. The induced metric is flat;
// (s, eta) with eta = t + W(s), W' = omega(alpha'), are Euclidean
// coordinates on it.
class VerticalPlane {
public:
    const SubmersionModel* model = nullptr;
    GeodesicPath alpha;        // oriented trace of the base geodesic
    std::vector<double> W;     // cumulative connection integral per sample
    IdealPoint backward, forward;
    bool has_ideal_points = false;

    double w_at(double s) const;            // interpolated W(s)
    PlaneCoord project(Point3 p) const;     // base-project then lift to (s, eta)
    Point3 embed(PlaneCoord c) const;       // inverse: point of the plane
    double signed_base_distance(Point2 q) const;
    Side base_side(Point2 q) const;
};

VerticalPlane make_vertical_plane(const SubmersionModel& m, GeodesicPath alpha);
VerticalPlane make_vertical_plane(const SubmersionModel& m, const OrientedGeodesic& alpha);

// Oriented family of vertical planes along a horizontal geodesic beta:
// plane k sits over the leaf through beta(t_k) orthogonal to beta, oriented
// continuously with the base plane.
struct PlaneFoliation {
    GeodesicPath beta;
    std::vector<double> t_grid;
    std::vector<VerticalPlane> planes;
};

// Base plane from ideal endpoints; beta starts at the anchor arc length on
// it and points into the exterior side.
PlaneFoliation make_plane_foliation(const SubmersionModel& m, IdealPoint th1, IdealPoint th2,
                                    const std::vector<double>& t_grid, double anchor_s = 0.0,
                                    double leaf_extent = 12.0);
// Same family with beta given directly.
PlaneFoliation make_plane_foliation_along(const SubmersionModel& m, GeodesicPath beta,
                                          const std::vector<double>& t_grid,
                                          double leaf_extent = 12.0);

} // namespace ksub
