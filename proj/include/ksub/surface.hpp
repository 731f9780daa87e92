#pragma once
#include <functional>
#include <string>
#include <vector>

#include "ksub/submersion.hpp"

namespace ksub {

// One parameter chart of an immersed surface. Derivatives come from the
// analytic supplier when present, otherwise from central differences with
// the declared steps.
struct SurfaceChart {
    double u0 = 0, u1 = 1, v0 = 0, v1 = 1;
    bool periodic_u = false;
    std::function<Point3(double, double)> f;
    std::function<void(double, double, Vec3&, Vec3&)> jac; // optional
    // optional exact first fundamental form (E, F, G) for intrinsic curvature
    std::function<void(const SubmersionModel&, double, double, double&, double&, double&)> first_form;
    double fd_step = 1e-6;
    double fd_step2 = 1e-4;
    int nu = 64, nv = 64;
    // Region of this chart used by whole-surface scans; lets overlapping
    // charts tile a closed surface without double counting.
    std::function<bool(double, double)> active; // null = everywhere
};

struct ImmersedSurface {
    std::vector<SurfaceChart> charts;
    int marching_chart = 0; // chart whose rectangle is used for plane sections
    bool orientation_flip = false;
    bool declared_complete = true;
    bool declared_compact = true;
    std::string name = "surface";

    ImmersedSurface flipped() const {
        ImmersedSurface s = *this;
        s.orientation_flip = !s.orientation_flip;
        return s;
    }
};

struct SurfaceSamplePoint {
    int chart = 0;
    double u = 0, v = 0;
};

std::vector<SurfaceSamplePoint> sample_grid(const ImmersedSurface& surf);

// Pointwise extrinsic and intrinsic data of the immersion.
struct SurfaceGeometry {
    Point3 p;
    Vec3 fu, fv;              // chart derivatives of the immersion
    double E = 0, F = 0, G = 0; // first fundamental form
    double II11 = 0, II12 = 0, II21 = 0, II22 = 0;
    Vec3 N;                   // unit normal (orientation applied)
    double nu = 0;            // angle function <N, xi>
    Vec3 T;                   // xi - nu N
    double k1 = 0, k2 = 0;    // principal curvatures, k1 <= k2
    double H = 0, Ke = 0;
    double K = 0;             // intrinsic curvature, Brioschi from I alone
    double selfadjoint_residual = 0;
    double min_eig_I = 0;
};

SurfaceGeometry surface_geometry(const SubmersionModel& m, const ImmersedSurface& surf,
                                 int chart, double u, double v);

// Brioschi curvature from first-form samples only (no normal involved).
double intrinsic_curvature_brioschi(const SubmersionModel& m, const ImmersedSurface& surf,
                                    int chart, double u, double v);

// --- base curves and cylinders ----------------------------------------------

// Unit-speed curve in the base chart with derivative suppliers.
struct BaseCurve {
    std::function<Point2(double)> pos;
    std::function<Vec2(double)> vel;
    std::function<Vec2(double)> acc;
    double s0 = 0, s1 = 1;
};

// Hyperbolic circle of the given metric radius about the chart origin,
// counter-clockwise.
BaseCurve circle_curve(const HadamardModel& m, double radius);
// Curve wrapper over a traced geodesic. The curve keeps a reference to the
// model for Hermite-accurate direction interpolation; it must not outlive it.
BaseCurve geodesic_curve(const HadamardModel& m, GeodesicPath path);
// Unit-speed curve with prescribed geodesic curvature profile, integrated
// from a start point and direction.
BaseCurve prescribed_curvature_curve(const HadamardModel& m,
                                     const std::function<double(double)>& k_profile,
                                     Point2 start, double start_angle, double s_extent);

// Signed geodesic curvature with respect to the counter-clockwise normal.
double geodesic_curvature(const HadamardModel& m, const BaseCurve& curve, double s);

struct VerticalCylinder {
    BaseCurve base_curve;
    ImmersedSurface surface; // parameters (s, t)
};

VerticalCylinder make_vertical_cylinder(const SubmersionModel& m, BaseCurve curve,
                                        double t0, double t1, const std::string& name);

struct CylinderGeometry {
    // second fundamental form in the ordered orthonormal basis (xi, T)
    double II[2][2] = {{0, 0}, {0, 0}};
    double H = 0;
    double K = 0;  // intrinsic (Brioschi)
    double Ke = 0; // determinant of II
    double nu = 0;
    double k_g = 0; // geodesic curvature of the base curve at s
    double tau = 0; // bundle curvature at the sample
};

CylinderGeometry cylinder_geometry(const SubmersionModel& m, const VerticalCylinder& cyl,
                                   double s, double t = 0.0);

// --- graphs and fixtures -----------------------------------------------------

// Killing graph over a disk of the given chart radius, height from an
// expression in the base chart coordinates.
ImmersedSurface make_killing_graph(const SubmersionModel& m, const std::string& height_expr,
                                   double chart_radius, int n = 96,
                                   const std::string& name = "graph");
ImmersedSurface make_killing_graph(const SubmersionModel& m,
                                   std::function<Jet2(double, double)> height,
                                   double chart_radius, int n = 96,
                                   const std::string& name = "graph");

// Distance sphere of the product model over the kappa = -a^2 disk, centered
// on the fiber through the chart origin; closed-form chart plus a rotated
// chart covering the poles.
ImmersedSurface geodesic_sphere_product(const SubmersionModel& m, double radius,
                                        int n_theta = 96, int n_phi = 48);

// Transition map between the two direction charts used by the spheres:
// parameters of the same surface point in the other chart.
// chart 0: v(th, ph) = (cos ph cos th, cos ph sin th, sin ph)
// chart 1: v(th, ph) = (sin ph, cos ph sin th, -cos ph cos th)
std::pair<double, double> sphere_chart_transition(int from_chart, double u, double v);

// Distance sphere of an arbitrary model via 3D geodesic integration.
ImmersedSurface geodesic_sphere_numeric(const SubmersionModel& m, Point3 center, double radius,
                                        int n_theta = 48, int n_phi = 24);

// Non-compact fixture: capped tube of asymptotic radius tube_radius along
// the horizontal geodesic ray at the given ideal angle. Its base projection
// has that single ideal boundary point.
ImmersedSurface flaring_end_surface(const SubmersionModel& m, double axis_angle,
                                    double tube_radius, double u_max,
                                    int n_u = 96, int n_chi = 64);

// Report of the principal-curvature hypothesis k_i > |tau| over the grid.
struct HypothesisReport {
    bool passes = false;
    double min_margin = 1e300; // min over samples of min(k1,k2) - |tau|
    SurfaceSamplePoint worst;
    size_t samples = 0;
};

HypothesisReport hypothesis_check(const SubmersionModel& m, const ImmersedSurface& surf);

} // namespace ksub
