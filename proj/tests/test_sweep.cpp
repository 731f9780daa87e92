#include <doctest.h>

#include <cmath>
#include <memory>
#include <set>

#include "ksub/errors.hpp"
#include "ksub/sweep.hpp"
#include "oracles.hpp"

using namespace ksub;

namespace {

std::shared_ptr<const HadamardModel> disk_base() {
    static auto m = std::make_shared<HadamardModel>(HadamardModel::poincare_disk(1.0));
    return m;
}
const SubmersionModel& h2xr() {
    static SubmersionModel m = SubmersionModel::product(disk_base());
    return m;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / (n - 1));
    return v;
}

PlaneFoliation axis_foliation(double t0, double t1, int n, double dir_angle = 0.0) {
    GeodesicPath beta = trace_complete(*disk_base(), {0, 0},
                                       disk_base()->unit_from_angle({0, 0}, dir_angle), 8.0);
    return make_plane_foliation_along(h2xr(), std::move(beta), linspace(t0, t1, n));
}

// Flood fill on the sign grid: an independent count of zero-set components.
int component_count_oracle(const ImmersedSurface& surf, const VerticalPlane& plane, int N) {
    const SurfaceChart& c = surf.charts[surf.marching_chart];
    std::vector<int> sign(N * N);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i) {
            double u = c.u0 + (c.u1 - c.u0) * i / (N - 1);
            double v = c.v0 + (c.v1 - c.v0) * j / (N - 1);
            Point3 p = c.f(u, v);
            sign[j * N + i] = plane.signed_base_distance({p.x, p.y}) > 0 ? 1 : -1;
        }
    // boundary cells between sign regions, 4-connected flood fill
    std::vector<int> label(N * N, 0);
    int comp = 0;
    auto is_zero_cell = [&](int i, int j) {
        int s0 = sign[j * N + i];
        return (i + 1 < N && sign[j * N + i + 1] != s0) || (j + 1 < N && sign[(j + 1) * N + i] != s0);
    };
    for (int j = 0; j < N - 1; ++j)
        for (int i = 0; i < N - 1; ++i) {
            if (label[j * N + i] || !is_zero_cell(i, j)) continue;
            ++comp;
            std::vector<std::pair<int, int>> stack{{i, j}};
            label[j * N + i] = comp;
            while (!stack.empty()) {
                auto [x, y] = stack.back();
                stack.pop_back();
                for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}}) {
                    int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= N - 1 || ny >= N - 1) continue;
                    if (label[ny * N + nx] || !is_zero_cell(nx, ny)) continue;
                    label[ny * N + nx] = comp;
                    stack.emplace_back(nx, ny);
                }
            }
        }
    return comp;
}

} // namespace

TEST_CASE("plane coordinates embed and project consistently") {
    OrientedGeodesic axis = ideal_geodesic(*disk_base(), IdealPoint::from_angle(M_PI),
                                           IdealPoint::from_angle(0));
    VerticalPlane plane = make_vertical_plane(h2xr(), axis);
    for (double s : {-1.5, 0.0, 2.0}) {
        for (double eta : {-0.7, 0.4}) {
            Point3 p = plane.embed({s, eta});
            PlaneCoord c = plane.project(p);
            CHECK(c.s == doctest::Approx(s).epsilon(1e-6));
            CHECK(c.eta == doctest::Approx(eta).epsilon(1e-6));
        }
    }
    // product model: the flat height coordinate is just t
    Point3 q = plane.embed({0.5, 0.3});
    CHECK(q.t == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("sphere sections: counts and shapes") {
    ImmersedSurface sph = geodesic_sphere_product(h2xr(), 0.5);

    // plane through the center: one closed section
    OrientedGeodesic diam = ideal_geodesic(*disk_base(), IdealPoint::from_angle(M_PI / 2),
                                           IdealPoint::from_angle(3 * M_PI / 2));
    VerticalPlane plane = make_vertical_plane(h2xr(), diam);
    auto curves = intersect(h2xr(), sph, plane);
    REQUIRE(curves.size() == 1);
    CHECK(curves[0].closed);
    CHECK(curves[0].min_transversality > 1e-3);
    // every extracted vertex sits on the plane
    for (const auto& v : curves[0].pts)
        CHECK(std::abs(plane.signed_base_distance({v.xyz.x, v.xyz.y})) < 1e-5);
    // the great-circle section of a radius-0.5 sphere is a circle of radius
    // 0.5 in the flat plane: diameter close to 1 in plane coordinates
    CHECK(curves[0].plane_diameter == doctest::Approx(1.0).epsilon(0.02));

    // distant plane: empty
    GeodesicPath far_leaf = trace_complete(*disk_base(), {std::tanh(1.0), 0},
                                           disk_base()->unit_from_angle({std::tanh(1.0), 0}, M_PI / 2),
                                           8.0);
    VerticalPlane far_plane = make_vertical_plane(h2xr(), far_leaf);
    CHECK(intersect(h2xr(), sph, far_plane).empty());
}

TEST_CASE("graph section: one open curve crossing the domain") {
    ImmersedSurface graph = make_killing_graph(h2xr(), "0.1*(x*x + y*y)", 0.55, 72, "bowl");
    OrientedGeodesic yaxis = ideal_geodesic(*disk_base(), IdealPoint::from_angle(3 * M_PI / 2),
                                            IdealPoint::from_angle(M_PI / 2));
    VerticalPlane plane = make_vertical_plane(h2xr(), yaxis);
    auto curves = intersect(h2xr(), graph, plane);
    REQUIRE(curves.size() == 1);
    CHECK(!curves[0].closed);
    CHECK(curves[0].touches_param_boundary);
    CHECK(component_count_oracle(graph, plane, 160) == 1);
}

TEST_CASE("sections of spheres are strictly convex in the plane") {
    ImmersedSurface sph = geodesic_sphere_product(h2xr(), 0.75);
    for (double off : {0.0, 0.25, 0.5}) {
        Point2 anchor{std::tanh(off / 2), 0};
        GeodesicPath leaf = trace_complete(*disk_base(), anchor,
                                           disk_base()->unit_from_angle(anchor, M_PI / 2), 8.0);
        VerticalPlane plane = make_vertical_plane(h2xr(), leaf);
        auto curves = intersect(h2xr(), sph, plane);
        REQUIRE(curves.size() == 1);
        ConvexityReport rep = convexity_check(h2xr(), curves[0], plane, 1e-3);
        CHECK(rep.passes);
        CHECK(rep.sign_constant);
        CHECK(rep.min_abs_curvature > 0.5); // section circles of radius <= 0.75
    }
}

TEST_CASE("near-tangent cuts of a vertical plane are flagged rather than traced") {
    // two vertical planes over geodesics crossing at a tiny angle: the
    // section is a fiber line along which the signed distance barely grows
    GeodesicPath xaxis = trace_complete(*disk_base(), {0, 0},
                                        disk_base()->unit_from_angle({0, 0}, 0.0), 2.0);
    VerticalCylinder vp = make_vertical_cylinder(h2xr(), geodesic_curve(*disk_base(), xaxis),
                                                 -1.0, 1.0, "vp");
    GeodesicPath grazing = trace_complete(*disk_base(), {0, 0},
                                          disk_base()->unit_from_angle({0, 0}, 3e-5), 8.0);
    VerticalPlane plane = make_vertical_plane(h2xr(), grazing);
    CHECK_THROWS_AS(intersect(h2xr(), vp.surface, plane), TangencySuspected);
    // the same call with the flag off returns the section for triage
    IntersectOptions opt;
    opt.throw_on_tangency = false;
    auto curves = intersect(h2xr(), vp.surface, plane, opt);
    REQUIRE(!curves.empty());
    for (const auto& c : curves) CHECK(c.min_transversality < 1e-4);
}

TEST_CASE("graph sections are single-valued over the base geodesic") {
    // a section of a vertical-line-free surface is a graph over an interval:
    // its plane s-coordinate is strictly monotone along the curve
    ImmersedSurface graph = make_killing_graph(h2xr(), "0.3*x + 0.1*(x*x + y*y)", 0.55, 72, "tilt");
    OrientedGeodesic yaxis = ideal_geodesic(*disk_base(), IdealPoint::from_angle(3 * M_PI / 2),
                                            IdealPoint::from_angle(M_PI / 2));
    VerticalPlane plane = make_vertical_plane(h2xr(), yaxis);
    auto curves = intersect(h2xr(), graph, plane);
    REQUIRE(curves.size() == 1);
    const auto& pts = curves[0].pts;
    int dir = pts[1].pc.s > pts[0].pc.s ? 1 : -1;
    for (size_t i = 1; i < pts.size(); ++i)
        CHECK(dir * (pts[i].pc.s - pts[i - 1].pc.s) > 0);
}

TEST_CASE("sections stay strictly convex in a twisted bundle") {
    // the sphere satisfies k_i > |tau| (checked in the surface suite), so
    // every transversal plane section must have nowhere-vanishing curvature
    // even when tau != 0
    static SubmersionModel e05 = SubmersionModel::bundle(1.0, 0.5);
    ImmersedSurface sph = geodesic_sphere_numeric(e05, {0, 0, 0}, 0.4, 40, 20);
    int assessed = 0;
    for (double off : {0.0, 0.06}) {
        Point2 anchor{off, -off};
        GeodesicPath leaf = trace_complete(*e05.base, anchor,
                                           e05.base->unit_from_angle(anchor, 0.8 + off), 8.0);
        VerticalPlane plane = make_vertical_plane(e05, leaf);
        std::vector<IntersectionCurve> curves;
        try {
            curves = intersect(e05, sph, plane);
        } catch (const TangencySuspected&) {
            continue;
        }
        for (auto& c : curves) {
            if (c.pts.size() < 12) continue;
            ConvexityReport rep = convexity_check(e05, c, plane, 1e-3);
            CHECK(rep.passes);
            CHECK(rep.min_abs_curvature > 0.5);
            ++assessed;
        }
    }
    CHECK(assessed >= 2);
}

TEST_CASE("degenerate straight input fails the convexity check") {
    IntersectionCurve line;
    line.closed = false;
    for (int i = 0; i <= 40; ++i) {
        CurveVertex v;
        v.pc = {0.0, -1.0 + i * 0.05};
        v.arc = i * 0.05;
        line.pts.push_back(v);
    }
    line.plane_diameter = 2.0;
    OrientedGeodesic axis = ideal_geodesic(*disk_base(), IdealPoint::from_angle(M_PI),
                                           IdealPoint::from_angle(0));
    VerticalPlane plane = make_vertical_plane(h2xr(), axis);
    ConvexityReport rep = convexity_check(h2xr(), line, plane, 1e-3);
    CHECK(!rep.passes);
    CHECK(rep.min_abs_curvature < 1e-6);
}

TEST_CASE("saddle sections have curvature zeros located by sign change") {
    ImmersedSurface saddle = make_killing_graph(h2xr(), "0.35*(x*x - y*y)", 0.55, 72, "saddle");
    // a plane along the diagonal sees both bending signs
    Point2 origin{0, 0};
    GeodesicPath leaf = trace_complete(*disk_base(), origin,
                                       disk_base()->unit_from_angle(origin, M_PI / 4), 8.0);
    VerticalPlane plane = make_vertical_plane(h2xr(), leaf);
    auto curves = intersect(h2xr(), saddle, plane);
    REQUIRE(!curves.empty());
    ConvexityReport rep = convexity_check(h2xr(), curves[0], plane, 1e-3);
    CHECK(!rep.passes);
    // locate a sign change of the fitted curvature along the section
    bool found_zero = false;
    const auto& pts = curves[0].pts;
    for (size_t i = 0; i + 1 < pts.size(); ++i)
        if (pts[i].curvature * pts[i + 1].curvature < 0) found_zero = true;
    CHECK(found_zero);
}

TEST_CASE("tilt classification of synthetic plane curves") {
    PlaneWindow window;
    window.s_min = -3;
    window.s_max = 3;
    window.eta_min = -3;
    window.eta_max = 3;

    auto make_curve = [](std::function<PlaneCoord(double)> gamma, int n, double a, double b) {
        IntersectionCurve c;
        c.closed = false;
        double arc = 0;
        PlaneCoord prev{};
        for (int i = 0; i < n; ++i) {
            double t = a + (b - a) * i / (n - 1);
            CurveVertex v;
            v.pc = gamma(t);
            if (i > 0) arc += std::hypot(v.pc.s - prev.s, v.pc.eta - prev.eta);
            v.arc = arc;
            prev = v.pc;
            c.pts.push_back(v);
        }
        c.plane_diameter = 100;
        return c;
    };

    // parabola opening in +eta: untilted, positive flow direction
    IntersectionCurve par = make_curve([](double t) { return PlaneCoord{t, t * t}; }, 201, -4, 4);
    TiltReport rp = tilt_classify(par, window);
    CHECK(rp.cls == Tilt::Untilted);
    CHECK(rp.used_positive_ray);

    // the same parabola rotated by pi/4: tilted
    const double c45 = std::cos(M_PI / 4), s45 = std::sin(M_PI / 4);
    IntersectionCurve rot = make_curve(
        [&](double t) {
            double x = t, y = t * t;
            return PlaneCoord{c45 * x - s45 * y, s45 * x + c45 * y};
        },
        401, -4, 4);
    TiltReport rr = tilt_classify(rot, window);
    CHECK(rr.cls == Tilt::Tilted);

    // parabola opening in -eta: untilted with the negative flow direction
    IntersectionCurve down = make_curve([](double t) { return PlaneCoord{t, -t * t}; }, 201, -4, 4);
    TiltReport rd = tilt_classify(down, window);
    CHECK(rd.cls == Tilt::Untilted);
    CHECK(!rd.used_positive_ray);

    // a curve that never leaves the window is not classifiable
    IntersectionCurve small = make_curve([](double t) { return PlaneCoord{t, 0.1 * t * t}; }, 51, -1, 1);
    CHECK(tilt_classify(small, window).cls == Tilt::NotApplicable);
}

TEST_CASE("horizontal normal points: graph none, sphere equator, cylinder everywhere") {
    ImmersedSurface graph = make_killing_graph(h2xr(), "0.2*(x*x + y*y)", 0.5, 48, "bowl");
    CHECK(horizontal_normal_points(h2xr(), graph).empty());

    ImmersedSurface sph = geodesic_sphere_product(h2xr(), 0.6, 48, 24);
    auto zeros = horizontal_normal_points(h2xr(), sph);
    CHECK(zeros.size() > 20);
    for (const auto& z : zeros) {
        CHECK(std::abs(angle_function(h2xr(), sph, z.chart, z.u, z.v)) <= 1e-8);
        if (z.chart == 0) CHECK(std::abs(z.v) < 0.1); // equator of chart 0
    }

    GeodesicPath diam = trace_complete(*disk_base(), {0, 0},
                                       disk_base()->unit_from_angle({0, 0}, 0.7), 1.5);
    VerticalCylinder cyl = make_vertical_cylinder(h2xr(), geodesic_curve(*disk_base(), diam),
                                                  -0.7, 0.7, "vp");
    auto all = horizontal_normal_points(h2xr(), cyl.surface);
    CHECK(all.size() == static_cast<size_t>(cyl.surface.charts[0].nu * cyl.surface.charts[0].nv));
}

TEST_CASE("sweep classifies a geodesic sphere") {
    ImmersedSurface sph = geodesic_sphere_product(h2xr(), 0.5);
    PlaneFoliation fol = axis_foliation(-1.2, 1.2, 25);
    SweepReport rep = sweep_classify(h2xr(), sph, fol);
    CHECK(rep.classification == SweepClass::Sphere);
    CHECK(rep.nu_zero_count > 0);

    // stability under t-grid halving
    PlaneFoliation fine = axis_foliation(-1.2, 1.2, 49);
    CHECK(sweep_classify(h2xr(), sph, fine).classification == SweepClass::Sphere);

    // orientation robustness: reversed sweep direction
    PlaneFoliation rev = axis_foliation(-1.2, 1.2, 25, M_PI);
    CHECK(sweep_classify(h2xr(), sph, rev).classification == SweepClass::Sphere);
}

TEST_CASE("sweep classifies a sphere in the twisted bundle") {
    static SubmersionModel e05 = SubmersionModel::bundle(1.0, 0.5);
    ImmersedSurface sph = geodesic_sphere_numeric(e05, {0, 0, 0}, 0.4, 40, 20);
    GeodesicPath beta = trace_complete(*e05.base, {0, 0},
                                       e05.base->unit_from_angle({0, 0}, 0.5), 8.0);
    PlaneFoliation fol = make_plane_foliation_along(e05, std::move(beta), linspace(-1.0, 1.0, 21));
    SweepReport rep = sweep_classify(e05, sph, fol);
    CHECK(rep.classification == SweepClass::Sphere);
}

TEST_CASE("sweep classifies an entire convex graph") {
    ImmersedSurface graph = make_killing_graph(h2xr(), "0.2*pow(2*atanh(sqrt(x*x+y*y+1e-30)),2)",
                                               0.64, 72, "entire");
    PlaneFoliation fol = axis_foliation(-1.5, 1.5, 13);
    SweepReport rep = sweep_classify(h2xr(), graph, fol);
    CHECK(rep.classification == SweepClass::PlaneKillingGraph);
    CHECK(rep.projection_injective);
    CHECK(rep.projection_convex);
    // stage-0/stage-1 consistency
    CHECK(horizontal_normal_points(h2xr(), graph).empty());
}

TEST_CASE("sweep classifies the flaring-end fixture with the designed angle") {
    const double theta0 = 0.0;
    ImmersedSurface flare = flaring_end_surface(h2xr(), theta0, 0.35, 9.0);
    std::vector<double> grid = linspace(-0.6, 7.0, 42);
    GeodesicPath beta = trace_complete(*disk_base(), {0, 0},
                                       disk_base()->unit_from_angle({0, 0}, theta0), 9.0);
    PlaneFoliation fol = make_plane_foliation_along(h2xr(), std::move(beta), grid);
    SweepOptions opt;
    opt.diameter_cap = 4.0;
    SweepReport rep = sweep_classify(h2xr(), flare, fol, opt);
    CHECK(rep.classification == SweepClass::PlaneSimpleEnd);
    REQUIRE(rep.end_angle_valid);
    CHECK(std::abs(angle_diff(rep.end_angle, theta0)) < 0.05);
}

TEST_CASE("sphere is not certified when the sweep starts inside the surface") {
    // sweeping the flare from its tube side: sections shrink toward the cap
    // and vanish, but the opening tangency was never seen
    ImmersedSurface flare = flaring_end_surface(h2xr(), 0.0, 0.35, 9.0);
    GeodesicPath beta = trace_complete(*disk_base(), {0, 0},
                                       disk_base()->unit_from_angle({0, 0}, M_PI), 9.0);
    PlaneFoliation fol = make_plane_foliation_along(h2xr(), std::move(beta),
                                                    linspace(-7.0, 0.6, 40));
    SweepOptions opt;
    opt.diameter_cap = 4.0;
    SweepReport rep = sweep_classify(h2xr(), flare, fol, opt);
    CHECK(rep.classification != SweepClass::Sphere);
}

TEST_CASE("simple end test: flare passes, entire graph fails, sphere not applicable") {
    ImmersedSurface flare = flaring_end_surface(h2xr(), 0.75, 0.35, 9.0);
    SimpleEndReport rep = simple_end_test(h2xr(), flare);
    CHECK(rep.applicable);
    CHECK(rep.passes);
    CHECK(std::abs(angle_diff(rep.theta0, 0.75)) < 0.05);

    ImmersedSurface graph = make_killing_graph(h2xr(), "0.2*pow(2*atanh(sqrt(x*x+y*y+1e-30)),2)",
                                               0.64, 72, "entire");
    SimpleEndReport bad = simple_end_test(h2xr(), graph);
    CHECK(bad.applicable);
    CHECK(!bad.passes);
    CHECK(bad.spread_far > 1.0);

    ImmersedSurface sph = geodesic_sphere_product(h2xr(), 0.5);
    SimpleEndReport na = simple_end_test(h2xr(), sph);
    CHECK(!na.applicable);
}

TEST_CASE("rotating-family regression: first non-compact slice is tilted") {
    // Swept fixture whose plane sections are ellipses elongating along a
    // 45-degree axis; the first section leaving the window must classify as
    // tilted, as the rotating-family argument requires.
    const double b_minor = 0.22;
    SurfaceChart c;
    c.u0 = 0;
    c.u1 = 2 * M_PI;
    c.periodic_u = true;
    c.v0 = 0.02;
    c.v1 = 2.2;
    c.f = [b_minor](double chi, double t) {
        double A = 0.3 + 1.1 * t * t;
        double e1 = A * std::cos(chi), e2 = b_minor * std::sin(chi);
        double s = (e1 - e2) / std::sqrt(2.0);
        double eta = (e1 + e2) / std::sqrt(2.0);
        double cc = std::tanh(t / 2), u = std::tanh(s / 2);
        double denom = 1 + cc * cc * u * u;
        return Point3{cc * (1 + u * u) / denom, u * (1 - cc * cc) / denom, eta};
    };
    c.nu = 96;
    c.nv = 72;
    ImmersedSurface swept;
    swept.charts.push_back(c);
    swept.name = "tilted-sweep-fixture";
    swept.declared_compact = false;

    PlaneFoliation fol = axis_foliation(0.05, 2.1, 30);
    SweepOptions opt;
    // one-sided window: the growing ellipse first leaves through s_min, so
    // the clipped section is a hairpin along the tilted axis
    opt.window.s_min = -1.2;
    opt.window.s_max = 30.0;
    opt.window.eta_min = -30.0;
    opt.window.eta_max = 30.0;
    opt.diameter_cap = 50.0; // window exit, not the cap, ends compactness
    SweepReport rep = sweep_classify(h2xr(), swept, fol, opt);
    CHECK(rep.case_b_ran);
    CHECK(rep.first_noncompact_tilt == Tilt::Tilted);
}
