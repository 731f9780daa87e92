#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "ksub/errors.hpp"
#include "ksub/surface.hpp"
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
const SubmersionModel& e_half() {
    static SubmersionModel m = SubmersionModel::bundle(1.0, 0.5);
    return m;
}

} // namespace

TEST_CASE("horizontal slice of the product is totally geodesic with nu = 1") {
    ImmersedSurface slice = make_killing_graph(h2xr(), "0", 0.6, 48, "slice");
    for (double x : {-0.4, 0.0, 0.35}) {
        for (double y : {-0.3, 0.1, 0.4}) {
            SurfaceGeometry g = surface_geometry(h2xr(), slice, 0, x, y);
            CHECK(g.nu == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(std::abs(g.II11) < 1e-8);
            CHECK(std::abs(g.II12) < 1e-8);
            CHECK(std::abs(g.II22) < 1e-8);
            CHECK(std::abs(g.k1) < 1e-7);
            CHECK(std::abs(g.k2) < 1e-7);
            // intrinsic curvature of the slice equals the base curvature
            CHECK(g.K == doctest::Approx(-1.0).epsilon(1e-4));
        }
    }
}

TEST_CASE("vertical plane in a product is totally geodesic") {
    GeodesicPath diam = trace_complete(*disk_base(), {0, 0},
                                       disk_base()->unit_from_angle({0, 0}, 0.4), 2.0);
    VerticalCylinder plane = make_vertical_cylinder(h2xr(), geodesic_curve(*disk_base(), diam),
                                                    -1.0, 1.0, "vplane");
    for (double s : {-0.8, -0.2, 0.0, 0.5, 1.3}) {
        CylinderGeometry cg = cylinder_geometry(h2xr(), plane, s, 0.3);
        CHECK(std::abs(cg.II[0][0]) < 1e-6);
        CHECK(std::abs(cg.II[0][1]) < 1e-6);
        CHECK(std::abs(cg.II[1][1]) < 1e-6);
        CHECK(std::abs(cg.nu) < 1e-10);
        CHECK(std::abs(cg.K) < 1e-5);
    }
}

TEST_CASE("product sphere principal curvatures match the rotational closed form") {
    const double r = 0.5;
    ImmersedSurface sph = geodesic_sphere_product(h2xr(), r);
    // meridian direction: 1/r exactly; parallel direction: coth(r cos phi) cos phi
    for (double phi : {-1.2, -0.6, 0.0, 0.4, 1.0}) {
        for (double th : {0.3, 2.0, 4.4}) {
            SurfaceGeometry g = surface_geometry(h2xr(), sph, 0, th, phi);
            double k_mer = 1.0 / r;
            double k_par = std::cos(phi) / std::tanh(r * std::cos(phi));
            double lo = std::min(k_mer, k_par), hi = std::max(k_mer, k_par);
            CHECK(g.k1 == doctest::Approx(lo).epsilon(5e-4));
            CHECK(g.k2 == doctest::Approx(hi).epsilon(5e-4));
            CHECK(g.k1 > 0);
        }
    }
    // angle function vanishes exactly on the equator, nowhere else on a meridian
    SurfaceGeometry eq = surface_geometry(h2xr(), sph, 0, 0.7, 0.0);
    CHECK(std::abs(eq.nu) < 1e-10);
    SurfaceGeometry off = surface_geometry(h2xr(), sph, 0, 0.7, 0.5);
    CHECK(std::abs(off.nu) > 0.1);
}

TEST_CASE("unit decomposition of the vertical field holds on sampled surfaces") {
    ImmersedSurface sph = geodesic_sphere_product(h2xr(), 0.8, 24, 12);
    ImmersedSurface graph = make_killing_graph(e_half(), "0.1*(x*x - y*y)", 0.5, 24, "saddle");
    for (const ImmersedSurface* s : {&sph, &graph}) {
        for (const auto& sp : sample_grid(*s)) {
            const SubmersionModel& m = (s == &sph) ? h2xr() : e_half();
            SurfaceGeometry g = surface_geometry(m, *s, sp.chart, sp.u, sp.v);
            double t2 = m.dot3(g.p, g.T, g.T);
            CHECK(std::abs(g.nu * g.nu + t2 - 1.0) < 1e-8);
        }
    }
}

TEST_CASE("orientation flip negates nu, H, II and fixes K, Ke") {
    ImmersedSurface sph = geodesic_sphere_product(h2xr(), 0.7);
    ImmersedSurface flip = sph.flipped();
    SurfaceGeometry a = surface_geometry(h2xr(), sph, 0, 1.1, 0.3);
    SurfaceGeometry b = surface_geometry(h2xr(), flip, 0, 1.1, 0.3);
    CHECK(b.nu == doctest::Approx(-a.nu).epsilon(1e-10));
    CHECK(b.H == doctest::Approx(-a.H).epsilon(1e-8));
    CHECK(b.II11 == doctest::Approx(-a.II11).epsilon(1e-8));
    CHECK(b.k1 == doctest::Approx(-a.k2).epsilon(1e-8));
    CHECK(b.k2 == doctest::Approx(-a.k1).epsilon(1e-8));
    CHECK(b.Ke == doctest::Approx(a.Ke).epsilon(1e-8));
    CHECK(b.K == doctest::Approx(a.K).epsilon(1e-6));
}

TEST_CASE("principal curvatures are invariant under reparametrization") {
    ImmersedSurface graph = make_killing_graph(h2xr(), "0.2*(x*x + y*y)", 0.5, 32, "bowl");
    // wrap the chart in a diffeomorphism of the parameter square
    SurfaceChart base = graph.charts[0];
    SurfaceChart warped = base;
    warped.jac = nullptr;
    warped.fd_step = 1e-6;
    warped.f = [base](double u, double v) {
        double uu = u + 0.05 * std::sin(2 * v);
        double vv = v - 0.04 * std::cos(1.5 * u);
        return base.f(uu, vv);
    };
    ImmersedSurface warped_surf = graph;
    warped_surf.charts[0] = warped;

    double u = 0.12, v = -0.2;
    double uu = u + 0.05 * std::sin(2 * v);
    double vv = v - 0.04 * std::cos(1.5 * u);
    SurfaceGeometry g0 = surface_geometry(h2xr(), graph, 0, uu, vv);
    SurfaceGeometry g1 = surface_geometry(h2xr(), warped_surf, 0, u, v);
    CHECK(g1.k1 == doctest::Approx(g0.k1).epsilon(1e-5));
    CHECK(g1.k2 == doctest::Approx(g0.k2).epsilon(1e-5));
}

TEST_CASE("cylinder geometry: plane in the bundle model") {
    GeodesicPath diam = trace_complete(*disk_base(), {0, 0},
                                       disk_base()->unit_from_angle({0, 0}, 0.0), 2.0);
    VerticalCylinder plane = make_vertical_cylinder(e_half(), geodesic_curve(*disk_base(), diam),
                                                    -1.0, 1.0, "vplane-e");
    for (double s : {-0.7, 0.0, 0.9}) {
        CylinderGeometry cg = cylinder_geometry(e_half(), plane, s, 0.1);
        CHECK(std::abs(cg.II[0][0]) < 1e-5);
        CHECK(cg.II[0][1] == doctest::Approx(-0.5).epsilon(1e-5));
        CHECK(cg.II[1][1] == doctest::Approx(0.0).epsilon(1e-5));
        CHECK(cg.H == doctest::Approx(0.0).epsilon(1e-5));
        CHECK(cg.Ke == doctest::Approx(-0.25).epsilon(1e-5));
        CHECK(std::abs(cg.K) < 1e-5);
        CHECK(std::abs(cg.nu) < 1e-10);
    }
}

TEST_CASE("cylinder geometry: circle cylinder in the product") {
    VerticalCylinder cyl = make_vertical_cylinder(h2xr(), circle_curve(*disk_base(), 1.0),
                                                  -1.0, 1.0, "circle-cyl");
    for (double s : {0.0, 1.0, 2.5}) {
        CylinderGeometry cg = cylinder_geometry(h2xr(), cyl, s, -0.4);
        CHECK(cg.k_g == doctest::Approx(1.0 / std::tanh(1.0)).epsilon(1e-6));
        CHECK(cg.H == doctest::Approx(0.5 / std::tanh(1.0)).epsilon(1e-5));
        CHECK(std::abs(cg.Ke) < 1e-5);
        CHECK(std::abs(cg.K) < 1e-5);
        CHECK(std::abs(cg.nu) < 1e-10);
    }
}

TEST_CASE("geodesic curvature: geodesics, circles, the large-radius limit") {
    // geodesics have zero curvature
    GeodesicPath path = trace_complete(*disk_base(), {0.2, -0.1},
                                       disk_base()->unit_from_angle({0.2, -0.1}, 0.9), 2.0);
    BaseCurve geo = geodesic_curve(*disk_base(), path);
    for (double s : {-1.0, 0.0, 0.7}) CHECK(std::abs(geodesic_curvature(*disk_base(), geo, s)) < 1e-6);

    // hyperbolic circles: coth(r), approaching 1 as r grows
    for (double r : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        BaseCurve c = circle_curve(*disk_base(), r);
        double kg = geodesic_curvature(*disk_base(), c, 0.3 * c.s1);
        CHECK(kg == doctest::Approx(oracle::circle_geodesic_curvature(r)).epsilon(1e-6));
    }
    BaseCurve big = circle_curve(*disk_base(), 8.0);
    CHECK(geodesic_curvature(*disk_base(), big, 1.0) == doctest::Approx(1.0).epsilon(1e-3));

    // finite-difference oracle: the chord-to-chord angle at p(s) subtended by
    // p(s +/- h) falls short of pi by k_g h to leading order
    BaseCurve c1 = circle_curve(*disk_base(), 1.0);
    double h = 1e-3;
    Point2 pm = c1.pos(1.0 - h), p0 = c1.pos(1.0), pp = c1.pos(1.0 + h);
    double turn = M_PI - angle_at(*disk_base(), p0, pm, pp);
    CHECK(turn / h == doctest::Approx(oracle::circle_geodesic_curvature(1.0)).epsilon(1e-2));

    // non-unit-speed rejection
    BaseCurve broken = c1;
    broken.vel = [orig = c1.vel](double s) { return 1.5 * orig(s); };
    CHECK_THROWS_AS(geodesic_curvature(*disk_base(), broken, 0.5), NotUnitSpeed);
}

TEST_CASE("random cylinders satisfy the second-form identity") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> amp(-0.6, 0.6), ang(0, 2 * M_PI);
    for (const SubmersionModel* m : {&h2xr(), &e_half()}) {
        for (int i = 0; i < 4; ++i) {
            double a0 = amp(rng), a1 = amp(rng), ph = ang(rng);
            auto profile = [a0, a1, ph](double s) { return a0 + a1 * std::sin(s + ph); };
            BaseCurve c = prescribed_curvature_curve(*m->base, profile, {0.1, -0.05}, ph, 2.0);
            VerticalCylinder cyl = make_vertical_cylinder(*m, c, -0.5, 0.5, "rnd");
            for (double s : {0.2, 1.0, 1.8}) {
                CylinderGeometry cg = cylinder_geometry(*m, cyl, s, 0.2);
                double tau = cg.tau;
                CHECK(std::abs(cg.II[0][0]) < 1e-5);
                CHECK(std::abs(cg.II[0][1] + tau) < 1e-5);
                CHECK(std::abs(cg.II[1][1] - cg.k_g) < 1e-5);
                CHECK(std::abs(cg.H - cg.k_g / 2) < 1e-5);
                CHECK(std::abs(cg.Ke + tau * tau) < 1e-5);
                CHECK(std::abs(cg.K) < 1e-5);
                CHECK(std::abs(cg.nu) < 1e-8);
                // prescribed profile is an independent oracle for k_g
                CHECK(cg.k_g == doctest::Approx(profile(s)).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("killing graphs are sections with positive angle function") {
    // flat height in the product: the slice, nu = 1
    ImmersedSurface flat = make_killing_graph(h2xr(), "0", 0.5, 24, "flat");
    SurfaceGeometry g0 = surface_geometry(h2xr(), flat, 0, 0.2, -0.1);
    CHECK(g0.nu == doctest::Approx(1.0).epsilon(1e-10));

    // flat height in the bundle: nu in (0,1), cross-checked against the
    // connection-form norm through the metric assembly
    ImmersedSurface slice = make_killing_graph(e_half(), "0", 0.5, 24, "slice-e");
    for (double x : {0.1, 0.3}) {
        for (double y : {-0.2, 0.25}) {
            SurfaceGeometry g = surface_geometry(e_half(), slice, 0, x, y);
            double l = e_half().base->lambda({x, y});
            double a = e_half().omega_a(x, y).v, b = e_half().omega_b(x, y).v;
            double expected = l / std::sqrt(l * l + a * a + b * b);
            CHECK(g.nu == doctest::Approx(expected).epsilon(1e-9));
            CHECK(g.nu > 0);
            CHECK(g.nu < 1);
        }
    }

    // small tilt: nu = 1 + O(eps^2) at the origin
    double eps = 1e-3;
    ImmersedSurface tilted = make_killing_graph(
        h2xr(), [eps](double x, double y) { return eps * Jet2::var_x(x) + 0.0 * Jet2::var_y(y); },
        0.4, 16, "tilted");
    SurfaceGeometry gt = surface_geometry(h2xr(), tilted, 0, 0.0, 0.0);
    CHECK(std::abs(gt.nu - 1.0) < eps * eps);

    // the graph map is a section: pi(F(x,y)) = (x,y) exactly
    Point3 q = slice.charts[0].f(0.31, -0.17);
    CHECK(q.x == 0.31);
    CHECK(q.y == -0.17);
}

TEST_CASE("hypothesis margin: spheres pass, vertical planes sit exactly at zero") {
    ImmersedSurface sph = geodesic_sphere_product(h2xr(), 0.5, 32, 16);
    HypothesisReport ok = hypothesis_check(h2xr(), sph);
    CHECK(ok.passes);
    CHECK(ok.min_margin > 0.5);

    GeodesicPath diam = trace_complete(*disk_base(), {0, 0},
                                       disk_base()->unit_from_angle({0, 0}, 1.2), 1.5);
    VerticalCylinder plane = make_vertical_cylinder(h2xr(), geodesic_curve(*disk_base(), diam),
                                                    -0.8, 0.8, "vp");
    HypothesisReport bad = hypothesis_check(h2xr(), plane.surface);
    CHECK(!bad.passes);
    CHECK(std::abs(bad.min_margin) < 1e-6);
}

TEST_CASE("intrinsic, extrinsic and ambient curvature close the loop") {
    // three independent pipelines: K from the first form alone, k1 k2 from
    // the shape operator, ambient sectional curvature from the Riemann
    // tensor; their combination must cancel at every sample
    ImmersedSurface sph = geodesic_sphere_product(h2xr(), 0.6);
    for (double th : {0.4, 2.2}) {
        for (double ph : {-0.8, 0.0, 0.9}) {
            SurfaceGeometry g = surface_geometry(h2xr(), sph, 0, th, ph);
            double amb = sectional_curvature(h2xr(), g.p, g.fu, g.fv);
            CHECK(g.K == doctest::Approx(g.Ke + amb).epsilon(5e-3));
        }
    }
    ImmersedSurface graph = make_killing_graph(e_half(), "0.15*(x*x + y*y)", 0.5, 48, "bowl-e");
    for (double x : {-0.2, 0.1}) {
        for (double y : {0.0, 0.25}) {
            SurfaceGeometry g = surface_geometry(e_half(), graph, 0, x, y);
            double amb = sectional_curvature(e_half(), g.p, g.fu, g.fv);
            CHECK(g.K == doctest::Approx(g.Ke + amb).epsilon(5e-3));
        }
    }
}

TEST_CASE("sphere chart transition maps the same surface point") {
    ImmersedSurface sph = geodesic_sphere_product(h2xr(), 0.7);
    for (double u : {0.3, 2.1, 4.9}) {
        for (double v : {-1.2, -0.4, 0.5, 1.3}) {
            auto [u1, v1] = sphere_chart_transition(0, u, v);
            Point3 a = sph.charts[0].f(u, v);
            Point3 b = sph.charts[1].f(u1, v1);
            CHECK(std::abs(a.x - b.x) < 1e-12);
            CHECK(std::abs(a.y - b.y) < 1e-12);
            CHECK(std::abs(a.t - b.t) < 1e-12);
            // and back
            auto [u0, v0] = sphere_chart_transition(1, u1, v1);
            Point3 c = sph.charts[0].f(u0, v0);
            CHECK(std::abs(a.x - c.x) < 1e-12);
            CHECK(std::abs(a.t - c.t) < 1e-12);
        }
    }
}

TEST_CASE("numeric distance sphere in the bundle model agrees with the hypothesis") {
    ImmersedSurface sph = geodesic_sphere_numeric(e_half(), {0, 0, 0}, 0.4, 20, 10);
    HypothesisReport rep = hypothesis_check(e_half(), sph);
    CHECK(rep.passes); // small spheres: k_i ~ 1/r dominates |tau| = 0.5
    CHECK(rep.min_margin > 0.5);
}
