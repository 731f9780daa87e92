#include "ksub/surface.hpp"

#include <algorithm>
#include <cmath>

#include "ksub/errors.hpp"
#include "ksub/expr.hpp"
#include "ksub/geodesic.hpp"
#include "ksub/ode.hpp"

namespace ksub {

namespace {
constexpr double kPi = 3.14159265358979323846;

double wrap_u(const SurfaceChart& c, double u) {
    if (!c.periodic_u) return u;
    double span = c.u1 - c.u0;
    double t = std::fmod(u - c.u0, span);
    if (t < 0) t += span;
    return c.u0 + t;
}

void chart_jacobian(const SurfaceChart& c, double u, double v, Vec3& fu, Vec3& fv) {
    u = wrap_u(c, u);
    if (c.jac) {
        c.jac(u, v, fu, fv);
        return;
    }
    const double h = c.fd_step;
    Point3 fup = c.f(wrap_u(c, u + h), v), fum = c.f(wrap_u(c, u - h), v);
    Point3 fvp = c.f(u, v + h), fvm = c.f(u, v - h);
    fu = (1.0 / (2 * h)) * (fup - fum);
    fv = (1.0 / (2 * h)) * (fvp - fvm);
}

void chart_second_derivatives(const SurfaceChart& c, double u, double v,
                              Vec3& fuu, Vec3& fuv, Vec3& fvu, Vec3& fvv) {
    u = wrap_u(c, u);
    if (c.jac) {
        const double h = 1e-5;
        Vec3 au, av, bu, bv, cu, cv, du, dv;
        c.jac(wrap_u(c, u + h), v, au, av);
        c.jac(wrap_u(c, u - h), v, bu, bv);
        c.jac(u, v + h, cu, cv);
        c.jac(u, v - h, du, dv);
        fuu = (1.0 / (2 * h)) * (au - bu);
        fvu = (1.0 / (2 * h)) * (av - bv);
        fuv = (1.0 / (2 * h)) * (cu - du);
        fvv = (1.0 / (2 * h)) * (cv - dv);
        return;
    }
    const double h = c.fd_step2;
    Point3 p0 = c.f(u, v);
    Point3 up = c.f(wrap_u(c, u + h), v), um = c.f(wrap_u(c, u - h), v);
    Point3 vp = c.f(u, v + h), vm = c.f(u, v - h);
    Point3 pp = c.f(wrap_u(c, u + h), v + h), pm = c.f(wrap_u(c, u + h), v - h);
    Point3 mp = c.f(wrap_u(c, u - h), v + h), mm = c.f(wrap_u(c, u - h), v - h);
    double ih2 = 1.0 / (h * h);
    fuu = ih2 * ((up - p0) - (p0 - um));
    fvv = ih2 * ((vp - p0) - (p0 - vm));
    fuv = (0.25 * ih2) * ((pp - pm) - (mp - mm));
    fvu = fuv;
}

} // namespace

std::vector<SurfaceSamplePoint> sample_grid(const ImmersedSurface& surf) {
    std::vector<SurfaceSamplePoint> out;
    for (size_t ci = 0; ci < surf.charts.size(); ++ci) {
        const SurfaceChart& c = surf.charts[ci];
        for (int i = 0; i < c.nu; ++i) {
            for (int j = 0; j < c.nv; ++j) {
                double u = c.u0 + (i + 0.5) * (c.u1 - c.u0) / c.nu;
                double v = c.v0 + (j + 0.5) * (c.v1 - c.v0) / c.nv;
                if (c.active && !c.active(u, v)) continue;
                out.push_back({static_cast<int>(ci), u, v});
            }
        }
    }
    return out;
}

SurfaceGeometry surface_geometry(const SubmersionModel& m, const ImmersedSurface& surf,
                                 int chart, double u, double v) {
    const SurfaceChart& c = surf.charts.at(chart);
    SurfaceGeometry g;
    g.p = c.f(wrap_u(c, u), v);
    if (!m.contains(g.p)) throw ChartExit("surface_geometry: image point outside chart");

    chart_jacobian(c, u, v, g.fu, g.fv);
    g.E = m.dot3(g.p, g.fu, g.fu);
    g.F = m.dot3(g.p, g.fu, g.fv);
    g.G = m.dot3(g.p, g.fv, g.fv);
    double detI = g.E * g.G - g.F * g.F;
    double trI = g.E + g.G;
    g.min_eig_I = 0.5 * (trI - std::sqrt(std::max(0.0, trI * trI - 4 * detI)));
    if (g.min_eig_I <= 1e-12)
        throw RankDeficient("surface_geometry: differential is rank-deficient at the sample");

    Vec3 n = wedge(m, g.p, g.fu, g.fv);
    double nn = m.norm3(g.p, n);
    g.N = (1.0 / nn) * n;
    if (surf.orientation_flip) g.N = -g.N;

    Vec3 fuu, fuv, fvu, fvv;
    chart_second_derivatives(c, u, v, fuu, fuv, fvu, fvv);
    Vec3 cuu = fuu + covariant_of_constant(m, g.p, g.fu, g.fu);
    Vec3 cuv = fuv + covariant_of_constant(m, g.p, g.fu, g.fv);
    Vec3 cvu = fvu + covariant_of_constant(m, g.p, g.fv, g.fu);
    Vec3 cvv = fvv + covariant_of_constant(m, g.p, g.fv, g.fv);
    g.II11 = m.dot3(g.p, cuu, g.N);
    g.II12 = m.dot3(g.p, cuv, g.N);
    g.II21 = m.dot3(g.p, cvu, g.N);
    g.II22 = m.dot3(g.p, cvv, g.N);
    g.selfadjoint_residual = std::abs(g.II12 - g.II21);

    double ii12 = 0.5 * (g.II12 + g.II21);
    double s11 = (g.G * g.II11 - g.F * ii12) / detI;
    double s12 = (g.G * ii12 - g.F * g.II22) / detI;
    double s21 = (g.E * ii12 - g.F * g.II11) / detI;
    double s22 = (g.E * g.II22 - g.F * ii12) / detI;
    double tr = s11 + s22, det = s11 * s22 - s12 * s21;
    double disc = std::sqrt(std::max(0.0, tr * tr - 4 * det));
    g.k1 = 0.5 * (tr - disc);
    g.k2 = 0.5 * (tr + disc);
    g.H = 0.5 * tr;
    g.Ke = det;

    g.nu = m.dot3(g.p, g.N, Vec3{0, 0, 1});
    g.T = Vec3{0, 0, 1} - g.nu * g.N;

    g.K = intrinsic_curvature_brioschi(m, surf, chart, u, v);
    return g;
}

double intrinsic_curvature_brioschi(const SubmersionModel& m, const ImmersedSurface& surf,
                                    int chart, double u, double v) {
    const SurfaceChart& c = surf.charts.at(chart);
    auto eval_I = [&](double uu, double vv, double& E, double& F, double& G) {
        if (c.first_form) {
            c.first_form(m, wrap_u(c, uu), vv, E, F, G);
            return;
        }
        Vec3 fu, fv;
        chart_jacobian(c, uu, vv, fu, fv);
        Point3 p = c.f(wrap_u(c, uu), vv);
        E = m.dot3(p, fu, fu);
        F = m.dot3(p, fu, fv);
        G = m.dot3(p, fv, fv);
    };
    const double h = std::max({(c.u1 - c.u0) / c.nu, (c.v1 - c.v0) / c.nv, 8e-4}) / 8.0;

    double E, F, G;
    eval_I(u, v, E, F, G);
    double Eu_p, Fu_p, Gu_p, Eu_m, Fu_m, Gu_m;
    eval_I(u + h, v, Eu_p, Fu_p, Gu_p);
    eval_I(u - h, v, Eu_m, Fu_m, Gu_m);
    double Ev_p, Fv_p, Gv_p, Ev_m, Fv_m, Gv_m;
    eval_I(u, v + h, Ev_p, Fv_p, Gv_p);
    eval_I(u, v - h, Ev_m, Fv_m, Gv_m);
    double Epp, Fpp, Gpp, Epm, Fpm, Gpm, Emp, Fmp, Gmp, Emm, Fmm, Gmm;
    eval_I(u + h, v + h, Epp, Fpp, Gpp);
    eval_I(u + h, v - h, Epm, Fpm, Gpm);
    eval_I(u - h, v + h, Emp, Fmp, Gmp);
    eval_I(u - h, v - h, Emm, Fmm, Gmm);

    double E_u = (Eu_p - Eu_m) / (2 * h), E_v = (Ev_p - Ev_m) / (2 * h);
    double F_u = (Fu_p - Fu_m) / (2 * h), F_v = (Fv_p - Fv_m) / (2 * h);
    double G_u = (Gu_p - Gu_m) / (2 * h), G_v = (Gv_p - Gv_m) / (2 * h);
    double E_vv = (Ev_p - 2 * E + Ev_m) / (h * h);
    double G_uu = (Gu_p - 2 * G + Gu_m) / (h * h);
    double F_uv = ((Fpp - Fpm) - (Fmp - Fmm)) / (4 * h * h);

    auto det3 = [](double a11, double a12, double a13, double a21, double a22, double a23,
                   double a31, double a32, double a33) {
        return a11 * (a22 * a33 - a23 * a32) - a12 * (a21 * a33 - a23 * a31) +
               a13 * (a21 * a32 - a22 * a31);
    };
    double m1 = det3(-0.5 * E_vv + F_uv - 0.5 * G_uu, 0.5 * E_u, F_u - 0.5 * E_v,
                     F_v - 0.5 * G_u, E, F,
                     0.5 * G_v, F, G);
    double m2 = det3(0, 0.5 * E_v, 0.5 * G_u,
                     0.5 * E_v, E, F,
                     0.5 * G_u, F, G);
    double den = E * G - F * F;
    return (m1 - m2) / (den * den);
}

// --- base curves -------------------------------------------------------------

BaseCurve circle_curve(const HadamardModel& m, double radius) {
    if (!m.radial_chart_rays)
        throw GeomError("circle_curve: closed form requires a rotationally symmetric built-in");
    double a = std::sqrt(-m.curvature_bound);
    double rho = std::tanh(a * radius / 2.0);
    double omega = a / std::sinh(a * radius); // d(angle)/d(arc length)
    BaseCurve c;
    c.s0 = 0;
    c.s1 = 2 * kPi / omega;
    c.pos = [rho, omega](double s) { return Point2{rho * std::cos(omega * s), rho * std::sin(omega * s)}; };
    c.vel = [rho, omega](double s) {
        return Vec2{-rho * omega * std::sin(omega * s), rho * omega * std::cos(omega * s)};
    };
    c.acc = [rho, omega](double s) {
        return Vec2{-rho * omega * omega * std::cos(omega * s), -rho * omega * omega * std::sin(omega * s)};
    };
    return c;
}

BaseCurve geodesic_curve(const HadamardModel& m, GeodesicPath path) {
    auto shared = std::make_shared<GeodesicPath>(std::move(path));
    BaseCurve c;
    c.s0 = shared->s_min();
    c.s1 = shared->s_max();
    c.pos = [shared](double s) { return shared->at(s).p; };
    // Hermite interpolation of the direction using the exact acceleration at
    // the bracketing samples.
    c.vel = [shared, &m](double s) {
        const auto& smp = shared->samples;
        if (s <= shared->s_min()) return smp.front().d;
        if (s >= shared->s_max()) return smp.back().d;
        double ds = shared->ds;
        size_t i = std::min(static_cast<size_t>((s - smp.front().s) / ds), smp.size() - 2);
        double t = (s - smp[i].s) / ds;
        Vec2 d0 = smp[i].d, d1 = smp[i + 1].d;
        Vec2 a0 = geodesic_acceleration(m, smp[i].p, d0);
        Vec2 a1 = geodesic_acceleration(m, smp[i + 1].p, d1);
        double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
        double h10 = t * (1 - t) * (1 - t);
        double h01 = t * t * (3 - 2 * t);
        double h11 = t * t * (t - 1);
        return Vec2{h00 * d0.x + h10 * ds * a0.x + h01 * d1.x + h11 * ds * a1.x,
                    h00 * d0.y + h10 * ds * a0.y + h01 * d1.y + h11 * ds * a1.y};
    };
    BaseCurve tmp = c;
    c.acc = [tmp, &m](double s) { return geodesic_acceleration(m, tmp.pos(s), tmp.vel(s)); };
    return c;
}

BaseCurve prescribed_curvature_curve(const HadamardModel& m,
                                     const std::function<double(double)>& k_profile,
                                     Point2 start, double start_angle, double s_extent) {
    // state (x, y, ux, uy, s); covariant acceleration k(s) J(velocity)
    DormandPrince<5> stepper;
    stepper.abs_tol = 1e-12;
    stepper.rel_tol = 1e-12;
    struct Sample {
        Point2 p;
        Vec2 d;
    };
    auto samples = std::make_shared<std::vector<Sample>>();
    const double ds = 0.002;
    long n = std::lround(s_extent / ds);
    std::array<double, 5> y{start.x, start.y, 0, 0, 0};
    Vec2 v0 = m.unit_from_angle(start, start_angle);
    y[2] = v0.x;
    y[3] = v0.y;
    samples->push_back({{y[0], y[1]}, {y[2], y[3]}});
    auto rhs = [&m, &k_profile](const std::array<double, 5>& st, std::array<double, 5>& d) {
        Point2 p{st[0], st[1]};
        Vec2 v{st[2], st[3]};
        Vec2 geo = geodesic_acceleration(m, p, v);
        Vec2 turn = k_profile(st[4]) * rot90(v); // chart J; metric-consistent in a conformal chart
        d[0] = v.x;
        d[1] = v.y;
        d[2] = geo.x + turn.x;
        d[3] = geo.y + turn.y;
        d[4] = 1.0;
    };
    double s = 0;
    for (long k = 1; k <= n; ++k) {
        s = stepper.integrate(y, s, k * ds, rhs);
        if (!m.contains({y[0], y[1]}))
            throw ChartExit("prescribed_curvature_curve: left the chart");
        samples->push_back({{y[0], y[1]}, {y[2], y[3]}});
    }

    BaseCurve c;
    c.s0 = 0;
    c.s1 = n * ds;
    auto interp = [samples, ds](double ss, bool want_vel) {
        size_t i = std::min(static_cast<size_t>(std::max(0.0, ss / ds)), samples->size() - 2);
        double t = ss / ds - i;
        t = std::clamp(t, 0.0, 1.0);
        const Sample& A = (*samples)[i];
        const Sample& B = (*samples)[i + 1];
        double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
        double h10 = t * (1 - t) * (1 - t);
        double h01 = t * t * (3 - 2 * t);
        double h11 = t * t * (t - 1);
        if (!want_vel) {
            return Vec2{h00 * A.p.x + h10 * ds * A.d.x + h01 * B.p.x + h11 * ds * B.d.x,
                        h00 * A.p.y + h10 * ds * A.d.y + h01 * B.p.y + h11 * ds * B.d.y};
        }
        return Vec2{(1 - t) * A.d.x + t * B.d.x, (1 - t) * A.d.y + t * B.d.y};
    };
    c.pos = [interp](double ss) {
        Vec2 p = interp(ss, false);
        return Point2{p.x, p.y};
    };
    c.vel = [samples, ds, &m, k_profile, interp](double ss) {
        // Hermite with exact endpoint accelerations
        size_t i = std::min(static_cast<size_t>(std::max(0.0, ss / ds)), samples->size() - 2);
        double t = std::clamp(ss / ds - i, 0.0, 1.0);
        const Sample& A = (*samples)[i];
        const Sample& B = (*samples)[i + 1];
        auto acc_at = [&](const Sample& S, double sval) {
            return geodesic_acceleration(m, S.p, S.d) + k_profile(sval) * rot90(S.d);
        };
        Vec2 a0 = acc_at(A, i * ds), a1 = acc_at(B, (i + 1) * ds);
        double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
        double h10 = t * (1 - t) * (1 - t);
        double h01 = t * t * (3 - 2 * t);
        double h11 = t * t * (t - 1);
        return Vec2{h00 * A.d.x + h10 * ds * a0.x + h01 * B.d.x + h11 * ds * a1.x,
                    h00 * A.d.y + h10 * ds * a0.y + h01 * B.d.y + h11 * ds * a1.y};
    };
    BaseCurve tmp = c;
    c.acc = [tmp, &m, k_profile](double ss) {
        Point2 p = tmp.pos(ss);
        Vec2 v = tmp.vel(ss);
        return geodesic_acceleration(m, p, v) + k_profile(ss) * rot90(v);
    };
    return c;
}

double geodesic_curvature(const HadamardModel& m, const BaseCurve& curve, double s) {
    Point2 p = curve.pos(s);
    Vec2 v = curve.vel(s);
    double speed = m.metric_norm(p, v);
    if (std::abs(speed - 1.0) > 1e-6)
        throw NotUnitSpeed("geodesic_curvature: curve speed deviates from 1 by " +
                           std::to_string(std::abs(speed - 1.0)));
    Vec2 cov_acc = curve.acc(s) - geodesic_acceleration(m, p, v);
    double l = m.lambda(p);
    return l * l * dot(cov_acc, rot90(v));
}

// --- cylinders ---------------------------------------------------------------

VerticalCylinder make_vertical_cylinder(const SubmersionModel& m, BaseCurve curve,
                                        double t0, double t1, const std::string& name) {
    (void)m;
    auto curve_ptr = std::make_shared<BaseCurve>(std::move(curve));

    SurfaceChart chart;
    chart.u0 = curve_ptr->s0;
    chart.u1 = curve_ptr->s1;
    chart.v0 = t0;
    chart.v1 = t1;
    chart.f = [curve_ptr](double s, double t) {
        Point2 p = curve_ptr->pos(s);
        return Point3{p.x, p.y, t};
    };
    chart.jac = [curve_ptr](double s, double, Vec3& fu, Vec3& fv) {
        Vec2 v = curve_ptr->vel(s);
        fu = {v.x, v.y, 0};
        fv = {0, 0, 1};
    };
    chart.first_form = [curve_ptr](const SubmersionModel& mm, double s, double, double& E,
                                   double& F, double& G) {
        Point2 p = curve_ptr->pos(s);
        Vec2 v = curve_ptr->vel(s);
        double l = mm.base->lambda(p);
        double w = mm.omega_a(p.x, p.y).v * v.x + mm.omega_b(p.x, p.y).v * v.y;
        E = l * l * dot(v, v) + w * w;
        F = w;
        G = 1.0;
    };
    chart.nu = 96;
    chart.nv = 24;

    VerticalCylinder out;
    out.base_curve = *curve_ptr;
    out.surface.charts.push_back(chart);
    out.surface.name = name;
    out.surface.declared_compact = false;
    return out;
}

CylinderGeometry cylinder_geometry(const SubmersionModel& m, const VerticalCylinder& cyl,
                                   double s, double t) {
    const BaseCurve& curve = cyl.base_curve;
    Point2 bp = curve.pos(s);
    Vec2 bv = curve.vel(s);
    Point3 p{bp.x, bp.y, t};

    double a = m.omega_a(bp.x, bp.y).v;
    double b = m.omega_b(bp.x, bp.y).v;
    double w = a * bv.x + b * bv.y;
    Vec3 T{bv.x, bv.y, -w}; // horizontal lift of the tangent
    Vec3 xi{0, 0, 1};

    // unit normal with det(T, N, xi) = +1
    Vec3 N = -1.0 * J_op(m, p, T);
    N = (1.0 / m.norm3(p, N)) * N;

    // d/ds of the lifted tangent along the curve
    const double h = 1e-6;
    auto lift = [&](double ss) {
        Point2 q = curve.pos(ss);
        Vec2 v = curve.vel(ss);
        double ww = m.omega_a(q.x, q.y).v * v.x + m.omega_b(q.x, q.y).v * v.y;
        return Vec3{v.x, v.y, -ww};
    };
    Vec3 dT = (1.0 / (2 * h)) * (lift(s + h) - lift(s - h));
    Vec3 covTT = dT + covariant_of_constant(m, p, T, T);
    Vec3 covTxi = covariant_of_constant(m, p, T, xi);
    Vec3 covXiXi = covariant_of_constant(m, p, xi, xi);

    CylinderGeometry out;
    out.II[0][0] = m.dot3(p, covXiXi, N);
    out.II[0][1] = m.dot3(p, covTxi, N);
    out.II[1][0] = out.II[0][1];
    out.II[1][1] = m.dot3(p, covTT, N);
    out.H = 0.5 * (out.II[0][0] + out.II[1][1]);
    out.Ke = out.II[0][0] * out.II[1][1] - out.II[0][1] * out.II[1][0];
    out.nu = m.dot3(p, N, xi);
    out.k_g = geodesic_curvature(*m.base, curve, s);
    out.tau = compute_tau(m, p).tau;
    out.K = intrinsic_curvature_brioschi(m, cyl.surface, 0, s, t);
    return out;
}

// --- graphs -------------------------------------------------------------------

ImmersedSurface make_killing_graph(const SubmersionModel& m,
                                   std::function<Jet2(double, double)> height,
                                   double chart_radius, int n, const std::string& name) {
    if (chart_radius * std::sqrt(2.0) >= 0.995)
        throw GeomError("make_killing_graph: rectangle corners would leave the unit disk");
    SurfaceChart chart;
    chart.u0 = -chart_radius;
    chart.u1 = chart_radius;
    chart.v0 = -chart_radius;
    chart.v1 = chart_radius;
    chart.f = [height](double x, double y) {
        return Point3{x, y, height(x, y).v};
    };
    chart.jac = [height](double x, double y, Vec3& fu, Vec3& fv) {
        Jet2 hj = height(x, y);
        fu = {1, 0, hj.dx};
        fv = {0, 1, hj.dy};
    };
    chart.nu = n;
    chart.nv = n;

    ImmersedSurface surf;
    surf.charts.push_back(chart);
    surf.name = name;
    surf.declared_compact = false;

    // a section is transverse to the fibers; orient the normal upward and
    // verify the angle function stays positive across the grid
    SurfaceGeometry g = surface_geometry(m, surf, 0, 0.01, 0.02);
    if (g.nu < 0) surf.orientation_flip = true;
    for (const auto& sp : sample_grid(surf)) {
        Vec3 fu, fv;
        chart_jacobian(surf.charts[0], sp.u, sp.v, fu, fv);
        Point3 p = surf.charts[0].f(sp.u, sp.v);
        Vec3 nvec = wedge(m, p, fu, fv);
        double nu = m.dot3(p, nvec, Vec3{0, 0, 1}) / m.norm3(p, nvec);
        if (surf.orientation_flip) nu = -nu;
        if (nu <= 0)
            throw GeomError("make_killing_graph: angle function not positive at a sample");
    }
    return surf;
}

ImmersedSurface make_killing_graph(const SubmersionModel& m, const std::string& height_expr,
                                   double chart_radius, int n, const std::string& name) {
    Expression ex = Expression::parse(height_expr);
    return make_killing_graph(
        m, [ex](double x, double y) { return ex.eval_jet(x, y); }, chart_radius, n, name);
}

// --- spheres -------------------------------------------------------------------

namespace {

// Product-model exponential from the origin fiber: direction components in
// the orthonormal frame (E1, E2, xi), arc length r.
Point3 product_exp_origin(double a, double r, double vx, double vy, double vt) {
    double q = std::hypot(vx, vy);
    double z = a * r * q / 2.0;
    double factor = q < 1e-8 ? (a * r / 2.0) * (1.0 - z * z / 3.0) : std::tanh(z) / q;
    return {factor * vx, factor * vy, r * vt};
}

} // namespace

ImmersedSurface geodesic_sphere_product(const SubmersionModel& m, double radius,
                                        int n_theta, int n_phi) {
    if (m.has_analytic_tau == false || m.analytic_tau != 0.0)
        throw GeomError("geodesic_sphere_product: closed form is for product models");
    const double a = std::sqrt(-m.base->curvature_bound);
    const double r = radius;

    // chart 0: poles on the fiber axis; used for plane sections. The domain
    // stops short of the exact poles where the differential degenerates;
    // sections through the caps are re-joined by seam stitching.
    const double pole_inset = 0.02;
    SurfaceChart c0;
    c0.u0 = 0;
    c0.u1 = 2 * kPi;
    c0.periodic_u = true;
    c0.v0 = -kPi / 2 + pole_inset;
    c0.v1 = kPi / 2 - pole_inset;
    c0.f = [a, r](double th, double ph) {
        return product_exp_origin(a, r, std::cos(ph) * std::cos(th), std::cos(ph) * std::sin(th),
                                  std::sin(ph));
    };
    c0.jac = [a, r](double th, double ph, Vec3& fu, Vec3& fv) {
        double c0_ = a * r / 2.0;
        double rho = std::tanh(c0_ * std::cos(ph));
        double sech = 1.0 / std::cosh(c0_ * std::cos(ph));
        double drho = -c0_ * std::sin(ph) * sech * sech;
        fu = {-rho * std::sin(th), rho * std::cos(th), 0};
        fv = {drho * std::cos(th), drho * std::sin(th), r * std::cos(ph)};
    };
    c0.nu = n_theta;
    c0.nv = n_phi;
    c0.active = [](double, double ph) { return std::abs(ph) <= 1.32; };

    // chart 1: poles on the horizontal x-axis; covers the fiber-axis caps
    SurfaceChart c1;
    c1.u0 = 0;
    c1.u1 = 2 * kPi;
    c1.periodic_u = true;
    c1.v0 = -kPi / 2 + pole_inset;
    c1.v1 = kPi / 2 - pole_inset;
    c1.f = [a, r](double th, double ph) {
        double vx = std::sin(ph);
        double vy = std::cos(ph) * std::sin(th);
        double vt = -std::cos(ph) * std::cos(th);
        return product_exp_origin(a, r, vx, vy, vt);
    };
    c1.nu = n_theta;
    c1.nv = n_phi;
    c1.active = [](double th, double ph) {
        return std::abs(std::cos(ph) * std::cos(th)) >= 0.94;
    };

    ImmersedSurface surf;
    surf.charts.push_back(c0);
    surf.charts.push_back(c1);
    surf.marching_chart = 0;
    surf.name = "sphere(r=" + std::to_string(radius) + ")";
    surf.declared_compact = true;

    SurfaceGeometry g = surface_geometry(m, surf, 0, 0.3, 0.2);
    if (g.k1 + g.k2 < 0) surf.orientation_flip = true;
    return surf;
}

std::pair<double, double> sphere_chart_transition(int from_chart, double u, double v) {
    double vx, vy, vt;
    if (from_chart == 0) {
        vx = std::cos(v) * std::cos(u);
        vy = std::cos(v) * std::sin(u);
        vt = std::sin(v);
        // invert chart 1
        double ph = std::asin(std::clamp(vx, -1.0, 1.0));
        double th = std::atan2(vy, -vt);
        if (th < 0) th += 2 * kPi;
        return {th, ph};
    }
    vx = std::sin(v);
    vy = std::cos(v) * std::sin(u);
    vt = -std::cos(v) * std::cos(u);
    double ph = std::asin(std::clamp(vt, -1.0, 1.0));
    double th = std::atan2(vy, vx);
    if (th < 0) th += 2 * kPi;
    return {th, ph};
}

ImmersedSurface geodesic_sphere_numeric(const SubmersionModel& m, Point3 center, double radius,
                                        int n_theta, int n_phi) {
    auto mp = &m;
    const double pole_inset = 0.02;
    SurfaceChart c0;
    c0.u0 = 0;
    c0.u1 = 2 * kPi;
    c0.periodic_u = true;
    c0.v0 = -kPi / 2 + pole_inset;
    c0.v1 = kPi / 2 - pole_inset;
    c0.f = [mp, center, radius](double th, double ph) {
        Frame3 f = mp->horizontal_frame(center);
        Vec3 dir = std::cos(ph) * (std::cos(th) * f.X + std::sin(th) * f.Y) + std::sin(ph) * f.xi;
        return exp3(*mp, center, dir, radius);
    };
    c0.fd_step = 1e-5;
    c0.fd_step2 = 5e-4;
    c0.nu = n_theta;
    c0.nv = n_phi;
    c0.active = [](double, double ph) { return std::abs(ph) <= 1.32; };

    SurfaceChart c1 = c0;
    c1.f = [mp, center, radius](double th, double ph) {
        Frame3 f = mp->horizontal_frame(center);
        Vec3 dir = std::sin(ph) * f.X + std::cos(ph) * std::sin(th) * f.Y -
                   std::cos(ph) * std::cos(th) * f.xi;
        return exp3(*mp, center, dir, radius);
    };
    c1.active = [](double th, double ph) {
        return std::abs(std::cos(ph) * std::cos(th)) >= 0.94;
    };

    ImmersedSurface surf;
    surf.charts.push_back(c0);
    surf.charts.push_back(c1);
    surf.name = "sphere3(r=" + std::to_string(radius) + ")";
    surf.declared_compact = true;
    SurfaceGeometry g = surface_geometry(m, surf, 0, 0.3, 0.2);
    if (g.k1 + g.k2 < 0) surf.orientation_flip = true;
    return surf;
}

ImmersedSurface flaring_end_surface(const SubmersionModel& m, double axis_angle,
                                    double tube_radius, double u_max,
                                    int n_u, int n_chi) {
    if (m.has_analytic_tau == false || m.analytic_tau != 0.0)
        throw GeomError("flaring_end_surface: fixture is built on product models");
    if (std::abs(m.base->curvature_bound + 1.0) > 1e-12)
        throw GeomError("flaring_end_surface: closed-form leaves assume the unit-curvature disk");
    const double ca = std::cos(axis_angle), sa = std::sin(axis_angle);
    const double rho_c = tube_radius;

    // Tube of asymptotic radius rho_c around the horizontal geodesic ray at
    // the given ideal angle, with a smooth cap at u = 0. Base positions use
    // Fermi coordinates (u along the axis, w across), in closed form via the
    // isometry translating the axis.
    auto rho_fn = [rho_c](double u) { return rho_c * std::sqrt(1.0 - std::exp(-3.0 * u)); };

    SurfaceChart c;
    c.u0 = 0;
    c.u1 = 2 * kPi; // chi, around the tube
    c.periodic_u = true;
    c.v0 = 0.05;    // u along the axis; the cap tip at u = 0 is degenerate
    c.v1 = u_max;
    c.f = [ca, sa, rho_fn](double chi, double u) {
        double rho = rho_fn(u);
        double w = rho * std::cos(chi);
        // T(i tanh(w/2)) with T the disk translation 0 -> tanh(u/2) along x
        double cu = std::tanh(u / 2), tw = std::tanh(w / 2);
        double denom = 1 + cu * cu * tw * tw;
        double x = cu * (1 + tw * tw) / denom;
        double y = tw * (1 - cu * cu) / denom;
        return Point3{x * ca - y * sa, x * sa + y * ca, rho * std::sin(chi)};
    };
    c.fd_step = 1e-6;
    c.fd_step2 = 1e-4;
    c.nu = n_chi;
    c.nv = n_u;

    ImmersedSurface surf;
    surf.charts.push_back(c);
    surf.name = "flare(theta0=" + std::to_string(axis_angle) + ")";
    surf.declared_compact = false;
    return surf;
}

HypothesisReport hypothesis_check(const SubmersionModel& m, const ImmersedSurface& surf) {
    HypothesisReport rep;
    for (const SurfaceSamplePoint& sp : sample_grid(surf)) {
        SurfaceGeometry g = surface_geometry(m, surf, sp.chart, sp.u, sp.v);
        double tau = compute_tau(m, g.p).tau;
        double margin = std::min(g.k1, g.k2) - std::abs(tau);
        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.worst = sp;
        }
        ++rep.samples;
    }
    rep.passes = rep.samples > 0 && rep.min_margin > 0;
    return rep;
}

} // namespace ksub
