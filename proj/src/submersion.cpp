#include "ksub/submersion.hpp"

#include <algorithm>
#include <cmath>

#include "ksub/errors.hpp"
#include "ksub/ode.hpp"

namespace ksub {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

SubmersionModel SubmersionModel::product(std::shared_ptr<const HadamardModel> base) {
    SubmersionModel m;
    m.base = std::move(base);
    m.name = "product(" + m.base->name + ")";
    m.omega_a = [](double, double) { return Jet2(0.0); };
    m.omega_b = [](double, double) { return Jet2(0.0); };
    m.has_analytic_tau = true;
    m.analytic_tau = 0.0;
    return m;
}

SubmersionModel SubmersionModel::bundle(double a, double tau0) {
    SubmersionModel m;
    auto base = std::make_shared<HadamardModel>(HadamardModel::poincare_disk(a));
    m.base = base;
    m.name = "bundle(a=" + std::to_string(a) + ",tau=" + std::to_string(tau0) + ")";
    // Rotationally symmetric connection form c(r^2) (y dx - x dy) whose
    // bundle curvature is the constant tau0. The sign was fixed by running
    // the tau fit against this form, not transcribed.
    const double k = -4.0 * tau0 / (a * a);
    m.omega_a = [k](double x, double y) {
        Jet2 xj = Jet2::var_x(x), yj = Jet2::var_y(y);
        return -k * yj / (1.0 - xj * xj - yj * yj);
    };
    m.omega_b = [k](double x, double y) {
        Jet2 xj = Jet2::var_x(x), yj = Jet2::var_y(y);
        return k * xj / (1.0 - xj * xj - yj * yj);
    };
    m.has_analytic_tau = true;
    m.analytic_tau = tau0;
    return m;
}

SubmersionModel SubmersionModel::from_expressions(std::shared_ptr<const HadamardModel> base,
                                                  const std::string& a_expr,
                                                  const std::string& b_expr) {
    SubmersionModel m;
    m.base = std::move(base);
    m.name = "submersion(" + a_expr + "," + b_expr + ")";
    Expression ea = Expression::parse(a_expr);
    Expression eb = Expression::parse(b_expr);
    m.omega_a = [ea](double x, double y) { return ea.eval_jet(x, y); };
    m.omega_b = [eb](double x, double y) { return eb.eval_jet(x, y); };
    return m;
}

SubmersionModel SubmersionModel::with_corrupted_metric() const {
    SubmersionModel m = *this;
    m.corrupt_metric_omega_sign_ = true;
    m.name = name + "[corrupted-metric]";
    m.has_analytic_tau = false;
    return m;
}

void SubmersionModel::metric_jets(Point3 p, std::array<std::array<Jet2, 3>, 3>& g) const {
    Jet2 phi = base->log_lambda(p.x, p.y);
    Jet2 l2 = exp(2.0 * phi);
    Jet2 a = omega_a(p.x, p.y);
    Jet2 b = omega_b(p.x, p.y);
    if (corrupt_metric_omega_sign_) {
        a = -a;
        b = -b;
    }
    g[0][0] = l2 + a * a;
    g[0][1] = a * b;
    g[0][2] = a;
    g[1][1] = l2 + b * b;
    g[1][2] = b;
    g[2][2] = Jet2(1.0);
    g[1][0] = g[0][1];
    g[2][0] = g[0][2];
    g[2][1] = g[1][2];
}

void SubmersionModel::metric(Point3 p, Mat3& g) const {
    std::array<std::array<Jet2, 3>, 3> gj;
    metric_jets(p, gj);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) g[i][j] = gj[i][j].v;
}

Mat3 SubmersionModel::metric_inverse(Point3 p) const {
    Mat3 g;
    metric(p, g);
    Mat3 inv;
    double det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) -
                 g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0]) +
                 g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    double id = 1.0 / det;
    inv[0][0] = (g[1][1] * g[2][2] - g[1][2] * g[2][1]) * id;
    inv[0][1] = (g[0][2] * g[2][1] - g[0][1] * g[2][2]) * id;
    inv[0][2] = (g[0][1] * g[1][2] - g[0][2] * g[1][1]) * id;
    inv[1][0] = inv[0][1];
    inv[1][1] = (g[0][0] * g[2][2] - g[0][2] * g[2][0]) * id;
    inv[1][2] = (g[0][2] * g[1][0] - g[0][0] * g[1][2]) * id;
    inv[2][0] = inv[0][2];
    inv[2][1] = inv[1][2];
    inv[2][2] = (g[0][0] * g[1][1] - g[0][1] * g[1][0]) * id;
    return inv;
}

double SubmersionModel::dot3(Point3 p, Vec3 u, Vec3 v) const {
    Mat3 g;
    metric(p, g);
    const double uu[3] = {u.x, u.y, u.t};
    const double vv[3] = {v.x, v.y, v.t};
    double acc = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) acc += g[i][j] * uu[i] * vv[j];
    return acc;
}

double SubmersionModel::volume_det(Point3 p) const {
    Mat3 g;
    metric(p, g);
    double det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) -
                 g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0]) +
                 g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    return std::sqrt(det);
}

Frame3 SubmersionModel::horizontal_frame(Point3 p, double rotation) const {
    double l = base->lambda({p.x, p.y});
    double a = omega_a(p.x, p.y).v;
    double b = omega_b(p.x, p.y).v;
    Vec3 e1{1.0 / l, 0, -a / l};
    Vec3 e2{0, 1.0 / l, -b / l};
    double c = std::cos(rotation), s = std::sin(rotation);
    Frame3 f;
    f.at = p;
    f.X = c * e1 + s * e2;
    f.Y = -s * e1 + c * e2;
    f.xi = {0, 0, 1};
    return f;
}

double SubmersionModel::killing_residual(Point3 p) const {
    const double h = 1e-4;
    Mat3 up, dn;
    metric({p.x, p.y, p.t + h}, up);
    metric({p.x, p.y, p.t - h}, dn);
    double worst = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            worst = std::max(worst, std::abs(up[i][j] - dn[i][j]) / (2 * h));
    return worst;
}

double SubmersionModel::submersion_residual(Point3 p) const {
    Frame3 f = horizontal_frame(p);
    double worst = 0;
    worst = std::max(worst, std::abs(dot3(p, f.X, f.X) - 1.0));
    worst = std::max(worst, std::abs(dot3(p, f.Y, f.Y) - 1.0));
    worst = std::max(worst, std::abs(dot3(p, f.X, f.Y)));
    worst = std::max(worst, std::abs(dot3(p, f.X, f.xi)));
    worst = std::max(worst, std::abs(dot3(p, f.Y, f.xi)));
    worst = std::max(worst, std::abs(dot3(p, f.xi, f.xi) - 1.0));
    return worst;
}

Christoffel christoffel3(const SubmersionModel& m, Point3 p) {
    if (!m.contains(p)) throw ChartExit("christoffel3: point outside chart");
    std::array<std::array<Jet2, 3>, 3> g;
    m.metric_jets(p, g);
    // dg[l][i][j] = d_l g_ij; derivatives along t vanish
    double dg[3][3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            dg[0][i][j] = g[i][j].dx;
            dg[1][i][j] = g[i][j].dy;
            dg[2][i][j] = 0.0;
        }
    Mat3 inv = m.metric_inverse(p);
    Christoffel out;
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) {
                double acc = 0;
                for (int l = 0; l < 3; ++l)
                    acc += inv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                out[k][i][j] = 0.5 * acc;
                out[k][j][i] = out[k][i][j];
            }
    return out;
}

Vec3 covariant_of_constant(const SubmersionModel& m, Point3 p, Vec3 X, Vec3 v) {
    Christoffel G = christoffel3(m, p);
    const double xx[3] = {X.x, X.y, X.t};
    const double vv[3] = {v.x, v.y, v.t};
    double out[3] = {0, 0, 0};
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out[k] += G[k][i][j] * xx[i] * vv[j];
    return {out[0], out[1], out[2]};
}

Vec3 covariant_derivative(const SubmersionModel& m,
                          const std::function<Vec3(Point3)>& field, Tangent3 X) {
    const Point3 p = X.at;
    if (!m.contains(p)) throw ChartExit("covariant_derivative: point outside chart");
    const double h = 1e-5;
    auto diff = [&](int axis) {
        Point3 up = p, dn = p;
        (axis == 0 ? up.x : axis == 1 ? up.y : up.t) += h;
        (axis == 0 ? dn.x : axis == 1 ? dn.y : dn.t) -= h;
        Vec3 fu = field(up), fd = field(dn);
        return (1.0 / (2 * h)) * (fu - fd);
    };
    Vec3 dx = diff(0), dy = diff(1), dt = diff(2);
    Vec3 directional = X.d.x * dx + X.d.y * dy + X.d.t * dt;
    return directional + covariant_of_constant(m, p, X.d, field(p));
}

Vec3 wedge(const SubmersionModel& m, Point3 p, Vec3 u, Vec3 v) {
    // covariant components: (u ^ v)_l = vol * eps_ijl u^i v^j
    double vol = m.volume_det(p);
    double c[3] = {vol * (u.y * v.t - u.t * v.y),
                   vol * (u.t * v.x - u.x * v.t),
                   vol * (u.x * v.y - u.y * v.x)};
    Mat3 inv = m.metric_inverse(p);
    double out[3] = {0, 0, 0};
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) out[k] += inv[k][l] * c[l];
    return {out[0], out[1], out[2]};
}

Vec3 J_op(const SubmersionModel& m, Point3 p, Vec3 X) {
    return wedge(m, p, X, Vec3{0, 0, 1});
}

TauFit compute_tau(const SubmersionModel& m, Point3 p) {
    Frame3 f = m.horizontal_frame(p);
    Vec3 d1 = covariant_of_constant(m, p, f.X, f.xi);
    Vec3 d2 = covariant_of_constant(m, p, f.Y, f.xi);
    Vec3 w1 = wedge(m, p, f.X, f.xi);
    Vec3 w2 = wedge(m, p, f.Y, f.xi);

    double n1 = m.dot3(p, w1, w1), n2 = m.dot3(p, w2, w2);
    TauFit fit;
    fit.tau_x1 = m.dot3(p, d1, w1) / n1;
    fit.tau_x2 = m.dot3(p, d2, w2) / n2;
    fit.tau = (m.dot3(p, d1, w1) + m.dot3(p, d2, w2)) / (n1 + n2);
    Vec3 r1 = d1 - fit.tau * w1;
    Vec3 r2 = d2 - fit.tau * w2;
    fit.fit_residual = std::max(m.norm3(p, r1), m.norm3(p, r2));
    // A metric assembled inconsistently with the declared fibration still
    // carries some unit Killing field, so the identity fit alone cannot see
    // the corruption; the declared lift losing orthonormality can.
    fit.frame_residual = m.submersion_residual(p);
    return fit;
}

double compute_tau_checked(const SubmersionModel& m, Point3 p) {
    TauFit fit = compute_tau(m, p);
    double tol = m.base->tol.geometric;
    if (!fit.frame_agreement_ok(tol))
        throw FitFailure("compute_tau: declared submersion data inconsistent at the sample "
                         "(fit residual " + std::to_string(fit.fit_residual) +
                         ", frame residual " + std::to_string(fit.frame_residual) + ")");
    return fit.tau;
}

namespace {

// d/dx_axis of christoffel3, central difference with one Richardson step.
Christoffel christoffel_derivative(const SubmersionModel& m, Point3 p, int axis) {
    if (axis == 2) { // metric is t-independent
        Christoffel zero{};
        return zero;
    }
    auto shifted = [&](double delta) {
        Point3 q = p;
        (axis == 0 ? q.x : q.y) += delta;
        return christoffel3(m, q);
    };
    const double h = 1e-5;
    Christoffel ph = shifted(h), mh = shifted(-h), ph2 = shifted(h / 2), mh2 = shifted(-h / 2);
    Christoffel out;
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double d1 = (ph[k][i][j] - mh[k][i][j]) / (2 * h);
                double d2 = (ph2[k][i][j] - mh2[k][i][j]) / h;
                out[k][i][j] = (4 * d2 - d1) / 3;
            }
    return out;
}

} // namespace

double sectional_curvature(const SubmersionModel& m, Point3 p, Vec3 u, Vec3 v) {
    double uu = m.dot3(p, u, u), vv = m.dot3(p, v, v), uv = m.dot3(p, u, v);
    double gram = uu * vv - uv * uv;
    if (gram < 1e-12 * std::max(1.0, uu * vv))
        throw DegenerateSpan("sectional_curvature: span is degenerate");

    Christoffel G = christoffel3(m, p);
    Christoffel dG[3] = {christoffel_derivative(m, p, 0), christoffel_derivative(m, p, 1),
                         christoffel_derivative(m, p, 2)};
    Mat3 g;
    m.metric(p, g);

    // R(e_i, e_j) e_k = R^l_ijk e_l
    auto riemann = [&](int i, int j, int k, int l) {
        double acc = dG[i][l][j][k] - dG[j][l][i][k];
        for (int mm = 0; mm < 3; ++mm)
            acc += G[l][i][mm] * G[mm][j][k] - G[l][j][mm] * G[mm][i][k];
        return acc;
    };

    const double uc[3] = {u.x, u.y, u.t};
    const double vc[3] = {v.x, v.y, v.t};
    double num = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                double rl[3] = {riemann(i, j, k, 0), riemann(i, j, k, 1), riemann(i, j, k, 2)};
                double lowered = 0; // <R(e_i,e_j) e_k, u>
                for (int l = 0; l < 3; ++l) {
                    double gl = 0;
                    for (int mm = 0; mm < 3; ++mm) gl += g[l][mm] * uc[mm];
                    lowered += rl[l] * gl;
                }
                num += uc[i] * vc[j] * vc[k] * lowered;
            }
    return num / gram;
}

namespace {

Vec3 project_vertical(const SubmersionModel& m, Point3 p, Vec3 v) {
    double c = m.dot3(p, v, Vec3{0, 0, 1});
    return {0, 0, c};
}

} // namespace

Vec3 tensor_A(const SubmersionModel& m, Point3 p, Vec3 X, Vec3 Y) {
    Vec3 Xh = X - project_vertical(m, p, X);
    auto Yv_field = [&](Point3 q) { return project_vertical(m, q, Y); };
    auto Yh_field = [&](Point3 q) { return Y - project_vertical(m, q, Y); };
    Vec3 dh = covariant_derivative(m, Yh_field, {p, Xh});
    Vec3 dv = covariant_derivative(m, Yv_field, {p, Xh});
    return project_vertical(m, p, dh) + (dv - project_vertical(m, p, dv));
}

Vec3 tensor_T(const SubmersionModel& m, Point3 p, Vec3 X, Vec3 Y) {
    Vec3 Xv = project_vertical(m, p, X);
    auto Yv_field = [&](Point3 q) { return project_vertical(m, q, Y); };
    auto Yh_field = [&](Point3 q) { return Y - project_vertical(m, q, Y); };
    Vec3 dv = covariant_derivative(m, Yv_field, {p, Xv});
    Vec3 dh = covariant_derivative(m, Yh_field, {p, Xv});
    return (dv - project_vertical(m, p, dv)) + project_vertical(m, p, dh);
}

Point3 vertical_flow(Point3 p, double t) { return {p.x, p.y, p.t + t}; }

CurvatureSample curvature_sample(const SubmersionModel& m, Point3 p) {
    CurvatureSample cs;
    cs.at = p;
    TauFit fit = compute_tau(m, p);
    cs.tau = fit.tau;
    cs.kappa = m.base->gauss_curvature({p.x, p.y});
    Frame3 f = m.horizontal_frame(p);
    cs.k_horizontal = sectional_curvature(m, p, f.X, f.Y);
    cs.k_vertical = sectional_curvature(m, p, f.X, f.xi);
    cs.res_horizontal = std::abs(cs.k_horizontal - (cs.kappa - 3 * cs.tau * cs.tau));
    cs.res_vertical = std::abs(cs.k_vertical - cs.tau * cs.tau);
    return cs;
}

// --- 3D geodesics ------------------------------------------------------------

namespace {

using State6 = std::array<double, 6>;

void geodesic3_rhs(const SubmersionModel& m, const State6& y, State6& dy) {
    Point3 p{y[0], y[1], y[2]};
    Christoffel G = christoffel3(m, p);
    const double v[3] = {y[3], y[4], y[5]};
    dy[0] = v[0];
    dy[1] = v[1];
    dy[2] = v[2];
    for (int k = 0; k < 3; ++k) {
        double acc = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) acc += G[k][i][j] * v[i] * v[j];
        dy[3 + k] = -acc;
    }
}

DormandPrince<6> make_stepper3() {
    DormandPrince<6> st;
    st.abs_tol = 1e-11;
    st.rel_tol = 1e-11;
    st.h_init = 1e-3;
    st.h_max = 0.1;
    return st;
}

} // namespace

std::vector<Path3Sample> geodesic3_trace(const SubmersionModel& m, Point3 p, Vec3 v,
                                         double s_max, double ds) {
    auto stepper = make_stepper3();
    auto rhs = [&m](const State6& y, State6& dy) { geodesic3_rhs(m, y, dy); };
    long n = std::max(1L, std::lround(s_max / ds));
    double step = s_max / n;
    std::vector<Path3Sample> out;
    out.reserve(n + 1);
    State6 y{p.x, p.y, p.t, v.x, v.y, v.t};
    out.push_back({0, p, v});
    double s = 0;
    for (long k = 1; k <= n; ++k) {
        s = stepper.integrate(y, s, k * step, rhs);
        if (!m.contains({y[0], y[1], y[2]}))
            throw ChartExit("geodesic3_trace: left the chart");
        out.push_back({s, {y[0], y[1], y[2]}, {y[3], y[4], y[5]}});
    }
    return out;
}

Point3 exp3(const SubmersionModel& m, Point3 p, Vec3 v_unit, double s) {
    if (s == 0) return p;
    auto stepper = make_stepper3();
    auto rhs = [&m](const State6& y, State6& dy) { geodesic3_rhs(m, y, dy); };
    State6 y{p.x, p.y, p.t, v_unit.x, v_unit.y, v_unit.t};
    stepper.integrate(y, 0, s, rhs);
    return {y[0], y[1], y[2]};
}

double distance3(const SubmersionModel& m, Point3 p, Point3 q) {
    // Direction shooting with Newton on (theta, phi, s). The seed comes from
    // the chart chord rescaled to metric-unit length.
    Vec3 chord = q - p;
    double chord_norm = m.norm3(p, chord);
    if (chord_norm < 1e-14) return 0.0;
    Vec3 v0 = (1.0 / chord_norm) * chord;
    double theta = std::atan2(v0.y, v0.x);
    double phi = std::asin(std::clamp(v0.t / std::sqrt(v0.x * v0.x + v0.y * v0.y + v0.t * v0.t), -1.0, 1.0));
    double s = chord_norm;

    auto unit_dir = [&](double th, double ph) {
        // orthonormal-frame direction mapped to chart components
        Frame3 f = m.horizontal_frame(p);
        Vec3 d = std::cos(ph) * (std::cos(th) * f.X + std::sin(th) * f.Y) + std::sin(ph) * f.xi;
        return d;
    };
    // re-seed angles in the frame basis
    {
        Frame3 f = m.horizontal_frame(p);
        double cx = m.dot3(p, v0, f.X), cy = m.dot3(p, v0, f.Y), ct = m.dot3(p, v0, f.xi);
        theta = std::atan2(cy, cx);
        phi = std::asin(std::clamp(ct, -1.0, 1.0));
    }

    for (int it = 0; it < 60; ++it) {
        Point3 e = exp3(m, p, unit_dir(theta, phi), s);
        Vec3 r = e - q;
        double miss = std::sqrt(r.x * r.x + r.y * r.y + r.t * r.t);
        if (miss < 1e-9) return s;
        const double h = 1e-6;
        Point3 et = exp3(m, p, unit_dir(theta + h, phi), s);
        Point3 ep = exp3(m, p, unit_dir(theta, phi + h), s);
        Point3 es = exp3(m, p, unit_dir(theta, phi), s + h);
        double J[3][3] = {{(et.x - e.x) / h, (ep.x - e.x) / h, (es.x - e.x) / h},
                          {(et.y - e.y) / h, (ep.y - e.y) / h, (es.y - e.y) / h},
                          {(et.t - e.t) / h, (ep.t - e.t) / h, (es.t - e.t) / h}};
        // solve J d = r
        double det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                     J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                     J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
        if (std::abs(det) < 1e-30) break;
        double rr[3] = {r.x, r.y, r.t};
        double d0 = (rr[0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                     J[0][1] * (rr[1] * J[2][2] - J[1][2] * rr[2]) +
                     J[0][2] * (rr[1] * J[2][1] - J[1][1] * rr[2])) / det;
        double d1 = (J[0][0] * (rr[1] * J[2][2] - J[1][2] * rr[2]) -
                     rr[0] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                     J[0][2] * (J[1][0] * rr[2] - rr[1] * J[2][0])) / det;
        double d2 = (J[0][0] * (J[1][1] * rr[2] - rr[1] * J[2][1]) -
                     J[0][1] * (J[1][0] * rr[2] - rr[1] * J[2][0]) +
                     rr[0] * (J[1][0] * J[2][1] - J[1][1] * J[2][0])) / det;
        theta -= d0;
        phi -= d1;
        s -= d2;
        if (s <= 0) s = 0.5 * chord_norm;
    }
    throw NoConvergence("distance3: direction shooting did not converge");
}

} // namespace ksub
