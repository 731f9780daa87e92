#include "ksub/geodesic.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ksub/errors.hpp"
#include "ksub/ode.hpp"

namespace ksub {

namespace {

constexpr double kPi = 3.14159265358979323846;

// State layout: (x, y, u, v) with (u, v) the chart derivative of position.
using State4 = std::array<double, 4>;

void geodesic_rhs(const HadamardModel& m, const State4& y, State4& dy) {
    Jet2 phi = m.log_lambda(y[0], y[1]);
    const double u = y[2], v = y[3];
    dy[0] = u;
    dy[1] = v;
    dy[2] = -(phi.dx * (u * u - v * v) + 2.0 * phi.dy * u * v);
    dy[3] = -(-phi.dy * (u * u - v * v) + 2.0 * phi.dx * u * v);
}

DormandPrince<4> make_stepper() {
    DormandPrince<4> st;
    st.abs_tol = 1e-13;
    st.rel_tol = 1e-13;
    st.h_init = 1e-3;
    st.h_max = 0.2;
    return st;
}

bool chart_saturated(const HadamardModel& m, double x, double y) {
    if (m.domain != ChartDomain::UnitDisk) return false;
    return 1.0 - (x * x + y * y) < 1e-12;
}

struct TraceCore {
    std::vector<PathSample> samples;
    double ds = 0;
    bool saturated = false;
    bool exited = false;
};

TraceCore trace_one_side(const HadamardModel& m, Point2 p, Vec2 v, double s_max, double ds_req) {
    TraceCore out;
    long n = std::max(1L, std::lround(s_max / ds_req));
    out.ds = s_max / n;
    auto stepper = make_stepper();
    auto rhs = [&m](const State4& y, State4& dy) { geodesic_rhs(m, y, dy); };

    State4 y{p.x, p.y, v.x, v.y};
    out.samples.push_back({0.0, p, v});
    double s = 0;
    for (long k = 1; k <= n; ++k) {
        double target = k * out.ds;
        s = stepper.integrate(y, s, target, rhs);
        if (!m.contains({y[0], y[1]})) {
            out.exited = true;
            break;
        }
        out.samples.push_back({s, {y[0], y[1]}, {y[2], y[3]}});
        if (chart_saturated(m, y[0], y[1])) {
            out.saturated = true;
            break;
        }
    }
    return out;
}

double clamp01(double t) { return std::clamp(t, 0.0, 1.0); }

} // namespace

PathSample GeodesicPath::at(double s) const {
    if (samples.empty()) throw GeomError("path: empty sample table");
    if (s <= s_min()) return samples.front();
    if (s >= s_max()) return samples.back();
    double rel = (s - samples.front().s) / ds;
    size_t i = std::min(static_cast<size_t>(rel), samples.size() - 2);
    double t = (s - samples[i].s) / ds;
    const PathSample& a = samples[i];
    const PathSample& b = samples[i + 1];
    // Hermite for position (the direction is its exact derivative).
    double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    double h10 = t * (1 - t) * (1 - t);
    double h01 = t * t * (3 - 2 * t);
    double h11 = t * t * (t - 1);
    PathSample out;
    out.s = s;
    out.p.x = h00 * a.p.x + h10 * ds * a.d.x + h01 * b.p.x + h11 * ds * b.d.x;
    out.p.y = h00 * a.p.y + h10 * ds * a.d.y + h01 * b.p.y + h11 * ds * b.d.y;
    out.d.x = (1 - t) * a.d.x + t * b.d.x;
    out.d.y = (1 - t) * a.d.y + t * b.d.y;
    return out;
}

size_t GeodesicPath::nearest_sample(Point2 q, size_t stride) const {
    size_t best = 0;
    double bestd = 1e300;
    for (size_t i = 0; i < samples.size(); i += stride) {
        double d2 = dot(samples[i].p - q, samples[i].p - q);
        if (d2 < bestd) { bestd = d2; best = i; }
    }
    size_t lo = best >= stride ? best - stride : 0;
    size_t hi = std::min(best + stride, samples.size() - 1);
    for (size_t i = lo; i <= hi; ++i) {
        double d2 = dot(samples[i].p - q, samples[i].p - q);
        if (d2 < bestd) { bestd = d2; best = i; }
    }
    return best;
}

IdealPoint IdealPoint::from_angle(double a) {
    double t = std::fmod(a, 2 * kPi);
    if (t < 0) t += 2 * kPi;
    return IdealPoint{t};
}

bool IdealPoint::same_as(const IdealPoint& o, double tol) const {
    return std::abs(angle_diff(theta, o.theta)) <= tol;
}

double angle_diff(double a, double b) {
    double d = std::fmod(a - b, 2 * kPi);
    if (d > kPi) d -= 2 * kPi;
    if (d <= -kPi) d += 2 * kPi;
    return d;
}

GeodesicPath geodesic_trace(const HadamardModel& m, Point2 p, Vec2 v, double s_max, double ds) {
    if (s_max <= 0) throw GeomError("geodesic_trace: s_max must be positive");
    if (!m.contains(p)) throw ChartExit("geodesic_trace: start point outside chart");
    if (ds <= 0) ds = m.tol.sample_ds;
    double speed = m.metric_norm(p, v);
    if (std::abs(speed - 1.0) > 1e-6)
        throw GeomError("geodesic_trace: initial direction is not metric-unit");

    TraceCore core = trace_one_side(m, p, v, s_max, ds);
    if (core.exited) {
        if (!m.complete)
            throw ChartExit("geodesic_trace: reached chart boundary on a non-complete model");
        throw StepFailure("geodesic_trace: left the chart on a model declared complete");
    }
    GeodesicPath path;
    path.samples = std::move(core.samples);
    path.ds = core.ds;
    path.saturated_forward = core.saturated;
    if (core.saturated && path.samples.back().s < s_max - 0.5 * core.ds) {
        // Points this close to the chart boundary are not representable in
        // double precision; the requested range cannot be sampled.
        throw StepFailure("geodesic_trace: chart resolution exhausted at s = " +
                          std::to_string(path.samples.back().s));
    }
    double res = max_geodesic_residual(m, path);
    double sp = max_speed_error(m, path);
    if (res > m.tol.integration || sp > m.tol.integration)
        throw StepFailure("geodesic_trace: sample table residual above tolerance");
    return path;
}

GeodesicPath trace_complete(const HadamardModel& m, Point2 p, Vec2 v, double s_extent, double ds) {
    if (ds <= 0) ds = m.tol.sample_ds;
    TraceCore fwd = trace_one_side(m, p, v, s_extent, ds);
    TraceCore bwd = trace_one_side(m, p, -1.0 * v, s_extent, ds);
    if ((fwd.exited || bwd.exited) && !m.complete)
        throw ChartExit("trace_complete: reached chart boundary on a non-complete model");
    GeodesicPath path;
    path.ds = fwd.ds;
    path.saturated_forward = fwd.saturated;
    path.saturated_backward = bwd.saturated;
    path.samples.reserve(fwd.samples.size() + bwd.samples.size() - 1);
    for (size_t i = bwd.samples.size(); i-- > 1;) {
        const PathSample& s = bwd.samples[i];
        path.samples.push_back({-s.s, s.p, -1.0 * s.d});
    }
    for (const PathSample& s : fwd.samples) path.samples.push_back(s);
    return path;
}

double max_geodesic_residual(const HadamardModel& m, const GeodesicPath& path) {
    if (path.samples.size() < 5) return 0.0;
    double worst = 0.0;
    const double ds = path.ds;
    for (size_t i = 2; i + 2 < path.samples.size(); ++i) {
        const auto& s = path.samples;
        // fourth-order central difference of the direction table
        double ax = (8 * (s[i + 1].d.x - s[i - 1].d.x) - (s[i + 2].d.x - s[i - 2].d.x)) / (12 * ds);
        double ay = (8 * (s[i + 1].d.y - s[i - 1].d.y) - (s[i + 2].d.y - s[i - 2].d.y)) / (12 * ds);
        State4 y{s[i].p.x, s[i].p.y, s[i].d.x, s[i].d.y}, dy;
        geodesic_rhs(m, y, dy);
        double rx = ax - dy[2], ry = ay - dy[3];
        double res = m.lambda(s[i].p) * std::hypot(rx, ry);
        worst = std::max(worst, res);
    }
    return worst;
}

double max_speed_error(const HadamardModel& m, const GeodesicPath& path) {
    double worst = 0.0;
    for (const auto& s : path.samples)
        worst = std::max(worst, std::abs(m.metric_norm(s.p, s.d) - 1.0));
    return worst;
}

Vec2 geodesic_acceleration(const HadamardModel& m, Point2 p, Vec2 v) {
    State4 y{p.x, p.y, v.x, v.y}, dy;
    geodesic_rhs(m, y, dy);
    return {dy[2], dy[3]};
}

namespace {

// Upper bound for d(p,q): metric length of the chart segment by 8-point
// Gauss-Legendre quadrature, inflated to stay an upper bound.
double segment_length_bound(const HadamardModel& m, Point2 p, Point2 q) {
    static const double nodes[8] = {0.0198550718, 0.1016667613, 0.2372337950, 0.4082826788,
                                    0.5917173212, 0.7627662050, 0.8983332387, 0.9801449282};
    static const double weights[8] = {0.0506142681, 0.1111905172, 0.1568533229, 0.1813418917,
                                      0.1813418917, 0.1568533229, 0.1111905172, 0.0506142681};
    double len = 0;
    for (int i = 0; i < 8; ++i) {
        Point2 z{p.x + nodes[i] * (q.x - p.x), p.y + nodes[i] * (q.y - p.y)};
        len += weights[i] * m.lambda(z);
    }
    return len * norm(q - p) * 1.15;
}

struct ShotEnd {
    Point2 p;
    Vec2 d;
};

// Endpoint of the unit-speed geodesic from p with chart angle psi after
// arc length s.
ShotEnd shoot(const HadamardModel& m, Point2 p, double psi, double s) {
    auto stepper = make_stepper();
    auto rhs = [&m](const State4& y, State4& dy) { geodesic_rhs(m, y, dy); };
    Vec2 v = m.unit_from_angle(p, psi);
    State4 y{p.x, p.y, v.x, v.y};
    stepper.integrate(y, 0.0, s, rhs);
    return {{y[0], y[1]}, {y[2], y[3]}};
}

// Closest approach of the ray from p at angle psi to the target q. The
// distance to a point is convex along a geodesic, so a coarse monitor with a
// parabolic vertex refinement is enough for the shooting iteration.
struct MissInfo {
    double side = 0;     // sign of cross(tangent, q - closest point)
    double s_at_min = 0;
    double chart_dist = 0;
};

MissInfo miss_info(const HadamardModel& m, Point2 p, double psi, Point2 q, double s_hi) {
    auto stepper = make_stepper();
    auto rhs = [&m](const State4& y, State4& dy) { geodesic_rhs(m, y, dy); };
    Vec2 v = m.unit_from_angle(p, psi);
    State4 y{p.x, p.y, v.x, v.y};
    const double step = s_hi / 64.0;
    double s = 0;

    // (s, d^2) history around the minimum
    double s_prev1 = 0, s_curr = 0;
    double d_prev2 = 1e300, d_prev1 = 1e300;
    double d_curr = dot(p - q, p - q);
    double best_s = 0, best_d2 = d_curr;
    int rises = 0;
    while (s < s_hi) {
        double target = std::min(s + step, s_hi);
        s = stepper.integrate(y, s, target, rhs);
        d_prev2 = d_prev1;
        s_prev1 = s_curr; d_prev1 = d_curr;
        s_curr = s;
        d_curr = (y[0] - q.x) * (y[0] - q.x) + (y[1] - q.y) * (y[1] - q.y);
        if (d_curr < best_d2) { best_d2 = d_curr; best_s = s; }
        rises = d_curr > d_prev1 ? rises + 1 : 0;
        if (rises >= 3) break;
        if (chart_saturated(m, y[0], y[1])) break;
    }

    // Parabolic vertex through the last bracketing triple when available.
    double s_star = best_s;
    if (d_prev2 < 1e299 && d_prev1 <= d_prev2 && d_prev1 <= d_curr) {
        double denom = (d_prev2 - 2 * d_prev1 + d_curr);
        if (std::abs(denom) > 1e-300) {
            double offset = 0.5 * (d_prev2 - d_curr) / denom;
            s_star = s_prev1 + offset * step;
        }
    }
    s_star = std::clamp(s_star, 0.0, s_hi);

    ShotEnd e = shoot(m, p, psi, s_star);
    MissInfo mi;
    mi.s_at_min = s_star;
    mi.chart_dist = norm(e.p - q);
    mi.side = cross(e.d, q - e.p) >= 0 ? 1.0 : -1.0;
    return mi;
}

} // namespace

ConnectResult connect(const HadamardModel& m, Point2 p, Point2 q) {
    if (!m.contains(p) || !m.contains(q)) throw ChartExit("connect: endpoint outside chart");
    double chord = norm(q - p);
    if (chord < 1e-14) throw GeomError("connect: coincident endpoints");

    const double s_hi = segment_length_bound(m, p, q);
    const double psi0 = std::atan2(q.y - p.y, q.x - p.x);
    int budget = m.tol.shooting_budget;

    // Bracket the target angle between rays passing q on opposite sides.
    MissInfo mi0 = miss_info(m, p, psi0, q, s_hi);
    --budget;
    double lo = psi0, hi = psi0;
    MissInfo milo = mi0, mihi = mi0;
    bool bracketed = false;
    for (double w : {0.05, 0.15, 0.4, 0.9, 1.5}) {
        MissInfo ma = miss_info(m, p, psi0 - w, q, s_hi);
        MissInfo mb = miss_info(m, p, psi0 + w, q, s_hi);
        budget -= 2;
        if (ma.side != mi0.side) { lo = psi0 - w; hi = psi0; milo = ma; mihi = mi0; bracketed = true; break; }
        if (mb.side != mi0.side) { lo = psi0; hi = psi0 + w; milo = mi0; mihi = mb; bracketed = true; break; }
        if (budget <= 0) break;
    }
    if (!bracketed) throw NoConvergence("connect: could not bracket the initial angle");
    if (milo.side < 0) { std::swap(lo, hi); std::swap(milo, mihi); }

    // Bisection on the passing side.
    MissInfo best = milo.chart_dist < mihi.chart_dist ? milo : mihi;
    double best_psi = milo.chart_dist < mihi.chart_dist ? lo : hi;
    while (budget-- > 0) {
        double psi = 0.5 * (lo + hi);
        MissInfo mi = miss_info(m, p, psi, q, s_hi);
        if (mi.chart_dist < best.chart_dist) { best = mi; best_psi = psi; }
        if (mi.side > 0) lo = psi; else hi = psi;
        if (best.chart_dist * m.lambda(q) < 1e3 * m.tol.geometric || std::abs(hi - lo) < 1e-13)
            break;
    }
    if (budget <= 0 && best.chart_dist * m.lambda(q) > 1.0)
        throw NoConvergence("connect: shooting budget exhausted");

    // Newton polish on (angle, arc length) against the chart endpoint.
    double psi = best_psi;
    double s_star = best.s_at_min;
    if (s_star <= 0) {
        // fall back to the first-order metric chord as the arc-length seed
        Point2 mid{0.5 * (p.x + q.x), 0.5 * (p.y + q.y)};
        s_star = m.lambda(mid) * chord;
    }
    for (int it = 0; it < 12; ++it) {
        ShotEnd e = shoot(m, p, psi, s_star);
        double rx = e.p.x - q.x, ry = e.p.y - q.y;
        if (std::hypot(rx, ry) * m.lambda(q) < 0.05 * m.tol.geometric) break;
        const double hpsi = 1e-7, hs = 1e-7;
        ShotEnd ea = shoot(m, p, psi + hpsi, s_star);
        ShotEnd eb = shoot(m, p, psi, s_star + hs);
        double j11 = (ea.p.x - e.p.x) / hpsi, j12 = (eb.p.x - e.p.x) / hs;
        double j21 = (ea.p.y - e.p.y) / hpsi, j22 = (eb.p.y - e.p.y) / hs;
        double det = j11 * j22 - j12 * j21;
        if (std::abs(det) < 1e-30) break;
        double s_prev = s_star;
        psi -= (j22 * rx - j12 * ry) / det;
        s_star -= (-j21 * rx + j11 * ry) / det;
        if (s_star <= 0) s_star = 0.5 * s_prev;
    }

    ConnectResult out;
    out.initial_angle = psi;
    out.distance = s_star;
    double ds = std::min(m.tol.sample_ds, std::max(s_star / 8.0, 1e-6));
    out.path = geodesic_trace(m, p, m.unit_from_angle(p, psi), s_star, ds);
    Point2 end = out.path.samples.back().p;
    if (norm(end - q) * m.lambda(q) > m.tol.geometric)
        throw NoConvergence("connect: endpoint misses target beyond tolerance");
    return out;
}

double distance(const HadamardModel& m, Point2 p, Point2 q) {
    return connect(m, p, q).distance;
}

double angle_at(const HadamardModel& m, Point2 p, Point2 q, Point2 r) {
    ConnectResult cq = connect(m, p, q);
    ConnectResult cr = connect(m, p, r);
    return std::abs(angle_diff(cr.initial_angle, cq.initial_angle));
}

namespace {

// Chart angle at the basepoint of the geodesic from the basepoint toward z.
double angle_seen_from_basepoint(const HadamardModel& m, Point2 z) {
    if (m.radial_chart_rays)
        return std::atan2(z.y - m.basepoint.y, z.x - m.basepoint.x);
    return connect(m, m.basepoint, z).initial_angle;
}

} // namespace

IdealPoint ideal_point(const HadamardModel& m, Point2 p, Vec2 v) {
    auto stepper = make_stepper();
    auto rhs = [&m](const State4& y, State4& dy) { geodesic_rhs(m, y, dy); };
    State4 y{p.x, p.y, v.x, v.y};
    double s = 0;

    double prev_angle = 0;
    bool have_prev = false;
    double checkpoint = 1.0;
    const double cutoff = m.tol.ideal_cutoff;
    for (;;) {
        bool saturated = false;
        while (s < checkpoint) {
            double next = std::min(checkpoint, s + 0.25);
            s = stepper.integrate(y, s, next, rhs);
            if (!m.contains({y[0], y[1]}))
                throw ChartExit("ideal_point: left the chart");
            if (chart_saturated(m, y[0], y[1])) { saturated = true; break; }
        }
        double ang = angle_seen_from_basepoint(m, {y[0], y[1]});
        if (have_prev && std::abs(angle_diff(ang, prev_angle)) < m.tol.ideal_drift)
            return IdealPoint::from_angle(ang);
        if (saturated) {
            // Chart coordinates cannot move further; the remaining angular
            // drift is below double resolution.
            return IdealPoint::from_angle(ang);
        }
        // the drift criterion compares genuine arc-length doublings
        if (2 * checkpoint > cutoff)
            throw NoStabilization("ideal_point: drift criterion unmet at arc-length cutoff");
        prev_angle = ang;
        have_prev = true;
        checkpoint = 2 * checkpoint;
    }
}

OrientedGeodesic ideal_geodesic(const HadamardModel& m, IdealPoint th1, IdealPoint th2,
                                double trace_extent) {
    double gap = angle_diff(th2.theta, th1.theta);
    if (std::abs(gap) < 1e-9)
        throw GeomError("ideal_geodesic: coincident ideal points");
    if (trace_extent <= 0) trace_extent = std::min(20.0, m.tol.ideal_cutoff / 2);

    // Transversal through the basepoint at the mid angle of the endpoints.
    const double mid = th1.theta + 0.5 * gap;
    const double half = std::abs(gap) / 2; // in (0, pi/2]
    const Vec2 radial{std::cos(mid), std::sin(mid)};

    // Seed from the orthogonal-circle construction of the standard disk:
    // nearest chart point of the geodesic sits on the bisector ray.
    double r = half < kPi / 2 - 1e-9 ? (1 - std::sin(half)) / std::cos(half) : 0.0;
    double psi = mid + (gap > 0 ? kPi / 2 : -kPi / 2);

    auto residual = [&](double rr, double pp, double out[2]) {
        Point2 x0 = m.basepoint + rr * radial;
        if (!m.contains(x0)) { out[0] = out[1] = 1e3; return; }
        try {
            Vec2 d = m.unit_from_angle(x0, pp);
            IdealPoint fwd = ideal_point(m, x0, d);
            IdealPoint bwd = ideal_point(m, x0, -1.0 * d);
            out[0] = angle_diff(fwd.theta, th2.theta);
            out[1] = angle_diff(bwd.theta, th1.theta);
        } catch (const GeomError&) {
            out[0] = out[1] = 1e3;
        }
    };

    double res[2];
    residual(r, psi, res);
    {
        double res_flip[2];
        residual(r, psi + kPi, res_flip);
        if (std::hypot(res_flip[0], res_flip[1]) < std::hypot(res[0], res[1])) {
            psi += kPi;
            res[0] = res_flip[0];
            res[1] = res_flip[1];
        }
    }

    int budget = m.tol.shooting_budget;
    const double target = 0.5 * m.tol.angular;
    while (std::hypot(res[0], res[1]) > target) {
        if (budget-- <= 0)
            throw NoConvergence("ideal_geodesic: shooting budget exhausted");
        const double hr = 1e-5, hp = 1e-5;
        double ra[2], rb[2];
        residual(r + hr, psi, ra);
        residual(r, psi + hp, rb);
        double j11 = (ra[0] - res[0]) / hr, j12 = (rb[0] - res[0]) / hp;
        double j21 = (ra[1] - res[1]) / hr, j22 = (rb[1] - res[1]) / hp;
        double det = j11 * j22 - j12 * j21;
        if (std::abs(det) < 1e-18)
            throw NoConvergence("ideal_geodesic: singular shooting Jacobian");
        double dr = (j22 * res[0] - j12 * res[1]) / det;
        double dp = (-j21 * res[0] + j11 * res[1]) / det;
        double step = 1.0;
        for (; step > 1e-4; step *= 0.5) {
            double rn = r - step * dr, pn = psi - step * dp;
            if (m.domain == ChartDomain::UnitDisk && std::abs(rn) > 0.999) continue;
            double trial[2];
            residual(rn, pn, trial);
            if (std::hypot(trial[0], trial[1]) < std::hypot(res[0], res[1])) {
                r = rn;
                psi = pn;
                res[0] = trial[0];
                res[1] = trial[1];
                break;
            }
        }
        if (step <= 1e-4)
            throw NoConvergence("ideal_geodesic: no descent step");
    }

    Point2 x0 = m.basepoint + r * radial;
    Vec2 d = m.unit_from_angle(x0, psi);
    OrientedGeodesic og;
    og.path = trace_complete(m, x0, d, trace_extent);
    og.backward = th1;
    og.forward = th2;
    return og;
}

double signed_distance(const HadamardModel& m, const GeodesicPath& trace, Point2 p) {
    size_t i = trace.nearest_sample(p);
    size_t lo = i > 0 ? i - 1 : 0;
    size_t hi = std::min(i + 1, trace.samples.size() - 1);
    double best = 1e300;
    double sign = 1.0;
    Point2 cbest = trace.samples[i].p;
    if (hi == lo) {
        best = norm(p - cbest);
        sign = cross(trace.samples[i].d, p - cbest) >= 0 ? 1.0 : -1.0;
    }
    for (size_t a = lo; a < hi; ++a) {
        Point2 p0 = trace.samples[a].p, p1 = trace.samples[a + 1].p;
        Vec2 seg = p1 - p0;
        double len2 = dot(seg, seg);
        double t = len2 > 0 ? clamp01(dot(p - p0, seg) / len2) : 0.0;
        Point2 c = p0 + t * seg;
        double d = norm(p - c);
        if (d < best) {
            best = d;
            cbest = c;
            Vec2 tangent = (1 - t) * trace.samples[a].d + t * trace.samples[a + 1].d;
            sign = cross(tangent, p - c) >= 0 ? 1.0 : -1.0;
        }
    }
    return sign * best * m.lambda(cbest);
}

Side side_of(const HadamardModel& m, const GeodesicPath& oriented_trace, Point2 p) {
    double sd = signed_distance(m, oriented_trace, p);
    if (std::abs(sd) <= m.tol.geometric) return Side::On;
    return sd > 0 ? Side::Exterior : Side::Interior;
}

TriangleReport triangle_checks(const HadamardModel& m, Point2 p, Point2 q, Point2 r) {
    ConnectResult pq = connect(m, p, q);
    ConnectResult qr = connect(m, q, r);
    ConnectResult rp = connect(m, r, p);

    auto end_dir = [](const ConnectResult& c) { return c.path.samples.back().d; };
    auto angle_between = [](Vec2 u, Vec2 v) {
        double c = dot(u, v) / (norm(u) * norm(v));
        return std::acos(std::clamp(c, -1.0, 1.0));
    };

    TriangleReport t;
    t.c = pq.distance; // |pq|
    t.a = qr.distance; // |qr|
    t.b = rp.distance; // |rp|
    t.alpha = angle_between(pq.path.samples.front().d, -1.0 * end_dir(rp));
    t.beta = angle_between(qr.path.samples.front().d, -1.0 * end_dir(pq));
    t.gamma = angle_between(rp.path.samples.front().d, -1.0 * end_dir(qr));

    t.slack_law_of_cosines = t.c * t.c - (t.a * t.a + t.b * t.b - 2 * t.a * t.b * std::cos(t.gamma));
    t.slack_double_law = (t.b * std::cos(t.alpha) + t.a * std::cos(t.beta)) - t.c;
    t.slack_angle_sum = kPi - (t.alpha + t.beta + t.gamma);
    return t;
}

FootResult foot_of_perpendicular(const HadamardModel& m, const GeodesicPath& alpha, Point2 p) {
    // Coarse localization with the chart-scaled proxy distance, then a
    // secant iteration on the orthogonality defect of true connecting
    // geodesics.
    size_t i = alpha.nearest_sample(p, 4);
    double s_lo = std::max(alpha.s_min(), alpha.samples[i].s - 0.6);
    double s_hi = std::min(alpha.s_max(), alpha.samples[i].s + 0.6);

    auto proxy = [&](double s) {
        Point2 c = alpha.at(s).p;
        return norm(p - c) * m.lambda(c);
    };
    const double gr = 0.6180339887498949;
    double a = s_lo, b = s_hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = proxy(x1), f2 = proxy(x2);
    for (int it = 0; it < 60 && (b - a) > 1e-6; ++it) {
        if (f1 < f2) { b = x2; x2 = x1; f2 = f1; x1 = b - gr * (b - a); f1 = proxy(x1); }
        else { a = x1; x1 = x2; f1 = f2; x2 = a + gr * (b - a); f2 = proxy(x2); }
    }
    double s_star = 0.5 * (a + b);

    auto defect = [&](double s) {
        PathSample smp = alpha.at(s);
        ConnectResult c = connect(m, p, smp.p);
        Vec2 arrive = c.path.samples.back().d;
        return dot(arrive, smp.d) / (norm(arrive) * norm(smp.d));
    };
    double s0 = s_star - 1e-3, s1 = s_star + 1e-3;
    double g0 = defect(s0), g1 = defect(s1);
    int budget = m.tol.shooting_budget / 4;
    while (std::abs(g1) > 1e-10 && budget-- > 0) {
        double denom = g1 - g0;
        if (std::abs(denom) < 1e-18) break;
        double s2 = s1 - g1 * (s1 - s0) / denom;
        s2 = std::clamp(s2, alpha.s_min(), alpha.s_max());
        s0 = s1;
        g0 = g1;
        s1 = s2;
        g1 = defect(s1);
        if (std::abs(s1 - s0) < 1e-13) break;
    }
    if (budget <= 0 && std::abs(g1) > m.tol.angular)
        throw NoConvergence("foot_of_perpendicular: secant budget exhausted");

    FootResult out;
    PathSample smp = alpha.at(s1);
    ConnectResult c = connect(m, p, smp.p);
    out.foot = smp.p;
    out.s_at_foot = s1;
    out.distance = c.distance;
    Vec2 arrive = c.path.samples.back().d;
    double cosang = dot(arrive, smp.d) / (norm(arrive) * norm(smp.d));
    out.orthogonality_residual = std::abs(std::acos(std::clamp(cosang, -1.0, 1.0)) - kPi / 2);
    return out;
}

std::vector<GeodesicPath> foliation_orthogonal(const HadamardModel& m, const GeodesicPath& alpha,
                                               const std::vector<double>& s_grid,
                                               double leaf_extent) {
    for (size_t i = 1; i < s_grid.size(); ++i)
        if (s_grid[i] <= s_grid[i - 1])
            throw GeomError("foliation_orthogonal: grid must be strictly increasing");
    std::vector<GeodesicPath> leaves;
    leaves.reserve(s_grid.size());
    for (double s : s_grid) {
        PathSample smp = alpha.at(s);
        Vec2 n = rot90(smp.d); // metric-unit since the chart is conformal
        leaves.push_back(trace_complete(m, smp.p, n, leaf_extent));
    }
    return leaves;
}

std::vector<OrientedGeodesic> foliation_from_infinity(const HadamardModel& m, IdealPoint x0,
                                                      const std::vector<IdealPoint>& thetas,
                                                      double trace_extent) {
    std::vector<OrientedGeodesic> leaves;
    leaves.reserve(thetas.size());
    for (const IdealPoint& th : thetas) {
        if (th.same_as(x0, 1e-9))
            throw GeomError("foliation_from_infinity: grid contains the anchor point");
        leaves.push_back(ideal_geodesic(m, x0, th, trace_extent));
    }
    return leaves;
}

namespace {

bool segments_cross(Point2 a0, Point2 a1, Point2 b0, Point2 b1) {
    auto orient = [](Point2 p, Point2 q, Point2 r) {
        double v = cross(q - p, r - p);
        return v > 0 ? 1 : (v < 0 ? -1 : 0);
    };
    int o1 = orient(a0, a1, b0), o2 = orient(a0, a1, b1);
    int o3 = orient(b0, b1, a0), o4 = orient(b0, b1, a1);
    return o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

} // namespace

DisjointnessWitness leaves_disjointness(const std::vector<const GeodesicPath*>& leaves,
                                        std::optional<Point2> exclude_near,
                                        double exclude_radius) {
    DisjointnessWitness w;
    auto excluded = [&](Point2 p) {
        return exclude_near && norm(p - *exclude_near) < exclude_radius;
    };

    struct PairResult {
        double dist = 1e300;
        double gap = 0;
        bool crossing = false;
    };
    auto pair_scan = [&](const GeodesicPath& A, const GeodesicPath& B) {
        const auto& a = A.samples;
        const auto& b = B.samples;
        size_t sa = std::max<size_t>(1, a.size() / 96);
        size_t sb = std::max<size_t>(1, b.size() / 96);
        size_t bi = a.size(), bj = 0;
        double best = 1e300;
        PairResult out;
        std::vector<std::pair<size_t, size_t>> near_windows;
        for (size_t i = 0; i < a.size(); i += sa) {
            size_t inext = std::min(i + sa, a.size() - 1);
            double reach_a = norm(a[inext].p - a[i].p);
            for (size_t j = 0; j < b.size(); j += sb) {
                double d2 = dot(a[i].p - b[j].p, a[i].p - b[j].p);
                if (d2 < best && !excluded(a[i].p) && !excluded(b[j].p)) {
                    best = d2;
                    bi = i;
                    bj = j;
                }
                size_t jnext = std::min(j + sb, b.size() - 1);
                double reach = reach_a + norm(b[jnext].p - b[j].p);
                if (d2 <= reach * reach && near_windows.size() < 1024)
                    near_windows.emplace_back(i, j);
            }
        }
        // Exact crossing scan wherever coarse cells can overlap, shared
        // anchor zone included.
        for (auto [ci, cj] : near_windows) {
            if (out.crossing) break;
            size_t ia = ci > sa ? ci - sa : 0, ib = std::min(ci + sa, a.size() - 1);
            size_t ja = cj > sb ? cj - sb : 0, jb = std::min(cj + sb, b.size() - 1);
            for (size_t i = ia; i + 1 <= ib && !out.crossing; ++i)
                for (size_t j = ja; j + 1 <= jb; ++j) {
                    // Inside the shared-anchor zone the leaves sit below
                    // double resolution of each other; crossings there are
                    // not decidable and not counted.
                    if (excluded(a[i].p) && excluded(b[j].p)) continue;
                    if (segments_cross(a[i].p, a[i + 1].p, b[j].p, b[j + 1].p)) {
                        out.crossing = true;
                        break;
                    }
                }
        }
        if (bi == a.size()) return out; // everything excluded
        double bestd = std::sqrt(best);
        size_t ilo = bi > sa ? bi - sa : 0, ihi = std::min(bi + sa, a.size() - 1);
        size_t jlo = bj > sb ? bj - sb : 0, jhi = std::min(bj + sb, b.size() - 1);
        for (size_t i = ilo; i <= ihi; ++i) {
            if (excluded(a[i].p)) continue;
            for (size_t j = jlo; j < jhi; ++j) {
                if (excluded(b[j].p)) continue;
                Vec2 seg = b[j + 1].p - b[j].p;
                double len2 = dot(seg, seg);
                double t = len2 > 0 ? clamp01(dot(a[i].p - b[j].p, seg) / len2) : 0;
                Point2 c = b[j].p + t * seg;
                bestd = std::min(bestd, norm(a[i].p - c));
            }
        }
        double gap = 0;
        if (bi + 1 < a.size()) gap = std::max(gap, norm(a[bi + 1].p - a[bi].p));
        if (bi > 0) gap = std::max(gap, norm(a[bi].p - a[bi - 1].p));
        if (bj + 1 < b.size()) gap = std::max(gap, norm(b[bj + 1].p - b[bj].p));
        if (bj > 0) gap = std::max(gap, norm(b[bj].p - b[bj - 1].p));
        out.dist = bestd;
        out.gap = gap;
        return out;
    };

    for (size_t i = 0; i < leaves.size(); ++i)
        for (size_t j = i + 1; j < leaves.size(); ++j) {
            PairResult r = pair_scan(*leaves[i], *leaves[j]);
            w.crossing_found = w.crossing_found || r.crossing;
            if (r.dist < w.min_chart_distance) {
                w.min_chart_distance = r.dist;
                w.local_sample_gap = r.gap;
                w.leaf_i = i;
                w.leaf_j = j;
            }
        }
    return w;
}

} // namespace ksub
