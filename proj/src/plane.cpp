#include "ksub/plane.hpp"

#include <algorithm>
#include <cmath>

#include "ksub/errors.hpp"
#include "ksub/geodesic.hpp"

namespace ksub {

namespace {

std::vector<double> cumulative_connection(const SubmersionModel& m, const GeodesicPath& alpha) {
    std::vector<double> W(alpha.samples.size(), 0.0);
    auto w_of = [&](const PathSample& s) {
        return m.omega_a(s.p.x, s.p.y).v * s.d.x + m.omega_b(s.p.x, s.p.y).v * s.d.y;
    };
    for (size_t i = 1; i < alpha.samples.size(); ++i) {
        double wa = w_of(alpha.samples[i - 1]);
        double wb = w_of(alpha.samples[i]);
        W[i] = W[i - 1] + 0.5 * (wa + wb) * alpha.ds;
    }
    return W;
}

} // namespace

double VerticalPlane::w_at(double s) const {
    if (alpha.samples.empty()) return 0;
    if (s <= alpha.s_min()) return W.front();
    if (s >= alpha.s_max()) return W.back();
    double rel = (s - alpha.s_min()) / alpha.ds;
    size_t i = std::min(static_cast<size_t>(rel), W.size() - 2);
    double t = rel - i;
    return (1 - t) * W[i] + t * W[i + 1];
}

PlaneCoord VerticalPlane::project(Point3 p) const {
    Point2 q{p.x, p.y};
    size_t i = alpha.nearest_sample(q);
    size_t lo = i > 0 ? i - 1 : 0;
    size_t hi = std::min(i + 1, alpha.samples.size() - 1);
    double best = 1e300;
    double s = alpha.samples[i].s;
    for (size_t a = lo; a < hi; ++a) {
        Point2 p0 = alpha.samples[a].p, p1 = alpha.samples[a + 1].p;
        Vec2 seg = p1 - p0;
        double len2 = dot(seg, seg);
        double t = len2 > 0 ? std::clamp(dot(q - p0, seg) / len2, 0.0, 1.0) : 0.0;
        Point2 c = p0 + t * seg;
        double d = dot(q - c, q - c);
        if (d < best) {
            best = d;
            s = alpha.samples[a].s + t * alpha.ds;
        }
    }
    PlaneCoord out;
    out.s = s;
    out.eta = p.t + w_at(s);
    return out;
}

Point3 VerticalPlane::embed(PlaneCoord c) const {
    PathSample smp = alpha.at(c.s);
    return {smp.p.x, smp.p.y, c.eta - w_at(c.s)};
}

double VerticalPlane::signed_base_distance(Point2 q) const {
    double sd = signed_distance(*model->base, alpha, q);
    // Near the chart boundary every curve is chart-close and the
    // nearest-segment side flips spuriously; there the cyclic order of
    // boundary angles decides the side instead. The geodesic separates the
    // boundary circle into the arc left of travel (forward to backward
    // endpoint, counter-clockwise) and its complement.
    if (model->base->domain == ChartDomain::UnitDisk) {
        double r2 = q.x * q.x + q.y * q.y;
        if (1.0 - r2 < 0.02) {
            Point2 ef = alpha.samples.back().p;
            Point2 eb = alpha.samples.front().p;
            double ang_f = std::atan2(ef.y, ef.x);
            double ang_b = std::atan2(eb.y, eb.x);
            double ang_q = std::atan2(q.y, q.x);
            auto ccw = [](double x) {
                double t = std::fmod(x, 2 * M_PI);
                return t < 0 ? t + 2 * M_PI : t;
            };
            bool left = ccw(ang_q - ang_f) < ccw(ang_b - ang_f);
            double mag = std::abs(sd);
            return left ? mag : -mag;
        }
    }
    return sd;
}

Side VerticalPlane::base_side(Point2 q) const {
    return side_of(*model->base, alpha, q);
}

VerticalPlane make_vertical_plane(const SubmersionModel& m, GeodesicPath alpha) {
    VerticalPlane p;
    p.model = &m;
    p.alpha = std::move(alpha);
    p.W = cumulative_connection(m, p.alpha);
    return p;
}

VerticalPlane make_vertical_plane(const SubmersionModel& m, const OrientedGeodesic& alpha) {
    VerticalPlane p = make_vertical_plane(m, alpha.path);
    p.backward = alpha.backward;
    p.forward = alpha.forward;
    p.has_ideal_points = true;
    return p;
}

PlaneFoliation make_plane_foliation_along(const SubmersionModel& m, GeodesicPath beta,
                                          const std::vector<double>& t_grid,
                                          double leaf_extent) {
    for (size_t i = 1; i < t_grid.size(); ++i)
        if (t_grid[i] <= t_grid[i - 1])
            throw GeomError("make_plane_foliation: t-grid must be strictly increasing");
    PlaneFoliation fol;
    fol.beta = std::move(beta);
    fol.t_grid = t_grid;
    for (double t : t_grid) {
        PathSample smp = fol.beta.at(t);
        // leaf oriented so that J(leaf direction) points along beta: the
        // exterior of each plane is the side beta runs into
        Vec2 dir = -1.0 * rot90(smp.d);
        fol.planes.push_back(make_vertical_plane(m, trace_complete(*m.base, smp.p, dir, leaf_extent)));
    }
    return fol;
}

PlaneFoliation make_plane_foliation(const SubmersionModel& m, IdealPoint th1, IdealPoint th2,
                                    const std::vector<double>& t_grid, double anchor_s,
                                    double leaf_extent) {
    OrientedGeodesic alpha = ideal_geodesic(*m.base, th1, th2, leaf_extent);
    PathSample at = alpha.path.at(anchor_s);
    Vec2 beta_dir = rot90(at.d); // into the exterior side of the base plane
    GeodesicPath beta = trace_complete(*m.base, at.p, beta_dir, leaf_extent);
    return make_plane_foliation_along(m, std::move(beta), t_grid, leaf_extent);
}

} // namespace ksub
