#include "ksub/intersect.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ksub/errors.hpp"

namespace ksub {

namespace {

struct GridSpec {
    int nu, nv;
    double u0, u1, v0, v1;
    bool periodic_u;
    double du() const { return (u1 - u0) / nu; }
    double dv() const { return (v1 - v0) / nv; }
    double u(int i) const { return u0 + i * du(); }
    double v(int j) const { return v0 + j * dv(); }
};

// vertex key on a cell edge: horizontal edges keyed by their left corner,
// vertical edges by their bottom corner; periodic charts wrap the u index
struct EdgeKey {
    int i, j;
    bool vertical;
    bool operator<(const EdgeKey& o) const {
        return std::tie(i, j, vertical) < std::tie(o.i, o.j, o.vertical);
    }
};

} // namespace

Point2 IntersectionCurve::base_centroid() const {
    Point2 c{0, 0};
    if (pts.empty()) return c;
    for (const auto& v : pts) {
        c.x += v.xyz.x;
        c.y += v.xyz.y;
    }
    c.x /= pts.size();
    c.y /= pts.size();
    return c;
}

// diameter of the (s, eta) vertex set via a subsampled pair scan with local
// refinement around the best pair
double plane_diameter_of(const IntersectionCurve& curve) {
    const auto& pts = curve.pts;
    if (pts.size() < 2) return 0.0;
    size_t stride = std::max<size_t>(1, pts.size() / 64);
    double best = 0;
    size_t bi = 0, bj = 0;
    auto d2 = [&](size_t i, size_t j) {
        double ds = pts[i].pc.s - pts[j].pc.s;
        double de = pts[i].pc.eta - pts[j].pc.eta;
        return ds * ds + de * de;
    };
    for (size_t i = 0; i < pts.size(); i += stride)
        for (size_t j = i + stride; j < pts.size(); j += stride) {
            double d = d2(i, j);
            if (d > best) {
                best = d;
                bi = i;
                bj = j;
            }
        }
    size_t ilo = bi > stride ? bi - stride : 0, ihi = std::min(bi + stride, pts.size() - 1);
    size_t jlo = bj > stride ? bj - stride : 0, jhi = std::min(bj + stride, pts.size() - 1);
    for (size_t i = ilo; i <= ihi; ++i)
        for (size_t j = jlo; j <= jhi; ++j) best = std::max(best, d2(i, j));
    return std::sqrt(best);
}

std::vector<IntersectionCurve> intersect(const SubmersionModel& m, const ImmersedSurface& surf,
                                         const VerticalPlane& plane, const IntersectOptions& opt) {
    const SurfaceChart& chart = surf.charts.at(surf.marching_chart);
    GridSpec grid;
    grid.nu = opt.grid_u > 0 ? opt.grid_u : chart.nu;
    grid.nv = opt.grid_v > 0 ? opt.grid_v : chart.nv;
    grid.u0 = chart.u0;
    grid.u1 = chart.u1;
    grid.v0 = chart.v0;
    grid.v1 = chart.v1;
    grid.periodic_u = chart.periodic_u;

    auto field = [&](double u, double v) {
        Point3 p = chart.f(u, v);
        double f = plane.signed_base_distance({p.x, p.y});
        // values at machine noise get a consistent side, so a zero line
        // falling exactly on a grid column cannot jitter across it
        return std::abs(f) < 1e-13 ? -1e-13 : f;
    };

    // corner values
    const int NU = grid.nu, NV = grid.nv;
    std::vector<double> f((NU + 1) * (NV + 1));
    auto F = [&](int i, int j) -> double& { return f[j * (NU + 1) + i]; };
    for (int j = 0; j <= NV; ++j)
        for (int i = 0; i <= NU; ++i)
            F(i, j) = (grid.periodic_u && i == NU) ? F(0, j) : field(grid.u(i), grid.v(j));

    // refined zero on an edge by bisection over the continuous field
    auto edge_zero = [&](EdgeKey key) {
        double ua = grid.u(key.i), va = grid.v(key.j);
        double ub = key.vertical ? ua : grid.u(key.i + 1);
        double vb = key.vertical ? grid.v(key.j + 1) : va;
        double fa = F(key.i, key.j);
        double fb = key.vertical ? F(key.i, key.j + 1)
                                 : F(grid.periodic_u ? (key.i + 1) % NU : key.i + 1, key.j);
        // without a sign bracket, take the endpoint closer to the zero
        if ((fa < 0) == (fb < 0))
            return std::abs(fa) <= std::abs(fb) ? std::pair<double, double>{ua, va}
                                                : std::pair<double, double>{ub, vb};
        for (int it = 0; it < 30; ++it) {
            double um = 0.5 * (ua + ub), vm = 0.5 * (va + vb);
            double fm = field(um, vm);
            if ((fm < 0) == (fa < 0)) {
                ua = um;
                va = vm;
                fa = fm;
            } else {
                ub = um;
                vb = vm;
                fb = fm;
            }
        }
        return std::pair<double, double>{0.5 * (ua + ub), 0.5 * (va + vb)};
    };

    // marching squares: per cell, collect crossing edges and pair them
    std::map<EdgeKey, int> vertex_of_edge;
    std::vector<std::pair<double, double>> verts; // (u, v)
    std::vector<std::vector<int>> adjacency;

    auto vertex_for = [&](EdgeKey key) {
        if (grid.periodic_u) key.i %= NU;
        auto it = vertex_of_edge.find(key);
        if (it != vertex_of_edge.end()) return it->second;
        auto [u, v] = edge_zero(key);
        int id = static_cast<int>(verts.size());
        verts.emplace_back(u, v);
        adjacency.emplace_back();
        vertex_of_edge.emplace(key, id);
        return id;
    };
    auto link = [&](int a, int b) {
        if (a == b) return;
        adjacency[a].push_back(b);
        adjacency[b].push_back(a);
    };

    for (int j = 0; j < NV; ++j) {
        for (int i = 0; i < NU; ++i) {
            int inext = grid.periodic_u ? (i + 1) % NU : i + 1;
            double c00 = F(i, j), c10 = F(inext, j), c01 = F(i, j + 1), c11 = F(inext, j + 1);
            int mask = (c00 > 0) | ((c10 > 0) << 1) | ((c11 > 0) << 2) | ((c01 > 0) << 3);
            if (mask == 0 || mask == 15) continue;
            EdgeKey bottom{i, j, false}, right{i + 1, j, true}, top{i, j + 1, false}, left{i, j, true};
            if (grid.periodic_u) right.i %= NU;
            auto segment = [&](EdgeKey a, EdgeKey b) { link(vertex_for(a), vertex_for(b)); };
            switch (mask) {
                case 1: case 14: segment(left, bottom); break;
                case 2: case 13: segment(bottom, right); break;
                case 3: case 12: segment(left, right); break;
                case 4: case 11: segment(right, top); break;
                case 6: case 9: segment(bottom, top); break;
                case 7: case 8: segment(left, top); break;
                case 5: case 10: {
                    // saddle: resolve with the center sample
                    double fc = field(grid.u(i) + 0.5 * grid.du(), grid.v(j) + 0.5 * grid.dv());
                    bool center_pos = fc > 0;
                    bool corner_pos = c00 > 0; // mask 5: c00, c11 positive
                    if (mask == 10) corner_pos = c10 > 0;
                    if (mask == 5) {
                        if (center_pos == corner_pos) {
                            segment(left, top);
                            segment(bottom, right);
                        } else {
                            segment(left, bottom);
                            segment(right, top);
                        }
                    } else {
                        if (center_pos == corner_pos) {
                            segment(left, bottom);
                            segment(right, top);
                        } else {
                            segment(left, top);
                            segment(bottom, right);
                        }
                    }
                    break;
                }
                default: break;
            }
        }
    }

    // chain the adjacency graph into polylines
    std::vector<IntersectionCurve> curves;
    std::vector<char> used(verts.size(), 0);
    auto walk = [&](int start, int veto) {
        std::vector<int> out{start};
        used[start] = 1;
        int prev = veto, curr = start;
        for (;;) {
            int next = -1;
            for (int nb : adjacency[curr])
                if (nb != prev && !used[nb]) {
                    next = nb;
                    break;
                }
            if (next < 0) {
                // may close back onto the start
                for (int nb : adjacency[curr])
                    if (nb == start && out.size() > 2) return std::pair(out, true);
                return std::pair(out, false);
            }
            out.push_back(next);
            used[next] = 1;
            prev = curr;
            curr = next;
        }
    };

    for (size_t v0 = 0; v0 < verts.size(); ++v0) {
        if (used[v0] || adjacency[v0].empty()) continue;
        // prefer to start at a degree-1 endpoint of the component
        int start = static_cast<int>(v0);
        {
            std::vector<int> stack{start};
            std::vector<char> seen(verts.size(), 0);
            seen[start] = 1;
            int endpoint = -1;
            while (!stack.empty()) {
                int c = stack.back();
                stack.pop_back();
                if (adjacency[c].size() == 1) endpoint = c;
                for (int nb : adjacency[c])
                    if (!seen[nb]) {
                        seen[nb] = 1;
                        stack.push_back(nb);
                    }
            }
            if (endpoint >= 0) start = endpoint;
        }
        auto [idx, closed] = walk(start, -1);
        if (static_cast<int>(idx.size()) < opt.min_vertices) continue;

        IntersectionCurve curve;
        curve.closed = closed;
        curve.pts.reserve(idx.size());
        for (int id : idx) {
            CurveVertex cv;
            cv.chart = surf.marching_chart;
            cv.u = verts[id].first;
            cv.v = verts[id].second;
            cv.xyz = chart.f(cv.u, cv.v);
            cv.pc = plane.project(cv.xyz);
            curve.pts.push_back(cv);
        }
        // arc length in plane coordinates
        double arc = 0;
        for (size_t k = 0; k < curve.pts.size(); ++k) {
            if (k > 0) {
                double ds = std::hypot(curve.pts[k].pc.s - curve.pts[k - 1].pc.s,
                                       curve.pts[k].pc.eta - curve.pts[k - 1].pc.eta);
                arc += ds;
            }
            curve.pts[k].arc = arc;
        }
        curve.plane_diameter = plane_diameter_of(curve);

        // open-end boundary contact
        if (!closed) {
            auto on_boundary = [&](const CurveVertex& cv) {
                double eps_u = 0.51 * grid.du(), eps_v = 0.51 * grid.dv();
                bool ub = !grid.periodic_u &&
                          (cv.u < grid.u0 + eps_u || cv.u > grid.u1 - eps_u);
                bool vb = cv.v < grid.v0 + eps_v || cv.v > grid.v1 - eps_v;
                return ub || vb;
            };
            curve.touches_param_boundary =
                on_boundary(curve.pts.front()) || on_boundary(curve.pts.back());
        }

        // transversality: gradient of the field along the surface
        double min_tr = 1e300;
        const double hu = grid.du() / 8, hv = grid.dv() / 8;
        for (size_t k = 0; k < curve.pts.size(); k += 2) {
            CurveVertex& cv = curve.pts[k];
            double fu = (field(cv.u + hu, cv.v) - field(cv.u - hu, cv.v)) / (2 * hu);
            double fv = (field(cv.u, cv.v + hv) - field(cv.u, cv.v - hv)) / (2 * hv);
            Vec3 du3, dv3;
            if (chart.jac) chart.jac(cv.u, cv.v, du3, dv3);
            else {
                double h = chart.fd_step;
                du3 = (1.0 / (2 * h)) * (chart.f(cv.u + h, cv.v) - chart.f(cv.u - h, cv.v));
                dv3 = (1.0 / (2 * h)) * (chart.f(cv.u, cv.v + h) - chart.f(cv.u, cv.v - h));
            }
            double E = m.dot3(cv.xyz, du3, du3);
            double Fm = m.dot3(cv.xyz, du3, dv3);
            double G = m.dot3(cv.xyz, dv3, dv3);
            double det = E * G - Fm * Fm;
            if (det <= 0) continue;
            double grad2 = (G * fu * fu - 2 * Fm * fu * fv + E * fv * fv) / det;
            double tr = std::sqrt(std::max(0.0, grad2));
            cv.transversality = tr;
            min_tr = std::min(min_tr, tr);
        }
        curve.min_transversality = min_tr == 1e300 ? 0.0 : min_tr;
        if (opt.throw_on_tangency && curve.min_transversality < opt.transversality_floor)
            throw TangencySuspected("intersect: near-tangential section (min gradient " +
                                    std::to_string(curve.min_transversality) + ")");
        curves.push_back(std::move(curve));
    }
    stitch_chart_seams(curves);
    return curves;
}

void stitch_chart_seams(std::vector<IntersectionCurve>& curves) {
    auto dist3 = [](const CurveVertex& a, const CurveVertex& b) {
        return std::sqrt((a.xyz.x - b.xyz.x) * (a.xyz.x - b.xyz.x) +
                         (a.xyz.y - b.xyz.y) * (a.xyz.y - b.xyz.y) +
                         (a.xyz.t - b.xyz.t) * (a.xyz.t - b.xyz.t));
    };
    auto end_scale = [&](const IntersectionCurve& c, bool front) {
        if (c.pts.size() < 2) return 1e-3;
        const CurveVertex& a = front ? c.pts[0] : c.pts[c.pts.size() - 1];
        const CurveVertex& b = front ? c.pts[1] : c.pts[c.pts.size() - 2];
        return std::max(1e-3, 3.0 * dist3(a, b));
    };
    auto rebuild = [](IntersectionCurve& c) {
        double arc = 0;
        for (size_t k = 0; k < c.pts.size(); ++k) {
            if (k > 0)
                arc += std::hypot(c.pts[k].pc.s - c.pts[k - 1].pc.s,
                                  c.pts[k].pc.eta - c.pts[k - 1].pc.eta);
            c.pts[k].arc = arc;
        }
        c.plane_diameter = plane_diameter_of(c);
    };

    bool merged = true;
    while (merged) {
        merged = false;
        // self-closure: a curve whose ends meet across a chart degeneracy
        for (auto& c : curves) {
            if (c.closed || c.pts.size() < 6) continue;
            double tol = std::max(end_scale(c, true), end_scale(c, false));
            if (dist3(c.pts.front(), c.pts.back()) < tol) {
                c.closed = true;
                c.touches_param_boundary = false;
                rebuild(c);
                merged = true;
            }
        }
        // pairwise merge
        for (size_t i = 0; i < curves.size() && !merged; ++i) {
            if (curves[i].closed) continue;
            for (size_t j = i + 1; j < curves.size() && !merged; ++j) {
                if (curves[j].closed) continue;
                IntersectionCurve& A = curves[i];
                IntersectionCurve& B = curves[j];
                struct Option {
                    bool a_front, b_front;
                };
                for (Option o : {Option{false, true}, {false, false}, {true, true}, {true, false}}) {
                    const CurveVertex& ea = o.a_front ? A.pts.front() : A.pts.back();
                    const CurveVertex& eb = o.b_front ? B.pts.front() : B.pts.back();
                    double tol = std::max(end_scale(A, o.a_front), end_scale(B, o.b_front));
                    if (dist3(ea, eb) > tol) continue;
                    std::vector<CurveVertex> joined;
                    joined.reserve(A.pts.size() + B.pts.size());
                    if (o.a_front)
                        joined.insert(joined.end(), A.pts.rbegin(), A.pts.rend());
                    else
                        joined.insert(joined.end(), A.pts.begin(), A.pts.end());
                    if (o.b_front)
                        joined.insert(joined.end(), B.pts.begin(), B.pts.end());
                    else
                        joined.insert(joined.end(), B.pts.rbegin(), B.pts.rend());
                    A.pts = std::move(joined);
                    A.touches_param_boundary = A.touches_param_boundary || B.touches_param_boundary;
                    A.min_transversality = std::min(A.min_transversality, B.min_transversality);
                    rebuild(A);
                    curves.erase(curves.begin() + j);
                    merged = true;
                    break;
                }
            }
        }
    }
}

namespace {

// local quadratic fit of the curve around index k over the arc window;
// returns the signed curvature in the (s, eta) plane
double fit_curvature(const IntersectionCurve& c, size_t k, double window) {
    const auto& pts = c.pts;
    const size_t n = pts.size();
    double s0 = pts[k].pc.s, e0 = pts[k].pc.eta;

    // tangent estimate from neighbors
    size_t kp = std::min(k + 1, n - 1), km = k > 0 ? k - 1 : 0;
    if (c.closed) {
        kp = (k + 1) % n;
        km = (k + n - 1) % n;
    }
    double tx = pts[kp].pc.s - pts[km].pc.s;
    double ty = pts[kp].pc.eta - pts[km].pc.eta;
    double tn = std::hypot(tx, ty);
    if (tn == 0) return 0;
    tx /= tn;
    ty /= tn;

    // gather points within the arc window (wrapping for closed curves);
    // the window grows with the local vertex spacing so the fit always sees
    // enough points in metrically stretched regions
    double total = pts.back().arc;
    double local_spacing = (pts[kp].arc >= pts[km].arc)
                               ? 0.5 * (pts[kp].arc - pts[km].arc)
                               : 0.5 * (total - pts[km].arc + pts[kp].arc);
    window = std::max(window, 6.0 * std::abs(local_spacing));
    auto arc_dist = [&](size_t i) {
        double d = std::abs(pts[i].arc - pts[k].arc);
        if (c.closed) d = std::min(d, total - d);
        return d;
    };
    double sxx = 0, sxy = 0, sx3 = 0, sx4 = 0, sy = 0, sx = 0, sx2y = 0;
    int count = 0;
    for (size_t i = 0; i < n; ++i) {
        if (arc_dist(i) > window) continue;
        double dx = pts[i].pc.s - s0, dy = pts[i].pc.eta - e0;
        double x = dx * tx + dy * ty;   // along tangent
        double y = -dx * ty + dy * tx;  // along left normal
        sx += x;
        sxx += x * x;
        sx3 += x * x * x;
        sx4 += x * x * x * x;
        sy += y;
        sxy += x * y;
        sx2y += x * x * y;
        ++count;
    }
    if (count < 5) return 0;
    // least squares y = a + b x + c x^2
    double A[3][4] = {{(double)count, sx, sxx, sy},
                      {sx, sxx, sx3, sxy},
                      {sxx, sx3, sx4, sx2y}};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        std::swap(A[piv], A[col]);
        if (std::abs(A[col][col]) < 1e-300) return 0;
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            double fpiv = A[r][col] / A[col][col];
            for (int cc = col; cc < 4; ++cc) A[r][cc] -= fpiv * A[col][cc];
        }
    }
    double b = A[1][3] / A[1][1];
    double ccoef = A[2][3] / A[2][2];
    return 2 * ccoef / std::pow(1 + b * b, 1.5);
}

} // namespace

ConvexityReport convexity_check(const SubmersionModel& m, IntersectionCurve& curve,
                                const VerticalPlane& plane, double margin, double fit_window) {
    (void)m;
    (void)plane;
    ConvexityReport rep;
    rep.margin = margin;
    if (curve.pts.size() < 8) return rep;

    double total = curve.pts.back().arc;
    double trim = curve.closed ? 0.0 : 0.6 * fit_window;
    int n_pos = 0, n_neg = 0;
    double min_abs = 1e300, max_abs = 0;
    for (size_t k = 0; k < curve.pts.size(); ++k) {
        double a = curve.pts[k].arc;
        if (!curve.closed && (a < trim || a > total - trim)) continue;
        double kappa = fit_curvature(curve, k, fit_window);
        curve.pts[k].curvature = kappa;
        if (kappa > 0) ++n_pos;
        if (kappa < 0) ++n_neg;
        min_abs = std::min(min_abs, std::abs(kappa));
        max_abs = std::max(max_abs, std::abs(kappa));
    }
    if (min_abs == 1e300) return rep;
    rep.sign_constant = (n_pos == 0) != (n_neg == 0);
    rep.min_abs_curvature = min_abs;
    rep.max_abs_curvature = max_abs;
    rep.passes = rep.sign_constant && min_abs >= margin;
    return rep;
}

namespace {

// Longest run of consecutive vertices inside the window, with one vertex
// beyond each end kept when present. Closed curves are unrolled at a
// window exit first.
std::vector<PlaneCoord> clip_to_window(const IntersectionCurve& curve, const PlaneWindow& window,
                                       bool& exits_both_ends) {
    std::vector<PlaneCoord> pts;
    pts.reserve(curve.pts.size());
    size_t n = curve.pts.size();
    size_t start = 0;
    if (curve.closed) {
        // rotate so that the sequence starts outside the window if possible
        for (size_t i = 0; i < n; ++i)
            if (!window.inside(curve.pts[i].pc)) {
                start = i;
                break;
            }
    }
    for (size_t k = 0; k < n; ++k) pts.push_back(curve.pts[(start + k) % n].pc);

    // longest inside run
    size_t best_len = 0, best_a = 0;
    size_t a = 0;
    while (a < pts.size()) {
        if (!window.inside(pts[a])) {
            ++a;
            continue;
        }
        size_t b = a;
        while (b < pts.size() && window.inside(pts[b])) ++b;
        if (b - a > best_len) {
            best_len = b - a;
            best_a = a;
        }
        a = b;
    }
    std::vector<PlaneCoord> run;
    exits_both_ends = false;
    if (best_len == 0) return run;
    size_t lo = best_a, hi = best_a + best_len; // [lo, hi)
    bool has_before = lo > 0;
    bool has_after = hi < pts.size();
    if (curve.closed) {
        has_before = has_before || best_len < pts.size();
        has_after = has_after || best_len < pts.size();
    }
    exits_both_ends = has_before && has_after;
    if (lo > 0) run.push_back(pts[lo - 1]);
    for (size_t k = lo; k < hi; ++k) run.push_back(pts[k]);
    if (hi < pts.size()) run.push_back(pts[hi]);
    else if (curve.closed && best_len < pts.size()) run.push_back(pts[0]);
    return run;
}

Tilt classify_run(const std::vector<PlaneCoord>& run, TiltReport& detail) {
    const size_t n = run.size();
    if (n < 6) return Tilt::Tilted;

    double turn = 0;
    for (size_t k = 1; k + 1 < n; ++k) {
        double ax = run[k].s - run[k - 1].s, ay = run[k].eta - run[k - 1].eta;
        double bx = run[k + 1].s - run[k].s, by = run[k + 1].eta - run[k].eta;
        turn += std::atan2(ax * by - ay * bx, ax * bx + ay * by);
    }
    double body_side = turn >= 0 ? 1.0 : -1.0; // left of travel when turning left

    // A vertical flow ray stays in the convex body iff the vertical
    // direction lies in the body's recession cone, estimated from the
    // outward end directions of the arc. The window-bounded crossing test
    // alone cannot see an exit beyond the window, so both must agree.
    double ax_out = run[n - 1].s - run[n - 2].s, ay_out = run[n - 1].eta - run[n - 2].eta;
    double bx_out = run[0].s - run[1].s, by_out = run[0].eta - run[1].eta;
    auto normalize2 = [](double& x, double& y) {
        double nn = std::hypot(x, y);
        if (nn > 0) {
            x /= nn;
            y /= nn;
        }
    };
    normalize2(ax_out, ay_out);
    normalize2(bx_out, by_out);
    auto in_recession_cone = [&](double vy) {
        double ux = 0, uy = vy;
        double cab = ax_out * by_out - ay_out * bx_out;
        double cau = ax_out * uy - ay_out * ux;
        double cub = ux * by_out - uy * bx_out;
        if (std::abs(cab) < 1e-9) {
            // parallel end directions: the cone is a single ray
            return ax_out * ux + ay_out * uy > 1 - 1e-9;
        }
        return cau * cab >= -1e-12 && cub * cab >= -1e-12;
    };

    std::vector<double> svals;
    svals.reserve(n);
    for (const auto& p : run) svals.push_back(p.s);
    std::sort(svals.begin(), svals.end());
    svals.erase(std::unique(svals.begin(), svals.end()), svals.end());

    // a vertical line crossing the arc exactly once enters the convex side
    // and never leaves it inside the window
    auto try_line = [&](double s0) -> bool {
        int crossings = 0;
        size_t cross_at = 0;
        for (size_t i = 0; i + 1 < n; ++i) {
            double da = run[i].s - s0, db = run[i + 1].s - s0;
            if (da == 0) da = 1e-300;
            if (da * db < 0) {
                ++crossings;
                cross_at = i;
            }
        }
        if (crossings != 1) return false;
        double tx = run[cross_at + 1].s - run[cross_at].s;
        double ty = run[cross_at + 1].eta - run[cross_at].eta;
        double norm = std::hypot(tx, ty);
        if (norm == 0) return false;
        double ny = body_side * (tx / norm); // eta-component of the body-side normal
        if (!in_recession_cone(ny > 0 ? 1.0 : -1.0)) return false;
        detail.used_positive_ray = ny > 0;
        detail.s_extremum = s0;
        return true;
    };

    for (size_t k = 0; k + 1 < svals.size(); ++k) {
        double s0 = 0.5 * (svals[k] + svals[k + 1]);
        if (try_line(s0)) return Tilt::Untilted;
    }
    return Tilt::Tilted;
}

} // namespace

TiltReport tilt_classify(const IntersectionCurve& curve, const PlaneWindow& window) {
    TiltReport rep;
    if (curve.pts.size() < 8) {
        rep.cls = Tilt::NotApplicable;
        return rep;
    }
    bool exits = false;
    std::vector<PlaneCoord> run = clip_to_window(curve, window, exits);
    if (!exits || run.size() < 6) {
        // the data ends inside the window: not complete-in-plane
        rep.cls = Tilt::NotApplicable;
        return rep;
    }

    rep.cls = classify_run(run, rep);

    PlaneWindow half = window;
    half.s_min /= 2;
    half.s_max /= 2;
    half.eta_min /= 2;
    half.eta_max /= 2;
    bool half_exits = false;
    std::vector<PlaneCoord> half_run = clip_to_window(curve, half, half_exits);
    if (half_exits && half_run.size() >= 6) {
        TiltReport half_rep;
        if (classify_run(half_run, half_rep) != rep.cls)
            throw WindowTooSmall("tilt_classify: classification changes with the window size");
    }
    return rep;
}

} // namespace ksub
