#include "ksub/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>

#include "ksub/errors.hpp"
#include "ksub/geodesic.hpp"

namespace ksub {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

const char* to_string(SweepClass c) {
    switch (c) {
        case SweepClass::Sphere: return "Sphere";
        case SweepClass::PlaneKillingGraph: return "PlaneKillingGraph";
        case SweepClass::PlaneSimpleEnd: return "PlaneSimpleEnd";
        case SweepClass::Inconclusive: return "Inconclusive";
    }
    return "?";
}

double angle_function(const SubmersionModel& m, const ImmersedSurface& surf, int chart,
                      double u, double v) {
    const SurfaceChart& c = surf.charts.at(chart);
    Point3 p = c.f(u, v);
    Vec3 fu, fv;
    if (c.jac) {
        c.jac(u, v, fu, fv);
    } else {
        double h = c.fd_step;
        fu = (1.0 / (2 * h)) * (c.f(u + h, v) - c.f(u - h, v));
        fv = (1.0 / (2 * h)) * (c.f(u, v + h) - c.f(u, v - h));
    }
    Vec3 n = wedge(m, p, fu, fv);
    double nn = m.norm3(p, n);
    if (nn < 1e-14) throw RankDeficient("angle_function: degenerate differential");
    double nu = m.dot3(p, n, Vec3{0, 0, 1}) / nn;
    return surf.orientation_flip ? -nu : nu;
}

std::vector<SurfaceSamplePoint> horizontal_normal_points(const SubmersionModel& m,
                                                         const ImmersedSurface& surf,
                                                         double refine_tol) {
    std::vector<SurfaceSamplePoint> zeros;
    for (size_t ci = 0; ci < surf.charts.size(); ++ci) {
        const SurfaceChart& c = surf.charts[ci];
        const int NU = c.nu, NV = c.nv;
        auto upos = [&](int i) { return c.u0 + (i + 0.5) * (c.u1 - c.u0) / NU; };
        auto vpos = [&](int j) { return c.v0 + (j + 0.5) * (c.v1 - c.v0) / NV; };
        std::vector<double> val(NU * NV, std::nan(""));
        auto nu_at = [&](int i, int j) -> double {
            double& slot = val[j * NU + i];
            if (std::isnan(slot)) {
                double u = upos(i), v = vpos(j);
                if (c.active && !c.active(u, v)) {
                    slot = std::numeric_limits<double>::infinity();
                } else {
                    try {
                        slot = angle_function(m, surf, static_cast<int>(ci), u, v);
                    } catch (const GeomError&) {
                        slot = std::numeric_limits<double>::infinity();
                    }
                }
            }
            return slot;
        };
        auto refine_edge = [&](double ua, double va, double fa, double ub, double vb) {
            for (int it = 0; it < 60; ++it) {
                double um = 0.5 * (ua + ub), vm = 0.5 * (va + vb);
                double fm = angle_function(m, surf, static_cast<int>(ci), um, vm);
                if (std::abs(fm) <= refine_tol)
                    return std::optional<SurfaceSamplePoint>({static_cast<int>(ci), um, vm});
                if ((fm < 0) == (fa < 0)) {
                    ua = um;
                    va = vm;
                    fa = fm;
                } else {
                    ub = um;
                    vb = vm;
                }
            }
            return std::optional<SurfaceSamplePoint>();
        };
        for (int j = 0; j < NV; ++j) {
            for (int i = 0; i < NU; ++i) {
                double f0 = nu_at(i, j);
                if (!std::isfinite(f0)) continue;
                if (std::abs(f0) <= refine_tol) {
                    zeros.push_back({static_cast<int>(ci), upos(i), vpos(j)});
                    continue;
                }
                if (i + 1 < NU) {
                    double f1 = nu_at(i + 1, j);
                    if (std::isfinite(f1) && f0 * f1 < 0)
                        if (auto z = refine_edge(upos(i), vpos(j), f0, upos(i + 1), vpos(j)))
                            zeros.push_back(*z);
                }
                if (j + 1 < NV) {
                    double f1 = nu_at(i, j + 1);
                    if (std::isfinite(f1) && f0 * f1 < 0)
                        if (auto z = refine_edge(upos(i), vpos(j), f0, upos(i), vpos(j + 1)))
                            zeros.push_back(*z);
                }
            }
        }
    }
    return zeros;
}

namespace {

double curve_pair_distance(const IntersectionCurve& a, const IntersectionCurve& b) {
    size_t sa = std::max<size_t>(1, a.pts.size() / 24);
    size_t sb = std::max<size_t>(1, b.pts.size() / 24);
    double best = 1e300;
    for (size_t i = 0; i < a.pts.size(); i += sa)
        for (size_t j = 0; j < b.pts.size(); j += sb) {
            double dx = a.pts[i].xyz.x - b.pts[j].xyz.x;
            double dy = a.pts[i].xyz.y - b.pts[j].xyz.y;
            double dt = a.pts[i].xyz.t - b.pts[j].xyz.t;
            double d = dx * dx + dy * dy + dt * dt;
            best = std::min(best, d);
        }
    return std::sqrt(best);
}

struct TrackedMatch {
    int index = -1;
    bool ambiguous = false;
    double best = 1e300, second = 1e300;
};

TrackedMatch match_component(const IntersectionCurve& prev,
                             const std::vector<IntersectionCurve>& curves, double ambiguity_scale) {
    TrackedMatch m;
    for (size_t i = 0; i < curves.size(); ++i) {
        double d = curve_pair_distance(prev, curves[i]);
        if (d < m.best) {
            m.second = m.best;
            m.best = d;
            m.index = static_cast<int>(i);
        } else {
            m.second = std::min(m.second, d);
        }
    }
    if (m.index >= 0 && curves.size() > 1)
        m.ambiguous = m.second < ambiguity_scale * m.best + 0.02;
    return m;
}

// angle of the base projection of a curve as seen from the base basepoint
double far_angle_estimate(const SubmersionModel& m, const IntersectionCurve& c) {
    double sx = 0, sy = 0;
    for (size_t i = 0; i < c.pts.size(); ++i) {
        double ang;
        Point2 q{c.pts[i].xyz.x, c.pts[i].xyz.y};
        if (m.base->radial_chart_rays) {
            ang = std::atan2(q.y - m.base->basepoint.y, q.x - m.base->basepoint.x);
        } else {
            ang = connect(*m.base, m.base->basepoint, q).initial_angle;
        }
        sx += std::cos(ang);
        sy += std::sin(ang);
    }
    return std::atan2(sy, sx);
}

SliceStatus slice_status(const IntersectionCurve& c, const SweepOptions& opt) {
    bool window_contact = false;
    for (const auto& p : c.pts)
        if (!opt.window.inside(p.pc)) {
            window_contact = true;
            break;
        }
    if (!c.closed || window_contact || c.touches_param_boundary) return SliceStatus::NonCompact;
    if (c.plane_diameter > opt.diameter_cap) return SliceStatus::NonCompact;
    return SliceStatus::Closed;
}

struct GraphChecks {
    bool injective = true;
    bool convex = true;
};

GraphChecks graph_projection_checks(const SubmersionModel& m, const ImmersedSurface& surf,
                                    const SweepOptions& opt, std::vector<std::string>& log) {
    GraphChecks out;
    struct Proj {
        Point2 q;
        int chart, i, j;
    };
    std::vector<Proj> projs;
    for (size_t ci = 0; ci < surf.charts.size(); ++ci) {
        const SurfaceChart& c = surf.charts[ci];
        for (int i = 0; i < c.nu; ++i)
            for (int j = 0; j < c.nv; ++j) {
                double u = c.u0 + (i + 0.5) * (c.u1 - c.u0) / c.nu;
                double v = c.v0 + (j + 0.5) * (c.v1 - c.v0) / c.nv;
                if (c.active && !c.active(u, v)) continue;
                Point3 p = c.f(u, v);
                projs.push_back({{p.x, p.y}, static_cast<int>(ci), i, j});
            }
    }
    if (projs.size() < 4) {
        out.injective = out.convex = false;
        return out;
    }
    // typical projected spacing from a sample of neighbor pairs
    std::vector<double> spacings;
    for (size_t k = 0; k + 1 < projs.size(); k += 17)
        if (projs[k].chart == projs[k + 1].chart)
            spacings.push_back(norm(projs[k].q - projs[k + 1].q));
    std::sort(spacings.begin(), spacings.end());
    double med = spacings.empty() ? 1e-3 : spacings[spacings.size() / 2];
    double collide = 0.25 * med;

    // spatial hash for collision and coverage queries
    double cell = std::max(med, 1e-6);
    auto key_of = [cell](Point2 q) {
        return std::pair<long, long>{std::lround(std::floor(q.x / cell)),
                                     std::lround(std::floor(q.y / cell))};
    };
    std::map<std::pair<long, long>, std::vector<int>> hash;
    for (size_t k = 0; k < projs.size(); ++k) hash[key_of(projs[k].q)].push_back(static_cast<int>(k));

    auto neighbors_of = [&](Point2 q, auto&& fn) {
        auto [cx, cy] = key_of(q);
        for (long dx = -1; dx <= 1; ++dx)
            for (long dy = -1; dy <= 1; ++dy) {
                auto it = hash.find({cx + dx, cy + dy});
                if (it == hash.end()) continue;
                for (int id : it->second) fn(id);
            }
    };

    // injectivity: parameter-distant samples must not coincide in projection
    for (size_t k = 0; k < projs.size() && out.injective; ++k) {
        neighbors_of(projs[k].q, [&](int id) {
            if (!out.injective || static_cast<size_t>(id) <= k) return;
            const Proj& a = projs[k];
            const Proj& b = projs[id];
            bool param_neighbors = a.chart == b.chart && std::abs(a.i - b.i) <= 2 &&
                                   std::abs(a.j - b.j) <= 2;
            if (a.chart != b.chart) param_neighbors = true; // overlap regions legitimately coincide
            if (!param_neighbors && norm(a.q - b.q) < collide) {
                out.injective = false;
                log.push_back("projection collision between distant samples");
            }
        });
    }

    // geodesic convexity witness: connecting geodesics of random projected
    // pairs stay inside the sampled projection
    std::mt19937_64 rng(opt.rng_seed);
    std::uniform_int_distribution<size_t> pick(0, projs.size() - 1);
    double cover = 4.0 * med;
    for (int trial = 0; trial < opt.convexity_pairs && out.convex; ++trial) {
        const Proj& a = projs[pick(rng)];
        const Proj& b = projs[pick(rng)];
        if (norm(a.q - b.q) < 4 * med) continue;
        ConnectResult cr;
        try {
            cr = connect(*m.base, a.q, b.q);
        } catch (const GeomError&) {
            continue;
        }
        for (size_t si = 0; si < cr.path.samples.size(); si += 4) {
            Point2 q = cr.path.samples[si].p;
            double bestd = 1e300;
            neighbors_of(q, [&](int id) { bestd = std::min(bestd, norm(projs[id].q - q)); });
            // widen the search if the hash cell missed everything
            if (bestd > cover) {
                for (size_t k = 0; k < projs.size(); k += 7)
                    bestd = std::min(bestd, norm(projs[k].q - q));
            }
            if (bestd > cover) {
                out.convex = false;
                log.push_back("projected geodesic leaves the sampled projection");
                break;
            }
        }
    }
    return out;
}

} // namespace

SweepReport sweep_classify(const SubmersionModel& m, const ImmersedSurface& surf,
                           const PlaneFoliation& fol, const SweepOptions& opt) {
    SweepReport rep;

    // Stage 0: the angle function must be zero-free. A grid minimum alone
    // cannot certify that, so the sign-change scan decides; the margin then
    // quantifies how far from zero the sampled values stay.
    rep.nu_zeros = horizontal_normal_points(m, surf);
    rep.nu_zero_count = rep.nu_zeros.size();
    double min_abs_nu = 1e300;
    for (const auto& sp : sample_grid(surf)) {
        try {
            min_abs_nu = std::min(min_abs_nu, std::abs(angle_function(m, surf, sp.chart, sp.u, sp.v)));
        } catch (const GeomError&) {
            continue;
        }
    }
    rep.min_abs_nu = min_abs_nu == 1e300 ? 0.0 : min_abs_nu;
    if (rep.nu_zeros.empty() && rep.min_abs_nu > opt.nu_margin) {
        GraphChecks gc = graph_projection_checks(m, surf, opt, rep.log);
        rep.projection_injective = gc.injective;
        rep.projection_convex = gc.convex;
        rep.classification = SweepClass::PlaneKillingGraph;
        rep.log.push_back("stage 0: angle function bounded away from zero");
        return rep;
    }

    // Stage 1: sweep the plane family
    IntersectOptions iopt;
    iopt.grid_u = opt.grid_u;
    iopt.grid_v = opt.grid_v;
    iopt.throw_on_tangency = true;

    bool tracking = false;
    bool done_tracking = false;
    bool birth_witnessed = false; // an empty slice preceded the first section
    bool any_empty_before = false;
    IntersectionCurve tracked;
    std::vector<double> closed_diams;
    std::vector<double> tail_angles;
    int noncompact_at = -1;

    double grid_step = fol.t_grid.size() > 1 ? fol.t_grid[1] - fol.t_grid[0] : 0.05;
    for (size_t k = 0; k < fol.planes.size(); ++k) {
        SliceEvidence ev;
        ev.t = fol.t_grid[k];
        std::vector<IntersectionCurve> curves;
        try {
            curves = intersect(m, surf, fol.planes[k], iopt);
        } catch (const TangencySuspected&) {
            // near-tangent plane: retry once at a perturbed parameter before
            // giving the slice up
            try {
                PathSample smp = fol.beta.at(fol.t_grid[k] + 0.25 * grid_step);
                double extent = fol.planes[k].alpha.s_max();
                VerticalPlane nudged = make_vertical_plane(
                    m, trace_complete(*m.base, smp.p, -1.0 * rot90(smp.d), extent));
                curves = intersect(m, surf, nudged, iopt);
                ev.note = "tangency suspected; slice perturbed";
            } catch (const TangencySuspected&) {
                ev.tracked = SliceStatus::Skipped;
                ev.note = "tangency persisted; slice skipped";
                rep.slices.push_back(ev);
                continue;
            }
        }
        ev.n_components = static_cast<int>(curves.size());

        if (done_tracking) {
            rep.slices.push_back(ev);
            continue;
        }
        if (!tracking) {
            if (curves.empty()) {
                any_empty_before = true;
            } else {
                birth_witnessed = any_empty_before;
                // component nearest the first touching point: the deepest
                // surface sample relative to this plane
                double best = 1e300;
                Point2 touch{};
                for (const auto& sp : sample_grid(surf)) {
                    Point3 p = surf.charts[sp.chart].f(sp.u, sp.v);
                    double d = fol.planes[k].signed_base_distance({p.x, p.y});
                    if (d < best) {
                        best = d;
                        touch = {p.x, p.y};
                    }
                }
                double bestd = 1e300;
                size_t besti = 0;
                for (size_t i = 0; i < curves.size(); ++i) {
                    for (size_t vi = 0; vi < curves[i].pts.size(); vi += 4) {
                        Point2 q{curves[i].pts[vi].xyz.x, curves[i].pts[vi].xyz.y};
                        double d = norm(q - touch);
                        if (d < bestd) {
                            bestd = d;
                            besti = i;
                        }
                    }
                }
                tracked = curves[besti];
                tracking = true;
                ev.tracked = slice_status(tracked, opt);
                ev.diameter = tracked.plane_diameter;
            }
        } else {
            TrackedMatch mt = match_component(tracked, curves, opt.match_ambiguity_scale);
            if (mt.index < 0) {
                ev.tracked = SliceStatus::Missing;
                done_tracking = true;
            } else if (mt.ambiguous) {
                rep.classification = SweepClass::Inconclusive;
                rep.log.push_back("component matching ambiguous at t = " + std::to_string(ev.t));
                ev.note = "merge/split ambiguity";
                rep.slices.push_back(ev);
                return rep;
            } else {
                tracked = curves[mt.index];
                ev.tracked = slice_status(tracked, opt);
                ev.diameter = tracked.plane_diameter;
            }
        }
        if (ev.tracked == SliceStatus::Closed) {
            closed_diams.push_back(ev.diameter);
            tail_angles.push_back(far_angle_estimate(m, tracked));
            if (tail_angles.size() > 5) tail_angles.erase(tail_angles.begin());
        }
        if (ev.tracked == SliceStatus::NonCompact && noncompact_at < 0) {
            noncompact_at = static_cast<int>(k);
            // the first non-compact section: tilt evidence for the rotating
            // sweep
            rep.case_b_ran = true;
            try {
                TiltReport tr = tilt_classify(tracked, opt.window);
                rep.first_noncompact_tilt = tr.cls;
            } catch (const WindowTooSmall&) {
                rep.first_noncompact_tilt = Tilt::NotApplicable;
                rep.log.push_back("tilt classification unstable under window halving");
            }
            // ideal spread of the escaping section: its base tail should
            // accumulate at a single boundary point
            {
                double sx = 0, sy = 0;
                int far = 0;
                for (const auto& v : tracked.pts) {
                    double r2 = v.xyz.x * v.xyz.x + v.xyz.y * v.xyz.y;
                    if (r2 < 0.81) continue;
                    double a = std::atan2(v.xyz.y, v.xyz.x);
                    sx += std::cos(a);
                    sy += std::sin(a);
                    ++far;
                }
                if (far >= 4) {
                    double mean = std::atan2(sy, sx);
                    double worst = 0;
                    for (const auto& v : tracked.pts) {
                        double r2 = v.xyz.x * v.xyz.x + v.xyz.y * v.xyz.y;
                        if (r2 < 0.81) continue;
                        double a = std::atan2(v.xyz.y, v.xyz.x);
                        worst = std::max(worst, std::abs(angle_diff(a, mean)));
                    }
                    rep.log.push_back("non-compact section ideal spread " +
                                      std::to_string(2 * worst) + " rad over " +
                                      std::to_string(far) + " far vertices");
                } else {
                    rep.log.push_back(
                        "non-compact section leaves the window before nearing the boundary");
                }
            }
            rep.slices.push_back(ev);
            break;
        }
        rep.slices.push_back(ev);
    }

    auto finish_angle = [&]() {
        if (!tail_angles.empty()) {
            double sx = 0, sy = 0;
            for (double a : tail_angles) {
                sx += std::cos(a);
                sy += std::sin(a);
            }
            rep.end_angle = std::atan2(sy, sx);
            if (rep.end_angle < 0) rep.end_angle += 2 * kPi;
            rep.end_angle_valid = true;
        }
    };

    if (!tracking) {
        rep.classification = SweepClass::Inconclusive;
        rep.log.push_back("foliation never intersected the surface");
        return rep;
    }

    if (noncompact_at >= 0) {
        // rotating family of ideal geodesics from the non-compact slice
        const VerticalPlane& bad = fol.planes[noncompact_at];
        try {
            const GeodesicPath& leaf = bad.alpha;
            PathSample mid = leaf.at(0.0);
            IdealPoint th_plus = ideal_point(*m.base, mid.p, mid.d);
            IdealPoint th_minus = ideal_point(*m.base, mid.p, -1.0 * mid.d);
            double gap = angle_diff(th_plus.theta, th_minus.theta);
            if (gap < 0) gap += 2 * kPi;
            double d0 = opt.secondary_delta;
            bool all_compact = true;
            for (int j = 0; j < opt.secondary_slices; ++j) {
                double sigma = (gap - 2 * d0) * (j + 0.5) / opt.secondary_slices;
                IdealPoint a = IdealPoint::from_angle(th_minus.theta - d0 + sigma);
                IdealPoint b = IdealPoint::from_angle(th_plus.theta + d0);
                if (std::abs(angle_diff(a.theta, b.theta)) < 0.1) continue;
                VerticalPlane q = make_vertical_plane(m, ideal_geodesic(*m.base, a, b));
                std::vector<IntersectionCurve> cs;
                try {
                    cs = intersect(m, surf, q, iopt);
                } catch (const TangencySuspected&) {
                    continue;
                }
                for (const auto& c : cs)
                    if (slice_status(c, opt) != SliceStatus::Closed) all_compact = false;
                if (!all_compact) break;
            }
            if (all_compact) {
                rep.classification = SweepClass::PlaneSimpleEnd;
                finish_angle();
                rep.log.push_back("rotating family kept compact sections after non-compact slice");
            } else {
                rep.classification = SweepClass::Inconclusive;
                rep.log.push_back("rotating family met a non-compact section");
            }
        } catch (const GeomError& e) {
            rep.classification = SweepClass::Inconclusive;
            rep.log.push_back(std::string("rotating family failed: ") + e.what());
        }
        return rep;
    }

    if (done_tracking) {
        // the component vanished: shrank to a point or drifted off
        size_t n = closed_diams.size();
        if (n < 3) {
            rep.classification = SweepClass::Inconclusive;
            rep.log.push_back("tracked component vanished with too few compact slices to witness a limit");
            return rep;
        }
        bool shrinking = closed_diams[n - 1] <= closed_diams[n - 2] &&
                         closed_diams[n - 2] <= closed_diams[n - 3];
        if (shrinking && !birth_witnessed) {
            // the surface already met the first plane: the closing cap was
            // seen but not the opening tangency, so a sphere is not certified
            rep.classification = SweepClass::Inconclusive;
            rep.log.push_back("component shrank but the sweep started inside the surface");
            return rep;
        }
        if (shrinking) {
            rep.classification = SweepClass::Sphere;
            rep.log.push_back("tracked component shrank and vanished");
        } else {
            rep.classification = SweepClass::PlaneSimpleEnd;
            finish_angle();
            rep.log.push_back("tracked component drifted out of the window");
        }
        return rep;
    }

    // survived to the end of the grid compact
    rep.classification = SweepClass::PlaneSimpleEnd;
    finish_angle();
    rep.log.push_back("tracked component persisted to the end of the t-grid");
    return rep;
}

SimpleEndReport simple_end_test(const SubmersionModel& m, const ImmersedSurface& surf,
                                const SimpleEndOptions& opt) {
    SimpleEndReport rep;
    if (surf.declared_compact) {
        rep.note = "surface declared compact; test not applicable";
        return rep;
    }
    rep.applicable = true;

    // base distances and angles of the projected samples
    struct Far {
        double dist, angle;
    };
    std::vector<Far> pts;
    for (const auto& sp : sample_grid(surf)) {
        Point3 p = surf.charts[sp.chart].f(sp.u, sp.v);
        Point2 q{p.x, p.y};
        double dist, ang;
        if (m.base->radial_chart_rays) {
            double a = std::sqrt(-m.base->curvature_bound);
            double r = norm(q - m.base->basepoint);
            dist = 2.0 / a * std::atanh(std::min(r, 1.0 - 1e-15));
            ang = std::atan2(q.y - m.base->basepoint.y, q.x - m.base->basepoint.x);
        } else {
            ConnectResult cr = connect(*m.base, m.base->basepoint, q);
            dist = cr.distance;
            ang = cr.initial_angle;
        }
        pts.push_back({dist, ang});
    }
    double dmax = 0;
    for (const auto& f : pts) dmax = std::max(dmax, f.dist);

    auto spread_beyond = [&](double r, double& mean_angle, int& count) {
        double sx = 0, sy = 0;
        count = 0;
        for (const auto& f : pts)
            if (f.dist >= r) {
                sx += std::cos(f.angle);
                sy += std::sin(f.angle);
                ++count;
            }
        if (count == 0) return 2 * kPi;
        mean_angle = std::atan2(sy, sx);
        double worst = 0;
        for (const auto& f : pts)
            if (f.dist >= r) worst = std::max(worst, std::abs(angle_diff(f.angle, mean_angle)));
        return 2 * worst;
    };

    double r_near = dmax / 2.2, r_far = dmax / 1.1;
    double mean_near = 0, mean_far = 0;
    int n_near = 0, n_far = 0;
    rep.spread_near = spread_beyond(r_near, mean_near, n_near);
    rep.spread_far = spread_beyond(r_far, mean_far, n_far);
    if (n_far < opt.min_far_samples || dmax < 1.0)
        throw InsufficientExtent("simple_end_test: sampled extent too small to estimate the limit");
    rep.theta0 = mean_far < 0 ? mean_far + 2 * kPi : mean_far;
    rep.spread_contracts = rep.spread_far < opt.spread_tol && rep.spread_far <= rep.spread_near + 1e-12;

    // probe planes over ideal geodesics avoiding theta0
    rep.probes_bounded = true;
    IntersectOptions iopt;
    iopt.throw_on_tangency = false;
    for (int j = 0; j < opt.probes; ++j) {
        double off_a = opt.probe_gap + j * (kPi - 2 * opt.probe_gap) / opt.probes;
        double off_b = opt.probe_gap + 0.5 * (kPi - 2 * opt.probe_gap) * (j + 1) / opt.probes;
        IdealPoint a = IdealPoint::from_angle(rep.theta0 + off_a);
        IdealPoint b = IdealPoint::from_angle(rep.theta0 - off_b);
        VerticalPlane plane;
        try {
            plane = make_vertical_plane(m, ideal_geodesic(*m.base, a, b));
        } catch (const GeomError&) {
            continue;
        }
        std::vector<IntersectionCurve> cs = intersect(m, surf, plane, iopt);
        for (const auto& c : cs) {
            bool window_contact = false;
            for (const auto& p : c.pts)
                if (!opt.window.inside(p.pc)) window_contact = true;
            if (window_contact || c.plane_diameter > opt.diameter_cap || c.touches_param_boundary)
                rep.probes_bounded = false;
        }
    }
    rep.passes = rep.spread_contracts && rep.probes_bounded;
    return rep;
}

} // namespace ksub
