#include "ksub/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include "ksub/errors.hpp"
#include "ksub/geodesic.hpp"
#include "ksub/intersect.hpp"
#include "ksub/plane.hpp"
#include "ksub/sweep.hpp"

namespace ksub {

const char* kToolVersion = "0.1.0";

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

constexpr double kPi = 3.14159265358979323846;

unsigned long long name_hash(const std::string& s) {
    unsigned long long h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

class CsvWriter {
public:
    CsvWriter(const std::string& out_dir, const std::string& file, RunReport& rep)
        : path_(out_dir + "/" + file) {
        std::filesystem::create_directories(out_dir);
        out_.open(path_, std::ios::binary);
        if (!out_) throw ConfigError("cannot write artifact: " + path_);
        rep.artifacts.push_back(file);
    }
    void header(const std::string& line) { out_ << line << "\n"; }
    void row(std::initializer_list<double> values) {
        bool first = true;
        for (double v : values) {
            if (!first) out_ << ",";
            out_ << format_double(v);
            first = false;
        }
        out_ << "\n";
    }
    void raw_row(const std::string& line) { out_ << line << "\n"; }

private:
    std::string path_;
    std::ofstream out_;
};

struct Checker {
    RunReport& rep;
    void add(const std::string& name, const std::string& claim, bool pass, double evidence,
             const std::string& detail = "") {
        rep.checks.push_back({name, claim, pass, evidence, detail});
    }
    // residual-style check: pass iff worst <= bound
    void residual(const std::string& name, const std::string& claim, double worst, double bound) {
        add(name, claim, worst <= bound, worst,
            "limit " + format_double(bound));
    }
};

std::vector<Point3> seeded_points(unsigned long long seed, int n, double rmax = 0.7,
                                  double tmax = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ur(0.0, rmax), ua(0.0, 2 * kPi), ut(-tmax, tmax);
    std::vector<Point3> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        double r = ur(rng), th = ua(rng);
        pts.push_back({r * std::cos(th), r * std::sin(th), ut(rng)});
    }
    return pts;
}

// ---------------------------------------------------------------- verify --

void cmd_verify(const Config& cfg, StrictObject& sc, RunReport& rep, const std::string&) {
    const SubmersionModel& declared = cfg.model(sc.text("model"));
    int n = static_cast<int>(sc.integer_or("points", 200));
    bool mutate = sc.text_or("mutate", "") == "flip-omega-in-metric";
    SubmersionModel mutated;
    const SubmersionModel* m = &declared;
    if (mutate) {
        mutated = declared.with_corrupted_metric();
        m = &mutated;
    }
    double tol_g = 1e-6 * cfg.tol_scale;
    double tol_k = 1e-4 * cfg.tol_scale;
    Checker ck{rep};

    auto pts = seeded_points(cfg.seed ^ name_hash(rep.scenario), n);

    if (mutate) {
        // the corrupted assembly still carries a unit Killing field, so the
        // identity fit stays clean; only the declared-frame check can see it
        double worst_frame = 0, worst_fit = 0;
        for (const Point3& p : pts) {
            TauFit fit = compute_tau(*m, p);
            worst_frame = std::max(worst_frame, fit.frame_residual);
            worst_fit = std::max(worst_fit, fit.fit_residual);
        }
        ck.add("mutation-detected", "frame-agreement check rejects the corrupted metric assembly",
               worst_frame > tol_g, worst_frame, "frame residual must exceed " + format_double(tol_g));
        ck.add("identity-fit-blind",
               "the pointwise derivative identity alone cannot reject the corrupted tensor",
               worst_fit <= tol_g, worst_fit, "informational");
        return;
    }

    double worst_killing = 0, worst_frame = 0, worst_fit = 0, worst_agree = 0;
    double worst_analytic = 0, worst_kh = 0, worst_kv = 0, worst_lock = 0;
    double worst_av = 0, worst_txi = 0, worst_flow = 0;
    for (const Point3& p : pts) {
        worst_killing = std::max(worst_killing, m->killing_residual(p));
        TauFit fit = compute_tau(*m, p);
        worst_frame = std::max(worst_frame, fit.frame_residual);
        worst_fit = std::max(worst_fit, fit.fit_residual);
        worst_agree = std::max(worst_agree, std::abs(fit.tau_x1 - fit.tau_x2));
        if (m->has_analytic_tau)
            worst_analytic = std::max(worst_analytic, std::abs(fit.tau - m->analytic_tau));

        double kappa = m->base->gauss_curvature({p.x, p.y});
        Frame3 f = m->horizontal_frame(p, 0.37);
        worst_kh = std::max(worst_kh, std::abs(sectional_curvature(*m, p, f.X, f.Y) -
                                               (kappa - 3 * fit.tau * fit.tau)));
        worst_kv = std::max(worst_kv,
                            std::abs(sectional_curvature(*m, p, f.X, f.xi) - fit.tau * fit.tau));

        Vec3 dX = covariant_of_constant(*m, p, f.X, f.xi);
        Vec3 dY = covariant_of_constant(*m, p, f.Y, f.xi);
        worst_lock = std::max(worst_lock, m->norm3(p, dX - (-fit.tau) * f.Y));
        worst_lock = std::max(worst_lock, m->norm3(p, dY - fit.tau * f.X));

        Vec3 axy = tensor_A(*m, p, f.X, f.Y);
        worst_av = std::max(worst_av, m->norm3(p, axy - fit.tau * f.xi));
        worst_txi = std::max(worst_txi, m->norm3(p, tensor_T(*m, p, f.xi, f.X)));

        Mat3 g0, g1;
        m->metric(p, g0);
        m->metric(vertical_flow(p, 0.7), g1);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                worst_flow = std::max(worst_flow, std::abs(g0[i][j] - g1[i][j]));
    }
    ck.residual("unit-killing-field", "metric components are invariant along the fiber field",
                worst_killing, 1e-8 * cfg.tol_scale);
    ck.residual("riemannian-submersion",
                "declared horizontal lifts of a base orthonormal frame stay orthonormal",
                worst_frame, 1e-8 * cfg.tol_scale);
    ck.residual("bundle-curvature-fit",
                "derivative of the fiber field is a scalar multiple of the quarter turn",
                worst_fit, tol_g);
    ck.residual("frame-agreement", "single-direction bundle-curvature fits agree", worst_agree,
                tol_g);
    if (m->has_analytic_tau)
        ck.residual("tau-analytic", "fitted bundle curvature matches the declared constant",
                    worst_analytic, tol_g);
    ck.residual("sectional-horizontal",
                "horizontal sectional curvature equals base curvature minus three tau squared",
                worst_kh, tol_k);
    ck.residual("sectional-vertical", "vertical sectional curvature equals tau squared", worst_kv,
                tol_k);
    ck.residual("orientation-sign-lock",
                "with a positively oriented frame the fiber derivative rotates X to -tau Y",
                worst_lock, tol_g);
    ck.residual("mixed-tensor-vertical",
                "the horizontal-horizontal mixing tensor equals tau times the fiber", worst_av,
                tol_g);
    ck.residual("fiber-tensor-vanishes", "the fiber-direction tensor annihilates horizontal fields",
                worst_txi, tol_g);
    ck.residual("vertical-flow-isometry", "the fiber flow preserves the metric tensor", worst_flow,
                1e-10 * cfg.tol_scale);
}

// -------------------------------------------------------------- curvature --

void cmd_curvature(const Config& cfg, StrictObject& sc, RunReport& rep,
                   const std::string& out_dir) {
    const SubmersionModel& m = cfg.model(sc.text("model"));
    int n = static_cast<int>(sc.integer_or("points", 200));
    double tol_k = 1e-4 * cfg.tol_scale;
    double tol_g = 1e-6 * cfg.tol_scale;

    CsvWriter csv(out_dir, rep.scenario + "_curvature.csv", rep);
    csv.header("x,y,t,tau,kappa,K_hor,K_vert,res1,res2");

    double worst1 = 0, worst2 = 0, worst_fit = 0, worst_analytic = 0;
    for (const Point3& p : seeded_points(cfg.seed ^ name_hash(rep.scenario), n)) {
        CurvatureSample s = curvature_sample(m, p);
        csv.row({p.x, p.y, p.t, s.tau, s.kappa, s.k_horizontal, s.k_vertical, s.res_horizontal,
                 s.res_vertical});
        worst1 = std::max(worst1, s.res_horizontal);
        worst2 = std::max(worst2, s.res_vertical);
        TauFit fit = compute_tau(m, p);
        worst_fit = std::max(worst_fit, fit.fit_residual);
        if (m.has_analytic_tau)
            worst_analytic = std::max(worst_analytic, std::abs(fit.tau - m.analytic_tau));
    }
    Checker ck{rep};
    ck.residual("sectional-horizontal",
                "horizontal sectional curvature equals base curvature minus three tau squared",
                worst1, tol_k);
    ck.residual("sectional-vertical", "vertical sectional curvature equals tau squared", worst2,
                tol_k);
    ck.residual("bundle-curvature-fit", "tau extraction residual stays below tolerance", worst_fit,
                tol_g);
    if (m.has_analytic_tau)
        ck.residual("tau-analytic", "fitted bundle curvature matches the declared constant",
                    worst_analytic, tol_g);
}

// --------------------------------------------------------------- geodesic --

void cmd_geodesic(const Config& cfg, StrictObject& sc, RunReport& rep,
                  const std::string& out_dir) {
    const SubmersionModel& m3 = cfg.model(sc.text("model"));
    const HadamardModel& m = *m3.base;
    Checker ck{rep};

    std::vector<double> start = sc.number_list("start");
    if (start.size() != 2) throw ConfigError(sc.location() + ".start: expected [x, y]");
    Point2 p{start[0], start[1]};
    double angle = sc.number_or("angle", 0.0);
    double s_max = sc.number_or("arc_length", 1.0);

    GeodesicPath path = geodesic_trace(m, p, m.unit_from_angle(p, angle), s_max);
    CsvWriter csv(out_dir, rep.scenario + "_path.csv", rep);
    csv.header("s,x,y,u,v");
    for (const auto& s : path.samples) csv.row({s.s, s.p.x, s.p.y, s.d.x, s.d.y});

    ck.residual("geodesic-residual", "sample table satisfies the geodesic equation",
                max_geodesic_residual(m, path), 1e-8 * cfg.tol_scale);
    ck.residual("unit-speed", "sample table keeps unit speed", max_speed_error(m, path),
                1e-8 * cfg.tol_scale);

    if (sc.has("connect_to")) {
        std::vector<double> tgt = sc.number_list("connect_to");
        if (tgt.size() != 2) throw ConfigError(sc.location() + ".connect_to: expected [x, y]");
        ConnectResult c = connect(m, p, {tgt[0], tgt[1]});
        double miss = norm(c.path.samples.back().p - Point2{tgt[0], tgt[1]}) * m.lambda({tgt[0], tgt[1]});
        ck.add("two-point-geodesic", "shooting joins the prescribed endpoints", miss <= 1e-6,
               miss, "distance " + format_double(c.distance));
    }
    if (sc.has("triangle")) {
        Json tri = sc.raw("triangle");
        if (!tri.is_array() || tri.size() != 3)
            throw ConfigError(sc.location() + ".triangle: expected three points");
        auto pt = [&](int i) {
            return Point2{tri[i][0].get<double>(), tri[i][1].get<double>()};
        };
        TriangleReport t = triangle_checks(m, pt(0), pt(1), pt(2));
        double worst = std::min({t.slack_law_of_cosines, t.slack_double_law, t.slack_angle_sum});
        ck.add("triangle-comparisons",
               "law of cosines, double law and angle sum hold with nonnegative slack",
               worst >= -1e-6 * cfg.tol_scale, worst, "");
    }
}

// ---------------------------------------------------------------- foliate --

void cmd_foliate(const Config& cfg, StrictObject& sc, RunReport& rep, const std::string& out_dir) {
    const SubmersionModel& m3 = cfg.model(sc.text("model"));
    const HadamardModel& m = *m3.base;
    std::string variant = sc.text("variant");
    Checker ck{rep};

    CsvWriter csv(out_dir, rep.scenario + "_leaves.csv", rep);
    csv.header("leaf,s,x,y,u,v");
    auto dump = [&](const std::vector<const GeodesicPath*>& leaves) {
        for (size_t li = 0; li < leaves.size(); ++li)
            for (size_t k = 0; k < leaves[li]->samples.size(); k += 5) {
                const PathSample& s = leaves[li]->samples[k];
                csv.row({static_cast<double>(li), s.s, s.p.x, s.p.y, s.d.x, s.d.y});
            }
    };

    if (variant == "orthogonal") {
        std::vector<double> anchor = sc.number_list("axis_point");
        double axis_angle = sc.number_or("axis_angle", 0.0);
        double lo = sc.number("grid_min"), hi = sc.number("grid_max");
        int count = static_cast<int>(sc.integer_or("leaves", 13));
        double extent = sc.number_or("leaf_extent", 8.0);
        Point2 p{anchor[0], anchor[1]};
        GeodesicPath axis = trace_complete(m, p, m.unit_from_angle(p, axis_angle),
                                           std::max(std::abs(lo), std::abs(hi)) + 1.0);
        std::vector<double> grid;
        for (int i = 0; i < count; ++i) grid.push_back(lo + (hi - lo) * i / (count - 1));
        auto leaves = foliation_orthogonal(m, axis, grid, extent);
        std::vector<const GeodesicPath*> ptrs;
        for (auto& l : leaves) ptrs.push_back(&l);
        dump(ptrs);
        DisjointnessWitness w = leaves_disjointness(ptrs);
        ck.add("leaves-disjoint", "orthogonal leaves are pairwise disjoint with resolved margin",
               w.separated(), w.min_chart_distance,
               "scale " + format_double(w.local_sample_gap) + ", crossings " +
                   (w.crossing_found ? "yes" : "no"));
        // perpendicular feet along the axis are unique and orthogonal
        double worst_orth = 0;
        for (double frac : {0.25, 0.6}) {
            Point2 probe{p.x + 0.3, p.y + 0.4 * frac};
            if (!m.contains(probe)) continue;
            FootResult f = foot_of_perpendicular(m, axis, probe);
            worst_orth = std::max(worst_orth, f.orthogonality_residual);
        }
        ck.residual("perpendicular-feet", "feet of perpendiculars meet the axis orthogonally",
                    worst_orth, 1e-4 * cfg.tol_scale);
    } else if (variant == "ideal") {
        double anchor = sc.number("anchor_angle");
        double lo = sc.number("fan_min"), hi = sc.number("fan_max");
        int count = static_cast<int>(sc.integer_or("leaves", 12));
        std::vector<IdealPoint> fan;
        for (int i = 0; i < count; ++i)
            fan.push_back(IdealPoint::from_angle(lo + (hi - lo) * i / (count - 1)));
        auto leaves = foliation_from_infinity(m, IdealPoint::from_angle(anchor), fan);
        std::vector<const GeodesicPath*> ptrs;
        for (auto& l : leaves) ptrs.push_back(&l.path);
        dump(ptrs);
        Point2 anchor_chart{std::cos(anchor), std::sin(anchor)};
        DisjointnessWitness w = leaves_disjointness(ptrs, anchor_chart);
        ck.add("leaves-disjoint",
               "ideal leaves are crossing-free and separated away from the shared anchor",
               w.disjoint_with_margin(1e-6), w.min_chart_distance,
               std::string("crossings ") + (w.crossing_found ? "yes" : "no"));
        double worst_angle = 0;
        for (size_t i = 0; i < leaves.size(); ++i) {
            PathSample mid = leaves[i].path.at(0.0);
            IdealPoint fwd = ideal_point(m, mid.p, mid.d);
            worst_angle = std::max(worst_angle, std::abs(angle_diff(fwd.theta, fan[i].theta)));
        }
        ck.residual("ideal-endpoints", "leaves reach their prescribed ideal points", worst_angle,
                    1e-4 * cfg.tol_scale);
    } else {
        throw ConfigError(sc.location() + ".variant: expected \"orthogonal\" or \"ideal\"");
    }
}

// --------------------------------------------------------------- cylinder --

void cmd_cylinder(const Config& cfg, StrictObject& sc, RunReport& rep,
                  const std::string& out_dir) {
    const SubmersionModel& m = cfg.model(sc.text("model"));
    Json curve_spec = sc.raw("curve");
    StrictObject co(curve_spec, sc.location() + ".curve");
    std::string kind = co.text("kind");
    BaseCurve curve;
    if (kind == "circle") {
        curve = circle_curve(*m.base, co.number("radius"));
    } else if (kind == "geodesic") {
        std::vector<double> at = co.number_list("point");
        double ang = co.number_or("angle", 0.0);
        double extent = co.number_or("extent", 2.0);
        Point2 p{at[0], at[1]};
        curve = geodesic_curve(*m.base,
                               trace_complete(*m.base, p, m.base->unit_from_angle(p, ang), extent));
    } else if (kind == "profile") {
        std::vector<double> coeff = co.number_list("curvature"); // k(s) = c0 + c1 sin(s + c2)
        if (coeff.size() != 3)
            throw ConfigError(co.location() + ".curvature: expected [c0, c1, phase]");
        std::vector<double> at = co.number_list("point");
        double ang = co.number_or("angle", 0.0);
        double extent = co.number_or("extent", 2.0);
        curve = prescribed_curvature_curve(
            *m.base, [coeff](double s) { return coeff[0] + coeff[1] * std::sin(s + coeff[2]); },
            {at[0], at[1]}, ang, extent);
    } else {
        throw ConfigError(co.location() + ".kind: unknown curve kind \"" + kind + "\"");
    }
    co.finish();

    double t0 = sc.number_or("t_min", -1.0), t1 = sc.number_or("t_max", 1.0);
    int samples = static_cast<int>(sc.integer_or("samples", 16));
    VerticalCylinder cyl = make_vertical_cylinder(m, std::move(curve), t0, t1, rep.scenario);

    CsvWriter csv(out_dir, rep.scenario + "_cylinder.csv", rep);
    csv.header("s,t,II_ff,II_ft,II_tt,H,K,Ke,k_g,tau,nu");
    double worst_ii = 0, worst_h = 0, worst_k = 0, worst_ke = 0, worst_nu = 0;
    const BaseCurve& bc = cyl.base_curve;
    double margin = 0.05 * (bc.s1 - bc.s0);
    for (int i = 0; i < samples; ++i) {
        double s = bc.s0 + margin + (bc.s1 - bc.s0 - 2 * margin) * i / (samples - 1);
        double t = t0 + (t1 - t0) * (i % 5) / 4.0;
        CylinderGeometry g = cylinder_geometry(m, cyl, s, t);
        csv.row({s, t, g.II[0][0], g.II[0][1], g.II[1][1], g.H, g.K, g.Ke, g.k_g, g.tau, g.nu});
        worst_ii = std::max({worst_ii, std::abs(g.II[0][0]), std::abs(g.II[0][1] + g.tau),
                             std::abs(g.II[1][1] - g.k_g)});
        worst_h = std::max(worst_h, std::abs(g.H - g.k_g / 2));
        worst_k = std::max(worst_k, std::abs(g.K));
        worst_ke = std::max(worst_ke, std::abs(g.Ke + g.tau * g.tau));
        worst_nu = std::max(worst_nu, std::abs(g.nu));
    }
    double tol5 = 1e-5 * cfg.tol_scale;
    Checker ck{rep};
    ck.residual("second-form-matrix",
                "cylinder second fundamental form matches the tau/geodesic-curvature matrix",
                worst_ii, tol5);
    ck.residual("mean-curvature", "mean curvature is half the base geodesic curvature", worst_h,
                tol5);
    ck.residual("intrinsic-flatness", "cylinders are intrinsically flat", worst_k, tol5);
    ck.residual("extrinsic-curvature", "extrinsic curvature equals minus tau squared", worst_ke,
                tol5);
    ck.residual("angle-function-zero", "the angle function vanishes along vertical cylinders",
                worst_nu, 1e-8 * cfg.tol_scale);
}

// ------------------------------------------------------------------ sweep --

SweepOptions sweep_options_from(StrictObject& sc, const Config& cfg) {
    SweepOptions opt;
    opt.diameter_cap = sc.number_or("diameter_cap", 6.0);
    opt.rng_seed = static_cast<unsigned>(cfg.seed & 0xffffffffu);
    if (sc.has("window")) {
        std::vector<double> w = sc.number_list("window"); // [smin smax emin emax]
        if (w.size() != 4) throw ConfigError(sc.location() + ".window: expected four numbers");
        opt.window.s_min = w[0];
        opt.window.s_max = w[1];
        opt.window.eta_min = w[2];
        opt.window.eta_max = w[3];
    }
    return opt;
}

void cmd_sections(const Config& cfg, StrictObject& sc, RunReport& rep, const std::string& out_dir);

void cmd_sweep(const Config& cfg, StrictObject& sc, RunReport& rep, const std::string& out_dir) {
    if (sc.text_or("mode", "classify") == "sections") {
        cmd_sections(cfg, sc, rep, out_dir);
        return;
    }
    std::string surf_name = sc.text("surface");
    const SubmersionModel& m = cfg.model(cfg.surface_model(surf_name));
    ImmersedSurface surf = cfg.surface(surf_name);
    Checker ck{rep};

    Json fj = sc.raw("foliation");
    StrictObject fo(fj, sc.location() + ".foliation");
    double dir_angle = fo.number_or("direction_angle", 0.0);
    double tmin = fo.number("t_min"), tmax = fo.number("t_max");
    int slices = static_cast<int>(fo.integer_or("slices", 25));
    double extent = fo.number_or("leaf_extent", 12.0);
    std::vector<double> apt = fo.has("axis_point") ? fo.number_list("axis_point")
                                                   : std::vector<double>{0.0, 0.0};
    fo.finish();

    auto make_fol = [&](int n) {
        Point2 p{apt[0], apt[1]};
        GeodesicPath beta = trace_complete(*m.base, p, m.base->unit_from_angle(p, dir_angle),
                                           std::max(std::abs(tmin), std::abs(tmax)) + 2.0);
        std::vector<double> grid;
        for (int i = 0; i < n; ++i) grid.push_back(tmin + (tmax - tmin) * i / (n - 1));
        return make_plane_foliation_along(m, std::move(beta), grid, extent);
    };

    SweepOptions opt = sweep_options_from(sc, cfg);
    PlaneFoliation fol = make_fol(slices);
    SweepReport rsw = sweep_classify(m, surf, fol, opt);

    CsvWriter scsv(out_dir, rep.scenario + "_slices.csv", rep);
    scsv.header("slice,t,components,status,diameter");
    for (size_t i = 0; i < rsw.slices.size(); ++i) {
        const SliceEvidence& e = rsw.slices[i];
        scsv.row({static_cast<double>(i), e.t, static_cast<double>(e.n_components),
                  static_cast<double>(static_cast<int>(e.tracked)), e.diameter});
    }

    // section polylines for plotting
    {
        CsvWriter ccsv(out_dir, rep.scenario + "_curves.csv", rep);
        ccsv.header("slice,t,curve,vertex,s,eta,x,y,fiber");
        IntersectOptions iopt;
        iopt.throw_on_tangency = false;
        for (size_t i = 0; i < fol.planes.size(); i += std::max<size_t>(1, fol.planes.size() / 12)) {
            std::vector<IntersectionCurve> curves = intersect(m, surf, fol.planes[i], iopt);
            for (size_t ci = 0; ci < curves.size(); ++ci)
                for (size_t vi = 0; vi < curves[ci].pts.size(); vi += 2) {
                    const CurveVertex& v = curves[ci].pts[vi];
                    ccsv.row({static_cast<double>(i), fol.t_grid[i], static_cast<double>(ci),
                              static_cast<double>(vi), v.pc.s, v.pc.eta, v.xyz.x, v.xyz.y,
                              v.xyz.t});
                }
        }
    }

    // full sweep evidence as a structured document
    {
        Json sj;
        sj["classification"] = to_string(rsw.classification);
        sj["nu_zero_count"] = rsw.nu_zero_count;
        sj["min_abs_nu"] = format_double(rsw.min_abs_nu);
        sj["projection_injective"] = rsw.projection_injective;
        sj["projection_convex"] = rsw.projection_convex;
        sj["end_angle_valid"] = rsw.end_angle_valid;
        sj["end_angle"] = format_double(rsw.end_angle);
        sj["rotating_family_ran"] = rsw.case_b_ran;
        sj["first_noncompact_tilt"] = rsw.first_noncompact_tilt == Tilt::Tilted ? "Tilted"
                                      : rsw.first_noncompact_tilt == Tilt::Untilted
                                          ? "Untilted"
                                          : "NotApplicable";
        Json slices_j = Json::array();
        for (const SliceEvidence& e : rsw.slices) {
            Json ej;
            ej["t"] = format_double(e.t);
            ej["components"] = e.n_components;
            ej["status"] = static_cast<int>(e.tracked);
            ej["diameter"] = format_double(e.diameter);
            if (!e.note.empty()) ej["note"] = e.note;
            slices_j.push_back(ej);
        }
        sj["slices"] = slices_j;
        sj["log"] = rsw.log;
        std::ofstream out(out_dir + "/" + rep.scenario + "_sweep.json", std::ios::binary);
        out << sj.dump(2) << "\n";
        rep.artifacts.push_back(rep.scenario + "_sweep.json");
    }

    ck.add("classification", "sweep classification of the surface",
           !sc.has("expect") || to_string(rsw.classification) == sc.text_or("expect", ""),
           static_cast<double>(static_cast<int>(rsw.classification)),
           std::string("got ") + to_string(rsw.classification));

    if (sc.boolean_or("check_halving", false)) {
        PlaneFoliation fine = make_fol(2 * slices - 1);
        SweepReport r2 = sweep_classify(m, surf, fine, opt);
        ck.add("grid-halving-stable", "classification is stable under t-grid refinement",
               r2.classification == rsw.classification,
               static_cast<double>(static_cast<int>(r2.classification)),
               std::string("refined got ") + to_string(r2.classification));
    }
    if (sc.has("expect_end_angle")) {
        double want = sc.number("expect_end_angle");
        double err = rsw.end_angle_valid ? std::abs(angle_diff(rsw.end_angle, want)) : 1e3;
        ck.add("end-angle", "estimated end direction matches the construction", err <= 0.05, err,
               "estimate " + format_double(rsw.end_angle));
    }
    if (sc.text_or("expect", "") == "PlaneKillingGraph") {
        ck.add("projection-injective", "sampled projection of the graph is injective",
               rsw.projection_injective, rsw.projection_injective ? 1.0 : 0.0, "");
        ck.add("projection-convex", "sampled projection of the graph is geodesically convex",
               rsw.projection_convex, rsw.projection_convex ? 1.0 : 0.0, "");
    }
    if (sc.boolean_or("simple_end", false)) {
        SimpleEndOptions seo;
        SimpleEndReport ser = simple_end_test(m, surf, seo);
        bool angle_ok = !sc.has("expect_end_angle") ||
                        std::abs(angle_diff(ser.theta0, sc.number("expect_end_angle"))) <= 0.05;
        ck.add("simple-end", "projection has one ideal boundary point with compact avoiding sections",
               ser.applicable && ser.passes && angle_ok, ser.spread_far,
               "theta0 " + format_double(ser.theta0));
    }
    if (sc.boolean_or("hypothesis", false)) {
        HypothesisReport hr = hypothesis_check(m, surf);
        bool expect_pass = sc.boolean_or("hypothesis_expected", true);
        ck.add("principal-curvature-hypothesis",
               "principal curvatures exceed the bundle curvature in magnitude",
               hr.passes == expect_pass, hr.min_margin, "");
    }
    if (sc.boolean_or("geometry_grid", false)) {
        CsvWriter gcsv(out_dir, rep.scenario + "_surface.csv", rep);
        gcsv.header("chart,u,v,x,y,fiber,nu,k1,k2,H,Ke,K");
        for (const auto& sp : sample_grid(surf)) {
            SurfaceGeometry g = surface_geometry(m, surf, sp.chart, sp.u, sp.v);
            gcsv.row({static_cast<double>(sp.chart), sp.u, sp.v, g.p.x, g.p.y, g.p.t, g.nu, g.k1,
                      g.k2, g.H, g.Ke, g.K});
        }
    }
}

// --------------------------------------------------------------- sections --

// sweep scenario in sections mode: random transversal planes against a
// surface, every section strictly convex in its plane
void cmd_sections(const Config& cfg, StrictObject& sc, RunReport& rep,
                  const std::string& out_dir) {
    std::string surf_name = sc.text("surface");
    const SubmersionModel& m = cfg.model(cfg.surface_model(surf_name));
    ImmersedSurface surf = cfg.surface(surf_name);
    int n_planes = static_cast<int>(sc.integer_or("planes", 20));
    double margin = sc.number_or("curvature_margin", 1e-3);
    double max_anchor = sc.number_or("anchor_radius", 0.45);

    std::mt19937_64 rng(cfg.seed ^ name_hash(rep.scenario));
    std::uniform_real_distribution<double> ur(0.0, max_anchor), ua(0.0, 2 * kPi);

    CsvWriter csv(out_dir, rep.scenario + "_sections.csv", rep);
    csv.header("plane,curve,closed,vertices,min_abs_curvature,sign_constant");

    Checker ck{rep};
    double worst_margin = 1e300;
    int accepted = 0, attempts = 0, failures = 0;
    while (accepted < n_planes && attempts < 4 * n_planes) {
        ++attempts;
        double r = ur(rng), th = ua(rng), dir = ua(rng);
        Point2 anchor{r * std::cos(th), r * std::sin(th)};
        VerticalPlane plane = make_vertical_plane(
            m, trace_complete(*m.base, anchor, m.base->unit_from_angle(anchor, dir), 10.0));
        std::vector<IntersectionCurve> curves;
        try {
            curves = intersect(m, surf, plane);
        } catch (const TangencySuspected&) {
            continue; // perturbed by drawing another plane
        }
        if (curves.empty()) continue;
        bool assessed_any = false;
        for (size_t ci = 0; ci < curves.size(); ++ci) {
            // fragments clipped at a domain corner are too short to carry a
            // curvature verdict either way
            if (curves[ci].pts.size() < 12 || curves[ci].pts.back().arc < 0.5) continue;
            ConvexityReport cr = convexity_check(m, curves[ci], plane, margin);
            csv.row({static_cast<double>(accepted + 1), static_cast<double>(ci),
                     curves[ci].closed ? 1.0 : 0.0, static_cast<double>(curves[ci].pts.size()),
                     cr.min_abs_curvature, cr.sign_constant ? 1.0 : 0.0});
            if (!cr.passes) ++failures;
            worst_margin = std::min(worst_margin, cr.min_abs_curvature);
            assessed_any = true;
        }
        if (assessed_any) ++accepted;
    }
    ck.add("sections-strictly-convex",
           "every transversal plane section has nowhere-vanishing constant-sign curvature",
           failures == 0 && accepted >= n_planes / 2, worst_margin,
           "planes " + std::to_string(accepted) + ", failing curves " + std::to_string(failures));
}

} // namespace

Json RunReport::to_json() const {
    Json j;
    j["scenario"] = scenario;
    j["command"] = command;
    j["pass"] = pass;
    j["tool_version"] = tool_version;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["wall_seconds"] = wall_seconds;
    if (!error.empty()) j["error"] = error;
    Json checks_j = Json::array();
    for (const CheckResult& c : checks) {
        Json cj;
        cj["name"] = c.name;
        cj["claim"] = c.claim;
        cj["pass"] = c.pass;
        cj["evidence"] = format_double(c.evidence);
        if (!c.detail.empty()) cj["detail"] = c.detail;
        checks_j.push_back(cj);
    }
    j["checks"] = checks_j;
    j["artifacts"] = artifacts;
    return j;
}

Json SuiteReport::to_json() const {
    Json j;
    j["passed"] = passed;
    j["failed"] = failed;
    Json runs_j = Json::array();
    for (const RunReport& r : runs) runs_j.push_back(r.to_json());
    j["runs"] = runs_j;
    return j;
}

std::string SuiteReport::summary_text() const {
    std::string out;
    out += "suite: " + std::to_string(passed) + " passed, " + std::to_string(failed) + " failed\n";
    for (const RunReport& r : runs) {
        out += std::string(r.pass ? "[PASS] " : "[FAIL] ") + r.scenario + " (" + r.command + ")\n";
        for (const CheckResult& c : r.checks) {
            out += std::string("  ") + (c.pass ? "[pass] " : "[FAIL] ") + c.name + ": " + c.claim +
                   " (evidence " + format_double(c.evidence) + ")\n";
        }
        if (!r.error.empty()) out += "  error: " + r.error + "\n";
    }
    return out;
}

namespace {

// allowed keys per command; enforced before any computation starts
const std::map<std::string, std::vector<std::string>>& command_keys() {
    static const std::map<std::string, std::vector<std::string>> keys = {
        {"verify", {"model", "points", "mutate"}},
        {"curvature", {"model", "points"}},
        {"geodesic", {"model", "start", "angle", "arc_length", "connect_to", "triangle"}},
        {"foliate",
         {"model", "variant", "axis_point", "axis_angle", "grid_min", "grid_max", "leaves",
          "leaf_extent", "anchor_angle", "fan_min", "fan_max"}},
        {"cylinder", {"model", "curve", "t_min", "t_max", "samples"}},
        {"sweep",
         {"mode", "surface", "foliation", "expect", "check_halving", "expect_end_angle",
          "simple_end", "hypothesis", "hypothesis_expected", "diameter_cap", "window", "planes",
          "curvature_margin", "anchor_radius", "geometry_grid"}},
    };
    return keys;
}

void validate_scenario_keys(const ScenarioSpec& spec) {
    auto it = command_keys().find(spec.command);
    if (it == command_keys().end())
        throw ConfigError("scenarios." + spec.name + ".command: unknown command \"" +
                          spec.command + "\"");
    for (auto kv = spec.body.begin(); kv != spec.body.end(); ++kv) {
        const std::string& k = kv.key();
        if (k == "name" || k == "command" || k == "tags") continue;
        const auto& allowed = it->second;
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw ConfigError("scenarios." + spec.name + ": unknown key \"" + k + "\" for " +
                              spec.command);
    }
}

} // namespace

RunReport run_scenario(const Config& cfg, const std::string& name, const std::string& out_dir) {
    RunReport rep;
    rep.scenario = name;
    rep.tool_version = kToolVersion;
    rep.config_hash = cfg.config_hash;
    rep.seed = cfg.seed;

    const ScenarioSpec* spec = nullptr;
    for (const auto& s : cfg.scenarios)
        if (s.name == name) spec = &s;
    if (!spec) throw ConfigError("unknown scenario \"" + name + "\"");
    rep.command = spec->command;
    validate_scenario_keys(*spec);

    auto t0 = std::chrono::steady_clock::now();
    try {
        StrictObject sc(spec->body, "scenarios." + name);
        sc.text("name");
        sc.text("command");
        sc.text_list_or("tags");
        if (spec->command == "verify") cmd_verify(cfg, sc, rep, out_dir);
        else if (spec->command == "curvature") cmd_curvature(cfg, sc, rep, out_dir);
        else if (spec->command == "geodesic") cmd_geodesic(cfg, sc, rep, out_dir);
        else if (spec->command == "foliate") cmd_foliate(cfg, sc, rep, out_dir);
        else if (spec->command == "cylinder") cmd_cylinder(cfg, sc, rep, out_dir);
        else if (spec->command == "sweep") cmd_sweep(cfg, sc, rep, out_dir);
        else throw ConfigError("scenarios." + name + ".command: unknown command \"" + spec->command + "\"");
        sc.finish();
        rep.pass = !rep.checks.empty();
        for (const CheckResult& c : rep.checks) rep.pass = rep.pass && c.pass;
    } catch (const ConfigError&) {
        throw; // configuration problems abort before computation, by contract
    } catch (const std::exception& e) {
        rep.pass = false;
        rep.error = e.what();
    }
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::filesystem::create_directories(out_dir);
    rep.artifacts.push_back(name + ".json");
    std::ofstream out(out_dir + "/" + name + ".json", std::ios::binary);
    out << rep.to_json().dump(2) << "\n";
    return rep;
}

SuiteReport run_suite(const Config& cfg, const std::string& out_dir) {
    std::vector<std::string> names;
    bool any_tagged = false;
    for (const auto& s : cfg.scenarios)
        for (const auto& t : s.tags)
            if (t == "regression") any_tagged = true;
    for (const auto& s : cfg.scenarios) {
        bool tagged = !any_tagged;
        for (const auto& t : s.tags)
            if (t == "regression") tagged = true;
        if (tagged) names.push_back(s.name);
    }
    std::sort(names.begin(), names.end());

    // scenarios are independent: run them on a small worker pool; reports
    // land in per-name slots so aggregation order is fixed
    SuiteReport suite;
    suite.runs.resize(names.size());
    int workers = std::max(1, cfg.workers);
    if (workers == 1 || names.size() <= 1) {
        for (size_t i = 0; i < names.size(); ++i)
            suite.runs[i] = run_scenario(cfg, names[i], out_dir);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        std::mutex err_mtx;
        std::string first_error;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    size_t i = next.fetch_add(1);
                    if (i >= names.size()) return;
                    try {
                        suite.runs[i] = run_scenario(cfg, names[i], out_dir);
                    } catch (const std::exception& e) {
                        std::lock_guard<std::mutex> lk(err_mtx);
                        if (first_error.empty()) first_error = e.what();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (!first_error.empty()) throw ConfigError(first_error);
    }
    for (const RunReport& r : suite.runs) (r.pass ? suite.passed : suite.failed)++;

    std::ofstream sum(out_dir + "/summary.txt", std::ios::binary);
    sum << suite.summary_text();
    std::ofstream js(out_dir + "/suite.json", std::ios::binary);
    js << suite.to_json().dump(2) << "\n";
    return suite;
}

} // namespace ksub
