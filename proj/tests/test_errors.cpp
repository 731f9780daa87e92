#include <doctest.h>

#include <cmath>
#include <memory>

#include "ksub/config.hpp"
#include "ksub/errors.hpp"
#include "ksub/sweep.hpp"

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
} // namespace

TEST_CASE("non-complete user models raise chart exit at the boundary") {
    // a flat square patch: geodesics are straight chart lines that leave it
    HadamardModel patch = HadamardModel::from_expression("1", ChartDomain::UnitDisk, -1.0, false);
    CHECK_THROWS_AS(
        geodesic_trace(patch, {0.5, 0}, patch.unit_from_angle({0.5, 0}, 0.0), 2.0),
        ChartExit);
}

TEST_CASE("slow ideal convergence hits the arc-length cutoff") {
    // weak curvature: the angular drift between doublings stays above the
    // tolerance within the default 40-unit budget
    HadamardModel weak = HadamardModel::poincare_disk(0.35);
    CHECK_THROWS_AS(ideal_point(weak, {0.2, 0.1}, weak.unit_from_angle({0.2, 0.1}, 0.8)),
                    NoStabilization);
    // raising the cutoff makes the same call succeed
    HadamardModel patient = HadamardModel::poincare_disk(0.35);
    patient.tol.ideal_cutoff = 160.0;
    IdealPoint ip = ideal_point(patient, {0.2, 0.1}, patient.unit_from_angle({0.2, 0.1}, 0.8));
    CHECK(ip.theta >= 0.0);
}

TEST_CASE("tilt classification reports window sensitivity") {
    // parabola rotated by 0.35 rad: small windows see a vertical certificate,
    // larger ones see the tilted asymptote
    const double phi = 0.35, c = std::cos(phi), s = std::sin(phi);
    IntersectionCurve curve;
    curve.closed = false;
    double arc = 0;
    PlaneCoord prev{};
    for (int i = 0; i <= 600; ++i) {
        double t = -3.0 + 6.0 * i / 600;
        CurveVertex v;
        v.pc = {c * t - s * t * t, s * t + c * t * t};
        if (i > 0) arc += std::hypot(v.pc.s - prev.s, v.pc.eta - prev.eta);
        v.arc = arc;
        prev = v.pc;
        curve.pts.push_back(v);
    }
    curve.plane_diameter = 100;
    // at this size the full window sees both end tangents past vertical
    // (tilted) while the halved window still finds a vertical certificate
    PlaneWindow w;
    w.s_min = -3.2;
    w.s_max = 3.2;
    w.eta_min = -3.2;
    w.eta_max = 3.2;
    CHECK_THROWS_AS(tilt_classify(curve, w), WindowTooSmall);
}

TEST_CASE("simple end estimation requires enough sampled extent") {
    ImmersedSurface stub = flaring_end_surface(h2xr(), 0.0, 0.35, 0.6, 24, 24);
    CHECK_THROWS_AS(simple_end_test(h2xr(), stub), InsufficientExtent);
}

TEST_CASE("configured tolerances reach the model engine") {
    Config cfg = Config::parse(Json::parse(R"cfg({
        "tolerances": { "ideal_cutoff": 80.0, "angular": 2e-4 },
        "models": { "m": { "kind": "product", "base": { "kind": "poincare", "a": 1.0 } } }
    })cfg"),
                               "c", ".");
    CHECK(cfg.model("m").base->tol.ideal_cutoff == doctest::Approx(80.0));
    CHECK(cfg.model("m").base->tol.angular == doctest::Approx(2e-4));
    CHECK(cfg.model("m").base->tol.integration == doctest::Approx(1e-8));
}
