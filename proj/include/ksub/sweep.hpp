#pragma once
#include <string>
#include <vector>

#include "ksub/intersect.hpp"

namespace ksub {

enum class SweepClass { Sphere, PlaneKillingGraph, PlaneSimpleEnd, Inconclusive };
const char* to_string(SweepClass c);

enum class SliceStatus { Empty, Closed, NonCompact, Missing, Skipped };

struct SliceEvidence {
    double t = 0;
    int n_components = 0;
    SliceStatus tracked = SliceStatus::Empty;
    double diameter = 0;
    bool window_contact = false;
    std::string note;
};

struct SweepOptions {
    double diameter_cap = 6.0;
    PlaneWindow window;
    int grid_u = 0, grid_v = 0; // marching resolution override
    double nu_margin = 1e-6;    // stage-0 threshold on |nu|
    int secondary_slices = 10;
    double secondary_delta = 0.15; // ideal-angle offset of the rotating family
    int convexity_pairs = 80;      // random pairs for the projection-convexity witness
    unsigned rng_seed = 12345;
    double match_ambiguity_scale = 1.5;
};

struct SweepReport {
    SweepClass classification = SweepClass::Inconclusive;
    std::vector<SliceEvidence> slices;
    std::vector<SurfaceSamplePoint> nu_zeros; // horizontal-normal loci
    size_t nu_zero_count = 0;
    double min_abs_nu = 0;
    // stage-0 evidence
    bool projection_injective = false;
    bool projection_convex = false;
    // simple-end evidence
    double end_angle = 0;
    bool end_angle_valid = false;
    // rotating-family evidence
    bool case_b_ran = false;
    Tilt first_noncompact_tilt = Tilt::NotApplicable;
    std::vector<std::string> log;
};

SweepReport sweep_classify(const SubmersionModel& m, const ImmersedSurface& surf,
                           const PlaneFoliation& fol, const SweepOptions& opt = {});

// Zeros of the angle function on the sample grid, refined along grid edges
// until |nu| <= refine_tol.
std::vector<SurfaceSamplePoint> horizontal_normal_points(const SubmersionModel& m,
                                                         const ImmersedSurface& surf,
                                                         double refine_tol = 1e-8);

// Angle function alone (no curvature pipeline); used by scans.
double angle_function(const SubmersionModel& m, const ImmersedSurface& surf, int chart,
                      double u, double v);

struct SimpleEndOptions {
    double spread_tol = 0.05; // radians
    int probes = 8;
    double probe_gap = 0.35;  // keep probe endpoints this far from theta0
    double diameter_cap = 6.0;
    PlaneWindow window;
    int min_far_samples = 12;
};

struct SimpleEndReport {
    bool applicable = false;
    bool passes = false;
    bool spread_contracts = false;
    double spread_near = 0, spread_far = 0;
    double theta0 = 0;
    bool probes_bounded = false;
    std::string note;
};

SimpleEndReport simple_end_test(const SubmersionModel& m, const ImmersedSurface& surf,
                                const SimpleEndOptions& opt = {});

} // namespace ksub
