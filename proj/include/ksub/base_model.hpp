#pragma once
#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "ksub/expr.hpp"
#include "ksub/jet.hpp"

namespace ksub {

struct Point2 {
    double x = 0, y = 0;
};
struct Vec2 {
    double x = 0, y = 0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double c, Vec2 v) { return {c * v.x, c * v.y}; }
inline Vec2 operator-(Vec2 v) { return {-v.x, -v.y}; }
inline Point2 operator+(Point2 p, Vec2 v) { return {p.x + v.x, p.y + v.y}; }
inline Vec2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline Vec2 rot90(Vec2 v) { return {-v.y, v.x}; } // counter-clockwise quarter turn

struct Tangent2 {
    Point2 at;
    Vec2 d;
};

enum class ChartDomain { UnitDisk, Plane };

// Numerical tolerances shared by the geometric operations. Values follow a
// producer/consumer split: integration is one decade tighter than the
// geometric assertions built on top of it.
struct Tolerances {
    double integration = 1e-8;   // promised geodesic-equation residual
    double geometric = 1e-6;     // point coincidence, distances
    double angular = 1e-4;       // orthogonality and angle assertions
    double ideal_drift = 1e-6;   // ideal-angle drift per arc-length doubling
    double ideal_cutoff = 40.0;  // arc-length budget for ideal-point runs
    double sample_ds = 0.01;     // arc-length spacing of emitted path samples
    int shooting_budget = 200;   // iteration cap for shooting solvers

    Tolerances scaled(double f) const {
        Tolerances t = *this;
        t.integration *= f;
        t.geometric *= f;
        t.angular *= f;
        t.ideal_drift *= f;
        return t;
    }
};

// Conformal chart model of a Hadamard surface: metric lambda^2 (dx^2 + dy^2)
// with Gauss curvature bounded above by a negative constant. The conformal
// factor is carried as a jet of log(lambda), which makes Christoffel symbols
// and the curvature exact evaluations.
class HadamardModel {
public:
    ChartDomain domain = ChartDomain::UnitDisk;
    double curvature_bound = -1.0; // c with kappa <= c < 0
    bool complete = true;
    Point2 basepoint{0, 0};
    // True when chart rays from the basepoint are geodesics (rotationally
    // symmetric built-ins); enables the fast ideal-angle evaluation.
    bool radial_chart_rays = false;
    Tolerances tol;
    std::string name = "model";

    // kappa = -a^2 on the unit disk, lambda = 2 / (a (1 - x^2 - y^2)).
    static HadamardModel poincare_disk(double a = 1.0);
    // User model from a conformal-factor expression in x, y.
    static HadamardModel from_expression(const std::string& lambda_expr,
                                         ChartDomain domain,
                                         double curvature_bound,
                                         bool declared_complete);

    Jet2 log_lambda(double x, double y) const { return log_lambda_(x, y); }
    double lambda(Point2 p) const { return std::exp(log_lambda_(p.x, p.y).v); }

    bool contains(Point2 p) const {
        return domain == ChartDomain::Plane || (p.x * p.x + p.y * p.y < 1.0);
    }

    // kappa = -laplacian(log lambda) / lambda^2
    double gauss_curvature(Point2 p) const {
        Jet2 phi = log_lambda_(p.x, p.y);
        return -(phi.dxx + phi.dyy) * std::exp(-2.0 * phi.v);
    }

    double metric_dot(Point2 p, Vec2 u, Vec2 v) const {
        double l = lambda(p);
        return l * l * dot(u, v);
    }
    double metric_norm(Point2 p, Vec2 v) const { return lambda(p) * norm(v); }

    // Unit vector at p with the given chart direction angle. Conformal charts
    // make chart angles and metric angles coincide.
    Vec2 unit_from_angle(Point2 p, double chart_angle) const {
        double il = 1.0 / lambda(p);
        return {il * std::cos(chart_angle), il * std::sin(chart_angle)};
    }
    Vec2 normalized(Point2 p, Vec2 v) const {
        double n = metric_norm(p, v);
        return (1.0 / n) * v;
    }

    // Worst (largest) curvature over a sampling grid; used to check the
    // strictness bound kappa <= c < 0 on user-supplied models.
    double max_curvature_on_grid(int n = 64) const;

    void set_log_lambda(std::function<Jet2(double, double)> f) { log_lambda_ = std::move(f); }

private:
    std::function<Jet2(double, double)> log_lambda_;
};

} // namespace ksub
