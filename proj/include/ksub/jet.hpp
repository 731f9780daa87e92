#pragma once
#include <cmath>

namespace ksub {

// Second-order jet in two variables: carries value, gradient and Hessian.
// Arithmetic propagates derivatives exactly, so metric coefficients built
// from jets have machine-precision first and second derivatives.
struct Jet2 {
    double v = 0;                       // value
    double dx = 0, dy = 0;              // gradient
    double dxx = 0, dxy = 0, dyy = 0;   // Hessian

    Jet2() = default;
    Jet2(double value) : v(value) {}
    Jet2(double value, double gx, double gy, double hxx, double hxy, double hyy)
        : v(value), dx(gx), dy(gy), dxx(hxx), dxy(hxy), dyy(hyy) {}

    static Jet2 var_x(double x) { return Jet2(x, 1, 0, 0, 0, 0); }
    static Jet2 var_y(double y) { return Jet2(y, 0, 1, 0, 0, 0); }

    Jet2 operator-() const { return Jet2(-v, -dx, -dy, -dxx, -dxy, -dyy); }

    Jet2 operator+(const Jet2& o) const {
        return Jet2(v + o.v, dx + o.dx, dy + o.dy, dxx + o.dxx, dxy + o.dxy, dyy + o.dyy);
    }
    Jet2 operator-(const Jet2& o) const {
        return Jet2(v - o.v, dx - o.dx, dy - o.dy, dxx - o.dxx, dxy - o.dxy, dyy - o.dyy);
    }
    Jet2 operator*(const Jet2& o) const {
        return Jet2(v * o.v,
                    dx * o.v + v * o.dx,
                    dy * o.v + v * o.dy,
                    dxx * o.v + 2 * dx * o.dx + v * o.dxx,
                    dxy * o.v + dx * o.dy + dy * o.dx + v * o.dxy,
                    dyy * o.v + 2 * dy * o.dy + v * o.dyy);
    }
    Jet2 operator/(const Jet2& o) const;

    Jet2& operator+=(const Jet2& o) { *this = *this + o; return *this; }
    Jet2& operator-=(const Jet2& o) { *this = *this - o; return *this; }
    Jet2& operator*=(const Jet2& o) { *this = *this * o; return *this; }
};

// Chain rule for a scalar function with given first/second derivative at u.v.
inline Jet2 jet_chain(const Jet2& u, double f, double fp, double fpp) {
    return Jet2(f,
                fp * u.dx,
                fp * u.dy,
                fpp * u.dx * u.dx + fp * u.dxx,
                fpp * u.dx * u.dy + fp * u.dxy,
                fpp * u.dy * u.dy + fp * u.dyy);
}

inline Jet2 Jet2::operator/(const Jet2& o) const {
    const double iv = 1.0 / o.v;
    return *this * jet_chain(o, iv, -iv * iv, 2 * iv * iv * iv);
}

inline Jet2 operator+(double a, const Jet2& b) { return Jet2(a) + b; }
inline Jet2 operator-(double a, const Jet2& b) { return Jet2(a) - b; }
inline Jet2 operator*(double a, const Jet2& b) { return Jet2(a) * b; }
inline Jet2 operator/(double a, const Jet2& b) { return Jet2(a) / b; }

inline Jet2 exp(const Jet2& u)  { const double e = std::exp(u.v); return jet_chain(u, e, e, e); }
inline Jet2 log(const Jet2& u)  { const double i = 1.0 / u.v; return jet_chain(u, std::log(u.v), i, -i * i); }
inline Jet2 sqrt(const Jet2& u) { const double s = std::sqrt(u.v); return jet_chain(u, s, 0.5 / s, -0.25 / (s * u.v)); }
inline Jet2 sin(const Jet2& u)  { return jet_chain(u, std::sin(u.v), std::cos(u.v), -std::sin(u.v)); }
inline Jet2 cos(const Jet2& u)  { return jet_chain(u, std::cos(u.v), -std::sin(u.v), -std::cos(u.v)); }
inline Jet2 tan(const Jet2& u)  { const double t = std::tan(u.v); const double s = 1 + t * t; return jet_chain(u, t, s, 2 * t * s); }
inline Jet2 sinh(const Jet2& u) { return jet_chain(u, std::sinh(u.v), std::cosh(u.v), std::sinh(u.v)); }
inline Jet2 cosh(const Jet2& u) { return jet_chain(u, std::cosh(u.v), std::sinh(u.v), std::cosh(u.v)); }
inline Jet2 tanh(const Jet2& u) { const double t = std::tanh(u.v); const double s = 1 - t * t; return jet_chain(u, t, s, -2 * t * s); }
inline Jet2 atan(const Jet2& u) { const double d = 1 + u.v * u.v; return jet_chain(u, std::atan(u.v), 1 / d, -2 * u.v / (d * d)); }
inline Jet2 asin(const Jet2& u) { const double d = 1 - u.v * u.v; const double s = std::sqrt(d); return jet_chain(u, std::asin(u.v), 1 / s, u.v / (d * s)); }
inline Jet2 acos(const Jet2& u) { const double d = 1 - u.v * u.v; const double s = std::sqrt(d); return jet_chain(u, std::acos(u.v), -1 / s, -u.v / (d * s)); }
inline Jet2 atanh(const Jet2& u) { const double d = 1 - u.v * u.v; return jet_chain(u, std::atanh(u.v), 1 / d, 2 * u.v / (d * d)); }
inline Jet2 abs(const Jet2& u)  { return u.v >= 0 ? u : -u; }

inline Jet2 pow(const Jet2& u, const Jet2& p) {
    if (p.dx == 0 && p.dy == 0 && p.dxx == 0 && p.dxy == 0 && p.dyy == 0) {
        const double e = p.v;
        const double f = std::pow(u.v, e);
        return jet_chain(u, f, e * std::pow(u.v, e - 1), e * (e - 1) * std::pow(u.v, e - 2));
    }
    return exp(p * log(u));
}

} // namespace ksub
