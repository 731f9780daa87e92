#include <doctest.h>

#include <cmath>

#include "ksub/errors.hpp"
#include "ksub/expr.hpp"
#include "ksub/jet.hpp"

using namespace ksub;

TEST_CASE("jet arithmetic matches finite differences") {
    auto f = [](double x, double y) { return std::exp(x * y) / (1.0 + x * x) + std::sin(y); };
    auto fj = [](const Jet2& x, const Jet2& y) { return exp(x * y) / (1.0 + x * x) + sin(y); };

    const double x = 0.3, y = -0.7, h = 1e-5;
    Jet2 j = fj(Jet2::var_x(x), Jet2::var_y(y));
    CHECK(j.v == doctest::Approx(f(x, y)).epsilon(1e-14));
    CHECK(j.dx == doctest::Approx((f(x + h, y) - f(x - h, y)) / (2 * h)).epsilon(1e-8));
    CHECK(j.dy == doctest::Approx((f(x, y + h) - f(x, y - h)) / (2 * h)).epsilon(1e-8));
    CHECK(j.dxx == doctest::Approx((f(x + h, y) - 2 * f(x, y) + f(x - h, y)) / (h * h)).epsilon(1e-5));
    CHECK(j.dyy == doctest::Approx((f(x, y + h) - 2 * f(x, y) + f(x, y - h)) / (h * h)).epsilon(1e-5));
    double mixed = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4 * h * h);
    CHECK(j.dxy == doctest::Approx(mixed).epsilon(1e-5));
}

TEST_CASE("expression parser evaluates and differentiates") {
    Expression e = Expression::parse("2/(1 - x*x - y*y)");
    CHECK(e.eval(0, 0) == doctest::Approx(2.0));
    CHECK(e.eval(0.5, 0) == doctest::Approx(2.0 / 0.75));

    Jet2 j = e.eval_jet(0.3, 0.2);
    double h = 1e-6;
    CHECK(j.dx == doctest::Approx((e.eval(0.3 + h, 0.2) - e.eval(0.3 - h, 0.2)) / (2 * h)).epsilon(1e-7));

    Expression trig = Expression::parse("sin(x)^2 + cos(x)^2");
    CHECK(trig.eval(1.234, 0) == doctest::Approx(1.0));

    Expression powe = Expression::parse("pow(x, 3) - x^3");
    CHECK(powe.eval(1.7, 0) == doctest::Approx(0.0));

    Expression withpi = Expression::parse("cos(pi) + exp(0*y)");
    CHECK(withpi.eval(0, 5) == doctest::Approx(0.0));
}

TEST_CASE("expression parser rejects malformed input") {
    CHECK_THROWS_AS(Expression::parse("2 +"), ConfigError);
    CHECK_THROWS_AS(Expression::parse("foo(x)"), ConfigError);
    CHECK_THROWS_AS(Expression::parse("(x"), ConfigError);
    CHECK_THROWS_AS(Expression::parse("x z"), ConfigError);
}
